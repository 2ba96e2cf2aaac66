//! Empirical-Bayes selection of all tuning parameters.
//!
//! Per series, the data-factor hyperparameters come from two empirical
//! quantities: the first positive autocorrelation lag pins `kappa0`
//! through the no-change correlation bound `Corr = (1 + kappa0)^{-1}`,
//! and a Student-t maximum likelihood fit of the whole series pins
//! `(mu0, alpha0, beta0)` through the reparameterization `d = 2 alpha0`,
//! `m = mu0`, `s^2 = beta0 (kappa0 + 1) / (alpha0 kappa0)`.
//!
//! For the logit-scale t law, prior guesses `(m0, S0)` for the mean and
//! covariance of `p_t` map to `(mu0, Sigma0)` through a first-order
//! Taylor expansion of the logistic transform; the default guess puts
//! `m0_i = 1/n` with a compound-symmetric `S0`.

use nalgebra::DMatrix;
use statrs::function::gamma::ln_gamma;

use crate::error::{CcpError, Result};
use crate::marglik::{MargLikParams, SeriesData};
use crate::tprior::TPriorParams;
use crate::util::logit;

use std::f64::consts::PI;

/// Default maximum lag scanned for a positive autocorrelation.
pub const DEFAULT_MAX_LAG: usize = 50;

/// Outcome of the autocorrelation-based `kappa0` rule.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct KappaEstimate {
    pub kappa0: f64,
    /// Lag at which the first positive autocorrelation was found;
    /// `None` when the fallback value was used.
    pub lag: Option<usize>,
    /// The (clamped) autocorrelation actually used.
    pub acf_value: f64,
    /// True when no positive autocorrelation existed up to the maximum
    /// lag and the fallback `acf = 1/n` was substituted.
    pub fallback: bool,
}

/// Maximum likelihood fit of a univariate Student-t in the
/// `(d, m, s)` parameterization (degrees of freedom, location, scale).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct StudentTFit {
    pub d: f64,
    pub m: f64,
    pub s: f64,
    pub loglik: f64,
}

/// Everything the empirical-Bayes rule selects for one series.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SeriesTuning {
    pub params: MargLikParams,
    pub kappa: KappaEstimate,
    pub fit: StudentTFit,
}

/// Prior guesses for the mean and covariance of the change-probability
/// vector `p_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorGuess {
    pub m0: Vec<f64>,
    pub s0: DMatrix<f64>,
    pub r0: f64,
    pub sigma0_sq: f64,
}

/// Empirical lag-`lag` autocorrelation.
fn autocorrelation(y: &[f64], lag: usize) -> f64 {
    let n = y.len();
    let mean = y.iter().sum::<f64>() / n as f64;
    let denom: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let num: f64 = (0..n - lag)
        .map(|t| (y[t] - mean) * (y[t + lag] - mean))
        .sum();
    num / denom
}

/// Selects `kappa0 = (1 - c) / c` from the first positive empirical
/// autocorrelation `c` at lags `1..=max_lag`.
///
/// When every autocorrelation up to `max_lag` is non-positive the rule is
/// undefined; the fallback substitutes `c = 1/n` and flags the result.
/// The autocorrelation is always clamped to `[1/n, 1 - 1/n]` so that
/// `kappa0` stays finite and positive.
pub fn estimate_kappa(y: &SeriesData, max_lag: usize) -> Result<KappaEstimate> {
    let n = y.len();
    if max_lag == 0 || n < max_lag + 2 {
        return Err(CcpError::InvalidInput(format!(
            "series of length {n} is too short for max_lag {max_lag}"
        )));
    }
    let vals = y.values();
    let clamp = |c: f64| c.clamp(1.0 / n as f64, 1.0 - 1.0 / n as f64);
    for lag in 1..=max_lag {
        let c = autocorrelation(vals, lag);
        if c > 0.0 {
            let used = clamp(c);
            return Ok(KappaEstimate {
                kappa0: (1.0 - used) / used,
                lag: Some(lag),
                acf_value: used,
                fallback: false,
            });
        }
    }
    let used = clamp(1.0 / n as f64);
    Ok(KappaEstimate {
        kappa0: (1.0 - used) / used,
        lag: None,
        acf_value: used,
        fallback: true,
    })
}

fn t_loglik(y: &[f64], d: f64, m: f64, s: f64) -> f64 {
    let n = y.len() as f64;
    let constant = ln_gamma((d + 1.0) / 2.0) - ln_gamma(d / 2.0) - 0.5 * (d * PI).ln() - s.ln();
    let tail: f64 = y
        .iter()
        .map(|&v| {
            let r = (v - m) / s;
            (r * r / d).ln_1p()
        })
        .sum();
    n * constant - 0.5 * (d + 1.0) * tail
}

/// EM iterations for `(m, s)` at fixed degrees of freedom `d`.
fn profile_location_scale(y: &[f64], d: f64, mut m: f64, mut s: f64) -> (f64, f64) {
    let n = y.len() as f64;
    for _ in 0..500 {
        let mut wsum = 0.0;
        let mut wy = 0.0;
        for &v in y {
            let r = (v - m) / s;
            let w = (d + 1.0) / (d + r * r);
            wsum += w;
            wy += w * v;
        }
        let m_new = wy / wsum;
        let mut ws2 = 0.0;
        for &v in y {
            let r = (v - m) / s;
            let w = (d + 1.0) / (d + r * r);
            ws2 += w * (v - m_new) * (v - m_new);
        }
        let s_new = (ws2 / n).sqrt().max(1e-300);
        let delta = (m_new - m).abs() + (s_new - s).abs();
        m = m_new;
        s = s_new;
        if delta < 1e-12 * (1.0 + s) {
            break;
        }
    }
    (m, s)
}

/// Maximum likelihood fit of a Student-t to the whole series.
///
/// `(m, s)` are profiled out by iterative reweighting at fixed `d`; the
/// profile likelihood over `d` is scanned on a log-spaced grid and the
/// bracket around the best point refined by golden-section search. The
/// degrees-of-freedom direction is flat and ill-conditioned, which this
/// derivative-free scheme tolerates.
pub fn fit_student_t_mle(y: &SeriesData) -> Result<StudentTFit> {
    let vals = y.values();
    if vals.len() < 10 {
        return Err(CcpError::InvalidInput(format!(
            "need at least 10 observations to fit a Student-t, got {}",
            vals.len()
        )));
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let sd = (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt();
    if sd <= f64::EPSILON * (1.0 + mean.abs()) {
        return Err(CcpError::DegenerateInput(
            "constant series has no Student-t MLE".into(),
        ));
    }

    let profile = |d: f64| -> (f64, f64, f64) {
        let (m, s) = profile_location_scale(vals, d, mean, sd);
        (t_loglik(vals, d, m, s), m, s)
    };

    // Log-spaced grid over the df range, then golden-section refinement.
    let grid_size = 25;
    let (lo, hi) = (0.5f64.ln(), 200.0f64.ln());
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0, 0.0);
    let mut best_idx = 0;
    let logd: Vec<f64> = (0..grid_size)
        .map(|i| lo + (hi - lo) * i as f64 / (grid_size - 1) as f64)
        .collect();
    for (idx, &ld) in logd.iter().enumerate() {
        let d = ld.exp();
        let (ll, m, s) = profile(d);
        if ll > best.0 {
            best = (ll, d, m, s);
            best_idx = idx;
        }
    }
    let mut a = logd[best_idx.saturating_sub(1)];
    let mut b = logd[(best_idx + 1).min(grid_size - 1)];
    if a >= b {
        b = a + 1e-6;
    }
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = profile(x1.exp());
    let mut f2 = profile(x2.exp());
    for _ in 0..80 {
        if (b - a).abs() < 1e-10 {
            break;
        }
        if f1.0 > f2.0 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = profile(x1.exp());
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = profile(x2.exp());
        }
    }
    let (ll, d, m, s) = if f1.0 > f2.0 {
        (f1.0, x1.exp(), f1.1, f1.2)
    } else {
        (f2.0, x2.exp(), f2.1, f2.2)
    };
    let (ll, d, m, s) = if best.0 > ll {
        best
    } else {
        (ll, d, m, s)
    };
    if !ll.is_finite() {
        return Err(CcpError::Numerical(format!(
            "Student-t fit diverged on series '{}' (loglik {ll})",
            y.name()
        )));
    }
    Ok(StudentTFit {
        d,
        m,
        s,
        loglik: ll,
    })
}

/// Full empirical-Bayes data-factor parameters for one series:
/// `mu0 = m_hat`, `alpha0 = d_hat / 2`,
/// `beta0 = (d_hat / 2)(1 - c_hat) s_hat^2`, and `kappa0` from
/// [`estimate_kappa`].
pub fn marglik_params_from_data(y: &SeriesData) -> Result<SeriesTuning> {
    let max_lag = DEFAULT_MAX_LAG.min(y.len().saturating_sub(2));
    let kappa = estimate_kappa(y, max_lag.max(1))?;
    let fit = fit_student_t_mle(y)?;
    let alpha0 = 0.5 * fit.d;
    let beta0 = 0.5 * fit.d * (1.0 - kappa.acf_value) * fit.s * fit.s;
    let params = MargLikParams::new(fit.m, kappa.kappa0, alpha0, beta0)?;
    Ok(SeriesTuning { params, kappa, fit })
}

/// Default prior guess: `m0_i = 1/n`, compound-symmetric `S0` with
/// variance `n^{-3} (n - 1)` and correlation `r0`.
pub fn default_prior_guess(n: usize, l: usize, r0: f64) -> Result<PriorGuess> {
    if n < 3 {
        return Err(CcpError::InvalidInput(format!(
            "series length must be >= 3, got {n}"
        )));
    }
    if l == 0 {
        return Err(CcpError::InvalidInput("need at least one series".into()));
    }
    if !(0.0..1.0).contains(&r0) {
        return Err(CcpError::InvalidInput(format!(
            "compound-symmetry correlation must lie in [0, 1), got {r0}"
        )));
    }
    let nf = n as f64;
    let m0 = vec![1.0 / nf; l];
    let sigma0_sq = (nf - 1.0) / (nf * nf * nf);
    let s0 = DMatrix::from_fn(l, l, |r, c| {
        if r == c {
            sigma0_sq
        } else {
            sigma0_sq * r0
        }
    });
    Ok(PriorGuess {
        m0,
        s0,
        r0,
        sigma0_sq,
    })
}

/// Maps prior guesses `(m0, S0)` to t-law parameters through the
/// first-order Taylor expansion of the logistic transform:
/// `mu0_i = logit(m0_i)` and
/// `Sigma0 = ((nu0 - 2)/nu0) D(m0)^{-1} S0 D(m0)^{-1}` with
/// `D(m0) = diag(m0_i (1 - m0_i))`. Requires `nu0 > 2`.
pub fn tprior_from_guess(guess: &PriorGuess, nu0: f64) -> Result<TPriorParams> {
    if !(nu0 > 2.0) {
        return Err(CcpError::InvalidInput(format!(
            "the Taylor moment map needs nu0 > 2, got {nu0}"
        )));
    }
    let l = guess.m0.len();
    if guess.s0.nrows() != l || guess.s0.ncols() != l {
        return Err(CcpError::InvalidInput(format!(
            "S0 is {}x{} but m0 has length {l}",
            guess.s0.nrows(),
            guess.s0.ncols()
        )));
    }
    if guess.m0.iter().any(|&m| !(0.0 < m && m < 1.0)) {
        return Err(CcpError::InvalidInput(
            "prior mean probabilities must lie strictly inside (0, 1)".into(),
        ));
    }
    let mu0: Vec<f64> = guess.m0.iter().map(|&m| logit(m)).collect();
    let dinv: Vec<f64> = guess.m0.iter().map(|&m| 1.0 / (m * (1.0 - m))).collect();
    let factor = (nu0 - 2.0) / nu0;
    let sigma0 = DMatrix::from_fn(l, l, |r, c| factor * dinv[r] * guess.s0[(r, c)] * dinv[c]);
    TPriorParams::new(nu0, mu0, sigma0)
}

/// Inverts the Beta-Binomial(n-1, a, b) mean and variance of the change
/// count `k - 1` for `(a, b)`, given a prior guess for the mean and
/// variance of the number of clusters `k`.
///
/// With `N = n - 1`, `pi = mean / N`, and
/// `R = variance / (N pi (1 - pi))`, the concentration solves
/// `s = (N - R) / (R - 1)`; feasibility requires the variance to sit
/// strictly between the Binomial floor (`R = 1`) and the maximal
/// overdispersion (`R = N`).
pub fn beta_params_from_cluster_moments(
    n: usize,
    mean_clusters: f64,
    var_clusters: f64,
) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(CcpError::InvalidInput(format!(
            "series length must be >= 2, got {n}"
        )));
    }
    let big_n = (n - 1) as f64;
    let mean_count = mean_clusters - 1.0;
    if !(0.0 < mean_count && mean_count < big_n) {
        return Err(CcpError::InvalidInput(format!(
            "mean cluster count {mean_clusters} implies a change count outside (0, {big_n})"
        )));
    }
    if !(var_clusters.is_finite() && var_clusters > 0.0) {
        return Err(CcpError::InvalidInput(format!(
            "cluster-count variance must be positive, got {var_clusters}"
        )));
    }
    let pi = mean_count / big_n;
    let binom_floor = big_n * pi * (1.0 - pi);
    let ratio = var_clusters / binom_floor;
    if ratio <= 1.0 {
        return Err(CcpError::InvalidInput(format!(
            "variance {var_clusters} is at or below the Binomial floor {binom_floor:.6}; \
             no Beta-Binomial matches (a + b would be infinite)"
        )));
    }
    if ratio >= big_n {
        return Err(CcpError::InvalidInput(format!(
            "variance {var_clusters} exceeds the maximal Beta-Binomial variance \
             {:.6}",
            binom_floor * big_n
        )));
    }
    let concentration = (big_n - ratio) / (ratio - 1.0);
    Ok((pi * concentration, (1.0 - pi) * concentration))
}
