//! Multivariate Student-t law on the logits of the per-time change
//! probabilities, with exact prior-property integrals.
//!
//! With `logit(p_t) ~ t_L(nu0, mu0, Sigma0)` i.i.d. over time, the
//! marginal change probability of series `i` is
//!
//! ```text
//! phi_i = E[logistic(z)],  z ~ t_1(nu0, mu0_i, sigma0_ii),
//! ```
//!
//! and the pairwise joint probability `varphi_is` is the analogous
//! two-dimensional expectation of `logistic(z_i) logistic(z_s)` under the
//! bivariate marginal. Both are computed by adaptive quadrature after the
//! tail-compactifying substitution `z = mu + sigma tan(theta)`, which
//! turns the heavy-tailed integrals into smooth integrals over
//! `(-pi/2, pi/2)`. Sampling uses the Gaussian scale mixture
//! `z = mu0 + Sigma0^{1/2} g sqrt(nu0 / w)` with a chi-square mixing
//! variable shared across all coordinates of a draw; mixing per
//! coordinate would silently produce independent t marginals instead of
//! a joint t vector.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::error::{CcpError, Result};
use crate::quad::{adaptive_gk15, adaptive_gk15_best_effort, QuadEstimate};
use crate::util::logistic;

use std::f64::consts::{FRAC_PI_2, PI};

/// Requested absolute tolerance for the one-dimensional integrals.
const PHI_TOL: f64 = 1e-9;
/// Reported bound ceiling for `phi`; exceeding it is an error.
const PHI_BOUND: f64 = 1e-8;
/// Outer- and inner-loop tolerances for the two-dimensional integrals.
const VARPHI_OUTER_TOL: f64 = 2e-8;
const VARPHI_INNER_TOL: f64 = 1e-9;
/// Reported bound ceiling for `varphi`.
const VARPHI_BOUND: f64 = 1e-6;
const MAX_SEGMENTS_1D: usize = 2000;
const MAX_SEGMENTS_2D: usize = 600;

/// Parameters `(nu0, mu0, Sigma0)` of the logit-scale multivariate t law.
#[derive(Debug, Clone, PartialEq)]
pub struct TPriorParams {
    nu0: f64,
    mu0: DVector<f64>,
    sigma0: DMatrix<f64>,
    chol_lower: DMatrix<f64>,
    sigma_inv: DMatrix<f64>,
    log_det: f64,
}

impl TPriorParams {
    /// Validates and caches the Cholesky factor, inverse, and
    /// log-determinant of `Sigma0`. Fails unless `Sigma0` is symmetric
    /// positive-definite and `nu0 > 0`.
    pub fn new(nu0: f64, mu0: Vec<f64>, sigma0: DMatrix<f64>) -> Result<Self> {
        if !(nu0.is_finite() && nu0 > 0.0) {
            return Err(CcpError::InvalidInput(format!(
                "degrees of freedom must be positive, got {nu0}"
            )));
        }
        let l = mu0.len();
        if l == 0 {
            return Err(CcpError::InvalidInput("empty location vector".into()));
        }
        if sigma0.nrows() != l || sigma0.ncols() != l {
            return Err(CcpError::InvalidInput(format!(
                "scale matrix is {}x{} but location has length {l}",
                sigma0.nrows(),
                sigma0.ncols()
            )));
        }
        if mu0.iter().any(|v| !v.is_finite()) || sigma0.iter().any(|v| !v.is_finite()) {
            return Err(CcpError::InvalidInput(
                "non-finite location or scale entry".into(),
            ));
        }
        let scale = sigma0.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        for r in 0..l {
            for c in (r + 1)..l {
                if (sigma0[(r, c)] - sigma0[(c, r)]).abs() > 1e-10 * (1.0 + scale) {
                    return Err(CcpError::InvalidInput(
                        "scale matrix is not symmetric".into(),
                    ));
                }
            }
        }
        let chol = Cholesky::new(sigma0.clone()).ok_or_else(|| {
            CcpError::InvalidInput("scale matrix is not positive-definite".into())
        })?;
        let log_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let sigma_inv = chol.inverse();
        Ok(Self {
            nu0,
            mu0: DVector::from_vec(mu0),
            sigma0,
            chol_lower: chol.l(),
            sigma_inv,
            log_det,
        })
    }

    /// Compound-symmetric scale: `Sigma0 = variance ((1-r) I + r J)`.
    pub fn compound_symmetric(
        nu0: f64,
        mu0: Vec<f64>,
        variance: f64,
        correlation: f64,
    ) -> Result<Self> {
        let l = mu0.len();
        if !(variance.is_finite() && variance > 0.0) {
            return Err(CcpError::InvalidInput(format!(
                "variance must be positive, got {variance}"
            )));
        }
        let sigma0 = DMatrix::from_fn(l, l, |r, c| {
            if r == c {
                variance
            } else {
                variance * correlation
            }
        });
        Self::new(nu0, mu0, sigma0)
    }

    pub fn dim(&self) -> usize {
        self.mu0.len()
    }

    pub fn nu0(&self) -> f64 {
        self.nu0
    }

    pub fn mu0(&self) -> &[f64] {
        self.mu0.as_slice()
    }

    pub fn sigma0(&self) -> &DMatrix<f64> {
        &self.sigma0
    }

    /// `(z - mu0)' Sigma0^{-1} (z - mu0)`.
    pub fn quad_form(&self, z: &[f64]) -> f64 {
        debug_assert_eq!(z.len(), self.dim());
        let l = self.dim();
        let mut q = 0.0;
        for r in 0..l {
            let dr = z[r] - self.mu0[r];
            for c in 0..l {
                q += dr * self.sigma_inv[(r, c)] * (z[c] - self.mu0[c]);
            }
        }
        q
    }

    /// Log of the unnormalized t kernel `(1 + q/nu0)^{-(nu0+L)/2}`, the
    /// factor appearing in the change-probability full conditionals.
    pub fn log_kernel(&self, z: &[f64]) -> f64 {
        let q = self.quad_form(z);
        -0.5 * (self.nu0 + self.dim() as f64) * (q / self.nu0).ln_1p()
    }

    /// Full multivariate Student-t log density at `x`.
    pub fn log_mvt_density(&self, x: &[f64]) -> Result<f64> {
        let l = self.dim() as f64;
        if x.len() != self.dim() {
            return Err(CcpError::InvalidInput(format!(
                "point has dimension {} but the law has dimension {}",
                x.len(),
                self.dim()
            )));
        }
        let log_norm = ln_gamma((self.nu0 + l) / 2.0)
            - ln_gamma(self.nu0 / 2.0)
            - 0.5 * l * (self.nu0 * PI).ln()
            - 0.5 * self.log_det;
        Ok(log_norm + self.log_kernel(x))
    }

    /// Marginal law of the coordinates in `subset` (0-based): same
    /// degrees of freedom, sub-vector location, sub-matrix scale.
    pub fn marginal(&self, subset: &[usize]) -> Result<TPriorParams> {
        if subset.is_empty() {
            return Err(CcpError::InvalidInput("empty marginal subset".into()));
        }
        let l = self.dim();
        let mut seen = vec![false; l];
        for &idx in subset {
            if idx >= l {
                return Err(CcpError::InvalidInput(format!(
                    "index {idx} out of range for dimension {l}"
                )));
            }
            if seen[idx] {
                return Err(CcpError::InvalidInput(format!(
                    "duplicate index {idx} in marginal subset"
                )));
            }
            seen[idx] = true;
        }
        let mu = subset.iter().map(|&i| self.mu0[i]).collect();
        let sigma = DMatrix::from_fn(subset.len(), subset.len(), |r, c| {
            self.sigma0[(subset[r], subset[c])]
        });
        TPriorParams::new(self.nu0, mu, sigma)
    }

    /// One draw `z ~ t_L(nu0, mu0, Sigma0)` via the scale mixture with a
    /// single chi-square mixing variable for the whole vector.
    pub fn sample_z<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let l = self.dim();
        let g = DVector::from_fn(l, |_, _| StandardNormal.sample(rng));
        let w: f64 = ChiSquared::new(self.nu0)
            .expect("nu0 validated at construction")
            .sample(rng);
        let scale = (self.nu0 / w).sqrt();
        let z = &self.mu0 + &self.chol_lower * g * scale;
        z.as_slice().to_vec()
    }

    /// One draw of the change-probability vector `p_t`, the
    /// component-wise logistic of [`Self::sample_z`].
    pub fn sample_p<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.sample_z(rng).into_iter().map(logistic).collect()
    }

    /// Marginal prior change probability of series `i` (0-based):
    /// `E[logistic(z_i)]` by adaptive quadrature, absolute error below
    /// 1e-8.
    pub fn phi(&self, i: usize) -> Result<QuadEstimate> {
        let m = self.marginal(&[i])?;
        let mu = m.mu0[0];
        let sigma = m.sigma0[(0, 0)].sqrt();
        let nu = self.nu0;
        let log_c = ln_gamma((nu + 1.0) / 2.0) - ln_gamma(nu / 2.0) - 0.5 * (nu * PI).ln();
        let est = adaptive_gk15(
            move |theta: f64| {
                let u = theta.tan();
                let sec2 = 1.0 + u * u;
                let log_density = log_c - 0.5 * (nu + 1.0) * (u * u / nu).ln_1p();
                logistic(mu + sigma * u) * log_density.exp() * sec2
            },
            -FRAC_PI_2,
            FRAC_PI_2,
            PHI_TOL,
            MAX_SEGMENTS_1D,
        )?;
        if est.abs_error > PHI_BOUND {
            return Err(CcpError::QuadratureNonConvergence {
                achieved: est.abs_error,
                requested: PHI_BOUND,
                evaluations: est.evaluations,
            });
        }
        Ok(est)
    }

    /// Pairwise prior probability `varphi_is` that series `i` and `s`
    /// both flag a change at the same time: a two-dimensional tensor
    /// quadrature, absolute error below 1e-6.
    pub fn varphi(&self, i: usize, s: usize) -> Result<QuadEstimate> {
        if i == s {
            return Err(CcpError::InvalidInput(
                "varphi requires two distinct series indices".into(),
            ));
        }
        let m = self.marginal(&[i, s])?;
        let nu = self.nu0;
        let mu = (m.mu0[0], m.mu0[1]);
        let sig = (m.sigma0[(0, 0)].sqrt(), m.sigma0[(1, 1)].sqrt());
        let inv = m.sigma_inv.clone();
        let log_c = ln_gamma((nu + 2.0) / 2.0)
            - ln_gamma(nu / 2.0)
            - (nu * PI).ln()
            - 0.5 * m.log_det;
        let evals = std::cell::Cell::new(0usize);
        let worst = std::cell::Cell::new(0.0f64);
        let failed = std::cell::Cell::new(false);
        let outer = adaptive_gk15_best_effort(
            |theta1: f64| {
                let u1 = theta1.tan();
                let sec1 = 1.0 + u1 * u1;
                let z1 = mu.0 + sig.0 * u1;
                let l1 = logistic(z1);
                let inner = adaptive_gk15_best_effort(
                    |theta2: f64| {
                        let u2 = theta2.tan();
                        let sec2 = 1.0 + u2 * u2;
                        let z2 = mu.1 + sig.1 * u2;
                        let d1 = z1 - mu.0;
                        let d2 = z2 - mu.1;
                        let q = inv[(0, 0)] * d1 * d1
                            + 2.0 * inv[(0, 1)] * d1 * d2
                            + inv[(1, 1)] * d2 * d2;
                        let log_density = log_c - 0.5 * (nu + 2.0) * (q / nu).ln_1p();
                        l1 * logistic(z2) * log_density.exp() * sig.0 * sig.1 * sec1 * sec2
                    },
                    -FRAC_PI_2,
                    FRAC_PI_2,
                    VARPHI_INNER_TOL,
                    MAX_SEGMENTS_2D,
                )
                .expect("fixed valid interval");
                evals.set(evals.get() + inner.evaluations);
                worst.set(worst.get().max(inner.abs_error));
                if inner.abs_error > VARPHI_INNER_TOL {
                    failed.set(true);
                }
                inner.value
            },
            -FRAC_PI_2,
            FRAC_PI_2,
            VARPHI_OUTER_TOL,
            MAX_SEGMENTS_2D,
        )?;
        let evaluations = evals.get() + outer.evaluations;
        let worst_inner = worst.get();
        let inner_failed = failed.get();
        // Inner errors enter the outer integral through weights that sum
        // to the interval width pi; bound their contribution accordingly.
        let abs_error = outer.abs_error + PI * worst_inner;
        if inner_failed || abs_error > VARPHI_BOUND {
            return Err(CcpError::QuadratureNonConvergence {
                achieved: abs_error,
                requested: VARPHI_BOUND,
                evaluations,
            });
        }
        Ok(QuadEstimate {
            value: outer.value,
            abs_error,
            evaluations,
        })
    }

    /// `P(c_i = 1 | c_s = 1) = varphi_is / phi_s`.
    pub fn conditional_cp_prob(&self, i: usize, s: usize) -> Result<QuadEstimate> {
        let num = self.varphi(i, s)?;
        let den = self.phi(s)?;
        if den.value < 1e-12 {
            return Err(CcpError::DegenerateInput(format!(
                "phi_{s} = {:.3e} is too small to condition on",
                den.value
            )));
        }
        let value = num.value / den.value;
        let abs_error = (num.abs_error + value * den.abs_error) / den.value;
        Ok(QuadEstimate {
            value,
            abs_error,
            evaluations: num.evaluations + den.evaluations,
        })
    }

    /// First and second moments of the change counts of series `i` and
    /// `s` over a length-`n` series: the count of series `i` is
    /// Binomial(n-1, phi_i), and the cross-count covariance is
    /// `(n-1)(varphi_is - phi_i phi_s)`.
    pub fn count_moments(&self, i: usize, s: usize, n: usize) -> Result<CountMoments> {
        if n < 2 {
            return Err(CcpError::InvalidInput(format!(
                "series length must be >= 2, got {n}"
            )));
        }
        let slots = (n - 1) as f64;
        let phi_i = self.phi(i)?;
        if i == s {
            let var = slots * phi_i.value * (1.0 - phi_i.value);
            return Ok(CountMoments {
                mean_i: slots * phi_i.value,
                mean_s: slots * phi_i.value,
                covariance: var,
                correlation: 1.0,
                quadrature_error: phi_i.abs_error,
            });
        }
        let phi_s = self.phi(s)?;
        let joint = self.varphi(i, s)?;
        let covariance = slots * (joint.value - phi_i.value * phi_s.value);
        let var_i = slots * phi_i.value * (1.0 - phi_i.value);
        let var_s = slots * phi_s.value * (1.0 - phi_s.value);
        Ok(CountMoments {
            mean_i: slots * phi_i.value,
            mean_s: slots * phi_s.value,
            covariance,
            correlation: covariance / (var_i * var_s).sqrt(),
            quadrature_error: joint.abs_error.max(phi_i.abs_error).max(phi_s.abs_error),
        })
    }
}

/// Moments of the per-series change counts implied by the prior.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CountMoments {
    pub mean_i: f64,
    pub mean_s: f64,
    pub covariance: f64,
    pub correlation: f64,
    pub quadrature_error: f64,
}

/// Exact prior summaries for every series and series pair.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PriorSummaries {
    /// Marginal change probabilities `phi_i`.
    pub phi: Vec<f64>,
    /// Pairwise joint probabilities; the diagonal holds `phi_i`.
    pub varphi: Vec<Vec<f64>>,
    /// Largest reported absolute quadrature error bound.
    pub quadrature_error: f64,
}

impl PriorSummaries {
    pub fn compute(params: &TPriorParams) -> Result<Self> {
        let l = params.dim();
        let mut phi = Vec::with_capacity(l);
        let mut worst = 0.0f64;
        for i in 0..l {
            let est = params.phi(i)?;
            worst = worst.max(est.abs_error);
            phi.push(est.value);
        }
        let mut varphi = vec![vec![0.0; l]; l];
        for i in 0..l {
            varphi[i][i] = phi[i];
            for s in (i + 1)..l {
                let est = params.varphi(i, s)?;
                worst = worst.max(est.abs_error);
                varphi[i][s] = est.value;
                varphi[s][i] = est.value;
            }
        }
        Ok(Self {
            phi,
            varphi,
            quadrature_error: worst,
        })
    }
}
