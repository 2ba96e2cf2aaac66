//! MCMC posterior simulation: the correlated change point sampler and
//! the independent per-series baseline.
//!
//! The correlated sampler cycles two full conditionals:
//!
//! * each change probability `p_{i,t}` moves by random-walk Metropolis
//!   against the target
//!   `(1/p) (p/(1-p))^{c_{i,t}}` times the t kernel
//!   `(1 + q/nu0)^{-(nu0+L)/2}` evaluated at `logit(p_t)` with only
//!   coordinate `i` changed — the logit-t prior density after the change
//!   of variables, times the Bernoulli likelihood of `c_{i,t}`;
//! * each indicator `c_{i,t}` is redrawn from a Bernoulli whose odds are
//!   the split-to-merged data factor ratio times `p/(1-p)`; the factors
//!   of every other block cancel.
//!
//! Proposals falling outside `(0, 1)` are rejected outright, matching a
//! plain normal proposal against a target carrying the interval
//! indicator. The baseline replaces the Metropolis step with the
//! conjugate draw `p_i | c ~ Beta(a + k_i - 1, b + n - k_i)`.
//!
//! Block boundaries are kept in a per-series ordered set, and block data
//! factors come from prefix-sum caches, so a full sweep is
//! `O(L n (L^2 + log n))`.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::chains::{Chains, Method};
use crate::error::{CcpError, Result};
use crate::marglik::{MargLikParams, SeriesData, SeriesFactorCache};
use crate::partition::ChangeIndicators;
use crate::tprior::TPriorParams;
use crate::util::{logistic, logit};

/// Sweep counts, proposal scale, and seed for one MCMC run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig {
    pub n_burn: usize,
    pub n_thin: usize,
    pub n_save: usize,
    /// Random-walk Metropolis proposal standard deviation.
    pub rw_sd: f64,
    pub seed: u64,
}

impl Default for McmcConfig {
    /// The simulation-study defaults: 2000 saved draws after 10,000
    /// burn-in sweeps, thinning by 10, proposal standard deviation 0.005.
    fn default() -> Self {
        Self {
            n_burn: 10_000,
            n_thin: 10,
            n_save: 2_000,
            rw_sd: 0.005,
            seed: 0,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_save == 0 {
            return Err(CcpError::InvalidInput("n_save must be >= 1".into()));
        }
        if self.n_thin == 0 {
            return Err(CcpError::InvalidInput("n_thin must be >= 1".into()));
        }
        if !(self.rw_sd.is_finite() && self.rw_sd > 0.0) {
            return Err(CcpError::InvalidInput(format!(
                "rw_sd must be positive, got {}",
                self.rw_sd
            )));
        }
        Ok(())
    }

    /// Total sweeps: burn-in plus one thinning stride per saved draw.
    pub fn total_sweeps(&self) -> usize {
        self.n_burn + self.n_thin * self.n_save
    }
}

/// `ln[(1/p) (p/(1-p))^c]`, the Bernoulli-times-Jacobian part of the
/// `p_{i,t}` full conditional.
fn log_bern_jacobian(c: u8, p: f64) -> f64 {
    let lp = p.ln();
    let lq = (-p).ln_1p();
    -lp + c as f64 * (lp - lq)
}

/// Mutable state of the correlated change point sampler.
///
/// `p` and its logits, the indicator matrix, per-series block boundary
/// sets, factor caches, and running per-series log marginal likelihoods.
pub struct CcpSampler {
    l: usize,
    n: usize,
    prior: TPriorParams,
    caches: Vec<SeriesFactorCache>,
    change_sets: Vec<BTreeSet<usize>>,
    c: Vec<u8>,
    p: Vec<f64>,
    z: Vec<f64>,
    loglik: Vec<f64>,
    accept: Vec<u64>,
    n_sweeps: u64,
    rw_sd: f64,
}

impl CcpSampler {
    /// Cold start at `C = 0` and `p_{i,t} = logistic(mu0_i)`, the prior
    /// center.
    pub fn new(
        data: &[SeriesData],
        ml: &[MargLikParams],
        prior: &TPriorParams,
        rw_sd: f64,
    ) -> Result<Self> {
        let l = data.len();
        if l == 0 {
            return Err(CcpError::InvalidInput("need at least one series".into()));
        }
        if prior.dim() != l {
            return Err(CcpError::InvalidInput(format!(
                "prior has dimension {} but {l} series were given",
                prior.dim()
            )));
        }
        if ml.len() != l {
            return Err(CcpError::InvalidInput(format!(
                "got {} data-factor parameter sets for {l} series",
                ml.len()
            )));
        }
        let n = data[0].len();
        if data.iter().any(|s| s.len() != n) {
            return Err(CcpError::InvalidInput(
                "all series must have equal length".into(),
            ));
        }
        if !(rw_sd.is_finite() && rw_sd > 0.0) {
            return Err(CcpError::InvalidInput(format!(
                "rw_sd must be positive, got {rw_sd}"
            )));
        }
        let slots = n - 1;
        let caches = data
            .iter()
            .zip(ml)
            .map(|(s, params)| SeriesFactorCache::new(s.values(), params))
            .collect::<Result<Vec<_>>>()?;
        let loglik = caches.iter().map(|c| c.log_factor(1, n)).collect();
        let mut p = Vec::with_capacity(l * slots);
        let mut z = Vec::with_capacity(l * slots);
        for i in 0..l {
            let mu = prior.mu0()[i];
            for _ in 0..slots {
                p.push(logistic(mu));
                z.push(mu);
            }
        }
        Ok(Self {
            l,
            n,
            prior: prior.clone(),
            caches,
            change_sets: vec![BTreeSet::new(); l],
            c: vec![0; l * slots],
            p,
            z,
            loglik,
            accept: vec![0; l * slots],
            n_sweeps: 0,
            rw_sd,
        })
    }

    fn slots(&self) -> usize {
        self.n - 1
    }

    #[inline]
    fn idx(&self, i: usize, t: usize) -> usize {
        i * self.slots() + t
    }

    /// Merged-block boundaries around slot `t` (1-based position in
    /// `1..=n-1`), ignoring the indicator at `t` itself.
    fn boundaries(&self, i: usize, t: usize) -> (usize, usize) {
        let set = &self.change_sets[i];
        let start = set.range(..t).next_back().map_or(1, |&s| s + 1);
        let end = set.range(t + 1..).next().copied().unwrap_or(self.n);
        (start, end)
    }

    /// Full conditional `P(c_{i,t} = 1 | everything else)` at the
    /// 1-based slot `t`.
    pub fn full_conditional_prob_c(&self, i: usize, t: usize) -> f64 {
        let (start, end) = self.boundaries(i, t);
        let cache = &self.caches[i];
        let log_odds = cache.log_factor(start, t) + cache.log_factor(t + 1, end)
            - cache.log_factor(start, end)
            + self.z[self.idx(i, t - 1)];
        logistic(log_odds)
    }

    /// One Metropolis pass over every `(i, t)` in ascending order.
    pub fn sweep_p<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let slots = self.slots();
        let mut z_col = vec![0.0; self.l];
        for i in 0..self.l {
            for t in 0..slots {
                let idx = self.idx(i, t);
                let step: f64 = StandardNormal.sample(rng);
                let proposal = self.p[idx] + self.rw_sd * step;
                if proposal <= 0.0 || proposal >= 1.0 {
                    continue;
                }
                for l2 in 0..self.l {
                    z_col[l2] = self.z[l2 * slots + t];
                }
                let kernel_cur = self.prior.log_kernel(&z_col);
                let z_prop = logit(proposal);
                z_col[i] = z_prop;
                let kernel_prop = self.prior.log_kernel(&z_col);
                let c = self.c[idx];
                let log_ratio = log_bern_jacobian(c, proposal) + kernel_prop
                    - log_bern_jacobian(c, self.p[idx])
                    - kernel_cur;
                let u: f64 = rng.random();
                if u.ln() < log_ratio {
                    self.p[idx] = proposal;
                    self.z[idx] = z_prop;
                    self.accept[idx] += 1;
                }
            }
        }
        self.n_sweeps += 1;
    }

    /// One Gibbs pass over every indicator in ascending order,
    /// maintaining the block sets and log-likelihood totals.
    pub fn sweep_c<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for i in 0..self.l {
            for t in 1..=self.slots() {
                let (start, end) = self.boundaries(i, t);
                let cache = &self.caches[i];
                let split_minus_merged = cache.log_factor(start, t)
                    + cache.log_factor(t + 1, end)
                    - cache.log_factor(start, end);
                let log_odds = split_minus_merged + self.z[self.idx(i, t - 1)];
                let u: f64 = rng.random();
                let new_c = u < logistic(log_odds);
                let idx = self.idx(i, t - 1);
                let old_c = self.c[idx] == 1;
                if new_c != old_c {
                    if new_c {
                        self.change_sets[i].insert(t);
                        self.loglik[i] += split_minus_merged;
                    } else {
                        self.change_sets[i].remove(&t);
                        self.loglik[i] -= split_minus_merged;
                    }
                    self.c[idx] = u8::from(new_c);
                }
            }
        }
    }

    /// Replaces the observations of series `i`, keeping the current
    /// indicators. Used by successive-conditional (Geweke) simulation.
    pub fn set_series_data(&mut self, i: usize, values: &[f64]) -> Result<()> {
        if values.len() != self.n {
            return Err(CcpError::InvalidInput(format!(
                "series {i} replacement has length {} but the sampler holds {}",
                values.len(),
                self.n
            )));
        }
        self.caches[i] = SeriesFactorCache::new(values, self.caches[i].params())?;
        self.loglik[i] = self.caches[i].log_likelihood(&self.indicators(i));
        Ok(())
    }

    /// Overwrites the indicators of series `i`.
    pub fn set_indicators(&mut self, i: usize, c: &ChangeIndicators) -> Result<()> {
        if c.n() != self.n {
            return Err(CcpError::InvalidInput(format!(
                "indicators are over length {} but the sampler holds {}",
                c.n(),
                self.n
            )));
        }
        let slots = self.slots();
        self.change_sets[i] = c.change_times().iter().map(|&time| time - 1).collect();
        self.c[i * slots..(i + 1) * slots].copy_from_slice(c.as_slice());
        self.loglik[i] = self.caches[i].log_likelihood(c);
        Ok(())
    }

    /// Overwrites the change probabilities of series `i`.
    pub fn set_prob_row(&mut self, i: usize, probs: &[f64]) -> Result<()> {
        if probs.len() != self.slots() {
            return Err(CcpError::InvalidInput(format!(
                "expected {} probabilities, got {}",
                self.slots(),
                probs.len()
            )));
        }
        if probs.iter().any(|&v| !(0.0 < v && v < 1.0)) {
            return Err(CcpError::InvalidInput(
                "probabilities must lie strictly inside (0, 1)".into(),
            ));
        }
        for t in 0..self.slots() {
            let idx = self.idx(i, t);
            self.p[idx] = probs[t];
            self.z[idx] = logit(probs[t]);
        }
        Ok(())
    }

    pub fn indicators(&self, i: usize) -> ChangeIndicators {
        let slots = self.slots();
        ChangeIndicators::new(self.c[i * slots..(i + 1) * slots].to_vec(), self.n)
            .expect("sampler state is always a valid indicator vector")
    }

    pub fn prob_row(&self, i: usize) -> &[f64] {
        let slots = self.slots();
        &self.p[i * slots..(i + 1) * slots]
    }

    /// Number of blocks in the current partition of series `i`.
    pub fn num_blocks(&self, i: usize) -> usize {
        1 + self.change_sets[i].len()
    }

    /// Running total of the log marginal likelihood of series `i`.
    pub fn cached_loglik(&self, i: usize) -> f64 {
        self.loglik[i]
    }

    /// Recomputes the series log likelihood from scratch; the cached and
    /// recomputed values must agree up to rounding.
    pub fn recompute_loglik(&self, i: usize) -> f64 {
        self.caches[i].log_likelihood(&self.indicators(i))
    }
}

fn standardize_all(data: &[SeriesData]) -> Result<Vec<SeriesData>> {
    data.iter()
        .map(|s| {
            if s.is_standardized() {
                Ok(s.clone())
            } else {
                s.standardize()
            }
        })
        .collect()
}

/// Runs the correlated change point sampler and returns the thinned
/// archive. Inputs are standardized first unless already flagged;
/// results are bitwise reproducible for a fixed seed.
pub fn run_ccp_ppm(
    data: &[SeriesData],
    ml: &[MargLikParams],
    prior: &TPriorParams,
    cfg: &McmcConfig,
) -> Result<Chains> {
    cfg.validate()?;
    let data = standardize_all(data)?;
    let mut sampler = CcpSampler::new(&data, ml, prior, cfg.rw_sd)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let slots = sampler.slots();
    let mut c_draws = Vec::with_capacity(cfg.n_save * sampler.l * slots);
    let mut p_draws = Vec::with_capacity(cfg.n_save * sampler.l * slots);
    let mut loglik = Vec::with_capacity(cfg.n_save);
    for sweep in 1..=cfg.total_sweeps() {
        sampler.sweep_p(&mut rng);
        sampler.sweep_c(&mut rng);
        if sweep > cfg.n_burn && (sweep - cfg.n_burn) % cfg.n_thin == 0 {
            c_draws.extend_from_slice(&sampler.c);
            p_draws.extend_from_slice(&sampler.p);
            loglik.push(sampler.loglik.iter().sum());
        }
    }
    let chains = Chains {
        method: Method::Ccp,
        n: sampler.n,
        l: sampler.l,
        n_save: cfg.n_save,
        config: *cfg,
        series_names: data.iter().map(|s| s.name().to_string()).collect(),
        c_draws,
        p_draws,
        accept: sampler.accept.clone(),
        n_sweeps: sampler.n_sweeps,
        loglik,
    };
    chains.validate()?;
    Ok(chains)
}

/// Independent change point baseline: per-series Gibbs with a constant
/// change probability under a conjugate Beta prior.
pub struct IndepSampler {
    l: usize,
    n: usize,
    caches: Vec<SeriesFactorCache>,
    change_sets: Vec<BTreeSet<usize>>,
    c: Vec<u8>,
    /// One constant change probability per series.
    p: Vec<f64>,
    beta_a: f64,
    beta_b: f64,
    loglik: Vec<f64>,
}

impl IndepSampler {
    pub fn new(
        data: &[SeriesData],
        ml: &[MargLikParams],
        beta_prior: (f64, f64),
    ) -> Result<Self> {
        let (a, b) = beta_prior;
        if !(a.is_finite() && a > 0.0 && b.is_finite() && b > 0.0) {
            return Err(CcpError::InvalidInput(format!(
                "Beta prior parameters must be positive, got ({a}, {b})"
            )));
        }
        let l = data.len();
        if l == 0 {
            return Err(CcpError::InvalidInput("need at least one series".into()));
        }
        if ml.len() != l {
            return Err(CcpError::InvalidInput(format!(
                "got {} data-factor parameter sets for {l} series",
                ml.len()
            )));
        }
        let n = data[0].len();
        if data.iter().any(|s| s.len() != n) {
            return Err(CcpError::InvalidInput(
                "all series must have equal length".into(),
            ));
        }
        let caches = data
            .iter()
            .zip(ml)
            .map(|(s, params)| SeriesFactorCache::new(s.values(), params))
            .collect::<Result<Vec<_>>>()?;
        let loglik = caches.iter().map(|c| c.log_factor(1, n)).collect();
        Ok(Self {
            l,
            n,
            caches,
            change_sets: vec![BTreeSet::new(); l],
            c: vec![0; l * (n - 1)],
            p: vec![a / (a + b); l],
            beta_a: a,
            beta_b: b,
            loglik,
        })
    }

    fn slots(&self) -> usize {
        self.n - 1
    }

    /// Conjugate update `p_i | c ~ Beta(a + k_i - 1, b + n - k_i)` for
    /// every series.
    pub fn draw_p<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for i in 0..self.l {
            let k = 1 + self.change_sets[i].len();
            let alpha = self.beta_a + (k - 1) as f64;
            let beta = self.beta_b + (self.n - k) as f64;
            self.p[i] = Beta::new(alpha, beta)
                .expect("posterior Beta parameters are positive")
                .sample(rng);
        }
    }

    /// One Gibbs pass over every indicator.
    pub fn sweep_c<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for i in 0..self.l {
            let prior_logit = logit(self.p[i]);
            for t in 1..=self.slots() {
                let set = &self.change_sets[i];
                let start = set.range(..t).next_back().map_or(1, |&s| s + 1);
                let end = set.range(t + 1..).next().copied().unwrap_or(self.n);
                let cache = &self.caches[i];
                let split_minus_merged = cache.log_factor(start, t)
                    + cache.log_factor(t + 1, end)
                    - cache.log_factor(start, end);
                let u: f64 = rng.random();
                let new_c = u < logistic(split_minus_merged + prior_logit);
                let idx = i * self.slots() + (t - 1);
                let old_c = self.c[idx] == 1;
                if new_c != old_c {
                    if new_c {
                        self.change_sets[i].insert(t);
                        self.loglik[i] += split_minus_merged;
                    } else {
                        self.change_sets[i].remove(&t);
                        self.loglik[i] -= split_minus_merged;
                    }
                    self.c[idx] = u8::from(new_c);
                }
            }
        }
    }

    pub fn set_indicators(&mut self, i: usize, c: &ChangeIndicators) -> Result<()> {
        if c.n() != self.n {
            return Err(CcpError::InvalidInput(format!(
                "indicators are over length {} but the sampler holds {}",
                c.n(),
                self.n
            )));
        }
        let slots = self.slots();
        self.change_sets[i] = c.change_times().iter().map(|&time| time - 1).collect();
        self.c[i * slots..(i + 1) * slots].copy_from_slice(c.as_slice());
        self.loglik[i] = self.caches[i].log_likelihood(c);
        Ok(())
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.p[i]
    }

    pub fn num_blocks(&self, i: usize) -> usize {
        1 + self.change_sets[i].len()
    }
}

/// Runs the independent baseline and returns an archive with the same
/// shape as [`run_ccp_ppm`]: the constant per-series probability is
/// broadcast over the time slots, and every conjugate draw counts as
/// accepted.
pub fn run_indep_ppm(
    data: &[SeriesData],
    ml: &[MargLikParams],
    beta_prior: (f64, f64),
    cfg: &McmcConfig,
) -> Result<Chains> {
    cfg.validate()?;
    let data = standardize_all(data)?;
    let mut sampler = IndepSampler::new(&data, ml, beta_prior)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let slots = sampler.slots();
    let mut c_draws = Vec::with_capacity(cfg.n_save * sampler.l * slots);
    let mut p_draws = Vec::with_capacity(cfg.n_save * sampler.l * slots);
    let mut loglik = Vec::with_capacity(cfg.n_save);
    for sweep in 1..=cfg.total_sweeps() {
        sampler.draw_p(&mut rng);
        sampler.sweep_c(&mut rng);
        if sweep > cfg.n_burn && (sweep - cfg.n_burn) % cfg.n_thin == 0 {
            c_draws.extend_from_slice(&sampler.c);
            for i in 0..sampler.l {
                p_draws.extend(std::iter::repeat(sampler.p[i]).take(slots));
            }
            loglik.push(sampler.loglik.iter().sum());
        }
    }
    let total = cfg.total_sweeps() as u64;
    let chains = Chains {
        method: Method::Indep,
        n: sampler.n,
        l: sampler.l,
        n_save: cfg.n_save,
        config: *cfg,
        series_names: data.iter().map(|s| s.name().to_string()).collect(),
        c_draws,
        p_draws,
        accept: vec![total; sampler.l * slots],
        n_sweeps: total,
        loglik,
    };
    chains.validate()?;
    Ok(chains)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohesion::{log_partition_prob, TimeVaryingChangeProbs};
    use crate::marglik::log_likelihood_given_partition;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn ml(mu0: f64) -> MargLikParams {
        MargLikParams::new(mu0, 1.0, 2.0, 1.0).unwrap()
    }

    fn two_series(n: usize, seed: u64) -> Vec<SeriesData> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..2)
            .map(|i| {
                let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                SeriesData::new(format!("s{i}"), y)
                    .unwrap()
                    .assume_standardized()
            })
            .collect()
    }

    fn study_prior() -> TPriorParams {
        TPriorParams::compound_symmetric(3.0, vec![-6.0, -6.0], 10.0, 0.9).unwrap()
    }

    #[test]
    fn config_validation_and_totals() {
        let cfg = McmcConfig::default();
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.total_sweeps(), 10_000 + 10 * 2_000);
        assert!(McmcConfig { n_save: 0, ..cfg }.validate().is_err());
        assert!(McmcConfig { n_thin: 0, ..cfg }.validate().is_err());
        assert!(McmcConfig { rw_sd: 0.0, ..cfg }.validate().is_err());
    }

    #[test]
    fn target_density_identity() {
        // The Metropolis target equals Bernoulli(c | p) times the
        // change-of-variables density of p, up to a constant in p.
        let data = two_series(6, 1);
        let prior = TPriorParams::compound_symmetric(4.0, vec![-1.0, 0.5], 2.0, 0.4).unwrap();
        let sampler = CcpSampler::new(&data, &[ml(0.0), ml(0.0)], &prior, 0.005).unwrap();
        let slots = sampler.slots();
        let t = 2usize; // 0-based slot
        for c in [0u8, 1u8] {
            let mut diffs = Vec::new();
            for &pv in &[0.01, 0.1, 0.3, 0.55, 0.8, 0.99] {
                let mut z_col: Vec<f64> = (0..2).map(|l2| sampler.z[l2 * slots + t]).collect();
                z_col[0] = logit(pv);
                let expr = log_bern_jacobian(c, pv) + prior.log_kernel(&z_col);
                let direct = c as f64 * pv.ln()
                    + (1.0 - c as f64) * (1.0 - pv).ln()
                    + prior.log_mvt_density(&z_col).unwrap()
                    - (pv * (1.0 - pv)).ln();
                diffs.push(direct - expr);
            }
            let spread = diffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - diffs.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(spread < 1e-10, "identity violated, spread {spread}");
        }
    }

    #[test]
    fn symmetric_prior_makes_odds_pure_data_ratio() {
        let data = two_series(8, 2);
        let prior = study_prior();
        let params = [ml(0.0), ml(0.0)];
        let mut sampler = CcpSampler::new(&data, &params, &prior, 0.005).unwrap();
        sampler.set_prob_row(0, &vec![0.5; 7]).unwrap();
        let cache = SeriesFactorCache::new(data[0].values(), &params[0]).unwrap();
        for t in 1..=7 {
            let expected = logistic(
                cache.log_factor(1, t) + cache.log_factor(t + 1, 8) - cache.log_factor(1, 8),
            );
            assert_abs_diff_eq!(
                sampler.full_conditional_prob_c(0, t),
                expected,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn full_conditional_matches_brute_force() {
        // Exhaustive check on a single short series: the Gibbs odds agree
        // with the normalized restriction of likelihood times prior.
        let n = 8;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let series = vec![SeriesData::new("s", y.clone()).unwrap().assume_standardized()];
        let prior = TPriorParams::compound_symmetric(3.0, vec![-1.0], 2.0, 0.0).unwrap();
        let params = [ml(0.2)];
        let mut sampler = CcpSampler::new(&series, &params, &prior, 0.005).unwrap();
        for trial in 0..10 {
            // Random state.
            let bits: Vec<u8> = (0..n - 1).map(|_| rng.random_range(0..2u8)).collect();
            let c = ChangeIndicators::new(bits, n).unwrap();
            sampler.set_indicators(0, &c).unwrap();
            let probs: Vec<f64> = (0..n - 1).map(|_| rng.random_range(0.05..0.95)).collect();
            sampler.set_prob_row(0, &probs).unwrap();
            let tv = TimeVaryingChangeProbs::new(probs.clone()).unwrap();
            for t in 1..=n - 1 {
                let mut w = [0.0f64; 2];
                for a in 0..2u8 {
                    let mut bits = c.as_slice().to_vec();
                    bits[t - 1] = a;
                    let ca = ChangeIndicators::new(bits, n).unwrap();
                    w[a as usize] = (log_likelihood_given_partition(&series[0], &ca, &params[0])
                        .unwrap()
                        + log_partition_prob(&ca, &tv).unwrap())
                    .exp();
                }
                let brute = w[1] / (w[0] + w[1]);
                let fast = sampler.full_conditional_prob_c(0, t);
                assert!(
                    (brute - fast).abs() <= 1e-10,
                    "trial {trial} t {t}: brute {brute} vs fast {fast}"
                );
            }
        }
    }

    #[test]
    fn strong_signal_boundary_detected() {
        let n = 100;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let y: Vec<f64> = (0..n)
            .map(|t| {
                let mean = if t < 50 { -5.0 } else { 5.0 };
                mean + rng.random_range(-0.5..0.5)
            })
            .collect();
        let series = vec![SeriesData::new("s", y).unwrap()];
        let prior = TPriorParams::compound_symmetric(3.0, vec![-6.0], 10.0, 0.0).unwrap();
        let cfg = McmcConfig {
            n_burn: 500,
            n_thin: 2,
            n_save: 500,
            rw_sd: 0.005,
            seed: 11,
        };
        let chains = run_ccp_ppm(&series, &[ml(0.0)], &prior, &cfg).unwrap();
        // Slot 50 (1-based) marks time 51, the first index of the second block.
        let hits: usize = (0..chains.n_save)
            .filter(|&d| chains.c_at(d, 0, 49) == 1)
            .count();
        assert!(
            hits as f64 / chains.n_save as f64 > 0.99,
            "boundary probability {}",
            hits as f64 / chains.n_save as f64
        );
    }

    #[test]
    fn block_cache_integrity_after_sweeps() {
        let data = two_series(40, 3);
        let prior = study_prior();
        let params = [ml(0.0), ml(0.0)];
        let mut sampler = CcpSampler::new(&data, &params, &prior, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            sampler.sweep_p(&mut rng);
            sampler.sweep_c(&mut rng);
            for i in 0..2 {
                assert_abs_diff_eq!(
                    sampler.cached_loglik(i),
                    sampler.recompute_loglik(i),
                    epsilon = 1e-8
                );
            }
        }
    }

    #[test]
    fn runs_are_deterministic_and_shaped() {
        let data = two_series(30, 8);
        let prior = study_prior();
        let params = [ml(0.0), ml(0.0)];
        let cfg = McmcConfig {
            n_burn: 50,
            n_thin: 3,
            n_save: 20,
            rw_sd: 0.005,
            seed: 123,
        };
        let a = run_ccp_ppm(&data, &params, &prior, &cfg).unwrap();
        let b = run_ccp_ppm(&data, &params, &prior, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_save, 20);
        assert_eq!(a.c_draws.len(), 20 * 2 * 29);
        assert_eq!(a.n_sweeps, cfg.total_sweeps() as u64);
        // Attempts per coordinate equal the sweep count.
        assert!(a.accept.iter().all(|&cnt| cnt <= a.n_sweeps));

        let ia = run_indep_ppm(&data, &params, (1.0, 20.0), &cfg).unwrap();
        let ib = run_indep_ppm(&data, &params, (1.0, 20.0), &cfg).unwrap();
        assert_eq!(ia, ib);
        // Broadcast probabilities are constant across slots.
        for d in 0..ia.n_save {
            for i in 0..2 {
                let first = ia.p_at(d, i, 0);
                assert!((0..29).all(|t| ia.p_at(d, i, t) == first));
            }
        }
    }

    #[test]
    fn indep_sampler_conjugate_parameters() {
        let data = two_series(12, 6);
        let params = [ml(0.0), ml(0.0)];
        let mut sampler = IndepSampler::new(&data, &params, (2.0, 30.0)).unwrap();
        let c = ChangeIndicators::new(vec![1, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0], 12).unwrap();
        sampler.set_indicators(0, &c).unwrap();
        assert_eq!(sampler.num_blocks(0), 4);
        // Draws given fixed c must stay in (0,1) and vary.
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut draws = Vec::new();
        for _ in 0..100 {
            sampler.draw_p(&mut rng);
            draws.push(sampler.prob(0));
        }
        assert!(draws.iter().all(|&p| 0.0 < p && p < 1.0));
        let spread = draws.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - draws.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread > 0.0);
    }

    #[test]
    fn dimension_mismatches_rejected() {
        let data = two_series(10, 1);
        let prior = TPriorParams::compound_symmetric(3.0, vec![-6.0], 10.0, 0.0).unwrap();
        assert!(CcpSampler::new(&data, &[ml(0.0), ml(0.0)], &prior, 0.005).is_err());
        let prior2 = study_prior();
        assert!(CcpSampler::new(&data, &[ml(0.0)], &prior2, 0.005).is_err());
        assert!(IndepSampler::new(&data, &[ml(0.0), ml(0.0)], (0.0, 1.0)).is_err());
    }
}
