//! Cohesion functions for contiguous blocks and the induced partition law.
//!
//! The geometric cohesion for a block `S_j = {tau_{j-1}+1, ..., tau_j}`
//! with constant change probability `p` is
//! `p (1-p)^(tau_j - tau_{j-1} - 1)` for interior blocks and
//! `(1-p)^(tau_j - tau_{j-1} - 1)` for the terminal block. The per-time
//! extension replaces the constant `p` with a vector `p_1, ..., p_{n-1}`,
//! keeping the product over blocks normalized over all contiguous
//! partitions. Everything here works in log space: at realistic series
//! lengths the direct products underflow.

use crate::error::{CcpError, Result};
use crate::partition::{ChangeIndicators, Interval};

/// A single change probability in `[0, 1]`.
///
/// Boundary values are allowed and produce `-inf` log cohesions rather
/// than errors, so prior probes can evaluate degenerate settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantChangeProb(f64);

impl ConstantChangeProb {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(CcpError::InvalidInput(format!(
                "change probability must lie in [0, 1], got {p}"
            )));
        }
        Ok(Self(p))
    }

    pub fn get(&self) -> f64 {
        self.0
    }
}

/// Per-time change probabilities `p_1, ..., p_{n-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeVaryingChangeProbs {
    p: Vec<f64>,
}

impl TimeVaryingChangeProbs {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(CcpError::InvalidInput(
                "need at least one change probability".into(),
            ));
        }
        if let Some(bad) = p.iter().find(|v| !(0.0..=1.0).contains(*v) || v.is_nan()) {
            return Err(CcpError::InvalidInput(format!(
                "change probabilities must lie in [0, 1], got {bad}"
            )));
        }
        Ok(Self { p })
    }

    pub fn constant(p: ConstantChangeProb, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(CcpError::InvalidInput(format!(
                "series length must be >= 2, got {n}"
            )));
        }
        Self::new(vec![p.get(); n - 1])
    }

    /// Number of time slots, `n - 1`.
    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }
}

/// `ln(1 - p)` without cancellation for small `p`.
fn ln_1m(p: f64) -> f64 {
    (-p).ln_1p()
}

/// Log of the constant-probability cohesion of a contiguous block.
///
/// `block` must be `{tau_{j-1}+1, ..., tau_j}` with `tau_j <= n`; the
/// terminal block (`tau_j = n`) drops the leading `p` factor.
pub fn log_yao_cohesion(block: Interval, p: ConstantChangeProb, n: usize) -> Result<f64> {
    check_block(block, n)?;
    let gap = block.len() - 1;
    // Zero factors contribute exactly 0; avoids 0 * -inf at p = 1.
    let tail = if gap == 0 {
        0.0
    } else {
        gap as f64 * ln_1m(p.get())
    };
    if block.end < n {
        Ok(p.get().ln() + tail)
    } else {
        Ok(tail)
    }
}

/// Log of the per-time cohesion of a contiguous block:
/// `ln p_{tau_j} + sum_{t=tau_{j-1}+1}^{tau_j - 1} ln(1 - p_t)`, with the
/// leading term dropped for the terminal block.
pub fn log_extended_cohesion(
    block: Interval,
    probs: &TimeVaryingChangeProbs,
    n: usize,
) -> Result<f64> {
    check_block(block, n)?;
    if probs.len() != n - 1 {
        return Err(CcpError::InvalidInput(format!(
            "expected {} change probabilities for series length {n}, got {}",
            n - 1,
            probs.len()
        )));
    }
    let p = probs.as_slice();
    let mut total = 0.0;
    for t in block.start..block.end {
        total += ln_1m(p[t - 1]);
    }
    if block.end < n {
        total += p[block.end - 1].ln();
    }
    Ok(total)
}

/// Log prior probability of the partition encoded by `c` under per-time
/// change probabilities: `sum_t [c_t ln p_t + (1 - c_t) ln(1 - p_t)]`.
///
/// Equals the sum of [`log_extended_cohesion`] over the blocks of `c`.
pub fn log_partition_prob(c: &ChangeIndicators, probs: &TimeVaryingChangeProbs) -> Result<f64> {
    if probs.len() != c.n() - 1 {
        return Err(CcpError::InvalidInput(format!(
            "expected {} change probabilities for series length {}, got {}",
            c.n() - 1,
            c.n(),
            probs.len()
        )));
    }
    let p = probs.as_slice();
    let mut total = 0.0;
    for (idx, &ct) in c.as_slice().iter().enumerate() {
        total += if ct == 1 {
            p[idx].ln()
        } else {
            ln_1m(p[idx])
        };
    }
    Ok(total)
}

fn check_block(block: Interval, n: usize) -> Result<()> {
    if block.is_empty() || block.start < 1 || block.end > n {
        return Err(CcpError::InvalidInput(format!(
            "block {block:?} is not a nonempty subinterval of 1..={n}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::enumerate_contiguous;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn iv(start: usize, end: usize) -> Interval {
        Interval { start, end }
    }

    #[test]
    fn yao_cohesion_examples() {
        let p = ConstantChangeProb::new(0.5).unwrap();
        let v = log_yao_cohesion(iv(1, 2), p, 4).unwrap();
        assert_abs_diff_eq!(v, (0.25f64).ln(), epsilon = 1e-14);

        let v = log_yao_cohesion(iv(1, 4), p, 4).unwrap();
        assert_abs_diff_eq!(v, 3.0 * (0.5f64).ln(), epsilon = 1e-14);

        let one = ConstantChangeProb::new(1.0).unwrap();
        let v = log_yao_cohesion(iv(3, 3), one, 4).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 0.0);
    }

    #[test]
    fn boundary_probs_give_infinite_logs() {
        let zero = ConstantChangeProb::new(0.0).unwrap();
        assert_eq!(
            log_yao_cohesion(iv(1, 2), zero, 4).unwrap(),
            f64::NEG_INFINITY
        );
        let one = ConstantChangeProb::new(1.0).unwrap();
        // Interior singleton with p = 1: cohesion is exactly 1.
        assert_eq!(log_yao_cohesion(iv(2, 2), one, 4).unwrap(), 0.0);
        // Width-2 block with p = 1 forces a (1-p) factor.
        assert_eq!(
            log_yao_cohesion(iv(1, 2), one, 4).unwrap(),
            f64::NEG_INFINITY
        );
        assert!(ConstantChangeProb::new(1.2).is_err());
        assert!(ConstantChangeProb::new(-0.1).is_err());
    }

    #[test]
    fn extended_cohesion_examples() {
        let p = TimeVaryingChangeProbs::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let v = log_extended_cohesion(iv(1, 3), &p, 5).unwrap();
        assert_abs_diff_eq!(
            v,
            (0.3f64).ln() + (0.9f64).ln() + (0.8f64).ln(),
            epsilon = 1e-14
        );
        let v = log_extended_cohesion(iv(4, 5), &p, 5).unwrap();
        assert_abs_diff_eq!(v, (0.6f64).ln(), epsilon = 1e-14);
    }

    #[test]
    fn extended_reduces_to_yao_for_constant_probs() {
        let n = 9;
        for &pval in &[0.05, 0.3, 0.7] {
            let pc = ConstantChangeProb::new(pval).unwrap();
            let pv = TimeVaryingChangeProbs::constant(pc, n).unwrap();
            for start in 1..=n {
                for end in start..=n {
                    let yao = log_yao_cohesion(iv(start, end), pc, n).unwrap();
                    let ext = log_extended_cohesion(iv(start, end), &pv, n).unwrap();
                    assert_abs_diff_eq!(yao, ext, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn partition_prob_matches_bernoulli_and_cohesion_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 8;
        let p: Vec<f64> = (0..n - 1).map(|_| rng.random_range(0.05..0.95)).collect();
        let probs = TimeVaryingChangeProbs::new(p.clone()).unwrap();
        for c in enumerate_contiguous(n).unwrap() {
            let lp = log_partition_prob(&c, &probs).unwrap();
            // Bernoulli factorization.
            let direct: f64 = c
                .as_slice()
                .iter()
                .enumerate()
                .map(|(t, &ct)| {
                    if ct == 1 {
                        p[t].ln()
                    } else {
                        (1.0 - p[t]).ln()
                    }
                })
                .sum();
            assert_abs_diff_eq!(lp, direct, epsilon = 1e-12);
            // Product of block cohesions.
            let via_blocks: f64 = c
                .to_blocks()
                .blocks()
                .iter()
                .map(|&b| log_extended_cohesion(b, &probs, n).unwrap())
                .sum();
            assert_abs_diff_eq!(lp, via_blocks, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_block_prob_is_product_of_survivals() {
        let probs = TimeVaryingChangeProbs::new(vec![0.1, 0.2, 0.3]).unwrap();
        let c = ChangeIndicators::single_block(4).unwrap();
        let lp = log_partition_prob(&c, &probs).unwrap();
        assert_abs_diff_eq!(
            lp,
            (0.9f64).ln() + (0.8f64).ln() + (0.7f64).ln(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn constant_p_partition_prob_closed_form() {
        let n = 10;
        let pval = 0.23;
        let probs =
            TimeVaryingChangeProbs::constant(ConstantChangeProb::new(pval).unwrap(), n).unwrap();
        for c in enumerate_contiguous(n).unwrap() {
            let k = c.num_blocks() as f64;
            let expected = (k - 1.0) * pval.ln() + (n as f64 - k) * (1.0 - pval).ln();
            let lp = log_partition_prob(&c, &probs).unwrap();
            assert_abs_diff_eq!(lp, expected, epsilon = 1e-10);
        }
    }

    #[test]
    fn normalization_over_contiguous_partitions() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for n in [6usize, 8, 12] {
            let p: Vec<f64> = (0..n - 1).map(|_| rng.random_range(0.01..0.99)).collect();
            let probs = TimeVaryingChangeProbs::new(p).unwrap();
            let total: f64 = enumerate_contiguous(n)
                .unwrap()
                .map(|c| log_partition_prob(&c, &probs).unwrap().exp())
                .sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);

            // Constant-probability family normalizes as well.
            let pc = ConstantChangeProb::new(rng.random_range(0.01..0.99)).unwrap();
            let pv = TimeVaryingChangeProbs::constant(pc, n).unwrap();
            let total: f64 = enumerate_contiguous(n)
                .unwrap()
                .map(|c| {
                    c.to_blocks()
                        .blocks()
                        .iter()
                        .map(|&b| log_yao_cohesion(b, pc, n).unwrap())
                        .sum::<f64>()
                        .exp()
                })
                .sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
            let _ = pv;
        }
    }
}
