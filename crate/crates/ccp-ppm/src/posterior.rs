//! Posterior summaries: change-point probabilities, threshold
//! classification, loss-based partition estimates, and evaluation
//! metrics.
//!
//! The partition point estimate minimizes the posterior-expected
//! generalized Binder loss
//!
//! ```text
//! sum_{s<t} [ a 1{s !~ t in rho} pi_st + b 1{s ~ t in rho} (1 - pi_st) ]
//! ```
//!
//! where `pi_st` is the posterior co-clustering probability (no sampled
//! change point strictly between `s` and `t`) and `a` penalizes pairs
//! split by the estimate that co-cluster a posteriori — the pairs a
//! change point false positive separates. Raising `a` therefore smooths
//! the estimate. Dropping the partition-free `a pi_st` term leaves a
//! loss that is additive over blocks, so the exact minimizer over all
//! contiguous partitions comes from an `O(n^2)` interval dynamic program
//! after prefix-summing the co-clustering probabilities.

use serde::{Deserialize, Serialize};

use crate::chains::Chains;
use crate::error::{CcpError, Result};
use crate::partition::ChangeIndicators;

/// Generalized Binder penalties: `fp_penalty` weighs falsely merged
/// pairs, `fn_penalty` falsely separated pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub fp_penalty: f64,
    pub fn_penalty: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            fp_penalty: 25.0,
            fn_penalty: 1.0,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("fp_penalty", self.fp_penalty), ("fn_penalty", self.fn_penalty)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CcpError::InvalidInput(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Posterior means of the change indicators, one per series and slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeProbReport {
    pub n: usize,
    pub l: usize,
    /// Flat `l x (n-1)`, series-major.
    pub probs: Vec<f64>,
    /// Threshold used for reported classifications.
    pub threshold: f64,
}

impl ChangeProbReport {
    pub fn prob(&self, series: usize, t: usize) -> f64 {
        self.probs[series * (self.n - 1) + t]
    }

    pub fn series_probs(&self, series: usize) -> &[f64] {
        let slots = self.n - 1;
        &self.probs[series * slots..(series + 1) * slots]
    }
}

/// Elementwise posterior means of the saved indicator draws.
pub fn change_prob_estimates(chains: &Chains) -> Result<ChangeProbReport> {
    if chains.n_save == 0 {
        return Err(CcpError::InvalidInput("empty chains".into()));
    }
    chains.validate()?;
    let slots = chains.n - 1;
    let mut probs = vec![0.0f64; chains.l * slots];
    for draw in 0..chains.n_save {
        for series in 0..chains.l {
            let row = chains.c_row(draw, series);
            let base = series * slots;
            for (t, &v) in row.iter().enumerate() {
                probs[base + t] += v as f64;
            }
        }
    }
    for v in &mut probs {
        *v /= chains.n_save as f64;
    }
    Ok(ChangeProbReport {
        n: chains.n,
        l: chains.l,
        probs,
        threshold: 0.5,
    })
}

/// Classifies slot `t` as a change point when its posterior probability
/// strictly exceeds `threshold`.
pub fn classify_threshold(
    report: &ChangeProbReport,
    threshold: f64,
) -> Result<Vec<ChangeIndicators>> {
    if !(0.0 < threshold && threshold < 1.0) {
        return Err(CcpError::InvalidInput(format!(
            "threshold must lie in (0, 1), got {threshold}"
        )));
    }
    (0..report.l)
        .map(|series| {
            let c: Vec<u8> = report
                .series_probs(series)
                .iter()
                .map(|&p| u8::from(p > threshold))
                .collect();
            ChangeIndicators::new(c, report.n)
        })
        .collect()
}

/// Prefix sums of the co-clustering probabilities of one series:
/// `ps[s][t] = sum_{u=s+1..=t} pi_{s,u}`, flat with stride `n + 1`.
fn co_cluster_prefix(chains: &Chains, series: usize) -> Vec<f64> {
    let n = chains.n;
    let stride = n + 1;
    // hist[s][v]: draws whose first change position >= s equals v
    // (v = n means no change at or after s).
    let mut hist = vec![0u32; stride * stride];
    let mut next_change = vec![0usize; n + 2];
    for draw in 0..chains.n_save {
        let row = chains.c_row(draw, series);
        next_change[n] = n;
        for s in (1..n).rev() {
            next_change[s] = if row[s - 1] == 1 { s } else { next_change[s + 1] };
        }
        for s in 1..n {
            hist[s * stride + next_change[s]] += 1;
        }
    }
    let n_save = chains.n_save as f64;
    let mut ps = vec![0.0f64; stride * stride];
    for s in 1..n {
        // Suffix counts turn the histogram into P(next change >= t).
        let mut count_ge = 0u32;
        let mut suffix = vec![0.0f64; stride];
        for v in (s..=n).rev() {
            count_ge += hist[s * stride + v];
            suffix[v] = count_ge as f64 / n_save;
        }
        let base = s * stride;
        for t in (s + 1)..=n {
            ps[base + t] = ps[base + t - 1] + suffix[t];
        }
    }
    ps
}

/// Exact minimizer of the posterior-expected generalized Binder loss
/// over all contiguous partitions of series `i`, by interval dynamic
/// programming.
pub fn estimate_partition(
    chains: &Chains,
    loss: &LossConfig,
    series: usize,
) -> Result<ChangeIndicators> {
    loss.validate()?;
    if chains.n_save < 2 {
        return Err(CcpError::InvalidInput(
            "partition estimation needs at least 2 saved draws".into(),
        ));
    }
    if series >= chains.l {
        return Err(CcpError::InvalidInput(format!(
            "series index {series} out of range for {} series",
            chains.l
        )));
    }
    chains.validate()?;
    let n = chains.n;
    let stride = n + 1;
    let ps = co_cluster_prefix(chains, series);
    let b = loss.fn_penalty;
    let ab = loss.fp_penalty + loss.fn_penalty;

    // Within a block, pair (s, t) costs b (1 - pi_st) - a pi_st; the
    // separated-pair term a pi_st is partition-free and dropped.
    // rc(u, v) = sum_{t=u+1..=v} [b - (a+b) pi_{u,t}]; the within-block
    // loss W(u, v) accumulates rc row by row while u descends.
    let mut best = vec![0.0f64; n + 1];
    let mut arg = vec![0usize; n + 1];
    for v in 1..=n {
        let mut w = 0.0f64;
        let mut best_val = best[v - 1];
        let mut best_u = v;
        for u in (1..v).rev() {
            w += b * (v - u) as f64 - ab * ps[u * stride + v];
            let cand = best[u - 1] + w;
            if cand < best_val {
                best_val = cand;
                best_u = u;
            }
        }
        best[v] = best_val;
        arg[v] = best_u;
    }

    let mut c = vec![0u8; n - 1];
    let mut v = n;
    while v > 0 {
        let u = arg[v];
        if u > 1 {
            c[u - 2] = 1; // block starts at u, so position u-1 carries a change
        }
        v = u - 1;
    }
    ChangeIndicators::new(c, n)
}

/// Adjusted Rand index between two partitions of the same length.
///
/// Chance-corrected pair counting; 1 for identical partitions, about 0
/// for independent ones. Degenerate cases where the correction removes
/// all resolution (both partitions trivial) return 1.
pub fn ari(a: &ChangeIndicators, b: &ChangeIndicators) -> Result<f64> {
    if a.n() != b.n() {
        return Err(CcpError::InvalidInput(format!(
            "partitions have different lengths {} and {}",
            a.n(),
            b.n()
        )));
    }
    let comb2 = |x: f64| x * (x - 1.0) / 2.0;
    let blocks_a = a.to_blocks();
    let blocks_b = b.to_blocks();
    // Contiguous blocks: the contingency table entries are interval
    // overlaps, collected in one merged sweep.
    let mut sum_nij = 0.0;
    let (mut ia, mut ib) = (0usize, 0usize);
    let ends_a = blocks_a.endpoints();
    let ends_b = blocks_b.endpoints();
    let mut prev = 0usize;
    while ia < ends_a.len() && ib < ends_b.len() {
        let end = ends_a[ia].min(ends_b[ib]);
        sum_nij += comb2((end - prev) as f64);
        prev = end;
        if ends_a[ia] == end {
            ia += 1;
        }
        if ends_b[ib] == end {
            ib += 1;
        }
    }
    let sum_a: f64 = blocks_a.blocks().iter().map(|blk| comb2(blk.len() as f64)).sum();
    let sum_b: f64 = blocks_b.blocks().iter().map(|blk| comb2(blk.len() as f64)).sum();
    let total = comb2(a.n() as f64);
    let expected = sum_a * sum_b / total;
    let max = 0.5 * (sum_a + sum_b);
    if (max - expected).abs() < 1e-12 {
        return Ok(1.0);
    }
    Ok((sum_nij - expected) / (max - expected))
}

/// Adjusted Rand index between two arbitrary clusterings given as label
/// vectors. The chance correction is exact under the label-permutation
/// null: permuting the items of either clustering yields expectation 0.
pub fn ari_labels(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(CcpError::InvalidInput(format!(
            "label vectors have different lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(CcpError::InvalidInput("empty label vectors".into()));
    }
    let comb2 = |x: f64| x * (x - 1.0) / 2.0;
    let mut contingency: std::collections::HashMap<(usize, usize), f64> =
        std::collections::HashMap::new();
    let mut count_a: std::collections::HashMap<usize, f64> = std::collections::HashMap::new();
    let mut count_b: std::collections::HashMap<usize, f64> = std::collections::HashMap::new();
    for (&la, &lb) in a.iter().zip(b) {
        *contingency.entry((la, lb)).or_default() += 1.0;
        *count_a.entry(la).or_default() += 1.0;
        *count_b.entry(lb).or_default() += 1.0;
    }
    let sum_nij: f64 = contingency.values().map(|&v| comb2(v)).sum();
    let sum_a: f64 = count_a.values().map(|&v| comb2(v)).sum();
    let sum_b: f64 = count_b.values().map(|&v| comb2(v)).sum();
    let total = comb2(a.len() as f64);
    let expected = sum_a * sum_b / total;
    let max = 0.5 * (sum_a + sum_b);
    if (max - expected).abs() < 1e-12 {
        return Ok(1.0);
    }
    Ok((sum_nij - expected) / (max - expected))
}

/// Indicator-level classification rates against a ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfusionMetrics {
    pub misclassification: f64,
    /// True positive rate; `None` when the truth has no change points.
    pub sensitivity: Option<f64>,
    /// True negative rate; `None` when the truth has no non-change slots.
    pub specificity: Option<f64>,
}

/// Misclassification, sensitivity, and specificity over the `n - 1`
/// indicator slots. Rates with an empty reference class are reported as
/// `None`, never coerced to zero.
pub fn confusion_metrics(
    estimated: &ChangeIndicators,
    truth: &ChangeIndicators,
) -> Result<ConfusionMetrics> {
    if estimated.n() != truth.n() {
        return Err(CcpError::InvalidInput(format!(
            "estimate covers {} times, truth {}",
            estimated.n(),
            truth.n()
        )));
    }
    let (mut tp, mut fp, mut tn, mut fneg) = (0u32, 0u32, 0u32, 0u32);
    for (&e, &t) in estimated.as_slice().iter().zip(truth.as_slice()) {
        match (e, t) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 0) => tn += 1,
            _ => fneg += 1,
        }
    }
    let slots = (estimated.n() - 1) as f64;
    let positives = tp + fneg;
    let negatives = tn + fp;
    Ok(ConfusionMetrics {
        misclassification: (fp + fneg) as f64 / slots,
        sensitivity: (positives > 0).then(|| tp as f64 / positives as f64),
        specificity: (negatives > 0).then(|| tn as f64 / negatives as f64),
    })
}

/// Posterior co-movement of the per-series partitions: the ARI between
/// every pair of series, draw by draw.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseAriTrace {
    /// 0-based series pairs `(i, s)` with `i < s`.
    pub pairs: Vec<(usize, usize)>,
    /// Mean ARI per pair over the saved draws.
    pub pair_means: Vec<f64>,
    /// Mean ARI over pairs, per draw.
    pub per_draw_mean: Vec<f64>,
    /// Overall mean across draws and pairs.
    pub grand_mean: f64,
}

pub fn pairwise_ari_trace(chains: &Chains) -> Result<PairwiseAriTrace> {
    if chains.l < 2 {
        return Err(CcpError::InvalidInput(
            "pairwise ARI needs at least two series".into(),
        ));
    }
    chains.validate()?;
    let mut pairs = Vec::new();
    for i in 0..chains.l {
        for s in (i + 1)..chains.l {
            pairs.push((i, s));
        }
    }
    let mut pair_means = vec![0.0f64; pairs.len()];
    let mut per_draw_mean = Vec::with_capacity(chains.n_save);
    for draw in 0..chains.n_save {
        let parts: Vec<ChangeIndicators> = (0..chains.l)
            .map(|i| chains.partition(draw, i))
            .collect();
        let mut draw_sum = 0.0;
        for (k, &(i, s)) in pairs.iter().enumerate() {
            let value = ari(&parts[i], &parts[s])?;
            pair_means[k] += value;
            draw_sum += value;
        }
        per_draw_mean.push(draw_sum / pairs.len() as f64);
    }
    for v in &mut pair_means {
        *v /= chains.n_save as f64;
    }
    let grand_mean = per_draw_mean.iter().sum::<f64>() / chains.n_save as f64;
    Ok(PairwiseAriTrace {
        pairs,
        pair_means,
        per_draw_mean,
        grand_mean,
    })
}
