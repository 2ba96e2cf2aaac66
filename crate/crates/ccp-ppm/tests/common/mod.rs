//! Shared helpers for the integration suites: Kolmogorov-Smirnov
//! distances, Monte Carlo accumulators, and model-consistent data
//! regeneration.

// Each test binary uses its own subset of these helpers.
#![allow(dead_code)]

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use ccp_ppm::partition::ChangeIndicators;
use ccp_ppm::MargLikParams;

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        let fa = i as f64 / a.len() as f64;
        let fb = j as f64 / b.len() as f64;
        d = d.max((fa - fb).abs());
    }
    d
}

/// One-sample Kolmogorov-Smirnov distance against a CDF.
pub fn ks_against_cdf<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let n = s.len() as f64;
    let mut d = 0.0f64;
    for (idx, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - idx as f64 / n).abs());
        d = d.max(((idx + 1) as f64 / n - f).abs());
    }
    d
}

/// Mean and standard error of a sample.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Draws a series from the conjugate block model given a partition:
/// per block, variance from Inv-Gamma(alpha0, beta0), mean from
/// Normal(mu0, variance/kappa0), observations from the block normal.
pub fn draw_series_given_partition<R: Rng + ?Sized>(
    c: &ChangeIndicators,
    ml: &MargLikParams,
    rng: &mut R,
) -> Vec<f64> {
    let gamma = Gamma::new(ml.alpha0, 1.0 / ml.beta0).expect("valid shape/scale");
    let mut y = Vec::with_capacity(c.n());
    for block in c.to_blocks().blocks() {
        let variance = 1.0 / gamma.sample(rng);
        let g: f64 = StandardNormal.sample(rng);
        let mean = ml.mu0 + g * (variance / ml.kappa0).sqrt();
        let sd = variance.sqrt();
        for _ in 0..block.len() {
            let e: f64 = StandardNormal.sample(rng);
            y.push(mean + sd * e);
        }
    }
    y
}
