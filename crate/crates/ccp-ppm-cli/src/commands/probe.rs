//! `prior-probe`: exact prior properties of a logit-scale t law.

use std::path::PathBuf;

use serde::Serialize;

use ccp_ppm::tprior::{PriorSummaries, TPriorParams};

use crate::commands::to_json_bytes;
use crate::errors::{CliError, CliResult};
use crate::out::write_file_atomically;

pub struct ProbeArgsResolved {
    pub nu0: f64,
    pub mu: Vec<f64>,
    pub variance: f64,
    pub correlation: f64,
    pub n: usize,
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ProbeReport {
    nu0: f64,
    mu0: Vec<f64>,
    variance: f64,
    correlation: f64,
    n: usize,
    /// Marginal change probabilities per series.
    phi: Vec<f64>,
    /// Pairwise joint change probabilities (diagonal holds phi).
    varphi: Vec<Vec<f64>>,
    /// `conditional[i][s] = P(c_i = 1 | c_s = 1)`.
    conditional: Vec<Vec<f64>>,
    /// Expected change counts over a length-`n` series.
    count_mean: Vec<f64>,
    count_covariance: Vec<Vec<f64>>,
    count_correlation: Vec<Vec<f64>>,
    quadrature_error: f64,
}

pub fn run(args: &ProbeArgsResolved) -> CliResult<()> {
    if args.mu.is_empty() {
        return Err(CliError::config("prior-probe needs at least one --mu".to_string()));
    }
    let params = TPriorParams::compound_symmetric(
        args.nu0,
        args.mu.clone(),
        args.variance,
        args.correlation,
    )
    .map_err(CliError::config)?;
    let l = params.dim();
    let summaries = PriorSummaries::compute(&params).map_err(CliError::pipeline)?;

    let mut conditional = vec![vec![1.0; l]; l];
    let mut count_covariance = vec![vec![0.0; l]; l];
    let mut count_correlation = vec![vec![1.0; l]; l];
    let mut count_mean = vec![0.0; l];
    let mut worst = summaries.quadrature_error;
    for i in 0..l {
        let mi = params.count_moments(i, i, args.n).map_err(CliError::pipeline)?;
        count_mean[i] = mi.mean_i;
        count_covariance[i][i] = mi.covariance;
        for s in 0..l {
            if s == i {
                continue;
            }
            let cond = params
                .conditional_cp_prob(i, s)
                .map_err(CliError::pipeline)?;
            conditional[i][s] = cond.value;
            let m = params.count_moments(i, s, args.n).map_err(CliError::pipeline)?;
            count_covariance[i][s] = m.covariance;
            count_correlation[i][s] = m.correlation;
            worst = worst.max(cond.abs_error).max(m.quadrature_error);
        }
    }

    let report = ProbeReport {
        nu0: args.nu0,
        mu0: args.mu.clone(),
        variance: args.variance,
        correlation: args.correlation,
        n: args.n,
        phi: summaries.phi,
        varphi: summaries.varphi,
        conditional,
        count_mean,
        count_covariance,
        count_correlation,
        quadrature_error: worst,
    };
    let bytes = to_json_bytes(&report)?;
    match &args.out {
        Some(path) => write_file_atomically(path, &bytes)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes).map_err(CliError::data)?;
        }
    }
    Ok(())
}
