//! Shared pipeline stages: load, standardize, tune, and build priors
//! from a run configuration.

use serde::Serialize;

use ccp_ppm::tprior::TPriorParams;
use ccp_ppm::tuning::{
    default_prior_guess, marglik_params_from_data, tprior_from_guess, SeriesTuning,
};
use ccp_ppm::{MargLikParams, SeriesData};

use crate::config::RunConfig;
use crate::data::load_series;
use crate::errors::{CliError, CliResult};

/// Everything a fit needs: standardized data, per-series data-factor
/// parameters, and the logit-scale prior, plus the tuning diagnostics
/// that produced them.
pub struct PreparedModel {
    pub data: Vec<SeriesData>,
    pub ml: Vec<MargLikParams>,
    pub prior: TPriorParams,
    pub tuning: TuningReport,
}

/// JSON document emitted by `tune` and stored beside every fit.
#[derive(Debug, Serialize)]
pub struct TuningReport {
    /// Per-series empirical-Bayes results; `None` when explicit
    /// parameters were configured.
    pub series: Option<Vec<NamedTuning>>,
    pub marglik: Vec<MargLikParams>,
    pub tprior: TPriorEcho,
}

#[derive(Debug, Serialize)]
pub struct NamedTuning {
    pub name: String,
    #[serde(flatten)]
    pub tuning: SeriesTuning,
}

#[derive(Debug, Serialize)]
pub struct TPriorEcho {
    pub nu0: f64,
    pub mu0: Vec<f64>,
    pub sigma0: Vec<Vec<f64>>,
}

impl TPriorEcho {
    fn from_params(p: &TPriorParams) -> Self {
        let l = p.dim();
        Self {
            nu0: p.nu0(),
            mu0: p.mu0().to_vec(),
            sigma0: (0..l)
                .map(|r| (0..l).map(|c| p.sigma0()[(r, c)]).collect())
                .collect(),
        }
    }
}

fn marglik_from_override(config: &RunConfig, l: usize) -> CliResult<Option<Vec<MargLikParams>>> {
    let ov = &config.marglik;
    if !ov.is_set() {
        return Ok(None);
    }
    let (mu0, kappa0, alpha0, beta0) = match (&ov.mu0, &ov.kappa0, &ov.alpha0, &ov.beta0) {
        (Some(m), Some(k), Some(a), Some(b)) => (m, k, a, b),
        _ => {
            return Err(CliError::config(
                "marglik override needs all of mu0, kappa0, alpha0, beta0".to_string(),
            ))
        }
    };
    if [mu0.len(), kappa0.len(), alpha0.len(), beta0.len()]
        .iter()
        .any(|&len| len != l)
    {
        return Err(CliError::config(format!(
            "marglik override vectors must have one entry per series ({l})"
        )));
    }
    let params = (0..l)
        .map(|i| MargLikParams::new(mu0[i], kappa0[i], alpha0[i], beta0[i]))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::config)?;
    Ok(Some(params))
}

fn tprior_from_config(config: &RunConfig, n: usize, l: usize) -> CliResult<TPriorParams> {
    let tc = &config.tprior;
    match (&tc.mu0, tc.variance) {
        (Some(mu0), Some(variance)) => {
            let mu = if mu0.len() == 1 {
                vec![mu0[0]; l]
            } else if mu0.len() == l {
                mu0.clone()
            } else {
                return Err(CliError::config(format!(
                    "tprior.mu0 must have 1 or {l} entries, got {}",
                    mu0.len()
                )));
            };
            TPriorParams::compound_symmetric(tc.nu0, mu, variance, tc.correlation.unwrap_or(0.0))
                .map_err(CliError::config)
        }
        (None, None) => {
            let guess = default_prior_guess(n, l, tc.r0).map_err(CliError::config)?;
            tprior_from_guess(&guess, tc.nu0).map_err(CliError::config)
        }
        _ => Err(CliError::config(
            "tprior override needs both mu0 and variance (correlation optional)".to_string(),
        )),
    }
}

/// Loads the configured data, standardizes it, and resolves data-factor
/// and prior parameters (empirical Bayes unless overridden).
pub fn prepare(config: &RunConfig) -> CliResult<PreparedModel> {
    let raw = load_series(&config.input)?;
    let data: Vec<SeriesData> = raw
        .iter()
        .map(|s| s.standardize())
        .collect::<Result<_, _>>()
        .map_err(CliError::data)?;
    let l = data.len();
    let n = data[0].len();

    let (ml, series_tunings) = match marglik_from_override(config, l)? {
        Some(params) => (params, None),
        None => {
            let tunings = data
                .iter()
                .map(|s| {
                    let max_lag = config.tuning.max_lag.min(s.len().saturating_sub(2)).max(1);
                    let mut tuned = marglik_params_from_data(s).map_err(CliError::pipeline)?;
                    if config.tuning.max_lag != 50 {
                        // Re-estimate kappa with the configured lag window.
                        let kappa = ccp_ppm::tuning::estimate_kappa(s, max_lag)
                            .map_err(CliError::pipeline)?;
                        let alpha0 = 0.5 * tuned.fit.d;
                        let beta0 =
                            0.5 * tuned.fit.d * (1.0 - kappa.acf_value) * tuned.fit.s * tuned.fit.s;
                        tuned.kappa = kappa;
                        tuned.params =
                            MargLikParams::new(tuned.fit.m, kappa.kappa0, alpha0, beta0)
                                .map_err(CliError::pipeline)?;
                    }
                    Ok(NamedTuning {
                        name: s.name().to_string(),
                        tuning: tuned,
                    })
                })
                .collect::<CliResult<Vec<_>>>()?;
            let params = tunings.iter().map(|t| t.tuning.params).collect();
            (params, Some(tunings))
        }
    };

    let prior = tprior_from_config(config, n, l)?;
    if prior.dim() != l {
        return Err(CliError::config(format!(
            "tprior dimension {} does not match {l} series",
            prior.dim()
        )));
    }
    let tuning = TuningReport {
        series: series_tunings,
        marglik: ml.clone(),
        tprior: TPriorEcho::from_params(&prior),
    };
    Ok(PreparedModel {
        data,
        ml,
        prior,
        tuning,
    })
}

/// Resolves the Beta prior of the independent baseline, deriving it
/// from cluster-count moments when they are configured.
pub fn indep_beta(config: &RunConfig, n: usize) -> CliResult<(f64, f64)> {
    match (config.indep.mean_clusters, config.indep.var_clusters) {
        (Some(mean), Some(var)) => {
            ccp_ppm::tuning::beta_params_from_cluster_moments(n, mean, var)
                .map_err(CliError::config)
        }
        (None, None) => Ok((config.indep.a, config.indep.b)),
        _ => Err(CliError::config(
            "indep prior needs both mean_clusters and var_clusters (or neither)".to_string(),
        )),
    }
}
