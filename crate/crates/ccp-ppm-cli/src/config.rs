//! Declarative run configuration.
//!
//! A single TOML document drives every pipeline command; CLI flags are
//! overrides of individual keys. The resolved configuration is echoed
//! into the fit output (with the output directory stripped, so that
//! byte-level reproducibility does not depend on where results land).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ccp_ppm::sampler::McmcConfig;
use ccp_ppm::LossConfig;

use crate::errors::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum InputFormat {
    /// One column per series; an optional date column is skipped.
    Wide,
    /// Three columns: date, series, value.
    Long,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum InputMode {
    /// Values are prices; returns are computed before analysis.
    Prices,
    /// Values are already returns.
    Returns,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum DateFormat {
    /// `YYYY-MM-DD`.
    Iso8601,
    /// `DD/MM/YYYY`.
    Dmy,
}

impl DateFormat {
    pub fn pattern(&self) -> &'static str {
        match self {
            DateFormat::Iso8601 => "%Y-%m-%d",
            DateFormat::Dmy => "%d/%m/%Y",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct InputConfig {
    pub paths: Vec<PathBuf>,
    pub format: InputFormat,
    pub mode: InputMode,
    /// Name of the date column (wide format); `date` by default.
    pub date_column: String,
    pub date_format: DateFormat,
}

impl Default for InputConfig {
    fn default() -> Self {
        Self {
            paths: Vec::new(),
            format: InputFormat::Wide,
            mode: InputMode::Returns,
            date_column: "date".into(),
            date_format: DateFormat::Iso8601,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TuningConfig {
    pub max_lag: usize,
}

impl Default for TuningConfig {
    fn default() -> Self {
        Self { max_lag: 50 }
    }
}

/// Explicit per-series data-factor parameters; when present they
/// bypass the empirical-Bayes tuning. All four vectors must be given
/// together, one entry per series.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct MargLikOverride {
    pub mu0: Option<Vec<f64>>,
    pub kappa0: Option<Vec<f64>>,
    pub alpha0: Option<Vec<f64>>,
    pub beta0: Option<Vec<f64>>,
}

impl MargLikOverride {
    pub fn is_set(&self) -> bool {
        self.mu0.is_some()
            || self.kappa0.is_some()
            || self.alpha0.is_some()
            || self.beta0.is_some()
    }
}

/// Logit-scale t prior configuration: derived from the default guess
/// (`r0`) unless an explicit compound-symmetric override is given.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TPriorConfig {
    pub nu0: f64,
    pub r0: f64,
    pub mu0: Option<Vec<f64>>,
    pub variance: Option<f64>,
    pub correlation: Option<f64>,
}

impl Default for TPriorConfig {
    fn default() -> Self {
        Self {
            nu0: 3.0,
            r0: 0.5,
            mu0: None,
            variance: None,
            correlation: None,
        }
    }
}

/// Beta prior of the independent baseline, given directly or through
/// prior cluster-count moments.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct IndepConfig {
    pub a: f64,
    pub b: f64,
    pub mean_clusters: Option<f64>,
    pub var_clusters: Option<f64>,
}

impl Default for IndepConfig {
    fn default() -> Self {
        Self {
            a: 1.0,
            b: 20.0,
            mean_clusters: None,
            var_clusters: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub format: ChainsFormatConfig,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum ChainsFormatConfig {
    Csv,
    Bin,
}

impl From<ChainsFormatConfig> for ccp_ppm::ChainsFormat {
    fn from(v: ChainsFormatConfig) -> Self {
        match v {
            ChainsFormatConfig::Csv => ccp_ppm::ChainsFormat::Csv,
            ChainsFormatConfig::Bin => ccp_ppm::ChainsFormat::Bin,
        }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            format: ChainsFormatConfig::Csv,
        }
    }
}

fn default_mcmc() -> McmcConfig {
    McmcConfig::default()
}

fn default_loss() -> LossConfig {
    LossConfig::default()
}

/// The whole declarative run description.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub input: InputConfig,
    pub tuning: TuningConfig,
    pub marglik: MargLikOverride,
    pub tprior: TPriorConfig,
    pub indep: IndepConfig,
    #[serde(default = "default_mcmc")]
    pub mcmc: McmcConfig,
    #[serde(default = "default_loss")]
    pub loss: LossConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    /// Echo of the resolved configuration with volatile output location
    /// removed.
    pub fn echo(&self) -> RunConfig {
        let mut echo = self.clone();
        echo.output.dir = None;
        echo
    }
}
