//! `fit` / `fit-indep`: run a sampler and persist the chains directory.
//!
//! The output directory holds `meta.json` (sampler metadata plus the
//! resolved configuration echo), the draw files, `data.csv` with the
//! standardized series, and `tuning.json` with the parameters used.
//! Everything is staged and renamed atomically.

use std::path::Path;

use ccp_ppm::sampler::{run_ccp_ppm, run_indep_ppm};
use ccp_ppm::Method;

use crate::commands::{render_data_csv, to_json_bytes};
use crate::config::RunConfig;
use crate::errors::{CliError, CliResult};
use crate::out::write_dir_atomically;
use crate::pipeline::{indep_beta, prepare};

pub fn run(config: &RunConfig, method: Method) -> CliResult<()> {
    config.mcmc.validate().map_err(CliError::config)?;
    let out_dir = config
        .output
        .dir
        .clone()
        .ok_or_else(|| CliError::config("no output directory (output.dir or --out)".to_string()))?;
    let prepared = prepare(config)?;
    let n = prepared.data[0].len();

    let chains = match method {
        Method::Ccp => run_ccp_ppm(
            &prepared.data,
            &prepared.ml,
            &prepared.prior,
            &config.mcmc,
        )
        .map_err(CliError::pipeline)?,
        Method::Indep => {
            let beta = indep_beta(config, n)?;
            run_indep_ppm(&prepared.data, &prepared.ml, beta, &config.mcmc)
                .map_err(CliError::pipeline)?
        }
    };

    write_dir_atomically(&out_dir, |staging| {
        chains
            .save(staging, config.output.format.into())
            .map_err(CliError::pipeline)?;
        embed_config_echo(&staging.join("meta.json"), config)?;
        std::fs::write(
            staging.join("data.csv"),
            render_data_csv(&prepared.data),
        )
        .map_err(CliError::data)?;
        std::fs::write(
            staging.join("tuning.json"),
            to_json_bytes(&prepared.tuning)?,
        )
        .map_err(CliError::data)?;
        Ok(())
    })
}

/// Adds the resolved run configuration (output location stripped) to
/// the sampler's `meta.json`, keeping a single self-describing file.
fn embed_config_echo(meta_path: &Path, config: &RunConfig) -> CliResult<()> {
    let text = std::fs::read_to_string(meta_path).map_err(CliError::data)?;
    let mut meta: serde_json::Value =
        serde_json::from_str(&text).map_err(CliError::data)?;
    let echo = serde_json::to_value(config.echo()).map_err(CliError::data)?;
    meta.as_object_mut()
        .ok_or_else(|| CliError::data("meta.json is not an object".to_string()))?
        .insert("cli_config".to_string(), echo);
    let mut bytes = serde_json::to_vec_pretty(&meta).map_err(CliError::data)?;
    bytes.push(b'\n');
    std::fs::write(meta_path, bytes).map_err(CliError::data)?;
    Ok(())
}
