//! `tune`: empirical-Bayes parameter selection, emitted as JSON.

use std::path::{Path, PathBuf};

use crate::commands::to_json_bytes;
use crate::config::RunConfig;
use crate::errors::CliResult;
use crate::out::write_file_atomically;
use crate::pipeline::prepare;

pub fn run(config_path: &Path, out: Option<PathBuf>) -> CliResult<()> {
    let config = RunConfig::load(config_path)?;
    let prepared = prepare(&config)?;
    let bytes = to_json_bytes(&prepared.tuning)?;
    match out {
        Some(path) => write_file_atomically(&path, &bytes)?,
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(&bytes)
                .map_err(crate::errors::CliError::data)?;
        }
    }
    Ok(())
}
