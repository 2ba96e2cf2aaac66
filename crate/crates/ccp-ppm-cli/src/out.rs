//! Atomic output staging: artifacts are assembled in a temporary
//! sibling directory and renamed into place, so a crashed run never
//! leaves a half-written result directory.

use std::path::{Path, PathBuf};

use crate::errors::{CliError, CliResult};

/// Builds the contents of `target` inside a staging directory and
/// renames it into place. Fails if `target` already exists.
pub fn write_dir_atomically<F>(target: &Path, build: F) -> CliResult<()>
where
    F: FnOnce(&Path) -> CliResult<()>,
{
    if target.exists() {
        return Err(CliError::config(format!(
            "output directory {} already exists",
            target.display()
        )));
    }
    let parent = target.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(parent) = parent {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::data(format!("cannot create {}: {e}", parent.display())))?;
    }
    let staging = staging_path(target);
    std::fs::create_dir_all(&staging)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", staging.display())))?;
    let result = build(&staging);
    if let Err(e) = result {
        let _ = std::fs::remove_dir_all(&staging);
        return Err(e);
    }
    std::fs::rename(&staging, target).map_err(|e| {
        let _ = std::fs::remove_dir_all(&staging);
        CliError::data(format!(
            "cannot move staged output into {}: {e}",
            target.display()
        ))
    })
}

/// Writes a single file through a temporary sibling and rename.
pub fn write_file_atomically(target: &Path, contents: &[u8]) -> CliResult<()> {
    let staging = staging_path(target);
    std::fs::write(&staging, contents)
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", staging.display())))?;
    std::fs::rename(&staging, target).map_err(|e| {
        let _ = std::fs::remove_file(&staging);
        CliError::data(format!("cannot move staged file into {}: {e}", target.display()))
    })
}

fn staging_path(target: &Path) -> PathBuf {
    let mut name = target
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_else(|| ".out".into());
    name.push(format!(".staging-{}", std::process::id()));
    target.with_file_name(name)
}
