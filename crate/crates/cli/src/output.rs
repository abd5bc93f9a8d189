use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;
use thiserror::Error;

/// Failure classes, each with a fixed exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or configuration (exit 2).
    #[error("{0}")]
    Usage(String),
    /// The computation itself failed or a check did not hold (exit 3).
    #[error("{0}")]
    Numeric(String),
    /// Reading input or writing output failed (exit 4).
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<tvm_core::Error> for CliError {
    fn from(e: tvm_core::Error) -> Self {
        if e.is_validation() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

/// A file written to a temporary sibling and renamed into place by [`commit`].
pub struct Staged {
    target: PathBuf,
    file: NamedTempFile,
}

/// Writes `fill` into a temporary file in the directory of `target`.
pub fn stage(target: &Path, fill: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<Staged, CliError> {
    let dir = match target.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let file = NamedTempFile::new_in(&dir).map_err(|e| CliError::io(target, e))?;
    {
        let mut w = BufWriter::new(file.as_file());
        fill(&mut w).map_err(|e| CliError::io(target, e))?;
        w.flush().map_err(|e| CliError::io(target, e))?;
    }
    file.as_file().sync_all().map_err(|e| CliError::io(target, e))?;
    Ok(Staged {
        target: target.to_path_buf(),
        file,
    })
}

/// Renames every staged file onto its target. Nothing is renamed unless all
/// files were staged successfully.
pub fn commit(files: Vec<Staged>) -> Result<(), CliError> {
    for s in files {
        s.file
            .persist(&s.target)
            .map_err(|e| CliError::io(&s.target, e.error))?;
    }
    Ok(())
}

pub fn write_atomic(target: &Path, fill: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), CliError> {
    commit(vec![stage(target, fill)?])
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}
