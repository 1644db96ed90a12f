//! Run manifests and output-directory discipline.
//!
//! Every command ends by writing `manifest.<command>.json`: the effective
//! config, the derived seeds, content hashes of the files it read, hashes and
//! names of the files it produced, and the wall-clock time. The manifest is
//! written atomically (tmp + rename) and is the determinism receipt: two runs
//! with the same config and seeds must agree on everything except
//! `wall_clock_seconds`.
//!
//! A `.qpflow.lock` file serializes access to an output directory; concurrent
//! commands must target distinct directories. The lock is removed on drop,
//! so a stale file only survives a hard kill.

use crate::config::{ExperimentConfig, SeedLadder};
use crate::error::{io_at, CliError};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize)]
pub struct FileStamp {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub command: &'a str,
    pub seeds: &'a SeedLadder,
    pub config: &'a ExperimentConfig,
    pub inputs: Vec<FileStamp>,
    pub outputs: Vec<FileStamp>,
    pub wall_clock_seconds: f64,
}

impl RunManifest<'_> {
    /// Writes `manifest.<command>.json` under `out_dir`, atomically.
    pub fn write(&self, out_dir: &Path) -> Result<PathBuf, CliError> {
        let path = out_dir.join(format!("manifest.{}.json", self.command));
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::validation(format!("manifest serialization: {e}")))?;
        text.push('\n');
        write_atomic(&path, &text)?;
        Ok(path)
    }
}

/// Hex SHA-256 of a file's bytes.
pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(io_at(path))?;
    let digest = Sha256::digest(&bytes);
    let mut hex = String::with_capacity(64);
    for b in digest {
        hex.push_str(&format!("{b:02x}"));
    }
    Ok(hex)
}

/// Stamps a file under its display path as given.
pub fn stamp(label: &Path, file: &Path) -> Result<FileStamp, CliError> {
    Ok(FileStamp {
        path: label.display().to_string(),
        sha256: sha256_file(file)?,
    })
}

/// Stamps an output file by its name relative to the run directory.
pub fn stamp_out(out_dir: &Path, name: &str) -> Result<FileStamp, CliError> {
    Ok(FileStamp {
        path: name.to_string(),
        sha256: sha256_file(&out_dir.join(name))?,
    })
}

/// Replaces `path` with `text` via a same-directory temp file and rename.
pub fn write_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, text).map_err(io_at(&tmp))?;
    fs::rename(&tmp, path).map_err(io_at(path))?;
    Ok(())
}

/// Exclusive claim on an output directory for the process lifetime.
#[derive(Debug)]
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(".qpflow.lock");
        match fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(f) => {
                use std::io::Write;
                let mut f = f;
                let _ = write!(f, "{}", std::process::id());
                Ok(DirLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(CliError::validation(format!(
                    "{}: output directory is in use by another run \
                     (delete the lock file if that run is gone)",
                    path.display()
                )))
            }
            Err(e) => Err(io_at(&path)(e)),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
