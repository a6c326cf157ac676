//! Run directories: one per configuration, named after the preset and a hash
//! of the config snapshot.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use stefan_core::experiments::{summary_text, write_trace_csv, ExperimentRun};

use crate::Failure;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "STEFAN_OUT";
pub const DEFAULT_OUT: &str = "runs";

pub fn out_root(flag: Option<&Path>) -> PathBuf {
    match flag {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUT), PathBuf::from),
    }
}

/// First 12 hex digits of the SHA-256 of `text`.
pub fn short_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().take(6).map(|b| format!("{b:02x}")).collect()
}

fn io(path: &Path, e: std::io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

pub fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| io(dir, e))
}

pub fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| io(path, e))
}

/// Writes config.ini, trace.csv and summary.txt into `dir`. `extra` is
/// appended to the summary.
pub fn write_run(dir: &Path, config: &str, run: &ExperimentRun, extra: &str) -> Result<(), Failure> {
    create_dir(dir)?;
    write_file(&dir.join("config.ini"), config)?;
    let csv = dir.join("trace.csv");
    let mut w = BufWriter::new(File::create(&csv).map_err(|e| io(&csv, e))?);
    write_trace_csv(&mut w, &run.result.trace, &run.monitor).map_err(|e| io(&csv, e))?;
    w.flush().map_err(|e| io(&csv, e))?;
    write_file(&dir.join("summary.txt"), &(summary_text(run) + extra))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_short() {
        assert_eq!(short_hash("abc"), "ba7816bf8f01");
        assert_ne!(short_hash("abc"), short_hash("abd"));
    }

    #[test]
    fn flag_beats_default() {
        assert_eq!(out_root(Some(Path::new("x"))), PathBuf::from("x"));
    }
}
