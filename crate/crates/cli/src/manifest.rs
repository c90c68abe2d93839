use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

impl OutputDigest {
    pub fn of(path: &Path, bytes: &[u8]) -> Self {
        OutputDigest { path: path.display().to_string(), sha256: hex::encode(Sha256::digest(bytes)) }
    }
}

/// Everything needed to rerun a command and check its output.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub parameters: Value,
    pub seed: Option<u64>,
    pub workers: Option<u64>,
    pub version: String,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<OutputDigest>,
}

impl Manifest {
    pub fn new(
        command: &str,
        parameters: Value,
        seed: Option<u64>,
        start: Instant,
        workers: Option<u64>,
        outputs: Vec<OutputDigest>,
    ) -> Self {
        Manifest {
            command: command.to_string(),
            parameters,
            seed,
            workers,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_seconds: start.elapsed().as_secs_f64(),
            outputs,
        }
    }

    /// Writes to `<out>.manifest.json` next to `out`, or to standard error.
    pub fn emit(&self, out: Option<&Path>) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        match out {
            Some(path) => fs::write(manifest_path(path), text + "\n"),
            None => {
                eprintln!("{text}");
                Ok(())
            }
        }
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}
