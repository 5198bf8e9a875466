use std::collections::BTreeMap;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::inference::ChainTrace;

/// Write through a sibling temp file, then rename over `path`.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    let name = path
        .file_name()
        .ok_or_else(|| Error::Contract(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut w = BufWriter::new(std::fs::File::create(&tmp)?);
        fill(&mut w)?;
        w.flush()?;
        w.get_ref().sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRates {
    pub chain: usize,
    pub seed: u64,
    pub hyper: [f64; 4],
    pub kappa: Vec<f64>,
    pub lambda: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ChainRates {
    pub fn from_trace(chain: usize, seed: u64, t: &ChainTrace) -> Self {
        let a = &t.acceptance;
        Self {
            chain,
            seed,
            hyper: a.hyper_rates(),
            kappa: a.kappa_rates(),
            lambda: a.lambda_rates(),
            bias: a.bias_rates(),
        }
    }
}

/// Record of one command invocation, written as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: serde_json::Value,
    pub seed: u64,
    /// SHA-256 of the compact JSON of the parsed input.
    pub input_sha256: String,
    pub chains: Vec<ChainRates>,
    /// `None` where the statistic is undefined.
    pub gelman_rubin: BTreeMap<String, Option<f64>>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        write_atomic(path, |w| writeln!(w, "{text}"))
    }
}
