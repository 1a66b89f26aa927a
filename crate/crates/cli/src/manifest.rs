use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use mz_core::GameParams;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedParams {
    #[serde(rename = "H")]
    pub h: u32,
    pub alpha: f64,
    pub mu: f64,
    pub delta: f64,
    pub gamma: f64,
    pub sigma: f64,
}

impl From<&GameParams> for ResolvedParams {
    fn from(p: &GameParams) -> Self {
        ResolvedParams {
            h: p.h(),
            alpha: p.alpha(),
            mu: p.mu(),
            delta: p.delta(),
            gamma: p.gamma(),
            sigma: p.sigma(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationRecord {
    pub trustworthy: u32,
    pub deceptive: u32,
}

/// Everything needed to reproduce the files written next to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub core_version: String,
    pub command: String,
    /// Canonical arguments after the subcommand, with every value resolved and
    /// without `--config` or `--out`.
    pub args: Vec<String>,
    pub params: Option<ResolvedParams>,
    pub population: Option<PopulationRecord>,
    pub seeds: Vec<u64>,
    /// File names relative to the manifest's directory.
    pub outputs: Vec<String>,
    pub notes: Vec<String>,
    /// Seconds since the Unix epoch; the only field that changes between reruns.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(command: &str, args: Vec<String>) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            core_version: mz_core::VERSION.into(),
            command: command.into(),
            args,
            params: None,
            population: None,
            seeds: Vec::new(),
            outputs: Vec::new(),
            notes: Vec::new(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(dir.join(MANIFEST_FILE), text + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read manifest {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text).map_err(|e| {
            CliError::Validation(format!("malformed manifest {}: {e}", path.display()))
        })
    }
}
