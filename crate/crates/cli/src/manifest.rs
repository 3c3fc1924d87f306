use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::commands::Outcome;

/// One line of the run log.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after the program name.
    pub parameters: Vec<String>,
    pub seed: u64,
    pub artifacts: Vec<PathBuf>,
    pub started_unix: u64,
    pub wall_clock_secs: f64,
    pub exit_code: u8,
    pub pass: bool,
    pub failed_checks: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, secs: f64, exit_code: u8, outcome: Option<&Outcome>) -> Self {
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        RunManifest {
            command: command.into(),
            parameters: std::env::args().skip(1).collect(),
            seed,
            artifacts: outcome.map(|o| o.artifacts.clone()).unwrap_or_default(),
            started_unix: now.saturating_sub(secs as u64),
            wall_clock_secs: secs,
            exit_code,
            pass: exit_code == 0,
            failed_checks: outcome.map(|o| o.failed.clone()).unwrap_or_default(),
        }
    }

    pub fn append(&self, path: &Path) -> Result<()> {
        let mut line = serde_json::to_string(self)?;
        line.push('\n');
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .with_context(|| format!("opening {}", path.display()))?;
        f.write_all(line.as_bytes())?;
        Ok(())
    }
}
