//! Structured JSON report written next to every command's CSV output.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};

pub const REPORT_FORMAT: &str = "bellswitch-report/1";

/// `v<crate version>-g<short revision>`, with `unknown` outside a checkout.
pub fn version_stamp() -> String {
    format!("v{}-g{}", env!("CARGO_PKG_VERSION"), option_env!("BELLSWITCH_GIT_REV").unwrap_or("unknown"))
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile<S> {
    pub format: String,
    pub version: String,
    pub command: String,
    /// SHA-256 of `config_toml`.
    pub config_sha256: String,
    /// The fully resolved configuration with the output location reset to
    /// its default; feeding it back through `--config` reproduces every
    /// output.
    pub config_toml: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration: Option<String>,
    /// CSV files written by the same run, relative to the report.
    pub csv_files: Vec<String>,
    pub summary: S,
}

impl<S: Serialize> ReportFile<S> {
    pub fn new(command: &str, config: &ScenarioConfig, csv_files: Vec<String>, summary: S) -> Result<Self> {
        let snapshot = ScenarioConfig { output_dir: ScenarioConfig::default().output_dir, ..config.clone() };
        let config_toml = snapshot.to_toml()?;
        Ok(Self {
            format: REPORT_FORMAT.into(),
            version: version_stamp(),
            command: command.into(),
            config_sha256: sha256_hex(&config_toml),
            config_toml,
            calibration: config.calibration.clone(),
            csv_files,
            summary,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))?;
        text.push('\n');
        Ok(text)
    }
}
