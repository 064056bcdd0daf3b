//! Report emission: provenance headers, CSV formatting, and atomic
//! file writes so a failed run never leaves a truncated report behind.

use std::path::Path;

use serde::Serialize;

use photosim_core::seeding::fnv1a_64;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Identifies the run every report came from.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub artifact_version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn for_config(config: &RunConfig) -> CliResult<Self> {
        let text = config.to_toml()?;
        Ok(Self {
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: format!("{:016x}", fnv1a_64(text.as_bytes())),
            seed: config.seed,
        })
    }

    /// Comment line placed at the top of every CSV report.
    pub fn csv_header(&self) -> String {
        format!(
            "# photosim v{} config_hash={} seed={}",
            self.artifact_version, self.config_hash, self.seed
        )
    }
}

/// Write to a temporary sibling and rename into place.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| ".".into());
    std::fs::create_dir_all(&dir)?;
    let file_name = path
        .file_name()
        .ok_or_else(|| CliError::Io(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", file_name.to_string_lossy()));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// A CSV report: provenance comment, header row, then data rows.
pub struct Csv {
    lines: Vec<String>,
}

impl Csv {
    pub fn new(provenance: &Provenance, columns: &[&str]) -> Self {
        Self {
            lines: vec![provenance.csv_header(), columns.join(",")],
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.lines.push(fields.join(","));
    }

    pub fn finish(self) -> String {
        let mut text = self.lines.join("\n");
        text.push('\n');
        text
    }
}

/// JSON report body with the provenance block up front.
pub fn json_report<T: Serialize>(provenance: &Provenance, body: &T) -> CliResult<String> {
    #[derive(Serialize)]
    struct Wrapper<'a, T> {
        provenance: &'a Provenance,
        #[serde(flatten)]
        body: &'a T,
    }
    let mut text = serde_json::to_string_pretty(&Wrapper { provenance, body })
        .map_err(|e| CliError::Other(format!("serializing report: {e}")))?;
    text.push('\n');
    Ok(text)
}

pub fn fmt_f64(value: f64) -> String {
    if value.is_finite() {
        format!("{value}")
    } else if value.is_infinite() && value > 0.0 {
        "inf".into()
    } else if value.is_infinite() {
        "-inf".into()
    } else {
        "nan".into()
    }
}
