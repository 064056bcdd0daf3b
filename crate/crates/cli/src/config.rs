//! Run configuration: TOML on disk, strict parsing, built-in device
//! defaults for every physics parameter left out.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use photosim_core::dse::SweepGrid;
use photosim_core::perf::AcceleratorConfig;

use crate::error::{CliError, CliResult};

/// Everything one invocation needs: the architecture, a seed, model
/// paths, and the output location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Base seed for every random draw in the run. The PHOTOSIM_SEED
    /// environment variable overrides it.
    pub seed: u64,
    /// Directory reports are written to; `--out` overrides it.
    pub output_dir: PathBuf,
    /// Model description files, resolved relative to the config file.
    pub models: Vec<PathBuf>,
    pub accelerator: AcceleratorConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            output_dir: PathBuf::from("out"),
            models: Vec::new(),
            accelerator: AcceleratorConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parse and fully validate a config file. Unknown keys are
    /// rejected; omitted physics parameters take the built-in defaults.
    pub fn parse(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if let Ok(seed) = std::env::var("PHOTOSIM_SEED") {
            config.seed = seed.parse().map_err(|_| {
                CliError::Config(format!("PHOTOSIM_SEED must be an integer, got '{seed}'"))
            })?;
        }
        if let Some(dir) = path.parent() {
            config.models = config.models.iter().map(|m| dir.join(m)).collect();
        }
        config.validate()?;
        Ok(config)
    }

    /// Re-validate every owned parameter set with a path-qualified
    /// message, then the cross-field architecture invariants.
    pub fn validate(&self) -> CliResult<()> {
        qualify("accelerator.device", self.accelerator.device.validate())?;
        qualify("accelerator.tuning", self.accelerator.tuning.validate())?;
        qualify("accelerator.thermal", self.accelerator.thermal.validate())?;
        qualify("accelerator.losses", self.accelerator.losses.validate())?;
        qualify("accelerator", self.accelerator.validate())?;
        for model in &self.models {
            if !model.exists() {
                return Err(CliError::Config(format!(
                    "models: referenced file {} does not exist",
                    model.display()
                )));
            }
        }
        Ok(())
    }

    /// The effective configuration (defaults filled in) as TOML.
    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string_pretty(self)
            .map_err(|e| CliError::Other(format!("serializing effective config: {e}")))
    }
}

fn qualify(section: &str, result: photosim_core::Result<()>) -> CliResult<()> {
    result.map_err(|e| CliError::Config(format!("{section}: {e}")))
}

/// Parse a sweep grid file (candidate lists for N, K, n, m plus
/// variants and an optional area cap).
pub fn parse_grid(path: &Path) -> CliResult<SweepGrid> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let grid: SweepGrid = toml::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    grid.validate()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(grid)
}

/// Parse an inclusive integer range: either "a..b" or a single value.
pub fn parse_range(text: &str) -> CliResult<Vec<usize>> {
    let text = text.trim();
    if let Some((start, end)) = text.split_once("..") {
        let start: usize = start.trim().parse().map_err(|_| bad_range(text))?;
        let end: usize = end.trim().parse().map_err(|_| bad_range(text))?;
        if start == 0 || end < start {
            return Err(bad_range(text));
        }
        Ok((start..=end).collect())
    } else {
        let single: usize = text.parse().map_err(|_| bad_range(text))?;
        if single == 0 {
            return Err(bad_range(text));
        }
        Ok(vec![single])
    }
}

fn bad_range(text: &str) -> CliError {
    CliError::Config(format!(
        "invalid range '{text}': expected a positive integer or 'start..end' (inclusive)"
    ))
}
