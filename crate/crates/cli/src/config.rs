use std::path::Path;

use gapband_core::corruption::RemovalMode;
use gapband_core::eval::Protocol;
use gapband_core::spectral::FrequencyGrid;
use gapband_core::synth::{MixtureSpec, SurrogateDatasetSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Mixture experiment settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub mixture: MixtureSpec,
    pub levels: Vec<f64>,
    pub grid: FrequencyGrid,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            mixture: MixtureSpec::default(),
            levels: (0..=8).map(|k| f64::from(k) / 10.0).collect(),
            grid: FrequencyGrid::mixture_default(),
        }
    }
}

/// Settings for `mask`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskConfig {
    pub mode: RemovalMode,
    pub fraction: f64,
}

impl Default for MaskConfig {
    fn default() -> Self {
        Self {
            mode: RemovalMode::Point,
            fraction: 0.5,
        }
    }
}

/// Everything a command may read. Missing tables fall back to defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub master_seed: u64,
    pub simulate: SimulateConfig,
    pub surrogate: SurrogateDatasetSpec,
    pub protocol: Protocol,
    pub mask: MaskConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
    }

    /// Propagates the master seed into every seeded sub-config.
    pub fn with_master_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self.surrogate.seed = seed;
        self.protocol.master_seed = seed;
        self
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |e: gapband_core::Error| CliError::usage(format!("invalid config: {e}"));
        self.simulate.mixture.validate().map_err(bad)?;
        self.simulate
            .grid
            .check_nyquist(self.simulate.mixture.sample_rate)
            .map_err(bad)?;
        if self.simulate.levels.is_empty() {
            return Err(CliError::usage("invalid config: simulate.levels is empty"));
        }
        for &p in &self.simulate.levels {
            gapband_core::corruption::RemovalSpec::new(RemovalMode::Point, p, 0)
                .validate()
                .map_err(bad)?;
        }
        self.surrogate.validate().map_err(bad)?;
        self.protocol.validate().map_err(bad)?;
        gapband_core::corruption::RemovalSpec::new(self.mask.mode, self.mask.fraction, 0)
            .validate()
            .map_err(bad)?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML rendering.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }
}

/// Identifies the producer of an output file.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
}

impl Provenance {
    pub fn of(config: &RunConfig) -> Self {
        Self {
            seed: config.master_seed,
            config_hash: config.hash(),
        }
    }

    /// Comment line written at the top of every CSV.
    pub fn comment(&self, extra: &[(&str, String)]) -> String {
        let mut line = format!(
            "# gapband {} seed={} config={}",
            env!("CARGO_PKG_VERSION"),
            self.seed,
            self.config_hash
        );
        for (k, v) in extra {
            line.push_str(&format!(" {k}={v}"));
        }
        line
    }
}
