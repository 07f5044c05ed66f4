use std::path::Path;

use gapband_core::eval::Classifier;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const MODEL_FORMAT: &str = "gapband-model";
pub const MODEL_VERSION: u32 = 1;

/// On-disk classifier with enough context to check its inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub feature_dim: usize,
    pub seed: u64,
    pub training_windows: usize,
    pub in_sample_accuracy: f64,
    pub classifier: Classifier,
}

impl ModelFile {
    pub fn new(classifier: Classifier, seed: u64, training_windows: usize, in_sample_accuracy: f64) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            feature_dim: classifier.input_dim(),
            seed,
            training_windows,
            in_sample_accuracy,
            classifier,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::usage(format!("model is not valid JSON: {e}")))?;
        let format = value.get("format").and_then(|v| v.as_str()).unwrap_or("");
        if format != MODEL_FORMAT {
            return Err(CliError::usage(format!(
                "not a {MODEL_FORMAT} file (format field is {format:?})"
            )));
        }
        let version = value.get("version").and_then(|v| v.as_u64()).unwrap_or(0);
        if version != u64::from(MODEL_VERSION) {
            return Err(CliError::usage(format!(
                "model version {version} is not supported (expected {MODEL_VERSION})"
            )));
        }
        let model: Self =
            serde_json::from_value(value).map_err(|e| CliError::usage(format!("malformed model: {e}")))?;
        if model.classifier.input_dim() != model.feature_dim {
            return Err(CliError::usage(format!(
                "model declares {} features but its classifier takes {}",
                model.feature_dim,
                model.classifier.input_dim()
            )));
        }
        Ok(model)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read model {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}
