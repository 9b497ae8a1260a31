//! Run configuration files: one JSON document that names the code, the
//! function, optional noise and straggler models, and which experiment to
//! run with what parameters.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::code_matrix::{CodeMatrixError, GeneratorMatrix, Scheme};
use crate::invertible::InvertibleFunction;
use crate::serving::StragglerModel;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// The `code` section: scheme by name plus shape, mirroring
/// [`Scheme::from_parts`].
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSection {
    pub n: usize,
    pub k: usize,
    pub scheme: String,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl CodeSection {
    pub fn build(&self) -> Result<GeneratorMatrix, CodeMatrixError> {
        let scheme = Scheme::from_parts(&self.scheme, self.seed)?;
        GeneratorMatrix::build(self.n, self.k, scheme)
    }
}

/// Optional encoder imperfection, applied to parity embeddings.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub sigma: f64,
    pub seed: u64,
}

/// Which experiment to run. `parameters` is handed to the experiment's own
/// config type, so its schema varies by `name`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub name: String,
    #[serde(default = "empty_object")]
    pub parameters: serde_json::Value,
}

fn empty_object() -> serde_json::Value {
    serde_json::Value::Object(serde_json::Map::new())
}

/// Top-level run configuration. Unknown fields anywhere are errors, so a
/// typo fails loudly instead of silently running defaults.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub code: CodeSection,
    pub function: InvertibleFunction,
    #[serde(default)]
    pub noise: Option<NoiseSection>,
    #[serde(default)]
    pub straggler: Option<StragglerModel>,
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|source| ConfigError::Parse { path: path.to_path_buf(), source })?;
        config.validate()?;
        Ok(config)
    }

    /// Cross-field checks that serde cannot express.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.code.k == 0 || self.code.n < self.code.k {
            return Err(ConfigError::Invalid(format!(
                "code needs n >= k >= 1, got n = {}, k = {}",
                self.code.n, self.code.k
            )));
        }
        if let Some(noise) = &self.noise {
            if !(noise.sigma.is_finite() && noise.sigma >= 0.0) {
                return Err(ConfigError::Invalid(format!(
                    "noise sigma must be finite and >= 0, got {}",
                    noise.sigma
                )));
            }
        }
        if let Some(straggler) = &self.straggler {
            straggler
                .validate(self.code.n, self.code.k)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        if self.experiment.name.is_empty() {
            return Err(ConfigError::Invalid("experiment name is empty".to_string()));
        }
        Ok(())
    }
}
