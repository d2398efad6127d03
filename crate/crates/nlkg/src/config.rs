//! Key-value run configuration (TOML). Command-line flags override file
//! values, which override the built-in defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub d: Option<usize>,
    pub p: Option<f64>,
    #[serde(rename = "L")]
    pub half_length: Option<f64>,
    pub h: Option<f64>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub zbar: Option<f64>,
    pub ell: Option<f64>,
    pub a_bracket: Option<[f64; 2]>,
    /// RNG seed of the sampling steps.
    pub seed: Option<u64>,
    pub snapshot_every: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Flag, then file, then default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
