//! Run configuration file: a flat TOML table.
//!
//! ```toml
//! schema_version = 1
//! seed = 7
//! n_mfcc = 13
//! kernel = "rbf"     # or "linear"
//! c = 10.0
//! epochs = 500
//! ```
//!
//! Every key is optional; command-line flags take precedence over the file,
//! which takes precedence over built-in defaults.

use std::path::Path;

use serde::Deserialize;
use ser_core::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: Option<u32>,
    pub seed: Option<u64>,

    // feature pipeline
    pub n_mfcc: Option<usize>,
    pub target_length: Option<usize>,
    pub frame_length: Option<usize>,
    pub n_mels: Option<usize>,
    pub f_min: Option<f64>,
    pub f_max: Option<f64>,
    pub augment_reverse: Option<bool>,
    pub augment_invert: Option<bool>,

    // splitting
    pub split_mode: Option<String>,
    pub train_ratio: Option<f64>,
    pub val_ratio: Option<f64>,
    pub test_ratio: Option<f64>,

    // svm
    pub kernel: Option<String>,
    pub c: Option<f64>,
    /// Fixed RBF gamma; absent means 1 / (n_features * var).
    pub gamma: Option<f64>,
    pub strategy: Option<String>,

    // cnn
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub decay: Option<f64>,
    pub rho: Option<f64>,
    pub epsilon: Option<f64>,

    // sweep
    pub runs: Option<usize>,
    pub sweep_range: Option<String>,

    // streaming
    pub window_seconds: Option<f64>,
    pub hop_seconds: Option<f64>,
    pub chunk_samples: Option<usize>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))?;
        if let Some(v) = cfg.schema_version {
            if v != SCHEMA_VERSION {
                return Err(Error::Config(format!(
                    "config schema_version {v} is not supported (expected {SCHEMA_VERSION})"
                )));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => Self::parse(&std::fs::read_to_string(p)?),
        }
    }
}

/// Flag, then config value, then default.
pub fn pick<T>(flag: Option<T>, config: Option<T>, default: T) -> T {
    flag.or(config).unwrap_or(default)
}
