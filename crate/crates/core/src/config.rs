//! Optional key-value run configuration.
//!
//! A flat TOML file; every key is optional and command-line flags take
//! precedence over it:
//!
//! ```toml
//! objective = "fl"           # fl | logdet | random
//! budget = 10
//! kernel = "pearson"         # pearson | cosine
//! epsilon = 1e-4             # log-determinant diagonal regularizer
//! abstain_threshold = -1.0   # raw similarity below which an LF abstains
//! qc = 0.85                  # quality guess of every LF
//! lr = 0.01
//! epochs = 100
//! seed = 0
//! out = "run"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::select::ObjectiveKind;
use crate::similarity::Kernel;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub objective: Option<ObjectiveKind>,
    pub budget: Option<usize>,
    pub kernel: Option<Kernel>,
    pub epsilon: Option<f64>,
    pub abstain_threshold: Option<f64>,
    pub qc: Option<f64>,
    pub lr: Option<f64>,
    pub epochs: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse(&text).map_err(|reason| Error::MalformedHeader {
            path: path.into(),
            reason,
        })
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}
