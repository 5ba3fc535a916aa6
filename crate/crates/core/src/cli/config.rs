//! Run configuration file (TOML). Every key is optional; command-line flags
//! override file values, which override built-in defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub k_folds: Option<usize>,
    pub threshold: Option<u8>,
    #[serde(default)]
    pub smote: SmoteSection,
    #[serde(default)]
    pub forest: ForestSection,
    #[serde(default)]
    pub mlp: MlpSection,
    #[serde(default)]
    pub roi: RoiSection,
    #[serde(default)]
    pub paths: PathsSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoteSection {
    pub enabled: Option<bool>,
    pub k_neighbors: Option<usize>,
    pub apply_to_rf: Option<bool>,
    pub apply_to_mlp: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestSection {
    pub n_trees: Option<usize>,
    /// 0 means unlimited.
    pub max_depth: Option<usize>,
    pub features_per_split: Option<usize>,
    pub min_samples_leaf: Option<usize>,
    pub bootstrap: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpSection {
    pub hidden: Option<usize>,
    pub epochs: Option<usize>,
    pub batch: Option<usize>,
    pub lr: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoiSection {
    pub padding: Option<usize>,
    pub size: Option<usize>,
    pub square: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    pub images: Option<PathBuf>,
    pub masks: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

fn positive(name: &str, v: Option<usize>) -> Result<()> {
    match v {
        Some(0) => Err(Error::Config(format!("{name} must be at least 1"))),
        _ => Ok(()),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(k) = self.k_folds {
            if k < 2 {
                return Err(Error::Config(format!("k_folds must be at least 2, got {k}")));
            }
        }
        positive("smote.k_neighbors", self.smote.k_neighbors)?;
        positive("forest.n_trees", self.forest.n_trees)?;
        positive("forest.features_per_split", self.forest.features_per_split)?;
        positive("forest.min_samples_leaf", self.forest.min_samples_leaf)?;
        positive("mlp.hidden", self.mlp.hidden)?;
        positive("mlp.batch", self.mlp.batch)?;
        positive("roi.size", self.roi.size)?;
        if let Some(lr) = self.mlp.lr {
            if !(lr.is_finite() && lr > 0.0) {
                return Err(Error::Config(format!("mlp.lr must be positive and finite, got {lr}")));
            }
        }
        Ok(())
    }
}
