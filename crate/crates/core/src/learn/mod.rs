//! Feature scaling, SMOTE, and the two classifiers.

mod forest;
mod mlp;
mod scaler;
mod smote;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maskio::ClassLabel;

pub use forest::{predict_forest, train_forest, ForestConfig, ForestModel, Node};
pub use mlp::{loss_and_gradients, predict_mlp, sigmoid, train_mlp, Gradients, MlpConfig, MlpModel, MlpTraining};
pub use scaler::{apply_scaler, fit_scaler, ScalerParams, STD_FLOOR};
pub use smote::{balance, smote, SmoteConfig, SmoteSummary, SmoteTarget};

/// Predicted label with a malignancy score in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: ClassLabel,
    pub score: f64,
}

/// Checks rows share one nonzero width; returns it.
pub(crate) fn check_rows(rows: &[Vec<f64>]) -> Result<usize> {
    let dim = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
        return Err(Error::shape(
            format!("{dim} features"),
            format!("{} features", bad.len()),
        ));
    }
    Ok(dim)
}

pub(crate) fn check_training_set(rows: &[Vec<f64>], labels: &[ClassLabel]) -> Result<usize> {
    if rows.len() != labels.len() {
        return Err(Error::shape(
            format!("{} labels", rows.len()),
            format!("{} labels", labels.len()),
        ));
    }
    if rows.len() < 2 {
        return Err(Error::Training(format!("need at least 2 rows, got {}", rows.len())));
    }
    let dim = check_rows(rows)?;
    if dim == 0 {
        return Err(Error::Training("rows have no features".into()));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Training("non-finite feature value".into()));
    }
    for class in ClassLabel::ALL {
        if !labels.contains(&class) {
            return Err(Error::Training(format!("single-class training data: no {class} rows")));
        }
    }
    Ok(dim)
}

/// A trained classifier of either kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Forest(ForestModel),
    Mlp(MlpModel),
}

impl Model {
    pub fn predict(&self, row: &[f64]) -> Result<Prediction> {
        match self {
            Model::Forest(m) => predict_forest(m, row),
            Model::Mlp(m) => predict_mlp(m, row),
        }
    }
}

pub const MODEL_FORMAT: &str = "nodulemorph-model";
pub const MODEL_VERSION: u32 = 1;

/// Versioned on-disk form of a model plus the scaler it expects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    pub scaler: Option<ScalerParams>,
    pub model: Model,
}

impl ModelDocument {
    pub fn new(model: Model, scaler: Option<ScalerParams>) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            scaler,
            model,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(s).map_err(|e| Error::Format(format!("model document: {e}")))?;
        if doc.format != MODEL_FORMAT || doc.version != MODEL_VERSION {
            return Err(Error::Format(format!(
                "unsupported model document {} v{}",
                doc.format, doc.version
            )));
        }
        Ok(doc)
    }
}
