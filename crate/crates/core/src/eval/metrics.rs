use std::iter::Sum;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maskio::ClassLabel;

/// Binary confusion counts with malignant as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn new(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        Self { tp, fp, fn_, tn }
    }

    pub fn record(&mut self, truth: ClassLabel, predicted: ClassLabel) {
        match (truth, predicted) {
            (ClassLabel::Malignant, ClassLabel::Malignant) => self.tp += 1,
            (ClassLabel::Benign, ClassLabel::Malignant) => self.fp += 1,
            (ClassLabel::Malignant, ClassLabel::Benign) => self.fn_ += 1,
            (ClassLabel::Benign, ClassLabel::Benign) => self.tn += 1,
        }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (ClassLabel, ClassLabel)>) -> Self {
        let mut cm = Self::default();
        for (t, p) in pairs {
            cm.record(t, p);
        }
        cm
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

impl Add for ConfusionMatrix {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.tp + o.tp, self.fp + o.fp, self.fn_ + o.fn_, self.tn + o.tn)
    }
}

impl Sum for ConfusionMatrix {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub f1: f64,
    pub accuracy: f64,
    pub recall: f64,
    pub precision: f64,
    /// Metrics whose denominator was zero and were reported as 0.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub undefined: Vec<String>,
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

pub fn class_metrics(cm: &ConfusionMatrix) -> Result<ClassMetrics> {
    if cm.total() == 0 {
        return Err(Error::Evaluation("confusion matrix is empty".into()));
    }
    let mut undefined = Vec::new();
    let mut ratio = |num: usize, den: usize, name: &str| {
        if den == 0 {
            undefined.push(name.to_string());
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(cm.tp, cm.tp + cm.fp, "precision");
    let recall = ratio(cm.tp, cm.tp + cm.fn_, "recall");
    let accuracy = ratio(cm.tp + cm.tn, cm.total(), "accuracy");
    if precision + recall == 0.0 {
        undefined.push("f1".into());
    }
    Ok(ClassMetrics {
        f1: f1_score(precision, recall),
        accuracy,
        recall,
        precision,
        undefined,
    })
}

/// Unweighted mean of each metric across folds.
pub fn mean_metrics(per_fold: &[ClassMetrics]) -> ClassMetrics {
    let n = per_fold.len().max(1) as f64;
    let mean = |f: fn(&ClassMetrics) -> f64| per_fold.iter().map(f).sum::<f64>() / n;
    let mut undefined: Vec<String> = per_fold.iter().flat_map(|m| m.undefined.iter().cloned()).collect();
    undefined.sort();
    undefined.dedup();
    ClassMetrics {
        f1: mean(|m| m.f1),
        accuracy: mean(|m| m.accuracy),
        recall: mean(|m| m.recall),
        precision: mean(|m| m.precision),
        undefined,
    }
}
