use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::metrics::{ClassMetrics, ConfusionMatrix};
use crate::error::{Error, Result};
use crate::learn::SmoteConfig;
use crate::maskio::{ClassCounts, ClassLabel, SkippedEntry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub n_train: usize,
    pub n_val: usize,
    /// SMOTE rows added to the training portion.
    pub n_synthetic: usize,
    pub smote_seed: u64,
    pub model_seed: u64,
    pub cm: ConfusionMatrix,
    pub metrics: ClassMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledMetrics {
    pub cm: ConfusionMatrix,
    pub metrics: ClassMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub k_folds: usize,
    /// `None` when oversampling was off for this classifier.
    pub smote: Option<SmoteConfig>,
    pub classifier: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub sample_id: String,
    pub fold: usize,
    pub truth: ClassLabel,
    pub predicted: ClassLabel,
    pub score: f64,
}

/// Outcome of one cross-validation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub run_id: String,
    pub seed: u64,
    pub classifier: String,
    pub n_samples: usize,
    pub class_counts: ClassCounts,
    pub per_fold: Vec<FoldReport>,
    /// Metrics over all validation predictions concatenated.
    pub pooled: PooledMetrics,
    /// Unweighted mean of the per-fold metrics.
    pub fold_mean: ClassMetrics,
    pub config: ReportConfig,
    /// Where the masks came from (ground truth, a segmenter, ...), if known.
    pub mask_provenance: Option<String>,
    pub skipped: Vec<SkippedEntry>,
    pub predictions: Vec<PredictionRecord>,
    /// Left out unless asked for, so reruns produce identical files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp_unix: Option<u64>,
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Format(format!("writing report csv: {e}"))
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Format(format!("report: {e}")))
    }

    /// True when the pooled matrix is the sum of the fold matrices.
    pub fn is_consistent(&self) -> bool {
        self.per_fold.iter().map(|f| f.cm).sum::<ConfusionMatrix>() == self.pooled.cm
            && self.pooled.cm.total() == self.predictions.len()
    }

    /// One row per fold, then `pooled` and `fold_mean`.
    pub fn write_metrics_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["scope", "tp", "fp", "fn", "tn", "f1", "accuracy", "recall", "precision"])
            .map_err(csv_err)?;
        let row = |scope: String, cm: Option<&ConfusionMatrix>, m: &ClassMetrics| {
            let c = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
            vec![
                scope,
                c(cm.map(|x| x.tp)),
                c(cm.map(|x| x.fp)),
                c(cm.map(|x| x.fn_)),
                c(cm.map(|x| x.tn)),
                m.f1.to_string(),
                m.accuracy.to_string(),
                m.recall.to_string(),
                m.precision.to_string(),
            ]
        };
        for f in &self.per_fold {
            w.write_record(row(format!("fold_{}", f.fold), Some(&f.cm), &f.metrics))
                .map_err(csv_err)?;
        }
        w.write_record(row("pooled".into(), Some(&self.pooled.cm), &self.pooled.metrics))
            .map_err(csv_err)?;
        w.write_record(row("fold_mean".into(), None, &self.fold_mean))
            .map_err(csv_err)?;
        w.flush().map_err(csv_err)?;
        Ok(())
    }

    pub fn write_predictions_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for p in &self.predictions {
            w.serialize(p).map_err(csv_err)?;
        }
        w.flush().map_err(csv_err)?;
        Ok(())
    }

    /// Human-readable pooled and fold-mean metrics.
    pub fn summary_table(&self) -> String {
        let mut s = String::new();
        let p = &self.pooled.metrics;
        let f = &self.fold_mean;
        let _ = writeln!(
            s,
            "{:<10} {:>9} {:>9} {:>9} {:>9}",
            self.classifier, "f1", "accuracy", "recall", "precision"
        );
        let _ = writeln!(
            s,
            "{:<10} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            "pooled", p.f1, p.accuracy, p.recall, p.precision
        );
        let _ = writeln!(
            s,
            "{:<10} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            "fold_mean", f.f1, f.accuracy, f.recall, f.precision
        );
        let cm = &self.pooled.cm;
        let _ = writeln!(
            s,
            "n={} tp={} fp={} fn={} tn={} skipped={}",
            cm.total(),
            cm.tp,
            cm.fp,
            cm.fn_,
            cm.tn,
            self.skipped.len()
        );
        s
    }
}
