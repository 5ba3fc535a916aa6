use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::{stratified_kfold, FoldAssignment};
use super::metrics::{class_metrics, mean_metrics, ConfusionMatrix};
use super::report::{FoldReport, PooledMetrics, PredictionRecord, Report, ReportConfig};
use crate::error::{Error, Result};
use crate::learn::{
    apply_scaler, balance, fit_scaler, train_forest, train_mlp, ForestConfig, MlpConfig, Model, Prediction,
    ScalerParams, SmoteConfig,
};
use crate::maskio::{ClassCounts, ClassLabel, DatasetCatalog, SkippedEntry};
use crate::morphology::extract_features;
use crate::rng::{derive_seed, Stream};

/// Labeled feature rows in catalog order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureTable {
    pub sample_ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<ClassLabel>,
    /// Labeled samples whose features could not be extracted.
    pub skipped: Vec<SkippedEntry>,
}

impl FeatureTable {
    /// Extracts features of every labeled sample in parallel. Failures are
    /// logged and listed in `skipped`.
    pub fn from_catalog(catalog: &DatasetCatalog) -> Self {
        let labeled: Vec<_> = catalog.labeled().collect();
        let extracted: Vec<_> = labeled.par_iter().map(|(s, _)| extract_features(&s.mask)).collect();
        let mut table = Self::default();
        for ((sample, label), result) in labeled.into_iter().zip(extracted) {
            match result {
                Ok(f) => table.push(sample.sample_id.clone(), f.to_array().to_vec(), label),
                Err(e) => {
                    log::warn!("skipping {}: {e}", sample.sample_id);
                    table.skipped.push(SkippedEntry {
                        sample_id: sample.sample_id.clone(),
                        reason: e.to_string(),
                    });
                }
            }
        }
        table
    }

    pub fn push(&mut self, sample_id: String, row: Vec<f64>, label: ClassLabel) {
        self.sample_ids.push(sample_id);
        self.rows.push(row);
        self.labels.push(label);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// The given rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut out = Self::default();
        for &i in indices {
            out.push(self.sample_ids[i].clone(), self.rows[i].clone(), self.labels[i]);
        }
        out
    }
}

/// A fitted classifier.
pub trait Predictor: Send + Sync {
    fn predict(&self, row: &[f64]) -> Result<Prediction>;
}

impl Predictor for Model {
    fn predict(&self, row: &[f64]) -> Result<Prediction> {
        Model::predict(self, row)
    }
}

/// Something that can be trained on a fold.
pub trait Learner: Sync {
    fn name(&self) -> String;
    /// Stream the per-fold training seed is drawn from.
    fn seed_stream(&self) -> Stream;
    fn fit(&self, rows: &[Vec<f64>], labels: &[ClassLabel], seed: u64) -> Result<Box<dyn Predictor>>;
    /// Hyperparameters recorded in the report.
    fn config(&self) -> serde_json::Value {
        serde_json::Value::Null
    }
}

pub struct ForestLearner(pub ForestConfig);

impl Learner for ForestLearner {
    fn name(&self) -> String {
        "rf".into()
    }

    fn seed_stream(&self) -> Stream {
        Stream::Forest
    }

    fn fit(&self, rows: &[Vec<f64>], labels: &[ClassLabel], seed: u64) -> Result<Box<dyn Predictor>> {
        Ok(Box::new(Model::Forest(train_forest(rows, labels, &self.0, seed)?)))
    }

    fn config(&self) -> serde_json::Value {
        serde_json::to_value(&self.0).expect("config serializes")
    }
}

pub struct MlpLearner(pub MlpConfig);

impl Learner for MlpLearner {
    fn name(&self) -> String {
        "mlp".into()
    }

    fn seed_stream(&self) -> Stream {
        Stream::Mlp
    }

    fn fit(&self, rows: &[Vec<f64>], labels: &[ClassLabel], seed: u64) -> Result<Box<dyn Predictor>> {
        Ok(Box::new(Model::Mlp(train_mlp(rows, labels, &self.0, seed)?.model)))
    }

    fn config(&self) -> serde_json::Value {
        serde_json::to_value(&self.0).expect("config serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Rf,
    Mlp,
}

impl ClassifierKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::Rf => "rf",
            ClassifierKind::Mlp => "mlp",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoteSettings {
    pub enabled: bool,
    pub k_neighbors: usize,
    pub apply_to_rf: bool,
    pub apply_to_mlp: bool,
}

impl Default for SmoteSettings {
    fn default() -> Self {
        Self {
            enabled: true,
            k_neighbors: SmoteConfig::default().k_neighbors,
            apply_to_rf: true,
            apply_to_mlp: true,
        }
    }
}

impl SmoteSettings {
    pub fn for_classifier(&self, kind: ClassifierKind) -> Option<SmoteConfig> {
        let applies = match kind {
            ClassifierKind::Rf => self.apply_to_rf,
            ClassifierKind::Mlp => self.apply_to_mlp,
        };
        (self.enabled && applies).then(|| SmoteConfig {
            k_neighbors: self.k_neighbors,
            ..SmoteConfig::default()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub k_folds: usize,
    pub smote: SmoteSettings,
    pub forest: ForestConfig,
    pub mlp: MlpConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            k_folds: 5,
            smote: SmoteSettings::default(),
            forest: ForestConfig::default(),
            mlp: MlpConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn learner(&self, kind: ClassifierKind) -> Box<dyn Learner> {
        match kind {
            ClassifierKind::Rf => Box::new(ForestLearner(self.forest.clone())),
            ClassifierKind::Mlp => Box::new(MlpLearner(self.mlp.clone())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSeeds {
    pub smote: u64,
    pub model: u64,
}

impl FoldSeeds {
    pub fn derive(seed: u64, learner: &dyn Learner, fold: usize) -> Self {
        Self {
            smote: derive_seed(seed, Stream::Smote, fold as u64),
            model: derive_seed(seed, learner.seed_stream(), fold as u64),
        }
    }
}

/// Scaler, optional SMOTE and classifier fitted on one training set.
pub struct FittedPipeline {
    pub scaler: ScalerParams,
    pub predictor: Box<dyn Predictor>,
    pub n_synthetic: usize,
}

impl FittedPipeline {
    pub fn predict(&self, row: &[f64]) -> Result<Prediction> {
        self.predictor.predict(&self.scaler.transform_row(row)?)
    }
}

/// Fits the scaler on `rows`, oversamples the scaled rows, then trains.
/// Sees nothing but its arguments, which is what keeps validation data out.
pub fn fit_pipeline(
    rows: &[Vec<f64>],
    labels: &[ClassLabel],
    learner: &dyn Learner,
    smote: Option<&SmoteConfig>,
    seeds: FoldSeeds,
) -> Result<FittedPipeline> {
    let scaler = fit_scaler(rows)?;
    let scaled = apply_scaler(&scaler, rows)?;
    let (train_rows, train_labels, n_synthetic) = match smote {
        Some(cfg) => {
            let (r, l, summary) = balance(&scaled, labels, cfg, seeds.smote)?;
            (r, l, summary.synthesized)
        }
        None => (scaled, labels.to_vec(), 0),
    };
    let predictor = learner.fit(&train_rows, &train_labels, seeds.model)?;
    Ok(FittedPipeline {
        scaler,
        predictor,
        n_synthetic,
    })
}

/// Fits the pipeline for validation fold `fold` on the other folds only.
pub fn fit_fold(
    table: &FeatureTable,
    assignment: &FoldAssignment,
    fold: usize,
    learner: &dyn Learner,
    smote: Option<&SmoteConfig>,
    seed: u64,
) -> Result<FittedPipeline> {
    let train = table.select(&assignment.training_indices(fold));
    fit_pipeline(
        &train.rows,
        &train.labels,
        learner,
        smote,
        FoldSeeds::derive(seed, learner, fold),
    )
}

struct FoldOutcome {
    report: FoldReport,
    predictions: Vec<(usize, Prediction)>,
}

fn run_fold(
    table: &FeatureTable,
    assignment: &FoldAssignment,
    fold: usize,
    learner: &dyn Learner,
    smote: Option<&SmoteConfig>,
    seed: u64,
) -> Result<FoldOutcome> {
    let fitted = fit_fold(table, assignment, fold, learner, smote, seed)?;
    let val = assignment.validation_indices(fold);
    let predictions = val
        .iter()
        .map(|&i| fitted.predict(&table.rows[i]).map(|p| (i, p)))
        .collect::<Result<Vec<_>>>()?;
    let cm = ConfusionMatrix::from_pairs(predictions.iter().map(|(i, p)| (table.labels[*i], p.label)));
    let seeds = FoldSeeds::derive(seed, learner, fold);
    Ok(FoldOutcome {
        report: FoldReport {
            fold,
            n_train: assignment.folds.len() - val.len(),
            n_val: val.len(),
            n_synthetic: fitted.n_synthetic,
            smote_seed: seeds.smote,
            model_seed: seeds.model,
            cm,
            metrics: class_metrics(&cm)?,
        },
        predictions,
    })
}

/// Stratified k-fold cross-validation of `learner` on `table`. Folds run in
/// parallel; the report is assembled in fold order.
pub fn cross_validate(
    table: &FeatureTable,
    learner: &dyn Learner,
    k_folds: usize,
    smote: Option<&SmoteConfig>,
    seed: u64,
) -> Result<Report> {
    if table.is_empty() {
        return Err(Error::Evaluation("no labeled samples with usable features".into()));
    }
    let assignment = stratified_kfold(&table.labels, k_folds, seed)?;
    let outcomes = (0..k_folds)
        .into_par_iter()
        .map(|f| run_fold(table, &assignment, f, learner, smote, seed))
        .collect::<Result<Vec<_>>>()?;

    let mut records: Vec<Option<PredictionRecord>> = vec![None; table.len()];
    for o in &outcomes {
        for (i, p) in &o.predictions {
            records[*i] = Some(PredictionRecord {
                sample_id: table.sample_ids[*i].clone(),
                fold: o.report.fold,
                truth: table.labels[*i],
                predicted: p.label,
                score: p.score,
            });
        }
    }
    let predictions: Vec<PredictionRecord> = records
        .into_iter()
        .map(|r| r.expect("every sample validated once"))
        .collect();
    let per_fold: Vec<FoldReport> = outcomes.into_iter().map(|o| o.report).collect();
    let cm: ConfusionMatrix = per_fold.iter().map(|f| f.cm).sum();
    let fold_mean = mean_metrics(&per_fold.iter().map(|f| f.metrics.clone()).collect::<Vec<_>>());
    let classifier = learner.name();
    Ok(Report {
        run_id: format!("cv-{classifier}-s{seed}-k{k_folds}"),
        seed,
        classifier,
        n_samples: table.len(),
        class_counts: ClassCounts::from_labels(&table.labels),
        pooled: PooledMetrics {
            cm,
            metrics: class_metrics(&cm)?,
        },
        fold_mean,
        per_fold,
        config: ReportConfig {
            k_folds,
            smote: smote.copied(),
            classifier: learner.config(),
        },
        mask_provenance: None,
        skipped: table.skipped.clone(),
        predictions,
        timestamp_unix: None,
    })
}

/// Feature extraction plus cross-validation of one classifier on a catalog.
pub fn run_cv(catalog: &DatasetCatalog, kind: ClassifierKind, config: &PipelineConfig, seed: u64) -> Result<Report> {
    let table = FeatureTable::from_catalog(catalog);
    run_cv_on_table(catalog, &table, kind, config, seed)
}

/// As [`run_cv`], reusing features already extracted from `catalog`.
pub fn run_cv_on_table(
    catalog: &DatasetCatalog,
    table: &FeatureTable,
    kind: ClassifierKind,
    config: &PipelineConfig,
    seed: u64,
) -> Result<Report> {
    let learner = config.learner(kind);
    let smote = config.smote.for_classifier(kind);
    let mut report = cross_validate(table, learner.as_ref(), config.k_folds, smote.as_ref(), seed)?;
    report.mask_provenance = catalog.mask_provenance().map(str::to_string);
    let mut skipped = catalog.skipped().to_vec();
    skipped.extend(report.skipped);
    report.skipped = skipped;
    Ok(report)
}
