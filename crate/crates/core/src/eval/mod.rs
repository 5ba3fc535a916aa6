//! Cross-validation, classification metrics and segmentation metrics.

mod cv;
mod folds;
mod metrics;
mod report;
mod seg;

pub use cv::{
    cross_validate, fit_fold, fit_pipeline, run_cv, run_cv_on_table, ClassifierKind, FeatureTable, FittedPipeline,
    FoldSeeds, ForestLearner, Learner, MlpLearner, PipelineConfig, Predictor, SmoteSettings,
};
pub use folds::{stratified_kfold, FoldAssignment};
pub use metrics::{class_metrics, f1_score, mean_metrics, ClassMetrics, ConfusionMatrix};
pub use report::{FoldReport, PooledMetrics, PredictionRecord, Report, ReportConfig};
pub use seg::{dice_iou, seg_eval_batch, SegEvaluation, SegMetrics, SegRow};
