//! The `nodulemorph` command line.
//!
//! Exit codes: 0 success, 2 nothing (or nothing usable) was produced,
//! 3 bad configuration or input, 1 a model failed to train.

mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

pub use config::{ForestSection, MlpSection, PathsSection, RoiSection, RunConfig, SmoteSection, DEFAULT_SEED};

use crate::error::{Error, Result};
use crate::eval::{run_cv_on_table, seg_eval_batch, ClassifierKind, FeatureTable, PipelineConfig, Report};
use crate::maskio::{load_catalog, DEFAULT_THRESHOLD};
use crate::morphology::{extract_features, FEATURE_NAMES};
use crate::roi::{export_tensor, extract_roi, RoiOptions, DEFAULT_PADDING, DEFAULT_SIZE};
use crate::synth::{synth_cohort, write_cohort};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_EMPTY: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

pub const THREADS_ENV: &str = "NODULEMORPH_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "nodulemorph",
    version,
    about = "Nodule mask morphology, classification and segmentation metrics"
)]
pub struct Cli {
    /// Master seed for all randomness [default: 42]
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    /// TOML run configuration; flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Morphological feature extraction
    #[command(subcommand)]
    Features(FeaturesCommand),
    /// Stratified cross-validation of the classifiers
    #[command(subcommand)]
    Cv(CvCommand),
    /// Dice and IoU of predicted masks against ground truth
    Segeval(SegevalArgs),
    /// Region-of-interest tensors for an image classifier
    #[command(subcommand)]
    Roi(RoiCommand),
    /// Inspect saved reports
    #[command(subcommand)]
    Report(ReportCommand),
    /// Write the bundled synthetic ellipse/spiculated cohort
    Synth(SynthArgs),
}

#[derive(Debug, Subcommand)]
pub enum FeaturesCommand {
    /// Write sample_id plus the 15 features of every mask to CSV
    Extract(FeaturesArgs),
}

#[derive(Debug, Subcommand)]
pub enum CvCommand {
    /// Run cross-validation and write report JSON and CSV
    Run(CvArgs),
}

#[derive(Debug, Subcommand)]
pub enum RoiCommand {
    /// Write one tensor file per image/mask pair
    Export(RoiArgs),
}

#[derive(Debug, Subcommand)]
pub enum ReportCommand {
    /// Print the metrics table of a report JSON file
    Show {
        #[arg(value_name = "REPORT_JSON")]
        path: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct ThresholdArg {
    /// Mask pixels brighter than this are foreground [default: 127]
    #[arg(long, value_name = "0-255")]
    pub threshold: Option<u8>,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    /// Directory of mask rasters
    #[arg(long, value_name = "DIR")]
    pub masks: Option<PathBuf>,
    /// Output CSV
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub threshold: ThresholdArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassifierChoice {
    Rf,
    Mlp,
    Both,
}

impl ClassifierChoice {
    fn kinds(self) -> Vec<ClassifierKind> {
        match self {
            ClassifierChoice::Rf => vec![ClassifierKind::Rf],
            ClassifierChoice::Mlp => vec![ClassifierKind::Mlp],
            ClassifierChoice::Both => vec![ClassifierKind::Rf, ClassifierKind::Mlp],
        }
    }
}

#[derive(Debug, Args)]
pub struct CvArgs {
    /// Directory of ultrasound images (optional for cross-validation)
    #[arg(long, value_name = "DIR")]
    pub images: Option<PathBuf>,
    /// Directory of mask rasters
    #[arg(long, value_name = "DIR")]
    pub masks: Option<PathBuf>,
    /// CSV with columns sample_id,tirads
    #[arg(long, value_name = "FILE")]
    pub labels: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ClassifierChoice::Both)]
    pub classifier: ClassifierChoice,
    /// Output directory for cv_<classifier>.json/.csv
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Number of folds [default: 5]
    #[arg(long, value_name = "K")]
    pub k: Option<usize>,
    /// Disable SMOTE oversampling of training folds
    #[arg(long)]
    pub no_smote: bool,
    /// SMOTE nearest neighbours [default: 5]
    #[arg(long, value_name = "K")]
    pub smote_k: Option<usize>,
    /// Random forest size [default: 100]
    #[arg(long, value_name = "N")]
    pub trees: Option<usize>,
    /// Tree depth limit, 0 for unlimited [default: 0]
    #[arg(long, value_name = "N")]
    pub max_depth: Option<usize>,
    /// Features tried per split [default: ceil(sqrt(15)) = 4]
    #[arg(long, value_name = "N")]
    pub features_per_split: Option<usize>,
    /// MLP hidden units [default: 32]
    #[arg(long, value_name = "N")]
    pub hidden: Option<usize>,
    /// MLP epochs [default: 200]
    #[arg(long, value_name = "N")]
    pub epochs: Option<usize>,
    /// MLP mini-batch size [default: 16]
    #[arg(long, value_name = "N")]
    pub batch: Option<usize>,
    /// MLP learning rate [default: 0.001]
    #[arg(long, value_name = "LR")]
    pub lr: Option<f64>,
    /// Free-text note on where the masks came from, stored in the report
    #[arg(long, value_name = "TEXT")]
    pub mask_provenance: Option<String>,
    /// Record the wall-clock time in the report (makes reruns differ)
    #[arg(long)]
    pub timestamp: bool,
    #[command(flatten)]
    pub threshold: ThresholdArg,
}

#[derive(Debug, Args)]
pub struct SegevalArgs {
    /// Directory of predicted masks
    #[arg(long, value_name = "DIR")]
    pub pred: PathBuf,
    /// Directory of ground-truth masks
    #[arg(long, value_name = "DIR")]
    pub gt: PathBuf,
    /// Directory for segeval.csv and segeval.json
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub threshold: ThresholdArg,
}

#[derive(Debug, Args)]
pub struct RoiArgs {
    /// Directory of ultrasound images
    #[arg(long, value_name = "DIR")]
    pub images: Option<PathBuf>,
    /// Directory of mask rasters
    #[arg(long, value_name = "DIR")]
    pub masks: Option<PathBuf>,
    /// Output directory for <sample_id>.tensor files
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Pixels added on every side of the mask bounding box [default: 10]
    #[arg(long, value_name = "PX")]
    pub padding: Option<usize>,
    /// Output side length [default: 224]
    #[arg(long, value_name = "PX")]
    pub size: Option<usize>,
    /// Grow the box to a square before resizing
    #[arg(long)]
    pub square: bool,
    #[command(flatten)]
    pub threshold: ThresholdArg,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory; receives masks/, images/ and labels.csv
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Samples generated per class
    #[arg(long, value_name = "N", default_value_t = 30)]
    pub n_per_class: usize,
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Fit(_) | Error::Resample(_) | Error::Training(_) | Error::Divergence { .. } => EXIT_FAILURE,
        _ => EXIT_INPUT,
    }
}

fn required(flag: Option<PathBuf>, file: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    flag.or_else(|| file.clone())
        .ok_or_else(|| Error::Config(format!("missing --{name} (or paths.{name} in the config file)")))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

struct Context {
    seed: u64,
    file: RunConfig,
}

impl Context {
    fn threshold(&self, arg: &ThresholdArg) -> u8 {
        arg.threshold.or(self.file.threshold).unwrap_or(DEFAULT_THRESHOLD)
    }
}

/// Runs a parsed command line and returns its exit code.
pub fn run(cli: Cli) -> Result<i32> {
    let file = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let ctx = Context {
        seed: cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        file,
    };
    match cli.command {
        Command::Features(FeaturesCommand::Extract(a)) => cmd_features(&ctx, a),
        Command::Cv(CvCommand::Run(a)) => cmd_cv(&ctx, a),
        Command::Segeval(a) => cmd_segeval(&ctx, a),
        Command::Roi(RoiCommand::Export(a)) => cmd_roi(&ctx, a),
        Command::Report(ReportCommand::Show { path }) => cmd_report_show(&path),
        Command::Synth(a) => cmd_synth(&ctx, a),
    }
}

fn cmd_features(ctx: &Context, a: FeaturesArgs) -> Result<i32> {
    let masks = required(a.masks, &ctx.file.paths.masks, "masks")?;
    let out = required(a.out, &ctx.file.paths.out, "out")?;
    let catalog = load_catalog(None, &masks, None, ctx.threshold(&a.threshold))?;
    let results: Vec<_> = catalog
        .samples()
        .par_iter()
        .map(|s| extract_features(&s.mask))
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Format(format!("{}: {e}", out.display()));
    w.write_record(std::iter::once("sample_id").chain(FEATURE_NAMES))
        .map_err(csv_err)?;
    let mut written = 0;
    for (sample, result) in catalog.samples().iter().zip(results) {
        match result {
            Ok(f) => {
                let values = f.to_array().map(|v| v.to_string());
                w.write_record(std::iter::once(sample.sample_id.as_str()).chain(values.iter().map(String::as_str)))
                    .map_err(csv_err)?;
                written += 1;
            }
            Err(e) => log::warn!("skipping {}: {e}", sample.sample_id),
        }
    }
    for s in catalog.skipped() {
        log::warn!("skipping {}: {}", s.sample_id, s.reason);
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    write_file(&out, &bytes)?;
    let failed = catalog.len() - written + catalog.skipped().len();
    println!("wrote {written} row(s) to {} ({failed} skipped)", out.display());
    Ok(if written == 0 { EXIT_EMPTY } else { EXIT_OK })
}

fn pipeline_config(ctx: &Context, a: &CvArgs) -> Result<PipelineConfig> {
    let f = &ctx.file;
    let mut p = PipelineConfig::default();
    p.k_folds = a.k.or(f.k_folds).unwrap_or(p.k_folds);
    p.smote.enabled = !a.no_smote && f.smote.enabled.unwrap_or(p.smote.enabled);
    p.smote.k_neighbors = a.smote_k.or(f.smote.k_neighbors).unwrap_or(p.smote.k_neighbors);
    p.smote.apply_to_rf = f.smote.apply_to_rf.unwrap_or(p.smote.apply_to_rf);
    p.smote.apply_to_mlp = f.smote.apply_to_mlp.unwrap_or(p.smote.apply_to_mlp);
    p.forest.n_trees = a.trees.or(f.forest.n_trees).unwrap_or(p.forest.n_trees);
    p.forest.max_depth = match a.max_depth.or(f.forest.max_depth) {
        None | Some(0) => None,
        Some(d) => Some(d),
    };
    p.forest.features_per_split = a.features_per_split.or(f.forest.features_per_split);
    p.forest.min_samples_leaf = f.forest.min_samples_leaf.unwrap_or(p.forest.min_samples_leaf);
    p.forest.bootstrap = f.forest.bootstrap.unwrap_or(p.forest.bootstrap);
    p.mlp.hidden = a.hidden.or(f.mlp.hidden).unwrap_or(p.mlp.hidden);
    p.mlp.epochs = a.epochs.or(f.mlp.epochs).unwrap_or(p.mlp.epochs);
    p.mlp.batch_size = a.batch.or(f.mlp.batch).unwrap_or(p.mlp.batch_size);
    p.mlp.learning_rate = a.lr.or(f.mlp.lr).unwrap_or(p.mlp.learning_rate);

    // Re-validate with the flags merged in.
    let merged = RunConfig {
        k_folds: Some(p.k_folds),
        smote: SmoteSection {
            k_neighbors: Some(p.smote.k_neighbors),
            ..Default::default()
        },
        forest: ForestSection {
            n_trees: Some(p.forest.n_trees),
            features_per_split: p.forest.features_per_split,
            min_samples_leaf: Some(p.forest.min_samples_leaf),
            ..Default::default()
        },
        mlp: MlpSection {
            hidden: Some(p.mlp.hidden),
            batch: Some(p.mlp.batch_size),
            lr: Some(p.mlp.learning_rate),
            ..Default::default()
        },
        ..Default::default()
    };
    merged.validate()?;
    Ok(p)
}

fn cmd_cv(ctx: &Context, a: CvArgs) -> Result<i32> {
    let paths = &ctx.file.paths;
    let masks = required(a.masks.clone(), &paths.masks, "masks")?;
    let labels = required(a.labels.clone(), &paths.labels, "labels")?;
    let out = required(a.out.clone(), &paths.out, "out")?;
    let images = a.images.clone().or_else(|| paths.images.clone());
    let config = pipeline_config(ctx, &a)?;

    if !labels.is_file() {
        return Err(Error::Config(format!("labels CSV {} does not exist", labels.display())));
    }
    let mut catalog = load_catalog(images.as_deref(), &masks, Some(&labels), ctx.threshold(&a.threshold))?;
    if let Some(p) = &a.mask_provenance {
        catalog = catalog.with_provenance(p.clone());
    }
    let table = FeatureTable::from_catalog(&catalog);
    create_dir(&out)?;
    for kind in a.classifier.kinds() {
        let mut report = run_cv_on_table(&catalog, &table, kind, &config, ctx.seed)?;
        if a.timestamp {
            report.timestamp_unix = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .ok()
                .map(|d| d.as_secs());
        }
        let stem = format!("cv_{}", kind.as_str());
        write_file(&out.join(format!("{stem}.json")), report.to_json().as_bytes())?;
        let mut metrics = Vec::new();
        report.write_metrics_csv(&mut metrics)?;
        write_file(&out.join(format!("{stem}.csv")), &metrics)?;
        let mut preds = Vec::new();
        report.write_predictions_csv(&mut preds)?;
        write_file(&out.join(format!("{stem}_predictions.csv")), &preds)?;
        print!("{}", report.summary_table());
    }
    Ok(EXIT_OK)
}

fn cmd_segeval(ctx: &Context, a: SegevalArgs) -> Result<i32> {
    let ev = seg_eval_batch(&a.pred, &a.gt, ctx.threshold(&a.threshold))?;
    if let Some(out) = &a.out {
        create_dir(out)?;
        let mut buf = Vec::new();
        ev.write_csv(&mut buf)?;
        write_file(&out.join("segeval.csv"), &buf)?;
        write_file(&out.join("segeval.json"), ev.to_json().as_bytes())?;
    }
    for path in &ev.unpaired {
        eprintln!("warning: unpaired mask {path}");
    }
    println!(
        "pairs={} unpaired={} skipped={}",
        ev.rows.len(),
        ev.unpaired.len(),
        ev.skipped.len()
    );
    println!("mean_dice={:.4} mean_iou={:.4}", ev.mean_dice, ev.mean_iou);
    Ok(EXIT_OK)
}

fn cmd_roi(ctx: &Context, a: RoiArgs) -> Result<i32> {
    let paths = &ctx.file.paths;
    let images = required(a.images, &paths.images, "images")?;
    let masks = required(a.masks, &paths.masks, "masks")?;
    let out = required(a.out, &paths.out, "out")?;
    let roi = &ctx.file.roi;
    let opts = RoiOptions {
        padding: a.padding.or(roi.padding).unwrap_or(DEFAULT_PADDING),
        size: a.size.or(roi.size).unwrap_or(DEFAULT_SIZE),
        square: a.square || roi.square.unwrap_or(false),
    };
    if opts.size == 0 {
        return Err(Error::Config("--size must be at least 1".into()));
    }
    let catalog = load_catalog(Some(&images), &masks, None, ctx.threshold(&a.threshold))?;
    create_dir(&out)?;
    let results: Vec<Result<()>> = catalog
        .samples()
        .par_iter()
        .map(|s| {
            let image = s
                .image
                .as_ref()
                .ok_or_else(|| Error::Format("no usable image for this mask".into()))?;
            let tensor = extract_roi(image, &s.mask, &s.sample_id, &opts)?;
            export_tensor(&tensor, &out.join(format!("{}.tensor", s.sample_id)))
        })
        .collect();
    let mut written = 0;
    for (s, r) in catalog.samples().iter().zip(results) {
        match r {
            Ok(()) => written += 1,
            Err(e) => log::warn!("skipping {}: {e}", s.sample_id),
        }
    }
    println!(
        "wrote {written} tensor(s) of shape 3x{}x{} to {}",
        opts.size,
        opts.size,
        out.display()
    );
    Ok(if written == 0 { EXIT_EMPTY } else { EXIT_OK })
}

fn cmd_report_show(path: &Path) -> Result<i32> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let report = Report::from_json(&text)?;
    println!(
        "run {} (seed {}, k={})",
        report.run_id, report.seed, report.config.k_folds
    );
    print!("{}", report.summary_table());
    for f in &report.per_fold {
        let m = &f.metrics;
        println!(
            "fold {}: n={} f1={:.4} accuracy={:.4} recall={:.4} precision={:.4}",
            f.fold, f.n_val, m.f1, m.accuracy, m.recall, m.precision
        );
    }
    if !report.is_consistent() {
        eprintln!("warning: pooled counts do not match the per-fold counts");
        return Ok(EXIT_INPUT);
    }
    Ok(EXIT_OK)
}

fn cmd_synth(ctx: &Context, a: SynthArgs) -> Result<i32> {
    let cohort = synth_cohort(a.n_per_class, ctx.seed);
    write_cohort(&cohort, &a.out)?;
    println!("wrote {} synthetic samples to {}", cohort.len(), a.out.display());
    Ok(if cohort.is_empty() { EXIT_EMPTY } else { EXIT_OK })
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {value:?}")))?;
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
        log::warn!("thread pool already configured: {e}");
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INPUT,
            };
        }
    };
    let result = configure_threads().and_then(|()| run(cli));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
