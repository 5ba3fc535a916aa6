use std::sync::Mutex;

use nodulemorph::eval::{
    cross_validate, dice_iou, fit_fold, fit_pipeline, run_cv, stratified_kfold, ClassifierKind, FeatureTable,
    FoldSeeds, ForestLearner, Learner, PipelineConfig, Predictor, Report,
};
use nodulemorph::learn::{ForestConfig, MlpConfig, SmoteConfig};
use nodulemorph::maskio::{BinaryMask, ClassLabel, DatasetCatalog, Sample};
use nodulemorph::rng::Stream;
use nodulemorph::synth::synth_cohort;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::{cohort_labels, ConstantMalignant};

/// Training rows, labels and serialized model of one `fit` call.
type Fit = (Vec<Vec<f64>>, Vec<ClassLabel>, String);

/// Forest learner that remembers what it was trained on and what it built.
struct Recording {
    inner: ForestLearner,
    seen: Mutex<Vec<Fit>>,
}

impl Recording {
    fn new() -> Self {
        Self {
            inner: ForestLearner(ForestConfig {
                n_trees: 10,
                ..Default::default()
            }),
            seen: Mutex::new(Vec::new()),
        }
    }
}

impl Learner for Recording {
    fn name(&self) -> String {
        "recording".into()
    }
    fn seed_stream(&self) -> Stream {
        self.inner.seed_stream()
    }
    fn fit(&self, rows: &[Vec<f64>], labels: &[ClassLabel], seed: u64) -> nodulemorph::Result<Box<dyn Predictor>> {
        let model = nodulemorph::learn::train_forest(rows, labels, &self.inner.0, seed)?;
        let json = serde_json::to_string(&model).unwrap();
        self.seen.lock().unwrap().push((rows.to_vec(), labels.to_vec(), json));
        Ok(Box::new(nodulemorph::learn::Model::Forest(model)))
    }
}

fn random_table(benign: usize, malignant: usize, seed: u64) -> FeatureTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = FeatureTable::default();
    for (i, label) in cohort_labels(benign, malignant).into_iter().enumerate() {
        let shift = if label == ClassLabel::Malignant { 1.0 } else { 0.0 };
        let row = (0..6).map(|_| rng.random_range(0.0..3.0) + shift).collect();
        t.push(format!("s{i:03}"), row, label);
    }
    t
}

#[test]
fn removing_validation_rows_changes_nothing() {
    let table = random_table(15, 40, 1);
    let seed = 99;
    let assignment = stratified_kfold(&table.labels, 5, seed).unwrap();
    let smote = SmoteConfig::default();
    for fold in 0..5 {
        let full = Recording::new();
        let fitted = fit_fold(&table, &assignment, fold, &full, Some(&smote), seed).unwrap();

        let train_only = table.select(&assignment.training_indices(fold));
        let pruned = Recording::new();
        let refit = fit_pipeline(
            &train_only.rows,
            &train_only.labels,
            &pruned,
            Some(&smote),
            FoldSeeds::derive(seed, &pruned, fold),
        )
        .unwrap();

        assert_eq!(fitted.scaler, refit.scaler);
        assert_eq!(fitted.n_synthetic, refit.n_synthetic);
        let a = full.seen.lock().unwrap();
        let b = pruned.seen.lock().unwrap();
        assert_eq!(*a, *b);
    }
}

#[test]
fn validation_rows_never_reach_the_learner() {
    let mut table = random_table(15, 40, 2);
    let seed = 5;
    let assignment = stratified_kfold(&table.labels, 5, seed).unwrap();
    // Tag every row with a unique id feature; the scaler maps it affinely,
    // so recorded rows can be traced back after inverting it.
    for (i, r) in table.rows.iter_mut().enumerate() {
        r.push(i as f64 * 1000.0);
    }
    for fold in 0..5 {
        let learner = Recording::new();
        let fitted = fit_fold(&table, &assignment, fold, &learner, None, seed).unwrap();
        let seen = learner.seen.lock().unwrap();
        let val = assignment.validation_indices(fold);
        for row in &seen[0].0 {
            let original = fitted.scaler.inverse_row(row).unwrap();
            let id = (original[6] / 1000.0).round() as usize;
            assert!(
                !val.contains(&id),
                "validation row {id} used for training in fold {fold}"
            );
        }
        assert_eq!(seen[0].0.len(), 55 - val.len());
    }
}

#[test]
fn constant_malignant_on_61_288_cohort() {
    let table = random_table(61, 288, 3);
    let r = cross_validate(&table, &ConstantMalignant, 5, Some(&SmoteConfig::default()), 42).unwrap();
    assert_eq!(r.pooled.cm.total(), 349);
    assert_eq!(r.pooled.metrics.recall, 1.0);
    assert!((r.pooled.metrics.accuracy - 288.0 / 349.0).abs() < 1e-12);
    assert!((r.pooled.metrics.accuracy - 0.8252).abs() < 1e-4);
    let sizes: Vec<usize> = r.per_fold.iter().map(|f| f.n_val).collect();
    assert_eq!(sizes, vec![70, 70, 70, 70, 69]);
    for f in &r.per_fold {
        // SMOTE fills exactly the training-portion class gap.
        let (val_malignant, val_benign) = (f.cm.tp + f.cm.fn_, f.cm.fp + f.cm.tn);
        assert_eq!(f.n_synthetic, (288 - val_malignant) - (61 - val_benign));
    }
    assert!(r.is_consistent());
}

#[test]
fn folds_keep_class_ratio() {
    let labels = cohort_labels(61, 288);
    for seed in 0..20 {
        let a = stratified_kfold(&labels, 5, seed).unwrap();
        for fold in 0..5 {
            let c = a.class_counts(&labels, fold);
            assert!((c.benign as f64 - 61.0 / 5.0).abs() < 1.0);
            assert!((c.malignant as f64 - 288.0 / 5.0).abs() < 1.0);
        }
    }
}

fn synth_catalog(n_per_class: usize, seed: u64) -> DatasetCatalog {
    let samples = synth_cohort(n_per_class, seed)
        .into_iter()
        .map(|s| Sample {
            sample_id: s.sample_id,
            image: Some(s.image),
            mask: s.mask,
            label: Some(s.label),
            tirads: Some(s.tirads.to_string()),
        })
        .collect();
    DatasetCatalog::from_samples(samples)
        .unwrap()
        .with_provenance("synthetic")
}

#[test]
fn run_cv_is_deterministic_and_records_everything() {
    let catalog = synth_catalog(10, 4);
    let config = PipelineConfig {
        forest: ForestConfig {
            n_trees: 20,
            ..Default::default()
        },
        mlp: MlpConfig {
            epochs: 20,
            ..Default::default()
        },
        ..Default::default()
    };
    for kind in [ClassifierKind::Rf, ClassifierKind::Mlp] {
        let a = run_cv(&catalog, kind, &config, 7).unwrap();
        let b = run_cv(&catalog, kind, &config, 7).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert!(a.is_consistent());
        assert_eq!(a.mask_provenance.as_deref(), Some("synthetic"));
        assert_eq!(a.config.k_folds, 5);
        assert_eq!(Report::from_json(&a.to_json()).unwrap(), a);
        let c = run_cv(&catalog, kind, &config, 8).unwrap();
        assert_ne!(a.per_fold[0].model_seed, c.per_fold[0].model_seed);
    }
}

#[test]
fn unextractable_masks_are_skipped() {
    let mut samples: Vec<Sample> = synth_catalog(5, 1).samples().to_vec();
    samples[0].mask = BinaryMask::new(96, 96).unwrap();
    let catalog = DatasetCatalog::from_samples(samples).unwrap();
    let table = FeatureTable::from_catalog(&catalog);
    assert_eq!(table.len(), 9);
    assert_eq!(table.skipped.len(), 1);
    let r = run_cv(
        &catalog,
        ClassifierKind::Rf,
        &PipelineConfig {
            k_folds: 4,
            ..Default::default()
        },
        1,
    )
    .unwrap();
    assert_eq!(r.skipped.len(), 1);
    assert_eq!(r.pooled.cm.total(), 9);
}

fn arb_pair() -> impl Strategy<Value = (BinaryMask, BinaryMask)> {
    (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
        let bits = proptest::collection::vec(any::<bool>(), w * h);
        (bits.clone(), bits).prop_map(move |(a, b)| {
            (
                BinaryMask::from_bits(w, h, a).unwrap(),
                BinaryMask::from_bits(w, h, b).unwrap(),
            )
        })
    })
}

proptest! {
    #[test]
    fn dice_iou_properties((a, b) in arb_pair()) {
        let ab = dice_iou(&a, &b).unwrap();
        let ba = dice_iou(&b, &a).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!(ab.dice >= ab.iou);
        prop_assert!((0.0..=1.0).contains(&ab.iou) && (0.0..=1.0).contains(&ab.dice));
        prop_assert!((ab.dice - 2.0 * ab.iou / (1.0 + ab.iou)).abs() <= 1e-12);
        let aa = dice_iou(&a, &a).unwrap();
        prop_assert_eq!((aa.dice, aa.iou), (1.0, 1.0));
    }
}
