use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{is_raster_path, load_gray, load_mask, map_tirads, BinaryMask, ClassLabel, GrayImage};
use crate::error::{Error, Result};

/// One catalog entry.
#[derive(Debug, Clone)]
pub struct Sample {
    pub sample_id: String,
    pub image: Option<GrayImage>,
    pub mask: BinaryMask,
    pub label: Option<ClassLabel>,
    /// Raw category string from the label file, if any.
    pub tirads: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedEntry {
    pub sample_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub benign: usize,
    pub malignant: usize,
}

impl ClassCounts {
    pub fn from_labels<'a>(labels: impl IntoIterator<Item = &'a ClassLabel>) -> Self {
        let mut counts = Self::default();
        for l in labels {
            match l {
                ClassLabel::Benign => counts.benign += 1,
                ClassLabel::Malignant => counts.malignant += 1,
            }
        }
        counts
    }

    pub fn total(&self) -> usize {
        self.benign + self.malignant
    }

    pub fn get(&self, label: ClassLabel) -> usize {
        match label {
            ClassLabel::Benign => self.benign,
            ClassLabel::Malignant => self.malignant,
        }
    }
}

/// Immutable set of samples with unique ids.
#[derive(Debug, Clone, Default)]
pub struct DatasetCatalog {
    samples: Vec<Sample>,
    skipped: Vec<SkippedEntry>,
    warnings: Vec<String>,
    mask_provenance: Option<String>,
}

/// JSON-printable overview of a catalog.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CatalogSummary {
    pub n_samples: usize,
    pub n_labeled: usize,
    pub n_unlabeled: usize,
    pub n_with_image: usize,
    pub class_counts: ClassCounts,
    pub mask_provenance: Option<String>,
    pub skipped: Vec<SkippedEntry>,
    pub warnings: Vec<String>,
}

impl DatasetCatalog {
    /// Builds a catalog from in-memory samples, rejecting duplicate ids.
    pub fn from_samples(samples: Vec<Sample>) -> Result<Self> {
        let mut seen = HashMap::new();
        for s in &samples {
            if seen.insert(s.sample_id.to_lowercase(), ()).is_some() {
                return Err(Error::Format(format!("duplicate sample_id {:?}", s.sample_id)));
            }
        }
        Ok(Self {
            samples,
            ..Self::default()
        })
    }

    /// Records where the masks came from (e.g. `ground-truth`, `predicted`).
    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.mask_provenance = Some(provenance.into());
        self
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labeled(&self) -> impl Iterator<Item = (&Sample, ClassLabel)> {
        self.samples.iter().filter_map(|s| s.label.map(|l| (s, l)))
    }

    pub fn n_labeled(&self) -> usize {
        self.labeled().count()
    }

    pub fn class_counts(&self) -> ClassCounts {
        ClassCounts::from_labels(self.samples.iter().filter_map(|s| s.label.as_ref()))
    }

    pub fn skipped(&self) -> &[SkippedEntry] {
        &self.skipped
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn mask_provenance(&self) -> Option<&str> {
        self.mask_provenance.as_deref()
    }

    pub fn summary(&self) -> CatalogSummary {
        let n_labeled = self.n_labeled();
        CatalogSummary {
            n_samples: self.samples.len(),
            n_labeled,
            n_unlabeled: self.samples.len() - n_labeled,
            n_with_image: self.samples.iter().filter(|s| s.image.is_some()).count(),
            class_counts: self.class_counts(),
            mask_provenance: self.mask_provenance.clone(),
            skipped: self.skipped.clone(),
            warnings: self.warnings.clone(),
        }
    }

    fn warn(&mut self, msg: String) {
        log::warn!("{msg}");
        self.warnings.push(msg);
    }
}

#[derive(Debug, Deserialize)]
struct LabelRow {
    sample_id: String,
    tirads: String,
}

/// Raster files in `dir`, keyed by lowercase stem, sorted.
pub(crate) fn raster_files(dir: &Path) -> Result<BTreeMap<String, (String, PathBuf)>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = BTreeMap::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if !path.is_file() || !is_raster_path(&path) {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        let key = stem.to_lowercase();
        if let Some((_, prev)) = files.insert(key, (stem.to_string(), path.clone())) {
            return Err(Error::Format(format!(
                "duplicate sample_id {stem:?}: {} and {}",
                prev.display(),
                path.display()
            )));
        }
    }
    Ok(files)
}

fn read_labels(path: &Path) -> Result<BTreeMap<String, (String, String)>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    for required in ["sample_id", "tirads"] {
        if !headers.iter().any(|h| h == required) {
            return Err(Error::Format(format!(
                "{}: missing column {required:?} (expected header sample_id,tirads)",
                path.display()
            )));
        }
    }
    let mut labels = BTreeMap::new();
    for row in reader.deserialize::<LabelRow>() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let key = row.sample_id.to_lowercase();
        if labels.insert(key, (row.sample_id.clone(), row.tirads)).is_some() {
            return Err(Error::Format(format!(
                "{}: duplicate sample_id {:?}",
                path.display(),
                row.sample_id
            )));
        }
    }
    Ok(labels)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        }
    } else {
        Error::Format(format!("{}: {e}", path.display()))
    }
}

/// Loads masks (and optionally images and labels) into a catalog.
///
/// Masks pair with images and label rows by case-insensitive file stem.
/// Undecodable masks and label rows without a mask are recorded as skipped;
/// images that fail to load or disagree in size with their mask are dropped
/// with a warning.
pub fn load_catalog(
    image_dir: Option<&Path>,
    mask_dir: &Path,
    labels_csv: Option<&Path>,
    threshold: u8,
) -> Result<DatasetCatalog> {
    let masks = raster_files(mask_dir)?;
    let images = match image_dir {
        Some(dir) => raster_files(dir)?,
        None => BTreeMap::new(),
    };
    let labels = match labels_csv {
        Some(path) => read_labels(path)?,
        None => BTreeMap::new(),
    };

    let mut catalog = DatasetCatalog::default();
    if masks.is_empty() {
        catalog.warn(format!("no mask files found in {}", mask_dir.display()));
    }

    let loaded: Vec<_> = masks
        .par_iter()
        .map(|(key, (stem, path))| {
            let mask = load_mask(path, threshold);
            let image = images.get(key).map(|(_, p)| load_gray(p));
            (key, stem, mask, image)
        })
        .collect();

    for (key, stem, mask, image) in loaded {
        let mask = match mask {
            Ok(m) => m,
            Err(e) => {
                catalog.warn(format!("skipping {stem}: {e}"));
                catalog.skipped.push(SkippedEntry {
                    sample_id: stem.clone(),
                    reason: format!("undecodable mask: {e}"),
                });
                continue;
            }
        };
        let image = match image {
            None => None,
            Some(Ok(img)) if img.width() == mask.width() && img.height() == mask.height() => Some(img),
            Some(Ok(img)) => {
                catalog.warn(format!(
                    "{stem}: image is {}x{} but mask is {}x{}; image dropped",
                    img.width(),
                    img.height(),
                    mask.width(),
                    mask.height()
                ));
                None
            }
            Some(Err(e)) => {
                catalog.warn(format!("{stem}: image dropped: {e}"));
                None
            }
        };
        let (label, tirads) = match labels.get(key) {
            Some((_, t)) if t.is_empty() => {
                catalog.warn(format!("{stem}: empty TI-RADS value; kept unlabeled"));
                (None, None)
            }
            Some((_, t)) => (Some(map_tirads(t)?), Some(t.clone())),
            None => (None, None),
        };
        catalog.samples.push(Sample {
            sample_id: stem.clone(),
            image,
            mask,
            label,
            tirads,
        });
    }

    for (key, (id, _)) in &labels {
        if !masks.contains_key(key) {
            catalog.warn(format!("label row {id:?} has no mask file; skipped"));
            catalog.skipped.push(SkippedEntry {
                sample_id: id.clone(),
                reason: "label without mask".into(),
            });
        }
    }
    Ok(catalog)
}
