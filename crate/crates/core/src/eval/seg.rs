use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maskio::{load_mask, raster_files, BinaryMask, SkippedEntry};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegMetrics {
    pub dice: f64,
    pub iou: f64,
    /// Both masks were empty; dice and iou are set to 1.
    #[serde(default)]
    pub vacuous: bool,
}

pub fn dice_iou(a: &BinaryMask, b: &BinaryMask) -> Result<SegMetrics> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(Error::shape(
            format!("{}x{}", a.width(), a.height()),
            format!("{}x{}", b.width(), b.height()),
        ));
    }
    let (mut inter, mut na, mut nb) = (0usize, 0usize, 0usize);
    for (&x, &y) in a.bits().iter().zip(b.bits()) {
        na += x as usize;
        nb += y as usize;
        inter += (x && y) as usize;
    }
    if na + nb == 0 {
        return Ok(SegMetrics {
            dice: 1.0,
            iou: 1.0,
            vacuous: true,
        });
    }
    let union = na + nb - inter;
    Ok(SegMetrics {
        dice: 2.0 * inter as f64 / (na + nb) as f64,
        iou: inter as f64 / union as f64,
        vacuous: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegRow {
    pub sample_id: String,
    #[serde(flatten)]
    pub metrics: SegMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegEvaluation {
    pub rows: Vec<SegRow>,
    pub mean_dice: f64,
    pub mean_iou: f64,
    /// Files present in only one of the two directories.
    pub unpaired: Vec<String>,
    /// Pairs that could not be scored.
    pub skipped: Vec<SkippedEntry>,
}

impl SegEvaluation {
    pub fn from_rows(rows: Vec<SegRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Evaluation("no mask pairs to evaluate".into()));
        }
        let n = rows.len() as f64;
        Ok(Self {
            mean_dice: rows.iter().map(|r| r.metrics.dice).sum::<f64>() / n,
            mean_iou: rows.iter().map(|r| r.metrics.iou).sum::<f64>() / n,
            rows,
            unpaired: Vec::new(),
            skipped: Vec::new(),
        })
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Format(format!("writing segmentation csv: {e}"));
        w.write_record(["sample_id", "dice", "iou", "vacuous"]).map_err(err)?;
        for r in &self.rows {
            w.write_record([
                r.sample_id.clone(),
                r.metrics.dice.to_string(),
                r.metrics.iou.to_string(),
                r.metrics.vacuous.to_string(),
            ])
            .map_err(err)?;
        }
        w.flush()
            .map_err(|e| Error::Format(format!("writing segmentation csv: {e}")))?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("segmentation report serializes")
    }
}

/// Scores every prediction mask against the ground-truth mask with the same
/// (case-insensitive) file stem.
pub fn seg_eval_batch(pred_dir: &Path, gt_dir: &Path, threshold: u8) -> Result<SegEvaluation> {
    let preds = raster_files(pred_dir)?;
    let gts = raster_files(gt_dir)?;
    let mut unpaired = Vec::new();
    for (key, (_, path)) in preds.iter().chain(gts.iter()) {
        if !(preds.contains_key(key) && gts.contains_key(key)) {
            log::warn!("unpaired mask {}", path.display());
            unpaired.push(path.display().to_string());
        }
    }
    unpaired.sort();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (key, (stem, pred_path)) in &preds {
        let Some((_, gt_path)) = gts.get(key) else { continue };
        let scored =
            load_mask(pred_path, threshold).and_then(|p| load_mask(gt_path, threshold).and_then(|g| dice_iou(&p, &g)));
        match scored {
            Ok(metrics) => rows.push(SegRow {
                sample_id: stem.clone(),
                metrics,
            }),
            Err(e) => {
                log::warn!("skipping {stem}: {e}");
                skipped.push(SkippedEntry {
                    sample_id: stem.clone(),
                    reason: e.to_string(),
                });
            }
        }
    }
    let mut eval = SegEvaluation::from_rows(rows)?;
    eval.unpaired = unpaired;
    eval.skipped = skipped;
    Ok(eval)
}
