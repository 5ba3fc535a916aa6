//! Synthetic nodule cohort: smooth ellipses (benign) and spiculated star
//! polygons (malignant) on a fixed canvas, with matching gray images.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::maskio::{save_gray, save_mask, BinaryMask, ClassLabel, GrayImage};
use crate::morphology::largest_component;
use crate::rng::{substream, Stream};

pub const CANVAS: usize = 96;

#[derive(Debug, Clone)]
pub struct SynthSample {
    pub sample_id: String,
    pub mask: BinaryMask,
    pub image: GrayImage,
    pub label: ClassLabel,
    pub tirads: &'static str,
}

fn ellipse(rng: &mut impl Rng) -> BinaryMask {
    let c = CANVAS as f64 / 2.0;
    let (cx, cy) = (c + rng.random_range(-5.0..5.0), c + rng.random_range(-5.0..5.0));
    let a = rng.random_range(14.0..26.0);
    let b = a * rng.random_range(0.55..1.0);
    let theta = rng.random_range(0.0..PI);
    let (s, co) = theta.sin_cos();
    BinaryMask::from_fn(CANVAS, CANVAS, |r, col| {
        let (x, y) = (col as f64 - cx, r as f64 - cy);
        let u = (x * co + y * s) / a;
        let v = (-x * s + y * co) / b;
        u * u + v * v <= 1.0
    })
}

fn inside(poly: &[(f64, f64)], x: f64, y: f64) -> bool {
    let mut odd = false;
    let mut j = poly.len() - 1;
    for i in 0..poly.len() {
        let (xi, yi) = poly[i];
        let (xj, yj) = poly[j];
        if (yi > y) != (yj > y) && x < xi + (y - yi) * (xj - xi) / (yj - yi) {
            odd = !odd;
        }
        j = i;
    }
    odd
}

fn spiculated(rng: &mut impl Rng) -> BinaryMask {
    let c = CANVAS as f64 / 2.0;
    let (cx, cy) = (c + rng.random_range(-5.0..5.0), c + rng.random_range(-5.0..5.0));
    let spikes = rng.random_range(7..=13);
    let outer = rng.random_range(22.0..30.0);
    let phase = rng.random_range(0.0..2.0 * PI);
    let n = 2 * spikes;
    let poly: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let angle = phase + 2.0 * PI * (i as f64 + rng.random_range(-0.2..0.2)) / n as f64;
            let radius = if i % 2 == 0 {
                outer * rng.random_range(0.85..1.0)
            } else {
                outer * rng.random_range(0.45..0.65)
            };
            (cx + radius * angle.cos(), cy + radius * angle.sin())
        })
        .collect();
    let raw = BinaryMask::from_fn(CANVAS, CANVAS, |r, col| inside(&poly, col as f64, r as f64));
    // Thin spike tips can rasterize as detached pixels.
    let body = largest_component(&raw).expect("polygon covers its center");
    BinaryMask::from_pixels(CANVAS, CANVAS, body.pixels())
}

fn speckle_image(mask: &BinaryMask, rng: &mut impl Rng) -> GrayImage {
    let noise = Normal::new(0.0, 12.0).expect("valid sigma");
    let values: Vec<u8> = mask
        .bits()
        .iter()
        .map(|&fg| {
            let base: f64 = if fg { 70.0 } else { 120.0 };
            (base + noise.sample(rng)).round().clamp(0.0, 255.0) as u8
        })
        .collect();
    GrayImage::new(mask.width(), mask.height(), values).expect("canvas is nonempty")
}

/// `n_per_class` benign and `n_per_class` malignant samples, interleaved
/// by id. Deterministic in `seed`.
pub fn synth_cohort(n_per_class: usize, seed: u64) -> Vec<SynthSample> {
    let mut out = Vec::with_capacity(2 * n_per_class);
    for i in 0..2 * n_per_class {
        let mut rng = substream(seed, Stream::Synth, i as u64);
        let label = if i % 2 == 0 {
            ClassLabel::Benign
        } else {
            ClassLabel::Malignant
        };
        let (mask, tirads) = match label {
            ClassLabel::Benign => (ellipse(&mut rng), ["2", "3"][i / 2 % 2]),
            ClassLabel::Malignant => (spiculated(&mut rng), ["4b", "5"][i / 2 % 2]),
        };
        let image = speckle_image(&mask, &mut rng);
        out.push(SynthSample {
            sample_id: format!("nodule_{i:03}"),
            mask,
            image,
            label,
            tirads,
        });
    }
    out
}

/// Writes `masks/`, `images/` and `labels.csv` under `dir`.
pub fn write_cohort(samples: &[SynthSample], dir: &Path) -> Result<()> {
    let masks = dir.join("masks");
    let images = dir.join("images");
    for d in [&masks, &images] {
        std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    let labels_path = dir.join("labels.csv");
    let mut w =
        csv::Writer::from_path(&labels_path).map_err(|e| Error::Format(format!("{}: {e}", labels_path.display())))?;
    let err = |e: csv::Error| Error::Format(format!("{}: {e}", labels_path.display()));
    w.write_record(["sample_id", "tirads"]).map_err(err)?;
    for s in samples {
        save_mask(&s.mask, &masks.join(format!("{}.png", s.sample_id)))?;
        save_gray(&s.image, &images.join(format!("{}.png", s.sample_id)))?;
        w.write_record([s.sample_id.as_str(), s.tirads]).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(&labels_path, e))?;
    Ok(())
}
