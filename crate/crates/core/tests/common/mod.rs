//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use nodulemorph::eval::{Learner, Predictor};
use nodulemorph::learn::{loss_and_gradients, MlpModel, Prediction};
use nodulemorph::maskio::{BinaryMask, ClassLabel};
use nodulemorph::rng::Stream;
use nodulemorph::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn disc(r: f64, size: usize) -> BinaryMask {
    let c = (size / 2) as f64;
    BinaryMask::from_fn(size, size, |y, x| {
        let (dx, dy) = (x as f64 - c, y as f64 - c);
        dx * dx + dy * dy <= r * r
    })
}

/// A w x h block with a 2-pixel margin.
pub fn rect(w: usize, h: usize) -> BinaryMask {
    BinaryMask::from_fn(w + 4, h + 4, |r, c| (2..2 + h).contains(&r) && (2..2 + w).contains(&c))
}

/// An asymmetric shape (an L with a sloped wedge and a foot) offset by (dx, dy).
pub fn lopsided(dx: usize, dy: usize) -> BinaryMask {
    BinaryMask::from_fn(60, 60, |r, c| {
        let (Some(y), Some(x)) = (r.checked_sub(dy), c.checked_sub(dx)) else {
            return false;
        };
        let l = (x < 6 && y < 20) || ((14..20).contains(&y) && x < 15);
        let wedge = (6..12).contains(&x) && y < 14 && x + y < 16;
        let foot = (15..17).contains(&x) && (16..20).contains(&y);
        l || wedge || foot
    })
}

/// Quarter turn.
pub fn rot90(m: &BinaryMask) -> BinaryMask {
    let (w, h) = (m.width(), m.height());
    BinaryMask::from_fn(h, w, |r, c| m.get(h - 1 - c, r))
}

/// Raw and central moments by a straight double loop over the raster.
#[allow(clippy::needless_range_loop)]
pub fn naive_raw_and_central(m: &BinaryMask) -> ([[f64; 4]; 4], [[f64; 4]; 4]) {
    let mut raw = [[0.0; 4]; 4];
    for r in 0..m.height() {
        for c in 0..m.width() {
            if m.get(r, c) {
                for p in 0..4 {
                    for q in 0..4 - p {
                        raw[p][q] += (c as f64).powi(p as i32) * (r as f64).powi(q as i32);
                    }
                }
            }
        }
    }
    let (cx, cy) = (raw[1][0] / raw[0][0], raw[0][1] / raw[0][0]);
    let mut central = [[0.0; 4]; 4];
    for r in 0..m.height() {
        for c in 0..m.width() {
            if m.get(r, c) {
                for p in 0..4 {
                    for q in 0..4 - p {
                        central[p][q] += (c as f64 - cx).powi(p as i32) * (r as f64 - cy).powi(q as i32);
                    }
                }
            }
        }
    }
    (raw, central)
}

pub fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

pub fn cohort_labels(benign: usize, malignant: usize) -> Vec<ClassLabel> {
    let mut v = vec![ClassLabel::Benign; benign];
    v.extend(vec![ClassLabel::Malignant; malignant]);
    v
}

/// Two isotropic Gaussian blobs whose centers sit `margin` standard
/// deviations either side of the line x0 = 0.
pub fn blobs(n_per_class: usize, margin: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<ClassLabel>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..2 * n_per_class {
        let label = if i % 2 == 0 {
            ClassLabel::Benign
        } else {
            ClassLabel::Malignant
        };
        let cx = if label == ClassLabel::Benign { -margin } else { margin };
        rows.push(vec![cx + noise.sample(&mut rng), 3.0 + noise.sample(&mut rng)]);
        labels.push(label);
    }
    (rows, labels)
}

/// Training accuracy of the nearest-class-mean rule.
pub fn nearest_centroid_accuracy(rows: &[Vec<f64>], labels: &[ClassLabel]) -> f64 {
    let dim = rows[0].len();
    let mut means = [vec![0.0; dim], vec![0.0; dim]];
    let mut counts = [0.0; 2];
    for (r, l) in rows.iter().zip(labels) {
        counts[l.index()] += 1.0;
        for (m, v) in means[l.index()].iter_mut().zip(r) {
            *m += v;
        }
    }
    for k in 0..2 {
        means[k].iter_mut().for_each(|m| *m /= counts[k]);
    }
    let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let correct = rows
        .iter()
        .zip(labels)
        .filter(|(r, l)| {
            let nearest = if d(r, &means[0]) <= d(r, &means[1]) { 0 } else { 1 };
            nearest == l.index()
        })
        .count();
    correct as f64 / rows.len() as f64
}

/// True if `p` lies on the segment from `a` to `b`.
pub fn on_segment(p: &[f64], a: &[f64], b: &[f64], tol: f64) -> bool {
    let (mut len2, mut dot) = (0.0, 0.0);
    for ((x, y), z) in a.iter().zip(b).zip(p) {
        len2 += (y - x) * (y - x);
        dot += (y - x) * (z - x);
    }
    let t = if len2 == 0.0 { 0.0 } else { dot / len2 };
    (-tol..=1.0 + tol).contains(&t)
        && a.iter()
            .zip(b)
            .zip(p)
            .all(|((x, y), z)| (z - x - t * (y - x)).abs() <= tol)
}

/// Max relative error between analytic and central-difference gradients.
/// The denominator is floored at 1e-6: below that, the difference quotient
/// is dominated by rounding of the loss (about |loss| * 1e-16 / eps).
pub fn max_gradient_rel_error(model: &MlpModel, rows: &[Vec<f64>], targets: &[f64], eps: f64) -> f64 {
    let (_, g) = loss_and_gradients(model, rows, targets);
    let analytic = g.flatten();
    let n1 = model.w1.len();
    let n2 = n1 + model.b1.len();
    let n3 = n2 + model.w2.len();
    let perturbed = |i: usize, delta: f64| {
        let mut m = model.clone();
        match i {
            i if i < n1 => m.w1[i] += delta,
            i if i < n2 => m.b1[i - n1] += delta,
            i if i < n3 => m.w2[i - n2] += delta,
            _ => m.b2 += delta,
        }
        loss_and_gradients(&m, rows, targets).0
    };
    let mut worst: f64 = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        let numeric = (perturbed(i, eps) - perturbed(i, -eps)) / (2.0 * eps);
        let scale = a.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((a - numeric).abs() / scale);
    }
    worst
}

/// Always answers Malignant.
pub struct ConstantMalignant;

struct Constant;

impl Predictor for Constant {
    fn predict(&self, _: &[f64]) -> Result<Prediction> {
        Ok(Prediction {
            label: ClassLabel::Malignant,
            score: 1.0,
        })
    }
}

impl Learner for ConstantMalignant {
    fn name(&self) -> String {
        "constant-malignant".into()
    }
    fn seed_stream(&self) -> Stream {
        Stream::Forest
    }
    fn fit(&self, _: &[Vec<f64>], _: &[ClassLabel], _: u64) -> Result<Box<dyn Predictor>> {
        Ok(Box::new(Constant))
    }
}
