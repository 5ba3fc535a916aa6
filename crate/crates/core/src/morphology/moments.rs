//! Image moments up to third order over pixel centers.
//!
//! Coordinates follow the image convention x = column, y = row, and
//! `m[p][q]` weights x^p * y^q.

use serde::{Deserialize, Serialize};

use super::components::Component;

/// Moment table indexed `[p][q]`; entries with p + q > 3 are zero.
pub type MomentTable = [[f64; 4]; 4];

/// Variance of a unit square about its center.
const PIXEL_VARIANCE: f64 = 1.0 / 12.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    /// Sums of col^p * row^q over pixel centers.
    pub raw: MomentTable,
    /// Sums about the centroid, pixel-center model.
    pub central: MomentTable,
    /// Scale-normalized moments for p + q >= 2, from the unit-square pixel
    /// model: the second-order diagonal terms carry the m00/12 self-variance
    /// of each pixel. Odd and mixed terms are unaffected by that model.
    pub normalized: MomentTable,
    /// (row, col) centroid.
    pub centroid: (f64, f64),
    /// [[var_x, cov_xy], [cov_xy, var_y]] per pixel, with +1/12 on the diagonal.
    pub covariance: [[f64; 2]; 2],
}

impl MomentSet {
    pub fn m00(&self) -> f64 {
        self.raw[0][0]
    }

    /// Eigenvalues (largest first) of the covariance matrix.
    pub fn covariance_eigenvalues(&self) -> (f64, f64) {
        let [[a, b], [_, c]] = self.covariance;
        let mean = 0.5 * (a + c);
        let radius = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        (mean + radius, mean - radius)
    }
}

pub(crate) const ORDERS: [(usize, usize); 10] = [
    (0, 0),
    (1, 0),
    (0, 1),
    (2, 0),
    (1, 1),
    (0, 2),
    (3, 0),
    (2, 1),
    (1, 2),
    (0, 3),
];

/// Moments of a pixel set. Sums run over pixels in row-major order.
pub fn moments_of_pixels(pixels: &[(usize, usize)]) -> MomentSet {
    let mut raw = [[0.0; 4]; 4];
    for &(r, c) in pixels {
        let (x, y) = (c as f64, r as f64);
        for (p, q) in ORDERS {
            raw[p][q] += x.powi(p as i32) * y.powi(q as i32);
        }
    }
    let m00 = raw[0][0];
    let cx = raw[1][0] / m00;
    let cy = raw[0][1] / m00;

    let mut central = [[0.0; 4]; 4];
    for &(r, c) in pixels {
        let (dx, dy) = (c as f64 - cx, r as f64 - cy);
        for (p, q) in ORDERS {
            central[p][q] += dx.powi(p as i32) * dy.powi(q as i32);
        }
    }

    let mut normalized = [[0.0; 4]; 4];
    for (p, q) in ORDERS.into_iter().filter(|(p, q)| p + q >= 2) {
        let self_variance = match (p, q) {
            (2, 0) | (0, 2) => m00 * PIXEL_VARIANCE,
            _ => 0.0,
        };
        normalized[p][q] = (central[p][q] + self_variance) / m00.powf(1.0 + (p + q) as f64 / 2.0);
    }

    let covariance = [
        [central[2][0] / m00 + PIXEL_VARIANCE, central[1][1] / m00],
        [central[1][1] / m00, central[0][2] / m00 + PIXEL_VARIANCE],
    ];

    MomentSet {
        raw,
        central,
        normalized,
        centroid: (cy, cx),
        covariance,
    }
}

pub fn moments(component: &Component) -> MomentSet {
    moments_of_pixels(component.pixels())
}

/// The seven Hu invariants from normalized moments, without any log transform.
pub fn hu_moments(m: &MomentSet) -> [f64; 7] {
    let n = &m.normalized;
    let (n20, n02, n11) = (n[2][0], n[0][2], n[1][1]);
    let (n30, n03, n21, n12) = (n[3][0], n[0][3], n[2][1], n[1][2]);

    let a = n30 + n12;
    let b = n21 + n03;
    let c = n30 - 3.0 * n12;
    let d = 3.0 * n21 - n03;

    [
        n20 + n02,
        (n20 - n02).powi(2) + 4.0 * n11 * n11,
        c * c + d * d,
        a * a + b * b,
        c * a * (a * a - 3.0 * b * b) + d * b * (3.0 * a * a - b * b),
        (n20 - n02) * (a * a - b * b) + 4.0 * n11 * a * b,
        d * a * (a * a - 3.0 * b * b) - c * b * (3.0 * a * a - b * b),
    ]
}
