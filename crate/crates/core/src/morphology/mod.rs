//! Shape descriptors of a nodule mask.
//!
//! Pixels are unit squares centered on integer coordinates. Everything is
//! computed on the largest 8-connected component of the mask.

mod components;
mod contour;
mod fill;
mod hull;
mod moments;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::maskio::BinaryMask;

pub use components::{connected_components, largest_component, Component};
pub use contour::{perimeter, trace_contour, Contour};
pub use fill::{fill_holes, filled_area};
pub use hull::{convex_hull, convex_hull_area, lattice_points_in_hull};
pub use moments::{hu_moments, moments, moments_of_pixels, MomentSet, MomentTable};

/// Column names in interchange order.
pub const FEATURE_NAMES: [&str; 15] = [
    "area",
    "perimeter",
    "convex_area",
    "filled_area",
    "solidity",
    "form_factor",
    "eccentricity",
    "aspect_ratio",
    "hu1",
    "hu2",
    "hu3",
    "hu4",
    "hu5",
    "hu6",
    "hu7",
];

pub const N_FEATURES: usize = FEATURE_NAMES.len();

/// The 15 morphological descriptors of one nodule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub area: f64,
    pub perimeter: f64,
    pub convex_area: f64,
    pub filled_area: f64,
    /// area / convex_area.
    pub solidity: f64,
    /// 4 pi area / perimeter^2.
    pub form_factor: f64,
    pub eccentricity: f64,
    /// Major over minor axis length.
    pub aspect_ratio: f64,
    pub hu: [f64; 7],
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; N_FEATURES] {
        let mut out = [0.0; N_FEATURES];
        out[..8].copy_from_slice(&[
            self.area,
            self.perimeter,
            self.convex_area,
            self.filled_area,
            self.solidity,
            self.form_factor,
            self.eccentricity,
            self.aspect_ratio,
        ]);
        out[8..].copy_from_slice(&self.hu);
        out
    }

    pub fn from_array(v: [f64; N_FEATURES]) -> Self {
        let mut hu = [0.0; 7];
        hu.copy_from_slice(&v[8..]);
        Self {
            area: v[0],
            perimeter: v[1],
            convex_area: v[2],
            filled_area: v[3],
            solidity: v[4],
            form_factor: v[5],
            eccentricity: v[6],
            aspect_ratio: v[7],
            hu,
        }
    }
}

/// Features plus the sizes of components that were ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub features: FeatureVector,
    pub discarded_components: Vec<usize>,
}

/// Features of one component.
pub fn component_features(component: &Component) -> FeatureVector {
    let area = component.area() as f64;
    let perimeter = perimeter(&trace_contour(component));
    let convex_area = convex_hull_area(component) as f64;
    let filled_area = filled_area(component) as f64;
    let m = moments(component);
    let (major, minor) = m.covariance_eigenvalues();
    FeatureVector {
        area,
        perimeter,
        convex_area,
        filled_area,
        solidity: area / convex_area,
        form_factor: 4.0 * PI * area / (perimeter * perimeter),
        eccentricity: (1.0 - minor / major).max(0.0).sqrt(),
        aspect_ratio: (major / minor).sqrt(),
        hu: hu_moments(&m),
    }
}

/// Features of the largest component, reporting any other components.
pub fn extract(mask: &BinaryMask) -> Result<Extraction> {
    let comps = connected_components(mask);
    let best = components::largest_index(&comps).ok_or(crate::Error::EmptyMask)?;
    let discarded = comps
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, c)| c.area())
        .collect();
    Ok(Extraction {
        features: component_features(&comps[best]),
        discarded_components: discarded,
    })
}

/// The 15-feature vector of the mask's largest component. Smaller
/// components are logged and ignored.
pub fn extract_features(mask: &BinaryMask) -> Result<FeatureVector> {
    let ex = extract(mask)?;
    if !ex.discarded_components.is_empty() {
        log::warn!(
            "mask has {} extra component(s) of size {:?}; using the largest",
            ex.discarded_components.len(),
            ex.discarded_components
        );
    }
    Ok(ex.features)
}
