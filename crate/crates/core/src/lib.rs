//! Morphological malignancy classification for segmented nodule masks.
//!
//! The pipeline extracts 15 shape features per mask, balances classes with
//! SMOTE, trains random forest or MLP classifiers under stratified k-fold
//! cross-validation, and reports pooled and per-fold metrics. Separate
//! utilities score segmentations with Dice/IoU and export normalized ROI
//! tensors for image classifiers.

pub mod cli;
pub mod error;
pub mod eval;
pub mod learn;
pub mod maskio;
pub mod morphology;
pub mod rng;
pub mod roi;
pub mod synth;

pub use error::{Error, Result};
