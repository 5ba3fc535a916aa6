use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maskio::{ClassCounts, ClassLabel};
use crate::rng::{substream, Stream};

/// Validation fold of every labeled sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub folds: Vec<usize>,
}

impl FoldAssignment {
    pub fn validation_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.folds.len()).filter(|&i| self.folds[i] == fold).collect()
    }

    pub fn training_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.folds.len()).filter(|&i| self.folds[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.folds {
            sizes[f] += 1;
        }
        sizes
    }

    pub fn class_counts(&self, labels: &[ClassLabel], fold: usize) -> ClassCounts {
        ClassCounts::from_labels(self.validation_indices(fold).iter().map(|&i| &labels[i]))
    }
}

/// Shuffles each class with the seeded fold-split stream and deals the
/// classes, benign first, round-robin into `k` folds with one running
/// counter, so both per-class and total fold sizes differ by at most one.
pub fn stratified_kfold(labels: &[ClassLabel], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::Stratification(format!("need at least 2 folds, got {k}")));
    }
    let counts = ClassCounts::from_labels(labels);
    for class in ClassLabel::ALL {
        if counts.get(class) < k {
            return Err(Error::Stratification(format!(
                "class {class} has {} sample(s), fewer than k = {k}",
                counts.get(class)
            )));
        }
    }
    let mut rng = substream(seed, Stream::FoldSplit, 0);
    let mut folds = vec![0; labels.len()];
    let mut dealt = 0usize;
    for class in ClassLabel::ALL {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            folds[i] = dealt % k;
            dealt += 1;
        }
    }
    Ok(FoldAssignment { k, folds })
}
