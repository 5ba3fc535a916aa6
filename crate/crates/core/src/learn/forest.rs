//! Random forest of CART trees with Gini splits.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_training_set, Prediction};
use crate::error::{Error, Result};
use crate::maskio::ClassLabel;
use crate::rng::{substream, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows trees until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features tried per split; `None` means ceil(sqrt(n_features)).
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            features_per_split: None,
            bootstrap: true,
        }
    }
}

impl ForestConfig {
    pub fn resolved_features_per_split(&self, n_features: usize) -> usize {
        self.features_per_split
            .unwrap_or_else(|| (n_features as f64).sqrt().ceil() as usize)
            .clamp(1, n_features.max(1))
    }
}

/// Tree node. Rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf {
        /// Training rows per class, indexed benign, malignant.
        counts: [usize; 2],
    },
}

impl Node {
    pub fn leaf<'a>(&'a self, row: &[f64]) -> &'a Node {
        let mut node = self;
        while let Node::Split {
            feature,
            threshold,
            left,
            right,
        } = node
        {
            node = if row[*feature] <= *threshold { left } else { right };
        }
        node
    }

    /// Majority class of the reached leaf; ties go to malignant.
    pub fn predict(&self, row: &[f64]) -> ClassLabel {
        match self.leaf(row) {
            Node::Leaf { counts } if counts[1] >= counts[0] => ClassLabel::Malignant,
            _ => ClassLabel::Benign,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub config: ForestConfig,
    pub seed: u64,
    pub n_features: usize,
    pub trees: Vec<Node>,
    /// Accuracy of out-of-bag votes on the training rows, when bootstrapping.
    pub oob_accuracy: Option<f64>,
}

fn gini(counts: [usize; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let (p0, p1) = (counts[0] as f64 / n, counts[1] as f64 / n);
    1.0 - p0 * p0 - p1 * p1
}

struct TreeBuilder<'a, R> {
    rows: &'a [Vec<f64>],
    labels: &'a [usize],
    config: &'a ForestConfig,
    mtry: usize,
    rng: R,
}

struct Split {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl<R: Rng> TreeBuilder<'_, R> {
    fn counts(&self, idx: &[usize]) -> [usize; 2] {
        let mut c = [0, 0];
        for &i in idx {
            c[self.labels[i]] += 1;
        }
        c
    }

    fn best_split_on(&self, idx: &[usize], feature: usize, total: [usize; 2]) -> Option<Split> {
        let mut values: Vec<(f64, usize)> = idx.iter().map(|&i| (self.rows[i][feature], self.labels[i])).collect();
        values.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = values.len();
        let min_leaf = self.config.min_samples_leaf;
        let mut left = [0usize; 2];
        let mut best: Option<Split> = None;
        for i in 0..n - 1 {
            left[values[i].1] += 1;
            let (a, b) = (values[i].0, values[i + 1].0);
            let n_left = i + 1;
            if a == b || n_left < min_leaf || n - n_left < min_leaf {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1]];
            let score = (n_left as f64 * gini(left) + (n - n_left) as f64 * gini(right)) / n as f64;
            if best.as_ref().is_none_or(|s| score < s.score) {
                let mid = a + (b - a) / 2.0;
                best = Some(Split {
                    feature,
                    threshold: if mid < b { mid } else { a },
                    score,
                });
            }
        }
        best
    }

    fn build(&mut self, idx: &mut [usize], depth: usize) -> Node {
        let counts = self.counts(idx);
        let pure = counts[0] == 0 || counts[1] == 0;
        let depth_capped = self.config.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_capped || idx.len() < 2 * self.config.min_samples_leaf {
            return Node::Leaf { counts };
        }

        let mut features: Vec<usize> = (0..self.rows[0].len()).collect();
        features.shuffle(&mut self.rng);
        let mut best: Option<Split> = None;
        for (tried, &f) in features.iter().enumerate() {
            // Keep looking past mtry only while no valid split has been found.
            if tried >= self.mtry && best.is_some() {
                break;
            }
            if let Some(s) = self.best_split_on(idx, f, counts) {
                if best.as_ref().is_none_or(|b| s.score < b.score) {
                    best = Some(s);
                }
            }
        }
        let Some(split) = best else {
            return Node::Leaf { counts };
        };

        let mut n_left = 0;
        for i in 0..idx.len() {
            if self.rows[idx[i]][split.feature] <= split.threshold {
                idx.swap(i, n_left);
                n_left += 1;
            }
        }
        let (l, r) = idx.split_at_mut(n_left);
        Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(self.build(l, depth + 1)),
            right: Box::new(self.build(r, depth + 1)),
        }
    }
}

/// Trains `config.n_trees` trees. Tree `t` draws all of its randomness from
/// the `(seed, t)` substream, so results do not depend on thread count.
pub fn train_forest(rows: &[Vec<f64>], labels: &[ClassLabel], config: &ForestConfig, seed: u64) -> Result<ForestModel> {
    let dim = check_training_set(rows, labels)?;
    if config.n_trees == 0 {
        return Err(Error::Training("n_trees must be at least 1".into()));
    }
    if config.min_samples_leaf == 0 {
        return Err(Error::Training("min_samples_leaf must be at least 1".into()));
    }
    let y: Vec<usize> = labels.iter().map(|l| l.index()).collect();
    let mtry = config.resolved_features_per_split(dim);
    let n = rows.len();

    let grown: Vec<(Node, Vec<bool>)> = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(seed, Stream::Tree, t as u64);
            let mut in_bag = vec![!config.bootstrap; n];
            let mut idx: Vec<usize> = if config.bootstrap {
                (0..n)
                    .map(|_| {
                        let i = rng.random_range(0..n);
                        in_bag[i] = true;
                        i
                    })
                    .collect()
            } else {
                (0..n).collect()
            };
            let mut builder = TreeBuilder {
                rows,
                labels: &y,
                config,
                mtry,
                rng,
            };
            (builder.build(&mut idx, 0), in_bag)
        })
        .collect();

    let oob_accuracy = config.bootstrap.then(|| oob_accuracy(rows, labels, &grown)).flatten();
    Ok(ForestModel {
        config: config.clone(),
        seed,
        n_features: dim,
        trees: grown.into_iter().map(|(t, _)| t).collect(),
        oob_accuracy,
    })
}

fn oob_accuracy(rows: &[Vec<f64>], labels: &[ClassLabel], grown: &[(Node, Vec<bool>)]) -> Option<f64> {
    let mut scored = 0usize;
    let mut correct = 0usize;
    for (i, row) in rows.iter().enumerate() {
        let (mut votes, mut malignant) = (0usize, 0usize);
        for (tree, in_bag) in grown {
            if !in_bag[i] {
                votes += 1;
                malignant += usize::from(tree.predict(row).is_malignant());
            }
        }
        if votes > 0 {
            scored += 1;
            let pred = if 2 * malignant >= votes {
                ClassLabel::Malignant
            } else {
                ClassLabel::Benign
            };
            correct += usize::from(pred == labels[i]);
        }
    }
    (scored > 0).then(|| correct as f64 / scored as f64)
}

/// Majority vote over trees; score is the fraction voting malignant and a
/// 50/50 split resolves to malignant.
pub fn predict_forest(model: &ForestModel, row: &[f64]) -> Result<Prediction> {
    if row.len() != model.n_features {
        return Err(Error::shape(
            format!("{} features", model.n_features),
            format!("{} features", row.len()),
        ));
    }
    let malignant = model.trees.iter().filter(|t| t.predict(row).is_malignant()).count();
    let n = model.trees.len();
    Ok(Prediction {
        label: if 2 * malignant >= n {
            ClassLabel::Malignant
        } else {
            ClassLabel::Benign
        },
        score: malignant as f64 / n as f64,
    })
}
