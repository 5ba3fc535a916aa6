//! Synthetic minority oversampling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::check_rows;
use crate::error::{Error, Result};
use crate::maskio::ClassLabel;
use crate::rng::{substream, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoteTarget {
    /// Oversample the minority class up to the majority count.
    BalanceClasses,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    pub target: SmoteTarget,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        Self {
            k_neighbors: 5,
            target: SmoteTarget::BalanceClasses,
        }
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// For every row, the indices of its `k` nearest other rows (ties by index).
fn nearest_neighbors(rows: &[Vec<f64>], k: usize) -> Vec<Vec<usize>> {
    (0..rows.len())
        .map(|i| {
            let mut others: Vec<(f64, usize)> = (0..rows.len())
                .filter(|&j| j != i)
                .map(|j| (squared_distance(&rows[i], &rows[j]), j))
                .collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            others.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

/// Generates `n_needed` synthetic rows, each `x + t (nn - x)` for a uniformly
/// drawn minority row `x`, one of its `k` nearest minority neighbors `nn`
/// and `t ~ U[0, 1)`. `k` is capped at `|minority| - 1`.
pub fn smote(minority: &[Vec<f64>], k: usize, n_needed: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if minority.len() < 2 {
        return Err(Error::Resample(format!(
            "need at least 2 minority rows to interpolate, got {}",
            minority.len()
        )));
    }
    if k == 0 {
        return Err(Error::Resample("k_neighbors must be at least 1".into()));
    }
    check_rows(minority)?;
    let k = k.min(minority.len() - 1);
    let neighbors = nearest_neighbors(minority, k);
    let mut rng = substream(seed, Stream::Smote, 0);
    Ok((0..n_needed)
        .map(|_| {
            let i = rng.random_range(0..minority.len());
            let nn = &minority[neighbors[i][rng.random_range(0..k)]];
            let t: f64 = rng.random();
            minority[i].iter().zip(nn).map(|(x, n)| x + t * (n - x)).collect()
        })
        .collect())
}

/// What [`balance`] did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmoteSummary {
    pub minority: Option<ClassLabel>,
    pub synthesized: usize,
}

/// Appends synthetic minority rows until both classes have equal counts.
/// Majority rows are returned untouched and in order.
pub fn balance(
    rows: &[Vec<f64>],
    labels: &[ClassLabel],
    config: &SmoteConfig,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, Vec<ClassLabel>, SmoteSummary)> {
    if rows.len() != labels.len() {
        return Err(Error::shape(
            format!("{} labels", rows.len()),
            format!("{} labels", labels.len()),
        ));
    }
    let mut out_rows = rows.to_vec();
    let mut out_labels = labels.to_vec();
    let count = |l| labels.iter().filter(|&&x| x == l).count();
    let (nb, nm) = (count(ClassLabel::Benign), count(ClassLabel::Malignant));
    if nb == nm {
        return Ok((
            out_rows,
            out_labels,
            SmoteSummary {
                minority: None,
                synthesized: 0,
            },
        ));
    }
    let minority = if nb < nm {
        ClassLabel::Benign
    } else {
        ClassLabel::Malignant
    };
    let n_needed = nb.abs_diff(nm);
    let minority_rows: Vec<Vec<f64>> = rows
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == minority)
        .map(|(r, _)| r.clone())
        .collect();
    let synthetic = smote(&minority_rows, config.k_neighbors, n_needed, seed)?;
    out_labels.extend(std::iter::repeat_n(minority, synthetic.len()));
    out_rows.extend(synthetic);
    Ok((
        out_rows,
        out_labels,
        SmoteSummary {
            minority: Some(minority),
            synthesized: n_needed,
        },
    ))
}
