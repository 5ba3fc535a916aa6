use serde::{Deserialize, Serialize};

use super::check_rows;
use crate::error::{Error, Result};

/// Lower bound on a fitted standard deviation; constant columns scale to 0.
pub const STD_FLOOR: f64 = 1e-12;

/// Per-feature mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

pub fn fit_scaler(rows: &[Vec<f64>]) -> Result<ScalerParams> {
    if rows.is_empty() {
        return Err(Error::Fit("no rows".into()));
    }
    let dim = check_rows(rows)?;
    let n = rows.len() as f64;
    let mut mean = Vec::with_capacity(dim);
    let mut std = Vec::with_capacity(dim);
    for j in 0..dim {
        // Shifted by the first value so a constant column has an exact mean.
        let first = rows[0][j];
        let mu = first + rows.iter().map(|r| r[j] - first).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[j] - mu).powi(2)).sum::<f64>() / n;
        mean.push(mu);
        std.push(var.sqrt().max(STD_FLOOR));
    }
    Ok(ScalerParams { mean, std })
}

impl ScalerParams {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn check(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.dim() {
            return Err(Error::shape(
                format!("{} features", self.dim()),
                format!("{} features", row.len()),
            ));
        }
        Ok(())
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check(row)?;
        Ok(row
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| (x - m) / s)
            .collect())
    }

    pub fn inverse_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check(row)?;
        Ok(row
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(z, (m, s))| z * s + m)
            .collect())
    }

    pub fn inverse_transform(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.inverse_row(r)).collect()
    }
}

/// Standardizes every row with fitted parameters.
pub fn apply_scaler(params: &ScalerParams, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    rows.iter().map(|r| params.transform_row(r)).collect()
}
