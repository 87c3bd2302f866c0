//! OSPA distance and Monte Carlo aggregation.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::assignment::{solve_optimal, CostMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OspaParams {
    pub order: f64,
    pub cutoff: f64,
    /// State components the base distance is computed on. Empty means all.
    pub position_indices: Vec<usize>,
}

impl Default for OspaParams {
    fn default() -> Self {
        OspaParams {
            order: 2.0,
            cutoff: 10.0,
            position_indices: vec![0, 2],
        }
    }
}

impl OspaParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.order >= 1.0) || !self.order.is_finite() {
            return Err(Error::InvalidParameter("OSPA order must be >= 1".into()));
        }
        if !(self.cutoff > 0.0) || !self.cutoff.is_finite() {
            return Err(Error::InvalidParameter("OSPA cutoff must be > 0".into()));
        }
        Ok(())
    }

    /// Euclidean distance on the selected components, capped at the cutoff.
    pub fn base_distance(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let d2: f64 = if self.position_indices.is_empty() {
            (x - y).norm_squared()
        } else {
            self.position_indices
                .iter()
                .map(|&i| (x[i] - y[i]).powi(2))
                .sum()
        };
        d2.sqrt().min(self.cutoff)
    }
}

/// OSPA distance between two finite sets.
pub fn ospa(x: &[DVector<f64>], y: &[DVector<f64>], params: &OspaParams) -> f64 {
    let (small, large) = if x.len() <= y.len() { (x, y) } else { (y, x) };
    let n = large.len();
    if n == 0 {
        return 0.0;
    }
    let p = params.order;
    let c = params.cutoff;
    let mut data = Vec::with_capacity(small.len() * n);
    for a in small {
        for b in large {
            data.push(params.base_distance(a, b).powf(p));
        }
    }
    let matched = if small.is_empty() {
        0.0
    } else {
        let m = CostMatrix::new(small.len(), n, data);
        let a = solve_optimal(&m).expect("finite cost matrix always has an assignment");
        // Summing in sorted order makes the result exactly symmetric.
        let mut costs: Vec<f64> = a
            .row_to_col
            .iter()
            .enumerate()
            .map(|(r, &col)| m.get(r, col))
            .collect();
        costs.sort_by(f64::total_cmp);
        costs.iter().sum()
    };
    let total = matched + c.powf(p) * (n - small.len()) as f64;
    (total / n as f64).powf(1.0 / p).min(c)
}

/// Per-step RMS over runs and the grand RMS over runs and steps.
/// `values[run][step]`.
pub fn rms_aggregate(values: &[Vec<f64>]) -> Result<(Vec<f64>, f64)> {
    if values.is_empty() || values[0].is_empty() {
        return Err(Error::EmptyInput("OSPA value grid"));
    }
    let steps = values[0].len();
    if let Some(bad) = values.iter().find(|r| r.len() != steps) {
        return Err(Error::DimensionMismatch {
            context: "OSPA value grid row",
            expected: steps,
            actual: bad.len(),
        });
    }
    let runs = values.len() as f64;
    let curve = (0..steps)
        .map(|k| (values.iter().map(|r| r[k] * r[k]).sum::<f64>() / runs).sqrt())
        .collect();
    let grand = values
        .iter()
        .flat_map(|r| r.iter())
        .map(|v| v * v)
        .sum::<f64>()
        / (runs * steps as f64);
    Ok((curve, grand.sqrt()))
}
