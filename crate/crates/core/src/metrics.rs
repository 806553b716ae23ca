//! Detection scores and simple fusion baselines.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mil::InstanceTable;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("both target classes must be present")]
    DegenerateLabels,
    #[error("input is empty")]
    Empty,
    #[error("score {index} is NaN")]
    NaN { index: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeightError {
    #[error("weighted_mean needs {expected} weights, got {found}")]
    Count { expected: usize, found: usize },
    #[error("weights sum to {0}, expected 1")]
    Sum(f64),
    #[error("weights must be finite")]
    NonFinite,
    #[error("weights given for method {0}")]
    Unexpected(Baseline),
    #[error("least-squares system is singular")]
    Singular,
    #[error("{rows} rows but {targets} targets")]
    Shape { rows: usize, targets: usize },
}

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// Exact ROC AUC via the Mann–Whitney statistic with midranks for ties.
pub fn roc_auc(scores: &[f64], targets: &[bool]) -> Result<f64, MetricError> {
    if scores.len() != targets.len() {
        return Err(MetricError::LengthMismatch { left: scores.len(), right: targets.len() });
    }
    if let Some(index) = scores.iter().position(|s| s.is_nan()) {
        return Err(MetricError::NaN { index });
    }
    let n_pos = targets.iter().filter(|&&t| t).count();
    let n_neg = targets.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricError::DegenerateLabels);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(Ordering::Equal));

    // ranks are doubled so midranks stay integral
    let mut pos_rank_sum2: u128 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let midrank2 = (start + 1 + end) as u128;
        let pos_in_run = order[start..end].iter().filter(|&&i| targets[i]).count() as u128;
        pos_rank_sum2 += midrank2 * pos_in_run;
        start = end;
    }
    let (p, q) = (n_pos as u128, n_neg as u128);
    let u2 = pos_rank_sum2 - p * (p + 1);
    Ok(u2 as f64 / (2 * p * q) as f64)
}

pub fn rmse(fused: &[f64], gt: &[f64]) -> Result<f64, MetricError> {
    if fused.len() != gt.len() {
        return Err(MetricError::LengthMismatch { left: fused.len(), right: gt.len() });
    }
    if fused.is_empty() {
        return Err(MetricError::Empty);
    }
    let sq: f64 = fused.iter().zip(gt).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sq / fused.len() as f64).sqrt())
}

/// Maps `[0, 1]` onto `[-1, 1]`.
pub fn unit_to_bipolar(v: f64) -> f64 {
    2.0 * v - 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    Min,
    Max,
    Mean,
    WeightedMean,
}

impl Baseline {
    pub fn as_str(self) -> &'static str {
        match self {
            Baseline::Min => "min",
            Baseline::Max => "max",
            Baseline::Mean => "mean",
            Baseline::WeightedMean => "weighted_mean",
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Baseline {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "min" => Ok(Baseline::Min),
            "max" => Ok(Baseline::Max),
            "mean" => Ok(Baseline::Mean),
            "weighted_mean" => Ok(Baseline::WeightedMean),
            other => Err(format!("unknown baseline {other:?}")),
        }
    }
}

/// Aggregates each instance's sources with a fixed rule.
pub fn baseline_fuse(
    method: Baseline,
    table: &InstanceTable,
    weights: Option<&[f64]>,
) -> Result<Vec<f64>, WeightError> {
    let m = table.m();
    let weights = match (method, weights) {
        (Baseline::WeightedMean, Some(w)) => {
            if w.len() != m {
                return Err(WeightError::Count { expected: m, found: w.len() });
            }
            if w.iter().any(|x| !x.is_finite()) {
                return Err(WeightError::NonFinite);
            }
            let sum: f64 = w.iter().sum();
            if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
                return Err(WeightError::Sum(sum));
            }
            Some(w)
        }
        (Baseline::WeightedMean, None) => return Err(WeightError::Count { expected: m, found: 0 }),
        (_, Some(_)) => return Err(WeightError::Unexpected(method)),
        (_, None) => None,
    };
    let fuse = |row: &[f64]| match method {
        Baseline::Min => row.iter().copied().fold(f64::INFINITY, f64::min),
        Baseline::Max => row.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Baseline::Mean => row.iter().sum::<f64>() / m as f64,
        Baseline::WeightedMean => row.iter().zip(weights.expect("checked above")).map(|(x, w)| x * w).sum(),
    };
    Ok((0..table.len()).map(|i| fuse(table.row(i))).collect())
}

/// Least-squares weights `w` minimising `|X w - y|` over row-major `X`
/// (`targets.len()` rows of `m` columns), via the normal equations.
/// The weights are not renormalised.
pub fn least_squares_weights(rows: &[f64], m: usize, targets: &[f64]) -> Result<Vec<f64>, WeightError> {
    if m == 0 || rows.len() != m * targets.len() {
        return Err(WeightError::Shape { rows: rows.len() / m.max(1), targets: targets.len() });
    }
    let x = DMatrix::from_row_slice(targets.len(), m, rows);
    let y = DVector::from_column_slice(targets);
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * y;
    let w = xtx.cholesky().ok_or(WeightError::Singular)?.solve(&xty);
    if w.iter().any(|v| !v.is_finite()) {
        return Err(WeightError::Singular);
    }
    Ok(w.iter().copied().collect())
}

/// Least-squares weights under the constraint that they sum to one, from
/// the KKT system of the normal equations.
pub fn least_squares_weights_sum_to_one(rows: &[f64], m: usize, targets: &[f64]) -> Result<Vec<f64>, WeightError> {
    if m == 0 || rows.len() != m * targets.len() {
        return Err(WeightError::Shape { rows: rows.len() / m.max(1), targets: targets.len() });
    }
    let x = DMatrix::from_row_slice(targets.len(), m, rows);
    let y = DVector::from_column_slice(targets);
    let mut kkt = DMatrix::zeros(m + 1, m + 1);
    kkt.view_mut((0, 0), (m, m)).copy_from(&(x.transpose() * &x));
    kkt.view_mut((0, m), (m, 1)).fill(1.0);
    kkt.view_mut((m, 0), (1, m)).fill(1.0);
    let mut rhs = DVector::zeros(m + 1);
    rhs.rows_mut(0, m).copy_from(&(x.transpose() * y));
    rhs[m] = 1.0;
    let sol = kkt.lu().solve(&rhs).ok_or(WeightError::Singular)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(WeightError::Singular);
    }
    Ok(sol.rows(0, m).iter().copied().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub method: String,
    pub auc: f64,
    pub rmse: f64,
    pub n: usize,
}

impl ScoreReport {
    pub const CSV_HEADER: &'static str = "method,auc,rmse,n";

    /// Scores a bipolar map: AUC of `scores` against `gt > 0`, RMSE of
    /// `scores` against `gt`.
    pub fn score(method: impl Into<String>, scores: &[f64], gt: &[f64]) -> Result<Self, MetricError> {
        let targets: Vec<bool> = gt.iter().map(|&g| g > 0.0).collect();
        Ok(ScoreReport {
            method: method.into(),
            auc: roc_auc(scores, &targets)?,
            rmse: rmse(scores, gt)?,
            n: scores.len(),
        })
    }

    pub fn csv_line(&self) -> String {
        format!("{},{},{},{}", self.method, self.auc, self.rmse, self.n)
    }
}
