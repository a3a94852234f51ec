//! Sparse decision-level fusion.
//!
//! Per-layer predicted labels form the columns of `E`. Layer weights come from
//! `min_β ‖y − Eβ‖² + λ‖β‖₁` (no intercept); negative weights are clipped, the
//! rest normalized to sum to one, and a subject is labeled 1 when its weighted
//! vote exceeds one half.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dataset::Label;
use crate::{Error, Result};

pub const LASSO_TOL: f64 = 1e-8;
const LASSO_MAX_SWEEPS: usize = 1_000_000;

/// Slack below which a weighted vote is treated as exactly one half, so that
/// rounding in the normalized weights cannot flip a tie to class 1.
pub const VOTE_TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix {
    pub e: Array2<f64>,
    pub layer_names: Vec<String>,
}

impl LabelMatrix {
    pub fn new(e: Array2<f64>, layer_names: Vec<String>) -> Result<Self> {
        if e.ncols() != layer_names.len() {
            return Err(Error::DimensionMismatch {
                expected: e.ncols(),
                found: layer_names.len(),
            });
        }
        if e.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidConfig("label matrix entries must be 0 or 1".into()));
        }
        Ok(LabelMatrix { e, layer_names })
    }

    pub fn from_columns(columns: &[Vec<Label>], layer_names: Vec<String>) -> Result<Self> {
        let n = columns.first().map_or(0, Vec::len);
        let e = Array2::from_shape_fn((n, columns.len()), |(i, j)| columns[j][i] as f64);
        LabelMatrix::new(e, layer_names)
    }

    pub fn layers(&self) -> usize {
        self.e.ncols()
    }

    pub fn column(&self, j: usize) -> Vec<Label> {
        self.e.column(j).iter().map(|&v| v as Label).collect()
    }
}

/// Default layer names: `original`, `layer1`, `layer2`, ...
pub fn layer_names(layers: usize) -> Vec<String> {
    (0..layers)
        .map(|i| if i == 0 { "original".to_string() } else { format!("layer{i}") })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionWeights {
    pub beta: Vec<f64>,
    pub beta_norm: Vec<f64>,
    pub lambda: f64,
}

pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Cyclic coordinate descent on `‖y − Eβ‖² + λ‖β‖₁`, starting from zero and
/// stopping when a full sweep moves no coordinate by more than [`LASSO_TOL`].
pub fn lasso_fit(e: ArrayView2<f64>, y: ArrayView1<f64>, lambda: f64) -> Result<Array1<f64>> {
    if e.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: e.nrows(),
            found: y.len(),
        });
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidConfig(format!("lambda must be nonnegative, got {lambda}")));
    }
    let l = e.ncols();
    let norms: Vec<f64> = e.columns().into_iter().map(|c| c.dot(&c)).collect();
    let mut beta = Array1::<f64>::zeros(l);
    let mut resid = y.to_owned();
    for _ in 0..LASSO_MAX_SWEEPS {
        let mut max_step: f64 = 0.0;
        for j in 0..l {
            if norms[j] == 0.0 {
                continue;
            }
            let col = e.column(j);
            let old = beta[j];
            let rho = col.dot(&resid) + norms[j] * old;
            let new = soft_threshold(rho, lambda / 2.0) / norms[j];
            if new != old {
                resid.scaled_add(old - new, &col);
                beta[j] = new;
                max_step = max_step.max((new - old).abs());
            }
        }
        if max_step < LASSO_TOL {
            break;
        }
    }
    Ok(beta)
}

/// Clips negatives to zero and rescales to sum one; all-zero input gives the
/// uniform vector.
pub fn normalize(beta: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = beta.iter().map(|&b| b.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total > 0.0 {
        clipped.iter().map(|b| b / total).collect()
    } else {
        vec![1.0 / beta.len() as f64; beta.len()]
    }
}

/// Weighted vote per row: 1 iff `Σ_j e_ij w_j > 0.5`.
pub fn fuse(e: ArrayView2<f64>, beta_norm: &[f64]) -> Result<Vec<Label>> {
    if e.ncols() != beta_norm.len() {
        return Err(Error::DimensionMismatch {
            expected: e.ncols(),
            found: beta_norm.len(),
        });
    }
    Ok(e.rows()
        .into_iter()
        .map(|row| {
            let score: f64 = row.iter().zip(beta_norm).map(|(a, w)| a * w).sum();
            Label::from(score > 0.5 + VOTE_TIE_EPS)
        })
        .collect())
}

pub fn fit_weights(e: ArrayView2<f64>, y: &[Label], lambda: f64) -> Result<FusionWeights> {
    let yv = Array1::from_iter(y.iter().map(|&v| v as f64));
    let beta = lasso_fit(e, yv.view(), lambda)?.to_vec();
    let beta_norm = normalize(&beta);
    Ok(FusionWeights { beta, beta_norm, lambda })
}

pub const LAMBDA_GRID: [f64; 3] = [0.01, 0.1, 0.5];

/// Picks λ from [`LAMBDA_GRID`] by fusion accuracy on the fitting rows
/// (ties: the earlier grid value).
pub fn fit_weights_grid(e: ArrayView2<f64>, y: &[Label]) -> Result<FusionWeights> {
    let mut best: Option<(usize, FusionWeights)> = None;
    for &lambda in &LAMBDA_GRID {
        let w = fit_weights(e, y, lambda)?;
        let fused = fuse(e, &w.beta_norm)?;
        let correct = fused.iter().zip(y).filter(|(a, b)| a == b).count();
        if best.as_ref().map_or(true, |(c, _)| correct > *c) {
            best = Some((correct, w));
        }
    }
    Ok(best.expect("grid non-empty").1)
}
