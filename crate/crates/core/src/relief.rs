//! Single-neighbor Relief weighting.
//!
//! For each row, the nearest same-class row (hit) and nearest other-class row
//! (miss) are found by Euclidean distance. Every column then accumulates
//! `(|x - miss| - |x - hit|) / (|x - miss| + |x - hit|)`, so columns along which
//! rows sit closer to their own class than to the other class gain weight.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Label;
use crate::linalg::sq_dist;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRows {
    pub rows: Array2<f64>,
    pub labels: Vec<Label>,
}

impl LabeledRows {
    pub fn new(rows: Array2<f64>, labels: Vec<Label>) -> Result<Self> {
        if rows.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.nrows(),
                found: labels.len(),
            });
        }
        Ok(LabeledRows { rows, labels })
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.rows.view()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightOrigin {
    Segment,
    StitchedFeature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub weights: Vec<f64>,
    pub origin: WeightOrigin,
}

impl WeightVector {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Indices ordered by ascending weight, ties by ascending index.
    pub fn ascending(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.weights.len()).collect();
        idx.sort_by(|&a, &b| self.weights[a].total_cmp(&self.weights[b]).then(a.cmp(&b)));
        idx
    }

    /// Indices ordered by descending weight, ties by ascending index.
    pub fn descending(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.weights.len()).collect();
        idx.sort_by(|&a, &b| self.weights[b].total_cmp(&self.weights[a]).then(a.cmp(&b)));
        idx
    }
}

/// Nearest hit and nearest miss of row `i`; ties go to the lowest row index.
pub fn nearest_hit_miss(data: &LabeledRows, i: usize) -> Result<(usize, usize)> {
    let rows = data.view();
    let own = data.labels[i];
    let mut hit: Option<(f64, usize)> = None;
    let mut miss: Option<(f64, usize)> = None;
    for (k, row) in rows.rows().into_iter().enumerate() {
        if k == i {
            continue;
        }
        let d = sq_dist(rows.row(i), row);
        let slot = if data.labels[k] == own { &mut hit } else { &mut miss };
        match slot {
            Some((best, _)) if d >= *best => {}
            _ => *slot = Some((d, k)),
        }
    }
    let hit = hit.ok_or(Error::DegenerateClass {
        row: i,
        missing: "same-class",
    })?;
    let miss = miss.ok_or(Error::DegenerateClass {
        row: i,
        missing: "other-class",
    })?;
    Ok((hit.1, miss.1))
}

/// Ratio term of one column; zero when both neighbor gaps vanish.
#[inline]
pub fn ratio_term(to_miss: f64, to_hit: f64) -> f64 {
    let denom = to_miss + to_hit;
    if denom == 0.0 {
        0.0
    } else {
        (to_miss - to_hit) / denom
    }
}

/// Accumulated (not averaged) Relief weights over the columns of `data`.
pub fn relief_weights(data: &LabeledRows, origin: WeightOrigin) -> Result<WeightVector> {
    let rows = data.view();
    let neighbors = (0..rows.nrows())
        .into_par_iter()
        .map(|i| nearest_hit_miss(data, i))
        .collect::<Result<Vec<_>>>()?;

    let mut weights = vec![0.0; rows.ncols()];
    for (i, &(hit, miss)) in neighbors.iter().enumerate() {
        for (j, w) in weights.iter_mut().enumerate() {
            let x = rows[[i, j]];
            *w += ratio_term((x - rows[[miss, j]]).abs(), (x - rows[[hit, j]]).abs());
        }
    }
    Ok(WeightVector { weights, origin })
}
