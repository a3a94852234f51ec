//! Global segment-position pruning.
//!
//! Each (subject, feature) pair becomes one row whose columns are the subject's
//! segment positions, labeled with the subject's class. Relief over those rows
//! scores every segment position; the lowest-scoring positions are removed from
//! every envelope.

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Envelope};
use crate::relief::{relief_weights, LabeledRows, WeightOrigin, WeightVector};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PruneResult {
    pub dataset: Dataset,
    /// Removed segment positions, ascending.
    pub removed_positions: Vec<usize>,
    pub weights: WeightVector,
}

/// Transposed-subject rows used to weight segment positions (`n·d` rows of
/// length `m`).
pub fn segment_rows(ds: &Dataset) -> Result<LabeledRows> {
    let m = ds.segment_count()?;
    let d = ds.dim();
    let mut rows = Array2::zeros((ds.len() * d, m));
    let mut labels = Vec::with_capacity(ds.len() * d);
    for (l, env) in ds.envelopes().iter().enumerate() {
        let t = env.segments().reversed_axes();
        rows.slice_mut(ndarray::s![l * d..(l + 1) * d, ..]).assign(&t);
        labels.extend(std::iter::repeat(env.label()).take(d));
    }
    LabeledRows::new(rows, labels)
}

pub fn segment_weights(ds: &Dataset) -> Result<WeightVector> {
    ds.segment_count()?;
    if !ds.has_both_classes() {
        return Err(Error::SingleClass);
    }
    relief_weights(&segment_rows(ds)?, WeightOrigin::Segment)
}

/// The `cutoff` lowest-weight positions (ties: lower index first), ascending.
pub fn lowest_positions(weights: &WeightVector, cutoff: usize) -> Vec<usize> {
    let mut removed: Vec<usize> = weights.ascending().into_iter().take(cutoff).collect();
    removed.sort_unstable();
    removed
}

/// Removes the given segment positions from every envelope, keeping the
/// relative order of the rest.
pub fn remove_positions(ds: &Dataset, removed: &[usize]) -> Result<Dataset> {
    if removed.is_empty() {
        return Ok(ds.clone());
    }
    ds.map_envelopes(|env| remove_from_envelope(env, removed))
}

pub fn remove_from_envelope(env: &Envelope, removed: &[usize]) -> Result<Envelope> {
    let keep: Vec<usize> = (0..env.segment_count())
        .filter(|p| removed.binary_search(p).is_err())
        .collect();
    if keep.is_empty() {
        return Err(Error::CutoffExhaustsEnvelope {
            cutoff: removed.len(),
            segments: env.segment_count(),
        });
    }
    env.with_segments(env.segments().select(Axis(0), &keep))
}

pub fn prune(ds: &Dataset, cutoff: usize) -> Result<PruneResult> {
    let m = ds.segment_count()?;
    if cutoff >= m {
        return Err(Error::CutoffExhaustsEnvelope { cutoff, segments: m });
    }
    let weights = segment_weights(ds)?;
    let removed_positions = lowest_positions(&weights, cutoff);
    Ok(PruneResult {
        dataset: remove_positions(ds, &removed_positions)?,
        removed_positions,
        weights,
    })
}

/// Removal record for one pruning stage, as exported in run provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneRecord {
    pub removed_positions: Vec<usize>,
    pub weights: Vec<f64>,
}

impl From<&PruneResult> for PruneRecord {
    fn from(p: &PruneResult) -> Self {
        PruneRecord {
            removed_positions: p.removed_positions.clone(),
            weights: p.weights.weights.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn two_subject() -> Dataset {
        Dataset::new(vec![
            Envelope::new("a", 0, array![[0.0, 1.0], [0.1, 1.1], [5.0, 2.0]]).unwrap(),
            Envelope::new("b", 1, array![[1.0, 2.0], [1.1, 2.1], [4.0, 7.0]]).unwrap(),
            Envelope::new("c", 0, array![[0.05, 1.05], [0.0, 1.2], [9.0, 0.0]]).unwrap(),
            Envelope::new("d", 1, array![[0.95, 2.2], [1.2, 1.9], [3.0, 3.0]]).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn rows_are_transposed_subjects() {
        let ds = two_subject();
        let rows = segment_rows(&ds).unwrap();
        assert_eq!(rows.rows.dim(), (8, 3));
        assert_eq!(rows.rows.row(0).to_vec(), vec![0.0, 0.1, 5.0]);
        assert_eq!(rows.rows.row(1).to_vec(), vec![1.0, 1.1, 2.0]);
        assert_eq!(rows.labels, vec![0, 0, 1, 1, 0, 0, 1, 1]);
    }

    #[test]
    fn cutoff_zero_is_identity() {
        let ds = two_subject();
        let p = prune(&ds, 0).unwrap();
        assert_eq!(p.dataset, ds);
        assert!(p.removed_positions.is_empty());
    }

    #[test]
    fn two_smallest_removed() {
        let w = WeightVector {
            weights: vec![3.0, 1.0, 2.0],
            origin: WeightOrigin::Segment,
        };
        assert_eq!(lowest_positions(&w, 2), vec![1, 2]);
    }

    #[test]
    fn exhausting_cutoff() {
        let ds = two_subject();
        let err = prune(&ds, 3).unwrap_err();
        assert!(err.to_string().starts_with("cutoff exhausts envelope"));
    }

    #[test]
    fn single_class_rejected() {
        let ds = Dataset::new(vec![Envelope::new("a", 1, array![[1.0], [2.0]]).unwrap()]).unwrap();
        assert!(matches!(segment_weights(&ds), Err(Error::SingleClass)));
    }

    #[test]
    fn noisy_position_is_pruned() {
        let ds = two_subject();
        let p = prune(&ds, 1).unwrap();
        assert_eq!(p.removed_positions, vec![2]);
        assert_eq!(p.dataset.segment_count().unwrap(), 2);
        assert_eq!(p.dataset.labels(), ds.labels());
    }
}
