//! Layered prototype space.
//!
//! Layer 0 is the dataset after the initial segment prune. Every further layer
//! optionally prunes `intra_prune` more positions and then clusters each
//! subject's `k` remaining segments into `k − 1` prototypes.

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{stitch, Dataset, Envelope, StitchedDataset};
use crate::fcm::{cluster, ClusterTrace, FcmConfig};
use crate::prune::{prune, remove_from_envelope, PruneRecord};
use crate::relief::{relief_weights, LabeledRows, WeightOrigin, WeightVector};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub index: usize,
    pub dataset: Dataset,
    pub per_subject_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerProvenance {
    pub layer: usize,
    /// Prune applied before this layer was formed; `None` when nothing was
    /// pruned and no weights were computed.
    pub prune: Option<PruneRecord>,
    /// One trace per subject (empty for layer 0).
    pub traces: Vec<ClusterTrace>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeepSpace {
    pub layers: Vec<Layer>,
    pub provenance: Vec<LayerProvenance>,
    /// Set when ragged envelopes were trimmed to a common count first.
    pub trimmed_to: Option<usize>,
}

impl DeepSpace {
    /// Segment positions removed before each layer, layer 0 first.
    pub fn removal_plan(&self) -> Vec<Vec<usize>> {
        self.provenance
            .iter()
            .map(|p| p.prune.as_ref().map(|r| r.removed_positions.clone()).unwrap_or_default())
            .collect()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.per_subject_count).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeepSpaceConfig {
    pub initial_cutoff: usize,
    pub deep_layers: usize,
    pub intra_prune: usize,
    pub fcm: FcmConfig,
}

/// Per-subject segment counts for every layer, or the error `build` would
/// raise for these shapes.
pub fn layer_counts(m: usize, initial_cutoff: usize, deep_layers: usize, intra_prune: usize) -> Result<Vec<usize>> {
    if initial_cutoff >= m {
        return Err(Error::CutoffExhaustsEnvelope {
            cutoff: initial_cutoff,
            segments: m,
        });
    }
    let mut counts = vec![m - initial_cutoff];
    for layer in 1..=deep_layers {
        let prev = *counts.last().unwrap();
        if prev < intra_prune + 2 {
            return Err(Error::LayerExhausted(format!(
                "layer {layer} needs at least {} segments per subject, layer {} has {prev}",
                intra_prune + 2,
                layer - 1
            )));
        }
        counts.push(prev - intra_prune - 1);
    }
    Ok(counts)
}

fn layer_seed(base: u64, layer: usize) -> u64 {
    base ^ (layer as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Clusters one envelope into `clusters` prototypes with the seed of `layer`.
pub fn cluster_envelope(env: &Envelope, clusters: usize, layer: usize, cfg: &FcmConfig) -> Result<(Envelope, ClusterTrace)> {
    let layer_cfg = FcmConfig {
        seed: layer_seed(cfg.seed, layer),
        ..cfg.clone()
    };
    let out = cluster(env.segments(), clusters, &layer_cfg)?;
    let order = slot_order(&out.memberships.u);
    Ok((env.with_segments(out.prototypes.p.select(Axis(0), &order))?, out.trace))
}

/// Prototype order by anchor segment (the source position with the largest
/// membership, lower position on ties), so that stitched slots line up
/// across subjects the way segment positions do.
pub fn slot_order(u: &Array2<f64>) -> Vec<usize> {
    let anchor = |j: usize| {
        let row = u.row(j);
        (0..row.len()).fold(0, |best, k| if row[k] > row[best] { k } else { best })
    };
    let mut order: Vec<usize> = (0..u.nrows()).collect();
    order.sort_by_key(|&j| (anchor(j), j));
    order
}

pub fn next_layer(layer: &Layer, intra_prune: usize, cfg: &FcmConfig) -> Result<(Layer, LayerProvenance)> {
    let next_index = layer.index + 1;
    if layer.per_subject_count < intra_prune + 2 {
        return Err(Error::LayerExhausted(format!(
            "layer {} has {} segments per subject; pruning {intra_prune} and clustering needs at least {}",
            layer.index,
            layer.per_subject_count,
            intra_prune + 2
        )));
    }
    let (source, record) = if intra_prune > 0 {
        let pruned = prune(&layer.dataset, intra_prune)?;
        let record = PruneRecord::from(&pruned);
        (pruned.dataset, Some(record))
    } else {
        (layer.dataset.clone(), None)
    };
    let k = layer.per_subject_count - intra_prune;
    let results = source
        .envelopes()
        .par_iter()
        .map(|env| cluster_envelope(env, k - 1, next_index, cfg))
        .collect::<Result<Vec<_>>>()?;
    let (envelopes, traces): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok((
        Layer {
            index: next_index,
            dataset: Dataset::new(envelopes)?,
            per_subject_count: k - 1,
        },
        LayerProvenance {
            layer: next_index,
            prune: record,
            traces,
        },
    ))
}

pub fn build(ds: &Dataset, cfg: &DeepSpaceConfig) -> Result<DeepSpace> {
    cfg.fcm.validate()?;
    let (min, max) = ds.segment_range();
    let (base, trimmed_to) = if min != max { (ds.trim_to_min(), Some(min)) } else { (ds.clone(), None) };
    layer_counts(min, cfg.initial_cutoff, cfg.deep_layers, cfg.intra_prune)?;

    let pruned = prune(&base, cfg.initial_cutoff)?;
    let mut layers = vec![Layer {
        index: 0,
        per_subject_count: min - cfg.initial_cutoff,
        dataset: pruned.dataset.clone(),
    }];
    let mut provenance = vec![LayerProvenance {
        layer: 0,
        prune: Some(PruneRecord::from(&pruned)),
        traces: Vec::new(),
    }];
    for _ in 0..cfg.deep_layers {
        let (layer, prov) = next_layer(layers.last().unwrap(), cfg.intra_prune, &cfg.fcm)?;
        layers.push(layer);
        provenance.push(prov);
    }
    Ok(DeepSpace {
        layers,
        provenance,
        trimmed_to,
    })
}

/// Runs one envelope through a frozen removal plan: trim, prune with the
/// plan's positions, cluster to one fewer prototype, repeat. Returns the
/// envelope at every layer.
pub fn traverse(env: &Envelope, plan: &[Vec<usize>], trimmed_to: Option<usize>, cfg: &FcmConfig) -> Result<(Vec<Envelope>, Vec<ClusterTrace>)> {
    let mut current = match trimmed_to {
        Some(m) if env.segment_count() > m => env.with_segments(env.segments().slice(ndarray::s![..m, ..]).to_owned())?,
        _ => env.clone(),
    };
    let mut out = Vec::with_capacity(plan.len());
    let mut traces = Vec::new();
    for (layer, removed) in plan.iter().enumerate() {
        if layer > 0 {
            let k = current.segment_count() - removed.len();
            if k < 2 {
                return Err(Error::LayerExhausted(format!("layer {layer} cannot cluster {k} segments")));
            }
        }
        if !removed.is_empty() {
            current = remove_from_envelope(&current, removed)?;
        }
        if layer > 0 {
            let (next, trace) = cluster_envelope(&current, current.segment_count() - 1, layer, cfg)?;
            current = next;
            traces.push(trace);
        }
        out.push(current.clone());
    }
    Ok((out, traces))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KeepRule {
    Fraction(f64),
    Count(usize),
}

impl Default for KeepRule {
    fn default() -> Self {
        KeepRule::Fraction(0.5)
    }
}

impl KeepRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KeepRule::Fraction(f) if !(f > 0.0 && f <= 1.0) => {
                Err(Error::InvalidConfig(format!("keep fraction must lie in (0, 1], got {f}")))
            }
            KeepRule::Count(0) => Err(Error::InvalidConfig("keep count must be at least 1".into())),
            _ => Ok(()),
        }
    }

    /// Number of features kept out of `total`.
    pub fn kept(&self, total: usize) -> usize {
        match *self {
            KeepRule::Fraction(f) => ((f * total as f64).ceil() as usize).clamp(1, total),
            KeepRule::Count(k) => k.clamp(1, total),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Ascending indices into the stitched axis.
    pub kept_feature_indices: Vec<usize>,
    pub weights: WeightVector,
    pub reduced: StitchedDataset,
}

pub fn select_features(stitched: &StitchedDataset, keep: KeepRule) -> Result<SelectionResult> {
    keep.validate()?;
    let ones = stitched.labels.iter().filter(|&&l| l == 1).count();
    if ones == 0 || ones == stitched.labels.len() {
        return Err(Error::SingleClass);
    }
    let rows = LabeledRows::new(stitched.rows.clone(), stitched.labels.clone())?;
    let weights = relief_weights(&rows, WeightOrigin::StitchedFeature)?;
    let mut kept: Vec<usize> = weights.descending().into_iter().take(keep.kept(weights.len())).collect();
    kept.sort_unstable();
    let reduced = StitchedDataset {
        rows: stitched.restrict(&kept),
        labels: stitched.labels.clone(),
        segments_per_subject: stitched.segments_per_subject,
        dim: stitched.dim,
    };
    Ok(SelectionResult {
        kept_feature_indices: kept,
        weights,
        reduced,
    })
}

/// Feature selection on every layer of a deep space.
pub fn select_per_layer(space: &DeepSpace, keep: KeepRule) -> Result<Vec<SelectionResult>> {
    space
        .layers
        .iter()
        .map(|l| select_features(&stitch(&l.dataset)?, keep))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dataset(n: usize, m: usize, d: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let envs = (0..n)
            .map(|i| {
                let label = (i % 2) as u8;
                let seg = Array2::from_shape_fn((m, d), |_| rng.gen_range(-1.0..1.0) + label as f64);
                Envelope::new(format!("s{i}"), label, seg).unwrap()
            })
            .collect();
        Dataset::new(envs).unwrap()
    }

    fn cfg(cutoff: usize, deep: usize) -> DeepSpaceConfig {
        DeepSpaceConfig {
            initial_cutoff: cutoff,
            deep_layers: deep,
            intra_prune: 0,
            fcm: FcmConfig::default(),
        }
    }

    #[test]
    fn counts_recursion() {
        assert_eq!(layer_counts(26, 6, 5, 0).unwrap(), vec![20, 19, 18, 17, 16, 15]);
        assert_eq!(layer_counts(10, 0, 2, 1).unwrap(), vec![10, 8, 6]);
        assert!(matches!(layer_counts(5, 0, 6, 0), Err(Error::LayerExhausted(_))));
        assert!(matches!(layer_counts(5, 5, 0, 0), Err(Error::CutoffExhaustsEnvelope { .. })));
    }

    #[test]
    fn build_shapes() {
        let ds = random_dataset(6, 8, 3, 1);
        let space = build(&ds, &cfg(2, 3)).unwrap();
        assert_eq!(space.counts(), vec![6, 5, 4, 3]);
        for layer in &space.layers {
            assert_eq!(layer.dataset.subject_ids(), ds.subject_ids());
            assert_eq!(layer.dataset.labels(), ds.labels());
            assert_eq!(layer.dataset.segment_count().unwrap(), layer.per_subject_count);
        }
        let only = build(&ds, &cfg(0, 0)).unwrap();
        assert_eq!(only.layers.len(), 1);
        assert_eq!(only.layers[0].dataset, ds);
    }

    #[test]
    fn exhausted_build_fails_up_front() {
        let ds = random_dataset(4, 5, 2, 2);
        assert!(matches!(build(&ds, &cfg(0, 6)), Err(Error::LayerExhausted(_))));
    }

    #[test]
    fn two_segments_collapse_to_one() {
        let ds = random_dataset(4, 2, 3, 3);
        let space = build(&ds, &cfg(0, 1)).unwrap();
        assert_eq!(space.counts(), vec![2, 1]);
        // C = 1: the coupled solve returns the envelope mean.
        for (orig, proto) in ds.envelopes().iter().zip(space.layers[1].dataset.envelopes()) {
            let mean = orig.segments().mean_axis(ndarray::Axis(0)).unwrap();
            for (a, b) in mean.iter().zip(proto.segments().row(0).iter()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn traverse_matches_build() {
        let ds = random_dataset(6, 7, 2, 4);
        let c = DeepSpaceConfig {
            intra_prune: 1,
            ..cfg(1, 2)
        };
        let space = build(&ds, &c).unwrap();
        let plan = space.removal_plan();
        for (s, env) in ds.envelopes().iter().enumerate() {
            let (layers, _) = traverse(env, &plan, space.trimmed_to, &c.fcm).unwrap();
            for (l, got) in layers.iter().enumerate() {
                assert_eq!(got, &space.layers[l].dataset.envelopes()[s]);
            }
        }
    }

    #[test]
    fn ragged_envelopes_are_trimmed() {
        let mut envs: Vec<Envelope> = random_dataset(4, 7, 2, 5).envelopes().to_vec();
        envs[1] = envs[1].with_segments(envs[1].segments().slice(ndarray::s![..6, ..]).to_owned()).unwrap();
        let ds = Dataset::new(envs).unwrap();
        let space = build(&ds, &cfg(0, 1)).unwrap();
        assert_eq!(space.trimmed_to, Some(6));
        assert_eq!(space.counts(), vec![6, 5]);
    }

    #[test]
    fn keep_rules() {
        let ds = random_dataset(6, 3, 2, 6);
        let st = stitch(&ds).unwrap();
        let all = select_features(&st, KeepRule::Fraction(1.0)).unwrap();
        assert_eq!(all.reduced.rows, st.rows);
        assert_eq!(all.kept_feature_indices, (0..6).collect::<Vec<_>>());
        let one = select_features(&st, KeepRule::Count(1)).unwrap();
        assert_eq!(one.reduced.rows.dim(), (6, 1));
        assert!(KeepRule::Fraction(0.0).validate().is_err());
        assert!(KeepRule::Count(0).validate().is_err());
        assert_eq!(KeepRule::Fraction(0.5).kept(7), 4);
    }

    #[test]
    fn label_column_ranks_first() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 12;
        let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let rows = Array2::from_shape_fn((n, 5), |(i, j)| if j == 3 { labels[i] as f64 } else { rng.gen_range(0.0..1.0) });
        let st = StitchedDataset {
            rows,
            labels,
            segments_per_subject: 1,
            dim: 5,
        };
        let sel = select_features(&st, KeepRule::Count(1)).unwrap();
        assert_eq!(sel.kept_feature_indices, vec![3]);
        assert_eq!(sel.weights.descending()[0], 3);
    }
}
