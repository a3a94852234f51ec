//! Seeded synthetic envelopes with known signal and noise segment positions.
//!
//! A subject's segment at a signal position is its class mean plus a
//! subject-level offset plus per-segment noise. A noise position looks the
//! same except that its mean shift follows a per-subject confound sign drawn
//! independently of the label, so it carries no class information.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{Dataset, Envelope};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub subjects_per_class: usize,
    pub segments: usize,
    pub features: usize,
    pub signal_positions: usize,
    /// Features whose class means differ; the rest are shared.
    pub informative_features: usize,
    /// Half the distance between class means on an informative feature.
    pub class_shift: f64,
    pub subject_std: f64,
    pub segment_std: f64,
    /// Mean shift of noise positions on informative features (sign from the confound).
    pub confound_shift: f64,
    pub noise_std: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            subjects_per_class: 20,
            segments: 20,
            features: 10,
            signal_positions: 12,
            informative_features: 4,
            class_shift: 0.8,
            subject_std: 0.3,
            segment_std: 1.0,
            confound_shift: 0.8,
            noise_std: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub dataset: Dataset,
    /// 0-based segment positions that carry class signal, ascending.
    pub signal_positions: Vec<usize>,
}

fn normal(std: f64) -> Result<Normal<f64>> {
    Normal::new(0.0, std).map_err(|e| Error::InvalidConfig(format!("synthetic std {std}: {e}")))
}

/// Subjects alternate class 0, 1, 0, 1, ... and are named `s01`, `s02`, ...
pub fn generate(params: &SynthParams, seed: u64) -> Result<SynthDataset> {
    let p = params;
    if p.signal_positions > p.segments || p.informative_features > p.features || p.subjects_per_class == 0 {
        return Err(Error::InvalidConfig("inconsistent synthetic shape".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions: Vec<usize> = (0..p.segments).collect();
    positions.shuffle(&mut rng);
    let mut signal: Vec<usize> = positions[..p.signal_positions].to_vec();
    signal.sort_unstable();
    let is_signal: Vec<bool> = (0..p.segments).map(|s| signal.binary_search(&s).is_ok()).collect();

    let (subject, segment, noise) = (normal(p.subject_std)?, normal(p.segment_std)?, normal(p.noise_std)?);
    let n = 2 * p.subjects_per_class;
    let width = (n + 1).to_string().len().max(2);
    let mut envelopes = Vec::with_capacity(n);
    for i in 0..n {
        let label = (i % 2) as u8;
        let sign = if label == 1 { 1.0 } else { -1.0 };
        let confound = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let offset: Vec<f64> = (0..p.features).map(|_| subject.sample(&mut rng)).collect();
        let mut x = Array2::zeros((p.segments, p.features));
        for s in 0..p.segments {
            for f in 0..p.features {
                let informative = f < p.informative_features;
                x[[s, f]] = if is_signal[s] {
                    let mean = if informative { sign * p.class_shift } else { 0.0 };
                    mean + offset[f] + segment.sample(&mut rng)
                } else {
                    let mean = if informative { confound * p.confound_shift } else { 0.0 };
                    mean + noise.sample(&mut rng)
                };
            }
        }
        envelopes.push(Envelope::new(format!("s{:0width$}", i + 1), label, x)?);
    }
    Ok(SynthDataset {
        dataset: Dataset::new(envelopes)?,
        signal_positions: signal,
    })
}
