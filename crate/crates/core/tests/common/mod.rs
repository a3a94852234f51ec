//! Independent reference implementations and fixtures shared by the
//! integration tests. Nothing here calls into the library's numerics.
#![allow(dead_code)]

use deepenv_core::config::RunConfig;
use deepenv_core::synth::{generate, SynthParams};
use deepenv_core::Dataset;
use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(lo..hi))
}

pub fn to_rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn plain_sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        s += (a[k] - b[k]) * (a[k] - b[k]);
    }
    s
}

/// Naive Relief: full scan for each row's nearest hit and miss (strictly
/// smaller distance wins, so ties keep the lowest index), then one ratio term
/// per row and column, accumulated in row order.
pub fn brute_relief(rows: &[Vec<f64>], labels: &[u8]) -> Vec<f64> {
    let cols = rows[0].len();
    let mut w = vec![0.0; cols];
    for i in 0..rows.len() {
        let (mut hit, mut miss) = (usize::MAX, usize::MAX);
        let (mut dh, mut dm) = (f64::INFINITY, f64::INFINITY);
        for k in 0..rows.len() {
            if k == i {
                continue;
            }
            let d = plain_sq_dist(&rows[i], &rows[k]);
            if labels[k] == labels[i] {
                if d < dh {
                    dh = d;
                    hit = k;
                }
            } else if d < dm {
                dm = d;
                miss = k;
            }
        }
        for j in 0..cols {
            let a = (rows[i][j] - rows[miss][j]).abs();
            let b = (rows[i][j] - rows[hit][j]).abs();
            w[j] += if a + b == 0.0 { 0.0 } else { (a - b) / (a + b) };
        }
    }
    w
}

fn soft(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

/// Accelerated proximal gradient on `‖y − Eβ‖² + λ‖β‖₁`, run until an
/// iterate moves less than `tol`.
pub fn prox_lasso(e: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, tol: f64) -> DVector<f64> {
    let gram = e.transpose() * e;
    let lipschitz = 2.0 * gram.symmetric_eigenvalues().max();
    let step = 1.0 / lipschitz;
    let ety = e.transpose() * y;
    let mut beta = DVector::zeros(e.ncols());
    let mut z = beta.clone();
    let mut t = 1.0f64;
    for _ in 0..20_000_000 {
        let grad = 2.0 * (&gram * &z - &ety);
        let next = (&z - step * grad).map(|v| soft(v, lambda * step));
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let moved = (&next - &beta).amax();
        // restart momentum when it stops helping
        let restart = (&z - &next).dot(&(&next - &beta)) > 0.0;
        z = if restart {
            t = 1.0;
            next.clone()
        } else {
            &next + ((t - 1.0) / t_next) * (&next - &beta)
        };
        if !restart {
            t = t_next;
        }
        beta = next;
        if moved < tol {
            break;
        }
    }
    beta
}

/// Golden-section minimizer of a unimodal function on `[a, b]`.
pub fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    while (b - a).abs() > tol {
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    (a + b) / 2.0
}

/// Clustering objective written out with plain loops: fuzzy fit plus the
/// squared gap between the sample mean and the prototype mean.
pub fn plain_objective(samples: &[Vec<f64>], u: &[Vec<f64>], p: &[Vec<f64>], m: f64, mmd: bool) -> f64 {
    let d = samples[0].len();
    let mut fit = 0.0;
    for i in 0..p.len() {
        for k in 0..samples.len() {
            fit += u[i][k].powf(m) * plain_sq_dist(&samples[k], &p[i]);
        }
    }
    if !mmd {
        return fit;
    }
    let mut gap = 0.0;
    for f in 0..d {
        let ms = samples.iter().map(|s| s[f]).sum::<f64>() / samples.len() as f64;
        let mp = p.iter().map(|s| s[f]).sum::<f64>() / p.len() as f64;
        gap += (ms - mp) * (ms - mp);
    }
    fit + gap
}

/// A small synthetic problem and a config sized for it; fast enough to run the
/// whole pipeline many times.
pub fn small_problem(seed: u64) -> (Dataset, RunConfig) {
    let params = SynthParams {
        subjects_per_class: 6,
        segments: 8,
        features: 4,
        signal_positions: 5,
        informative_features: 2,
        class_shift: 1.0,
        ..SynthParams::default()
    };
    let ds = generate(&params, seed).unwrap().dataset;
    let cfg = RunConfig {
        initial_cutoff: 2,
        deep_layers: 2,
        ..RunConfig::preset("synth").unwrap()
    };
    (ds, cfg)
}
