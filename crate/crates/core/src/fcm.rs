//! Fuzzy c-means with a linear-kernel MMD penalty between the clustered
//! segments and the prototypes.
//!
//! The objective over memberships `U` (clusters × samples) and prototypes `P`
//! is
//!
//! ```text
//! F(U, P) = Σ_i Σ_k u_ik^m ‖s_k − p_i‖² + MMD²(S, P)
//! ```
//!
//! with columns of `U` summing to one. Under a linear kernel the MMD term is
//! `‖mean(S) − mean(P)‖²`, which does not depend on `U`, so the membership step
//! is the ordinary FCM closed form. Setting the gradient in `P` to zero gives
//! the coupled linear system `A P = B` with
//!
//! ```text
//! A_ii = Σ_k u_ik^m + 1/C²      A_ij = 1/C²  (i ≠ j)
//! B_i  = Σ_k (u_ik^m + 1/(N C)) s_k
//! ```
//!
//! `A` is a positive diagonal plus a rank-one positive term and is solved by
//! Cholesky. Both steps are exact block minimizers, so the objective never
//! increases across alternations.

use ndarray::{Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{cholesky, cholesky_solve, dot, sq_dist};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FcmConfig {
    /// Membership exponent, > 1.
    pub fuzzifier: f64,
    pub max_iters: usize,
    /// Stop once the objective changes by less than this between alternations.
    pub tol: f64,
    pub seed: u64,
    /// Squared distances below this snap a sample to its center.
    pub zero_dist_eps: f64,
    /// When false the MMD coupling is dropped and the center update reduces to
    /// classic FCM.
    pub mmd_penalty: bool,
}

impl Default for FcmConfig {
    fn default() -> Self {
        FcmConfig {
            fuzzifier: 2.0,
            max_iters: 300,
            tol: 1e-6,
            seed: 0,
            zero_dist_eps: 1e-12,
            mmd_penalty: true,
        }
    }
}

impl FcmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fuzzifier > 1.0) || !self.fuzzifier.is_finite() {
            return Err(Error::InvalidConfig(format!("fuzzifier must be > 1, got {}", self.fuzzifier)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be positive".into()));
        }
        if !(self.zero_dist_eps > 0.0) {
            return Err(Error::InvalidConfig("zero_dist_eps must be positive".into()));
        }
        Ok(())
    }
}

/// Fuzzy assignments, clusters × samples; every column sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipMatrix {
    pub u: Array2<f64>,
}

impl MembershipMatrix {
    pub fn clusters(&self) -> usize {
        self.u.nrows()
    }

    pub fn samples(&self) -> usize {
        self.u.ncols()
    }

    /// Σ_k u_ik^m per cluster.
    pub fn masses(&self, fuzzifier: f64) -> Vec<f64> {
        self.u
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|&v| v.powf(fuzzifier)).sum())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prototypes {
    pub p: Array2<f64>,
    /// Number of segments the prototypes were computed from.
    pub source_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterTrace {
    pub objective_per_iter: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// The coupled center system `A P = B`.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterSystem {
    pub a: Array2<f64>,
    pub b: Array2<f64>,
    pub masses: Vec<f64>,
    pub source_count: usize,
}

/// `v^m`, exact multiplication for the default fuzzifier 2.
#[inline]
fn fuzzy_pow(v: f64, m: f64) -> f64 {
    if m == 2.0 {
        v * v
    } else {
        v.powf(m)
    }
}

pub fn memberships(samples: ArrayView2<f64>, centers: ArrayView2<f64>, cfg: &FcmConfig) -> MembershipMatrix {
    let c = centers.nrows();
    let n = samples.nrows();
    let exponent = 1.0 / (cfg.fuzzifier - 1.0);
    let mut u = Array2::<f64>::zeros((c, n));
    let mut d2 = vec![0.0; c];
    for k in 0..n {
        let sk = samples.row(k);
        for (i, slot) in d2.iter_mut().enumerate() {
            *slot = sq_dist(sk, centers.row(i));
        }
        // nearest center, lowest index on ties
        let (nearest, dmin) = d2
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (i, &v)| if v < best.1 { (i, v) } else { best });
        if dmin < cfg.zero_dist_eps {
            u[[nearest, k]] = 1.0;
            continue;
        }
        // u_ik ∝ d_ik^(-2/(m-1)); scaled by the nearest distance to stay in (0, 1].
        let mut total = 0.0;
        for (i, &v) in d2.iter().enumerate() {
            let ratio = dmin / v;
            let w = if exponent == 1.0 { ratio } else { ratio.powf(exponent) };
            u[[i, k]] = w;
            total += w;
        }
        u.column_mut(k).mapv_inplace(|w| w / total);
    }
    MembershipMatrix { u }
}

pub fn center_system(u: &MembershipMatrix, samples: ArrayView2<f64>, cfg: &FcmConfig) -> CenterSystem {
    let c = u.clusters();
    let n = samples.nrows();
    let d = samples.ncols();
    let (coupling, source_share) = if cfg.mmd_penalty {
        (1.0 / (c * c) as f64, 1.0 / (n * c) as f64)
    } else {
        (0.0, 0.0)
    };
    let um = u.u.mapv(|v| fuzzy_pow(v, cfg.fuzzifier));
    let masses: Vec<f64> = um.sum_axis(Axis(1)).to_vec();

    let mut a = Array2::from_elem((c, c), coupling);
    for i in 0..c {
        a[[i, i]] = masses[i] + coupling;
    }
    let mut b = Array2::<f64>::zeros((c, d));
    for i in 0..c {
        let mut bi = b.row_mut(i);
        for k in 0..n {
            let w = um[[i, k]] + source_share;
            bi.scaled_add(w, &samples.row(k));
        }
    }
    CenterSystem {
        a,
        b,
        masses,
        source_count: n,
    }
}

pub fn solve_centers(sys: &CenterSystem) -> Result<Prototypes> {
    if let Some((i, m)) = sys.masses.iter().enumerate().find(|(_, &m)| !(m > 0.0)) {
        return Err(Error::DegenerateClusterMass(format!("cluster {i} has mass {m}")));
    }
    let l = cholesky(sys.a.view())
        .ok_or_else(|| Error::DegenerateClusterMass("center system is not positive definite".into()))?;
    Ok(Prototypes {
        p: cholesky_solve(l.view(), sys.b.view()),
        source_count: sys.source_count,
    })
}

/// Per-row norm of the gradient of the objective with respect to each
/// prototype; zero at the exact center solution.
pub fn stationarity_residual(
    u: &MembershipMatrix,
    samples: ArrayView2<f64>,
    p: ArrayView2<f64>,
    cfg: &FcmConfig,
) -> Vec<f64> {
    let c = p.nrows();
    let n = samples.nrows();
    let sample_sum = samples.sum_axis(Axis(0));
    let proto_sum = p.sum_axis(Axis(0));
    (0..c)
        .map(|j| {
            let mut g = ndarray::Array1::<f64>::zeros(p.ncols());
            for k in 0..n {
                let w = fuzzy_pow(u.u[[j, k]], cfg.fuzzifier);
                let diff = &samples.row(k) - &p.row(j);
                g.scaled_add(-2.0 * w, &diff);
            }
            if cfg.mmd_penalty {
                g.scaled_add(-2.0 / (n * c) as f64, &sample_sum);
                g.scaled_add(2.0 / (c * c) as f64, &proto_sum);
            }
            g.iter().map(|v| v * v).sum::<f64>().sqrt()
        })
        .collect()
}

/// Linear-kernel MMD², computed as the squared gap between the set means.
pub fn linear_mmd(x: ArrayView2<f64>, y: ArrayView2<f64>) -> f64 {
    let gap = x.mean_axis(Axis(0)).expect("x non-empty") - y.mean_axis(Axis(0)).expect("y non-empty");
    gap.iter().map(|v| v * v).sum()
}

/// Linear-kernel MMD² from the three kernel double sums.
pub fn linear_mmd_gram(x: ArrayView2<f64>, y: ArrayView2<f64>) -> f64 {
    let kernel_sum = |a: ArrayView2<f64>, b: ArrayView2<f64>| -> f64 {
        let mut s = 0.0;
        for ra in a.rows() {
            for rb in b.rows() {
                s += dot(ra, rb);
            }
        }
        s
    };
    let (na, nb) = (x.nrows() as f64, y.nrows() as f64);
    let v = kernel_sum(x, x) / (na * na) - 2.0 * kernel_sum(x, y) / (na * nb) + kernel_sum(y, y) / (nb * nb);
    v.abs()
}

/// Linear-kernel MMD² as `tr(K L)`, where `K` is the joint Gram matrix of
/// `[X; Y]` and `L` holds `1/a²`, `1/b²` on the diagonal blocks and `−1/(ab)`
/// on the cross blocks.
pub fn linear_mmd_trace(x: ArrayView2<f64>, y: ArrayView2<f64>) -> f64 {
    let (a, b) = (x.nrows(), y.nrows());
    let joint = ndarray::concatenate(Axis(0), &[x, y]).expect("same width");
    let k = crate::linalg::row_gram(joint.view());
    let weight = |i: usize, j: usize| -> f64 {
        match (i < a, j < a) {
            (true, true) => 1.0 / (a * a) as f64,
            (false, false) => 1.0 / (b * b) as f64,
            _ => -1.0 / (a * b) as f64,
        }
    };
    let n = a + b;
    let mut tr = 0.0;
    for i in 0..n {
        for j in 0..n {
            tr += k[[i, j]] * weight(j, i);
        }
    }
    tr.abs()
}

pub fn objective(samples: ArrayView2<f64>, u: &MembershipMatrix, p: ArrayView2<f64>, cfg: &FcmConfig) -> f64 {
    let mut fit = 0.0;
    for i in 0..p.nrows() {
        for k in 0..samples.nrows() {
            fit += fuzzy_pow(u.u[[i, k]], cfg.fuzzifier) * sq_dist(samples.row(k), p.row(i));
        }
    }
    if cfg.mmd_penalty {
        fit + linear_mmd(samples, p)
    } else {
        fit
    }
}

/// Seeded farthest-point selection of `c` distinct sample indices.
pub fn farthest_point_init(samples: ArrayView2<f64>, c: usize, seed: u64) -> Vec<usize> {
    let n = samples.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![rng.gen_range(0..n)];
    let mut min_d2: Vec<f64> = (0..n).map(|k| sq_dist(samples.row(k), samples.row(chosen[0]))).collect();
    let mut taken = vec![false; n];
    taken[chosen[0]] = true;
    while chosen.len() < c {
        let mut best: Option<(usize, f64)> = None;
        for k in 0..n {
            if taken[k] {
                continue;
            }
            if best.map_or(true, |(_, d)| min_d2[k] > d) {
                best = Some((k, min_d2[k]));
            }
        }
        let (next, _) = best.expect("c <= n");
        taken[next] = true;
        chosen.push(next);
        for k in 0..n {
            min_d2[k] = min_d2[k].min(sq_dist(samples.row(k), samples.row(next)));
        }
    }
    chosen
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterOutcome {
    pub prototypes: Prototypes,
    pub memberships: MembershipMatrix,
    pub trace: ClusterTrace,
}

/// Reconstructs `samples` into `c` prototypes by alternating the membership
/// closed form and the coupled center solve.
pub fn cluster(samples: ArrayView2<f64>, c: usize, cfg: &FcmConfig) -> Result<ClusterOutcome> {
    cfg.validate()?;
    let n = samples.nrows();
    if c == 0 || c > n {
        return Err(Error::TooManyClusters { clusters: c, samples: n });
    }
    let init = farthest_point_init(samples, c, cfg.seed);
    let mut centers = samples.select(Axis(0), &init);

    let mut objective_per_iter = Vec::new();
    let mut converged = false;
    let mut u = memberships(samples, centers.view(), cfg);
    for _ in 0..cfg.max_iters {
        let sys = center_system(&u, samples, cfg);
        centers = solve_centers(&sys)?.p;
        let obj = objective(samples, &u, centers.view(), cfg);
        let done = objective_per_iter
            .last()
            .is_some_and(|prev: &f64| (prev - obj).abs() < cfg.tol);
        objective_per_iter.push(obj);
        u = memberships(samples, centers.view(), cfg);
        if done {
            converged = true;
            break;
        }
    }
    Ok(ClusterOutcome {
        prototypes: Prototypes {
            p: centers,
            source_count: n,
        },
        memberships: u,
        trace: ClusterTrace {
            iterations: objective_per_iter.len(),
            objective_per_iter,
            converged,
        },
    })
}
