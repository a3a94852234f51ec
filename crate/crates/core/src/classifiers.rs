//! Per-layer base classifiers: soft-margin linear SVM, K-nearest neighbors and
//! an extreme learning machine.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Label;
use crate::linalg::{cholesky, cholesky_solve, dot, row_gram, sq_dist};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    LinearSvm,
    Knn,
    Elm,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::LinearSvm => "svm",
            ModelKind::Knn => "knn",
            ModelKind::Elm => "elm",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svm" | "linear_svm" => Ok(ModelKind::LinearSvm),
            "knn" => Ok(ModelKind::Knn),
            "elm" => Ok(ModelKind::Elm),
            other => Err(Error::InvalidConfig(format!("unknown classifier {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub knn_k: usize,
    pub elm_hidden: usize,
    pub svm_c: f64,
    pub seed: u64,
    pub standardize: bool,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            kind: ModelKind::LinearSvm,
            knn_k: 3,
            elm_hidden: 50,
            svm_c: 1.0,
            seed: 0,
            standardize: true,
        }
    }
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.knn_k == 0 || self.knn_k % 2 == 0 {
            return Err(Error::InvalidConfig(format!("knn_k must be odd, got {}", self.knn_k)));
        }
        if self.elm_hidden == 0 {
            return Err(Error::InvalidConfig("elm_hidden must be at least 1".into()));
        }
        if !(self.svm_c > 0.0) {
            return Err(Error::InvalidConfig(format!("svm_c must be positive, got {}", self.svm_c)));
        }
        Ok(())
    }
}

pub const SVM_KKT_TOL: f64 = 1e-4;
const SVM_MAX_ITERS: usize = 2_000_000;
const ELM_RIDGE: f64 = 1e-6;
const TAU: f64 = 1e-12;

/// Z-score statistics from training rows. Zero-variance columns keep scale 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: ArrayView2<f64>) -> Self {
        let n = x.nrows() as f64;
        let mean = x.mean_axis(Axis(0)).expect("non-empty").to_vec();
        let std = x
            .columns()
            .into_iter()
            .zip(&mean)
            .map(|(col, &mu)| {
                let var = col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
                let s = var.sqrt();
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, std }
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        for mut row in out.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.std[j];
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    LinearSvm {
        weights: Array1<f64>,
        bias: f64,
        /// Dual objective (maximization form) sampled once per pass of `n`
        /// working-set updates, plus the final value.
        dual_objective: Vec<f64>,
        kkt_gap: f64,
        iterations: usize,
    },
    Knn {
        rows: Array2<f64>,
        labels: Vec<Label>,
        k: usize,
    },
    Elm {
        hidden_weights: Array2<f64>,
        hidden_bias: Array1<f64>,
        output: Array1<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub scaler: Option<Standardizer>,
    pub params: ModelParams,
    pub dim: usize,
    pub training_accuracy: f64,
}

fn check_labels(y: &[Label]) -> Result<()> {
    let ones = y.iter().filter(|&&l| l == 1).count();
    if ones == 0 || ones == y.len() {
        return Err(Error::SingleClass);
    }
    Ok(())
}

pub fn train(spec: &ModelSpec, x: ArrayView2<f64>, y: &[Label]) -> Result<TrainedModel> {
    spec.validate()?;
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            found: y.len(),
        });
    }
    if x.ncols() == 0 {
        return Err(Error::InvalidConfig("classifier needs at least one feature".into()));
    }
    check_labels(y)?;
    let scaler = spec.standardize.then(|| Standardizer::fit(x));
    let xs = match &scaler {
        Some(s) => s.transform(x),
        None => x.to_owned(),
    };
    let params = match spec.kind {
        ModelKind::LinearSvm => train_svm(xs.view(), y, spec.svm_c),
        ModelKind::Knn => ModelParams::Knn {
            rows: xs,
            labels: y.to_vec(),
            k: spec.knn_k,
        },
        ModelKind::Elm => train_elm(xs.view(), y, spec.elm_hidden, spec.seed)?,
    };
    let mut model = TrainedModel {
        kind: spec.kind,
        scaler,
        params,
        dim: x.ncols(),
        training_accuracy: 0.0,
    };
    let fitted = model.predict(x)?;
    let correct = fitted.iter().zip(y).filter(|(a, b)| a == b).count();
    model.training_accuracy = correct as f64 / y.len() as f64;
    Ok(model)
}

impl TrainedModel {
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<Label>> {
        if x.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.ncols(),
            });
        }
        let xs = match &self.scaler {
            Some(s) => s.transform(x),
            None => x.to_owned(),
        };
        Ok(xs.rows().into_iter().map(|row| self.predict_row(row)).collect())
    }

    fn predict_row(&self, row: ArrayView1<f64>) -> Label {
        match &self.params {
            ModelParams::LinearSvm { weights, bias, .. } => svm_label(dot(weights.view(), row) + bias),
            ModelParams::Knn { rows, labels, k } => knn_vote(rows.view(), labels, *k, row),
            ModelParams::Elm {
                hidden_weights,
                hidden_bias,
                output,
            } => {
                let h = hidden_activations(row.insert_axis(Axis(0)), hidden_weights.view(), hidden_bias.view());
                Label::from(dot(h.row(0), output.view()) > 0.5)
            }
        }
    }

    /// SVM decision value `w·x + b` (standardized space); `None` for other kinds.
    pub fn decision_value(&self, x: ArrayView1<f64>) -> Option<f64> {
        match &self.params {
            ModelParams::LinearSvm { weights, bias, .. } => {
                let row = x.insert_axis(Axis(0));
                let xs = match &self.scaler {
                    Some(s) => s.transform(row),
                    None => row.to_owned(),
                };
                Some(dot(weights.view(), xs.row(0)) + bias)
            }
            _ => None,
        }
    }
}

/// Class 1 only for a strictly positive decision value.
pub fn svm_label(decision: f64) -> Label {
    Label::from(decision > 0.0)
}

/// Majority label among the `k` nearest rows (distance ties: lower index).
/// An even split goes to the nearest neighbor's label.
pub fn knn_vote(rows: ArrayView2<f64>, labels: &[Label], k: usize, query: ArrayView1<f64>) -> Label {
    let mut order: Vec<(f64, usize)> = rows
        .rows()
        .into_iter()
        .enumerate()
        .map(|(i, r)| (sq_dist(r, query), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let k = k.min(order.len());
    let ones = order[..k].iter().filter(|&&(_, i)| labels[i] == 1).count();
    match (2 * ones).cmp(&k) {
        std::cmp::Ordering::Greater => 1,
        std::cmp::Ordering::Less => 0,
        std::cmp::Ordering::Equal => labels[order[0].1],
    }
}

/// SMO over the linear-kernel dual with second-order working-set selection.
///
/// Minimizes `½ αᵀQα − eᵀα` with `Q_ij = y_i y_j x_i·x_j`, `0 ≤ α ≤ C`,
/// `yᵀα = 0`, until the maximal KKT violation drops below [`SVM_KKT_TOL`].
fn train_svm(x: ArrayView2<f64>, labels: &[Label], c: f64) -> ModelParams {
    let n = x.nrows();
    let y: Vec<f64> = labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let k = row_gram(x);
    let q = |i: usize, j: usize| y[i] * y[j] * k[[i, j]];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];

    let dual = |alpha: &[f64], grad: &[f64]| -> f64 { -0.5 * alpha.iter().zip(grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>() };
    let mut dual_objective = vec![dual(&alpha, &grad)];
    let mut iterations = 0;
    let mut gap;

    loop {
        // i: maximal violator in the "up" set.
        let mut gmax = f64::NEG_INFINITY;
        let mut gi = None;
        for t in 0..n {
            let up = if y[t] > 0.0 { alpha[t] < c } else { alpha[t] > 0.0 };
            if up && -y[t] * grad[t] > gmax {
                gmax = -y[t] * grad[t];
                gi = Some(t);
            }
        }
        // j: second-order choice in the "low" set.
        let mut gmax2 = f64::NEG_INFINITY;
        let mut gj = None;
        let mut best_obj = f64::INFINITY;
        if let Some(i) = gi {
            for t in 0..n {
                let low = if y[t] > 0.0 { alpha[t] > 0.0 } else { alpha[t] < c };
                if !low {
                    continue;
                }
                let v = y[t] * grad[t];
                gmax2 = gmax2.max(v);
                let grad_diff = gmax + v;
                if grad_diff > 0.0 {
                    let mut quad = k[[i, i]] + k[[t, t]] - 2.0 * k[[i, t]];
                    if quad <= 0.0 {
                        quad = TAU;
                    }
                    let obj = -(grad_diff * grad_diff) / quad;
                    if obj < best_obj {
                        best_obj = obj;
                        gj = Some(t);
                    }
                }
            }
        }
        gap = gmax + gmax2;
        let (i, j) = match (gi, gj) {
            (Some(i), Some(j)) if gap >= SVM_KKT_TOL && iterations < SVM_MAX_ITERS => (i, j),
            _ => break,
        };
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = k[[i, i]] + k[[j, j]] + 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = k[[i, i]] + k[[j, j]] - 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
        if iterations % n == 0 {
            dual_objective.push(dual(&alpha, &grad));
        }
    }
    dual_objective.push(dual(&alpha, &grad));

    // Offset from free vectors, else the midpoint of the feasible interval.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut free_count) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        let at_upper = alpha[t] >= c;
        let at_lower = alpha[t] <= 0.0;
        if at_upper {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free_sum += yg;
            free_count += 1;
        }
    }
    let rho = if free_count > 0 { free_sum / free_count as f64 } else { (ub + lb) / 2.0 };

    let mut weights = Array1::<f64>::zeros(x.ncols());
    for t in 0..n {
        if alpha[t] != 0.0 {
            weights.scaled_add(alpha[t] * y[t], &x.row(t));
        }
    }
    ModelParams::LinearSvm {
        weights,
        bias: -rho,
        dual_objective,
        kkt_gap: gap.max(0.0),
        iterations,
    }
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

fn hidden_activations(x: ArrayView2<f64>, w: ArrayView2<f64>, b: ArrayView1<f64>) -> Array2<f64> {
    let mut h = x.dot(&w);
    for mut row in h.rows_mut() {
        for (v, bias) in row.iter_mut().zip(b.iter()) {
            *v = sigmoid(*v + bias);
        }
    }
    h
}

fn train_elm(x: ArrayView2<f64>, labels: &[Label], hidden: usize, seed: u64) -> Result<ModelParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = x.ncols();
    let hidden_weights = Array2::from_shape_fn((q, hidden), |_| rng.gen_range(-1.0..=1.0));
    let hidden_bias = Array1::from_shape_fn(hidden, |_| rng.gen_range(-1.0..=1.0));
    let h = hidden_activations(x, hidden_weights.view(), hidden_bias.view());
    let t = Array2::from_shape_fn((labels.len(), 1), |(i, _)| labels[i] as f64);

    // Ridge least squares in whichever of the primal/dual forms is smaller.
    let n = h.nrows();
    let mut ridge = ELM_RIDGE;
    let output = loop {
        let solved = if n >= hidden {
            let mut g = h.t().dot(&h);
            g.diag_mut().mapv_inplace(|v| v + ridge);
            cholesky(g.view()).map(|l| cholesky_solve(l.view(), h.t().dot(&t).view()))
        } else {
            let mut g = h.dot(&h.t());
            g.diag_mut().mapv_inplace(|v| v + ridge);
            cholesky(g.view()).map(|l| h.t().dot(&cholesky_solve(l.view(), t.view())))
        };
        match solved {
            Some(beta) => break beta.column(0).to_owned(),
            None if ridge < 1.0 => ridge *= 10.0,
            None => return Err(Error::InvalidConfig("ELM readout system is singular".into())),
        }
    };
    Ok(ModelParams::Elm {
        hidden_weights,
        hidden_bias,
        output,
    })
}
