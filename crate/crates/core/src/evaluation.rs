//! Cross-validation, metrics and the end-to-end experiment runner.
//!
//! Test subjects traverse the deep space with segment-prune positions and
//! stitched-feature indices frozen from the training subjects of their fold.
//! Clustering a test envelope only uses that envelope's own segments and no
//! labels, so it runs exactly as it does for training envelopes.
//!
//! Strict fusion fits each fold's layer weights on cross-validated labels of
//! that fold's training subjects (see [`strict_fusion_weights`]); faithful
//! fusion fits one weight vector on the whole cross-validated label matrix.

use std::collections::BTreeMap;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{train, ModelSpec, Standardizer, TrainedModel};
use crate::config::{CvScheme, FusionMode, RunConfig};
use crate::dataset::{stitch, Dataset, Envelope, Label};
use crate::deep_space::{build, select_per_layer, traverse, LayerProvenance};
use crate::fcm::FcmConfig;
use crate::fusion::{fit_weights, fit_weights_grid, fuse, layer_names, FusionWeights, LabelMatrix};
use crate::{Error, Result};

const MAX_REDRAWS: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    /// Indices into the dataset, ascending.
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Folds {
    pub folds: Vec<Fold>,
    pub scheme: CvScheme,
    /// Seed that produced the split (after any redraws).
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldParams {
    pub holdout_fraction: f64,
    pub k: usize,
    pub seed: u64,
}

fn class_lists(labels: &[Label], seed: u64) -> [Vec<usize>; 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lists = [Vec::new(), Vec::new()];
    for (i, &l) in labels.iter().enumerate() {
        lists[l as usize].push(i);
    }
    for list in lists.iter_mut() {
        list.shuffle(&mut rng);
    }
    lists
}

fn both_classes(labels: &[Label], idx: &[usize]) -> bool {
    let ones = idx.iter().filter(|&&i| labels[i] == 1).count();
    ones > 0 && ones < idx.len()
}

fn complement(n: usize, test: &[usize]) -> Vec<usize> {
    (0..n).filter(|i| test.binary_search(i).is_err()).collect()
}

fn holdout_split(labels: &[Label], fraction: f64, seed: u64) -> Fold {
    let n = labels.len();
    let n_test = (fraction * n as f64).floor() as usize;
    let lists = class_lists(labels, seed);
    // proportional quotas, largest remainder (class 0 first on ties)
    let exact: Vec<f64> = lists.iter().map(|l| n_test as f64 * l.len() as f64 / n as f64).collect();
    let mut quota: Vec<usize> = exact.iter().map(|q| q.floor() as usize).collect();
    let mut left = n_test - quota.iter().sum::<usize>();
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    for &c in order.iter().cycle() {
        if left == 0 {
            break;
        }
        if quota[c] < lists[c].len() {
            quota[c] += 1;
            left -= 1;
        }
    }
    let mut test: Vec<usize> = lists.iter().zip(&quota).flat_map(|(l, &q)| l[..q].iter().copied()).collect();
    test.sort_unstable();
    Fold {
        train: complement(n, &test),
        test,
    }
}

fn kfold_split(labels: &[Label], k: usize, seed: u64) -> Vec<Fold> {
    let n = labels.len();
    let lists = class_lists(labels, seed);
    let mut tests = vec![Vec::new(); k];
    for (pos, &i) in lists[0].iter().chain(lists[1].iter()).enumerate() {
        tests[pos % k].push(i);
    }
    tests
        .into_iter()
        .map(|mut test| {
            test.sort_unstable();
            Fold {
                train: complement(n, &test),
                test,
            }
        })
        .collect()
}

pub fn make_folds(ds: &Dataset, scheme: CvScheme, params: FoldParams) -> Result<Folds> {
    let n = ds.len();
    if n < 2 {
        return Err(Error::ClassPresence(format!("need at least 2 subjects, have {n}")));
    }
    let labels = ds.labels();
    let valid = |folds: &[Fold]| folds.iter().all(|f| !f.test.is_empty() && both_classes(&labels, &f.train));
    match scheme {
        CvScheme::Loso => {
            let folds: Vec<Fold> = (0..n)
                .map(|i| Fold {
                    train: complement(n, &[i]),
                    test: vec![i],
                })
                .collect();
            if !valid(&folds) {
                return Err(Error::ClassPresence("a leave-one-out training fold lacks a class".into()));
            }
            Ok(Folds {
                folds,
                scheme,
                seed: params.seed,
            })
        }
        CvScheme::Holdout | CvScheme::Kfold => {
            if scheme == CvScheme::Kfold && (params.k < 2 || params.k > n) {
                return Err(Error::InvalidConfig(format!("k = {} folds for {n} subjects", params.k)));
            }
            for attempt in 0..MAX_REDRAWS {
                let seed = params.seed.wrapping_add(attempt);
                let folds = match scheme {
                    CvScheme::Holdout => vec![holdout_split(&labels, params.holdout_fraction, seed)],
                    _ => kfold_split(&labels, params.k, seed),
                };
                if valid(&folds) {
                    return Ok(Folds { folds, scheme, seed });
                }
            }
            Err(Error::ClassPresence(format!(
                "no {} split with both classes in every training fold after {MAX_REDRAWS} draws",
                scheme.name()
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn from_predictions(actual: &[Label], predicted: &[Label]) -> Self {
        let mut c = ConfusionCounts::default();
        for (&a, &p) in actual.iter().zip(predicted) {
            match (a, p) {
                (1, 1) => c.tp += 1,
                (0, 1) => c.fp += 1,
                (0, 0) => c.tn += 1,
                _ => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// A percentage held as an exact ratio so it can be printed with half-up
/// rounding independent of binary floating point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    /// 0 when the denominator is 0.
    pub fn percent(&self) -> f64 {
        if self.den == 0 {
            0.0
        } else {
            100.0 * self.num as f64 / self.den as f64
        }
    }

    /// Percentage with two decimals, rounded half up.
    pub fn format_percent(&self) -> String {
        if self.den == 0 {
            return "0.00".to_string();
        }
        let (num, den) = (self.num as u128, self.den as u128);
        let hundredths = (2 * 10_000 * num + den) / (2 * den);
        format!("{}.{:02}", hundredths / 100, hundredths % 100)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub counts: ConfusionCounts,
    pub acc: Ratio,
    pub sen: Ratio,
    pub spe: Ratio,
    pub mcc: f64,
    /// Names of metrics whose denominator was zero (reported as 0).
    pub degenerate: Vec<String>,
}

pub fn metrics(c: ConfusionCounts) -> MetricsReport {
    let acc = Ratio {
        num: c.tp + c.tn,
        den: c.total(),
    };
    let sen = Ratio {
        num: c.tp,
        den: c.tp + c.fn_,
    };
    let spe = Ratio {
        num: c.tn,
        den: c.fp + c.tn,
    };
    let mut degenerate = Vec::new();
    for (name, r) in [("acc", acc), ("sen", sen), ("spe", spe)] {
        if r.den == 0 {
            degenerate.push(name.to_string());
        }
    }
    let (tp, fp, tn, fn_) = (c.tp as f64, c.fp as f64, c.tn as f64, c.fn_ as f64);
    let denom = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
    let mcc = if denom == 0.0 {
        degenerate.push("mcc".to_string());
        0.0
    } else {
        (tp * tn - fp * fn_) / denom
    };
    MetricsReport {
        counts: c,
        acc,
        sen,
        spe,
        mcc,
        degenerate,
    }
}

/// Everything a fold learns from its training subjects.
#[derive(Debug, Clone)]
pub struct FoldModel {
    /// Segment positions removed before each layer.
    pub plan: Vec<Vec<usize>>,
    pub trimmed_to: Option<usize>,
    /// Segments per training envelope (after any trim); longer test envelopes
    /// keep their first `segments`.
    pub segments: usize,
    /// Kept stitched-feature indices per layer.
    pub kept: Vec<Vec<usize>>,
    pub models: Vec<TrainedModel>,
}

/// Training-side artifacts of one fold, as exported in provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub test_subjects: Vec<String>,
    pub removed_positions: Vec<Vec<usize>>,
    pub kept_features: Vec<Vec<usize>>,
    pub standardization: Vec<Option<Standardizer>>,
    pub training_accuracy: Vec<f64>,
    pub fusion: Option<FusionWeights>,
}

pub fn fit_fold(train_ds: &Dataset, cfg: &RunConfig) -> Result<FoldModel> {
    let space = build(train_ds, &cfg.deep_space())?;
    let selections = select_per_layer(&space, cfg.keep_rule)?;
    let spec: ModelSpec = cfg.model_spec();
    let labels = train_ds.labels();
    let models = selections
        .iter()
        .map(|sel| train(&spec, sel.reduced.rows.view(), &labels))
        .collect::<Result<Vec<_>>>()?;
    Ok(FoldModel {
        plan: space.removal_plan(),
        trimmed_to: space.trimmed_to,
        segments: train_ds.segment_range().0,
        kept: selections.into_iter().map(|s| s.kept_feature_indices).collect(),
        models,
    })
}

impl FoldModel {
    /// One predicted label per layer for an unseen subject.
    pub fn predict_subject(&self, env: &Envelope, fcm: &FcmConfig) -> Result<Vec<Label>> {
        if env.segment_count() < self.segments {
            return Err(Error::RaggedEnvelopes {
                min: env.segment_count(),
                max: self.segments,
            });
        }
        let (layers, _) = traverse(env, &self.plan, Some(self.segments), fcm)?;
        layers
            .iter()
            .zip(&self.kept)
            .zip(&self.models)
            .map(|((layer_env, kept), model)| {
                let single = Dataset::new(vec![layer_env.clone()])?;
                let row = stitch(&single)?.restrict(kept);
                Ok(model.predict(row.view())?[0])
            })
            .collect()
    }

    fn record(&self, ds: &Dataset, fold: &Fold) -> FoldRecord {
        FoldRecord {
            test_subjects: fold.test.iter().map(|&i| ds.envelopes()[i].subject_id().to_string()).collect(),
            removed_positions: self.plan.clone(),
            kept_features: self.kept.clone(),
            standardization: self.models.iter().map(|m| m.scaler.clone()).collect(),
            training_accuracy: self.models.iter().map(|m| m.training_accuracy).collect(),
            fusion: None,
        }
    }
}

/// Per-slot, per-feature stitched weights of one layer plus the marker list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerReport {
    pub layer: usize,
    /// `weights[slot][feature]`.
    pub weights: Vec<Vec<f64>>,
    pub markers: Vec<Marker>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    /// 1-based original feature index.
    pub feature: usize,
    pub support: usize,
    pub mean_weight: f64,
}

/// Linear-interpolation percentile of `values` (`p` in [0, 100]).
pub fn percentile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.len() == 1 {
        return v[0];
    }
    let pos = p / 100.0 * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// A feature is high in a slot when its weight exceeds that slot's
/// `percentile`; it is a marker when high in at least `support` of the slots.
pub fn marker_report(layer: usize, weights: &[f64], slots: usize, dim: usize, pct: f64, support: f64) -> MarkerReport {
    let grid: Vec<Vec<f64>> = (0..slots).map(|s| weights[s * dim..(s + 1) * dim].to_vec()).collect();
    let thresholds: Vec<f64> = grid.iter().map(|row| percentile(row, pct)).collect();
    let needed = (support * slots as f64).ceil() as usize;
    let markers = (0..dim)
        .filter_map(|f| {
            let count = (0..slots).filter(|&s| grid[s][f] > thresholds[s]).count();
            (count >= needed.max(1)).then(|| Marker {
                feature: f + 1,
                support: count,
                mean_weight: (0..slots).map(|s| grid[s][f]).sum::<f64>() / slots as f64,
            })
        })
        .collect();
    MarkerReport {
        layer,
        weights: grid,
        markers,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullDataSummary {
    pub counts: Vec<usize>,
    pub trimmed_to: Option<usize>,
    pub provenance: Vec<LayerProvenance>,
    pub heatmaps: Vec<MarkerReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub config: RunConfig,
    pub folds: Folds,
    /// Dataset indices of evaluated subjects, ascending; rows of `labels`.
    pub evaluated: Vec<usize>,
    pub subject_ids: Vec<String>,
    pub actual: Vec<Label>,
    pub labels: LabelMatrix,
    pub fused: Vec<Label>,
    pub layer_metrics: Vec<MetricsReport>,
    pub fused_metrics: MetricsReport,
    /// One entry for faithful mode, one per fold for strict mode.
    pub fusion_weights: Vec<FusionWeights>,
    pub fold_records: Vec<FoldRecord>,
    pub full_data: FullDataSummary,
}

impl ExperimentOutcome {
    /// Mean normalized fusion weight per layer across fitted weight vectors.
    pub fn mean_beta_norm(&self) -> Vec<f64> {
        let l = self.labels.layers();
        let mut mean = vec![0.0; l];
        for w in &self.fusion_weights {
            for (m, b) in mean.iter_mut().zip(&w.beta_norm) {
                *m += b / self.fusion_weights.len() as f64;
            }
        }
        mean
    }
}

fn fit_fusion(e: &Array2<f64>, y: &[Label], cfg: &RunConfig) -> Result<FusionWeights> {
    if cfg.fusion_lambda_grid {
        fit_weights_grid(e.view(), y)
    } else {
        fit_weights(e.view(), y, cfg.fusion_lambda)
    }
}

/// Runs the full pipeline: folds, per-fold deep spaces and classifiers, the
/// cross-validated label matrix, fusion, metrics and the full-data heatmaps.
pub fn run_experiment(ds: &Dataset, cfg: &RunConfig) -> Result<ExperimentOutcome> {
    cfg.validate_for(ds)?;
    let full = ds;
    // every fold works at the global minimum segment count
    let trimmed = ds.trim_to_min();
    let ds = &trimmed;
    let folds = make_folds(
        ds,
        cfg.cv,
        FoldParams {
            holdout_fraction: cfg.holdout_fraction,
            k: cfg.kfold_k,
            seed: cfg.seed,
        },
    )?;
    let fcm = cfg.fcm();

    let per_fold = folds
        .folds
        .par_iter()
        .enumerate()
        .map(|(f, fold)| -> Result<(FoldModel, Vec<Vec<Label>>)> {
            let train_ds = ds.select(&fold.train).map_err(|e| e.in_fold(f, "split"))?;
            let model = fit_fold(&train_ds, cfg).map_err(|e| e.in_fold(f, "training"))?;
            let preds = fold
                .test
                .iter()
                .map(|&i| model.predict_subject(&ds.envelopes()[i], &fcm))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.in_fold(f, "test traversal"))?;
            Ok((model, preds))
        })
        .collect::<Result<Vec<_>>>()?;

    let layers = cfg.deep_layers + 1;
    let mut rows: Vec<(usize, Vec<Label>)> = Vec::new();
    for (fold, (_, preds)) in folds.folds.iter().zip(&per_fold) {
        for (&i, p) in fold.test.iter().zip(preds) {
            rows.push((i, p.clone()));
        }
    }
    rows.sort_by_key(|r| r.0);
    let evaluated: Vec<usize> = rows.iter().map(|r| r.0).collect();
    let all_labels = ds.labels();
    let actual: Vec<Label> = evaluated.iter().map(|&i| all_labels[i]).collect();
    let e = Array2::from_shape_fn((rows.len(), layers), |(r, j)| rows[r].1[j] as f64);
    let labels = LabelMatrix::new(e.clone(), layer_names(layers))?;

    let mut fold_records: Vec<FoldRecord> = folds
        .folds
        .iter()
        .zip(&per_fold)
        .map(|(fold, (model, _))| model.record(ds, fold))
        .collect();

    let mut fused = vec![0; rows.len()];
    let fusion_weights = match cfg.fusion_mode {
        FusionMode::Faithful => {
            let w = fit_fusion(&e, &actual, cfg)?;
            fused = fuse(e.view(), &w.beta_norm)?;
            vec![w]
        }
        FusionMode::Strict => {
            let weights = strict_fusion_weights(ds, &folds, cfg)?;
            for (fold, w) in folds.folds.iter().zip(&weights) {
                for &i in &fold.test {
                    let r = evaluated.binary_search(&i).expect("tested subject has a row");
                    fused[r] = fuse(e.select(Axis(0), &[r]).view(), &w.beta_norm)?[0];
                }
            }
            for (rec, w) in fold_records.iter_mut().zip(&weights) {
                rec.fusion = Some(w.clone());
            }
            weights
        }
    };

    let layer_metrics = (0..layers)
        .map(|j| metrics(ConfusionCounts::from_predictions(&actual, &labels.column(j))))
        .collect();
    let fused_metrics = metrics(ConfusionCounts::from_predictions(&actual, &fused));

    let full_data = full_data_summary(full, cfg)?;

    Ok(ExperimentOutcome {
        config: cfg.clone(),
        subject_ids: evaluated.iter().map(|&i| ds.envelopes()[i].subject_id().to_string()).collect(),
        folds,
        evaluated,
        actual,
        labels,
        fused,
        layer_metrics,
        fused_metrics,
        fusion_weights,
        fold_records,
        full_data,
    })
}

/// Inner split of a fold's training subjects used to produce the label rows
/// that strict-mode fusion weights are fit on.
pub fn inner_folds(train_ds: &Dataset, cfg: &RunConfig) -> Result<Folds> {
    let scheme = match cfg.cv {
        CvScheme::Kfold => CvScheme::Kfold,
        CvScheme::Loso | CvScheme::Holdout => CvScheme::Loso,
    };
    make_folds(
        train_ds,
        scheme,
        FoldParams {
            holdout_fraction: cfg.holdout_fraction,
            k: cfg.kfold_k.min(train_ds.len()),
            seed: cfg.seed,
        },
    )
}

/// Strict-mode fusion weights, one per outer fold.
///
/// Each fold's weights are fit on cross-validated label rows of its own
/// training subjects only (nested cross-validation), so they never depend on
/// the fold's test subjects. Inner models are keyed by the full set of
/// excluded subjects; under leave-one-out the model without `{i, j}` serves
/// both outer fold `i` and outer fold `j`, and is fit once.
pub fn strict_fusion_weights(ds: &Dataset, folds: &Folds, cfg: &RunConfig) -> Result<Vec<FusionWeights>> {
    let fcm = cfg.fcm();
    let n = ds.len();
    let all_labels = ds.labels();
    let inner = folds
        .folds
        .iter()
        .enumerate()
        .map(|(f, fold)| {
            let train_ds = ds.select(&fold.train)?;
            inner_folds(&train_ds, cfg).map_err(|e| e.in_fold(f, "inner split"))
        })
        .collect::<Result<Vec<_>>>()?;

    // excluded set -> subjects whose labels are needed from that model
    let mut jobs: BTreeMap<Vec<usize>, (usize, Vec<usize>)> = BTreeMap::new();
    for (f, (fold, inner)) in folds.folds.iter().zip(&inner).enumerate() {
        for g in &inner.folds {
            let inner_test: Vec<usize> = g.test.iter().map(|&t| fold.train[t]).collect();
            let mut excluded: Vec<usize> = fold.test.iter().chain(&inner_test).copied().collect();
            excluded.sort_unstable();
            let entry = jobs.entry(excluded).or_insert_with(|| (f, Vec::new()));
            entry.1.extend(inner_test);
        }
    }
    let jobs: Vec<(Vec<usize>, usize, Vec<usize>)> = jobs
        .into_iter()
        .map(|(excluded, (f, mut targets))| {
            targets.sort_unstable();
            targets.dedup();
            (excluded, f, targets)
        })
        .collect();
    let predictions = jobs
        .par_iter()
        .map(|(excluded, f, targets)| -> Result<Vec<Vec<Label>>> {
            let keep = complement(n, excluded);
            let model = fit_fold(&ds.select(&keep)?, cfg).map_err(|e| e.in_fold(*f, "inner training"))?;
            targets
                .iter()
                .map(|&t| model.predict_subject(&ds.envelopes()[t], &fcm))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.in_fold(*f, "inner traversal"))
        })
        .collect::<Result<Vec<_>>>()?;
    let lookup = |excluded: &[usize], subject: usize| -> &Vec<Label> {
        let job = jobs.binary_search_by(|j| j.0.as_slice().cmp(excluded)).expect("job exists");
        let slot = jobs[job].2.binary_search(&subject).expect("target exists");
        &predictions[job][slot]
    };

    let layers = cfg.deep_layers + 1;
    folds
        .folds
        .iter()
        .zip(&inner)
        .enumerate()
        .map(|(f, (fold, inner))| {
            let mut rows: Vec<(usize, &Vec<Label>)> = Vec::with_capacity(fold.train.len());
            for g in &inner.folds {
                let inner_test: Vec<usize> = g.test.iter().map(|&t| fold.train[t]).collect();
                let mut excluded: Vec<usize> = fold.test.iter().chain(&inner_test).copied().collect();
                excluded.sort_unstable();
                for &t in &inner_test {
                    rows.push((t, lookup(&excluded, t)));
                }
            }
            rows.sort_by_key(|r| r.0);
            let e = Array2::from_shape_fn((rows.len(), layers), |(r, j)| rows[r].1[j] as f64);
            let y: Vec<Label> = rows.iter().map(|r| all_labels[r.0]).collect();
            fit_fusion(&e, &y, cfg).map_err(|err| err.in_fold(f, "fusion"))
        })
        .collect()
}

/// Deep space and per-layer feature weights on all subjects (descriptive
/// heatmaps and markers; not used for any prediction).
pub fn full_data_summary(ds: &Dataset, cfg: &RunConfig) -> Result<FullDataSummary> {
    let space = build(ds, &cfg.deep_space())?;
    let selections = select_per_layer(&space, cfg.keep_rule)?;
    let heatmaps = space
        .layers
        .iter()
        .zip(&selections)
        .map(|(layer, sel)| {
            marker_report(
                layer.index,
                &sel.weights.weights,
                layer.per_subject_count,
                ds.dim(),
                cfg.marker_percentile,
                cfg.marker_support,
            )
        })
        .collect();
    Ok(FullDataSummary {
        counts: space.counts(),
        trimmed_to: space.trimmed_to,
        provenance: space.provenance,
        heatmaps,
    })
}

/// Baseline: a classifier on raw segments (each labeled with its subject's
/// class), subject label by majority vote of its segment predictions; a tie
/// votes 0.
pub fn segment_vote_baseline(ds: &Dataset, folds: &Folds, spec: &ModelSpec) -> Result<(Vec<usize>, Vec<Label>, MetricsReport)> {
    let per_fold = folds
        .folds
        .par_iter()
        .enumerate()
        .map(|(f, fold)| -> Result<Vec<(usize, Label)>> {
            let train_envs: Vec<&Envelope> = fold.train.iter().map(|&i| &ds.envelopes()[i]).collect();
            let views: Vec<_> = train_envs.iter().map(|e| e.segments()).collect();
            let x = ndarray::concatenate(Axis(0), &views).map_err(|_| Error::DimensionMismatch {
                expected: ds.dim(),
                found: 0,
            })?;
            let y: Vec<Label> = train_envs
                .iter()
                .flat_map(|e| std::iter::repeat(e.label()).take(e.segment_count()))
                .collect();
            let model = train(spec, x.view(), &y).map_err(|e| e.in_fold(f, "baseline training"))?;
            fold.test
                .iter()
                .map(|&i| {
                    let env = &ds.envelopes()[i];
                    let votes = model.predict(env.segments())?;
                    let ones = votes.iter().filter(|&&v| v == 1).count();
                    Ok((i, Label::from(2 * ones > votes.len())))
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut pairs: Vec<(usize, Label)> = per_fold.into_iter().flatten().collect();
    pairs.sort_by_key(|p| p.0);
    let labels = ds.labels();
    let evaluated: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let predicted: Vec<Label> = pairs.iter().map(|p| p.1).collect();
    let actual: Vec<Label> = evaluated.iter().map(|&i| labels[i]).collect();
    let report = metrics(ConfusionCounts::from_predictions(&actual, &predicted));
    Ok((evaluated, predicted, report))
}
