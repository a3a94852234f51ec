mod common;

use common::small_problem;
use deepenv_core::config::{CvScheme, FusionMode};
use deepenv_core::dataset::{load_dataset, write_canonical_csv};
use deepenv_core::deep_space::{build, slot_order, traverse};
use deepenv_core::evaluation::{fit_fold, run_experiment, ExperimentOutcome};
use deepenv_core::fusion::{fit_weights, fuse};
use deepenv_core::report::{render_layers, render_report, write_report, PROVENANCE_FILE, REPORT_FILE};
use deepenv_core::{Dataset, Schema};
use ndarray::{array, s, Array2};

fn check_metric_identity(o: &ExperimentOutcome) {
    let p = o.actual.iter().filter(|&&l| l == 1).count() as f64;
    let n = o.actual.len() as f64 - p;
    for m in o.layer_metrics.iter().chain([&o.fused_metrics]) {
        let lhs = m.acc.percent() * (p + n);
        let rhs = m.sen.percent() * p + m.spe.percent() * n;
        assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
    }
}

#[test]
fn loso_strict_outcome_is_well_formed() {
    let (ds, cfg) = small_problem(1);
    let o = run_experiment(&ds, &cfg).unwrap();
    assert_eq!(o.evaluated, (0..ds.len()).collect::<Vec<_>>());
    assert_eq!(o.labels.e.dim(), (ds.len(), cfg.deep_layers + 1));
    assert_eq!(o.fusion_weights.len(), ds.len());
    assert_eq!(o.fold_records.len(), ds.len());
    assert!(o.fold_records.iter().all(|r| r.fusion.is_some()));
    for (i, w) in o.fusion_weights.iter().enumerate() {
        let row = o.labels.e.slice(s![i..i + 1, ..]);
        assert_eq!(fuse(row, &w.beta_norm).unwrap()[0], o.fused[i]);
    }
    check_metric_identity(&o);
}

#[test]
fn test_subject_never_influences_its_own_fold() {
    let (ds, cfg) = small_problem(2);
    let base = run_experiment(&ds, &cfg).unwrap();
    // wreck subject 0, which is the test subject of fold 0
    let wrecked = ds
        .map_envelopes(|env| {
            if env.subject_id() == ds.envelopes()[0].subject_id() {
                env.with_segments(env.segments().mapv(|v| -50.0 * v + 3.0))
            } else {
                Ok(env.clone())
            }
        })
        .unwrap();
    let other = run_experiment(&wrecked, &cfg).unwrap();
    assert_eq!(base.fold_records[0], other.fold_records[0]);
    assert_eq!(base.fusion_weights[0], other.fusion_weights[0]);
    // every other fold trains on subject 0, so something downstream moves
    assert_ne!(base.fold_records[1..], other.fold_records[1..]);
}

#[test]
fn faithful_mode_fits_one_weight_vector_on_the_whole_matrix() {
    let (ds, mut cfg) = small_problem(3);
    cfg.fusion_mode = FusionMode::Faithful;
    let o = run_experiment(&ds, &cfg).unwrap();
    assert_eq!(o.fusion_weights.len(), 1);
    let w = fit_weights(o.labels.e.view(), &o.actual, cfg.fusion_lambda).unwrap();
    assert_eq!(o.fusion_weights[0], w);
    assert_eq!(o.fused, fuse(o.labels.e.view(), &w.beta_norm).unwrap());
    assert!(o.fold_records.iter().all(|r| r.fusion.is_none()));
    // the label matrix itself does not depend on the fusion mode
    cfg.fusion_mode = FusionMode::Strict;
    assert_eq!(run_experiment(&ds, &cfg).unwrap().labels, o.labels);
}

#[test]
fn holdout_and_kfold_runs() {
    let (ds, mut cfg) = small_problem(4);
    cfg.cv = CvScheme::Holdout;
    cfg.holdout_fraction = 0.34;
    let o = run_experiment(&ds, &cfg).unwrap();
    assert_eq!(o.folds.folds.len(), 1);
    assert_eq!(o.evaluated.len(), 4);
    assert_eq!(o.labels.e.nrows(), 4);
    check_metric_identity(&o);

    cfg.cv = CvScheme::Kfold;
    cfg.kfold_k = 3;
    let o = run_experiment(&ds, &cfg).unwrap();
    assert_eq!(o.folds.folds.len(), 3);
    assert_eq!(o.evaluated, (0..ds.len()).collect::<Vec<_>>());
    check_metric_identity(&o);
}

#[test]
fn runs_are_deterministic_and_reports_identical() {
    let (ds, cfg) = small_problem(5);
    let a = run_experiment(&ds, &cfg).unwrap();
    let b = run_experiment(&ds, &cfg).unwrap();
    assert_eq!(a, b);
    let (da, db) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let pa = write_report(&a, ds.dim(), da.path()).unwrap();
    let pb = write_report(&b, ds.dim(), db.path()).unwrap();
    assert_eq!(pa.len(), 5);
    for (x, y) in pa.iter().zip(&pb) {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap(), "{}", x.display());
    }
    let report = std::fs::read_to_string(da.path().join(REPORT_FILE)).unwrap();
    for section in ["# config", "# protocol", "# metrics", "# fusion", "# labels"] {
        assert!(report.contains(section), "missing {section}");
    }
    assert!(report.contains("fusion_mode\tstrict"));
    let prov: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(da.path().join(PROVENANCE_FILE)).unwrap()).unwrap();
    assert_eq!(prov["fold_records"].as_array().unwrap().len(), ds.len());
}

#[test]
fn layer_grid_has_one_row_per_subject() {
    let (ds, cfg) = small_problem(6);
    let o = run_experiment(&ds, &cfg).unwrap();
    let grid = render_layers(&o);
    let lines: Vec<&str> = grid.lines().collect();
    assert_eq!(lines[0], "subject_id\tactual\tfused\toriginal\tlayer1\tlayer2");
    assert_eq!(lines.len(), ds.len() + 1);
    assert!(render_report(&o).ends_with(&grid));
}

#[test]
fn ragged_envelopes_are_trimmed_to_the_shortest() {
    let (ds, cfg) = small_problem(7);
    let longer = ds
        .map_envelopes(|env| {
            if env.subject_id().ends_with('3') {
                let extra = Array2::from_elem((3, env.dim()), 9.0);
                env.with_segments(ndarray::concatenate(ndarray::Axis(0), &[env.segments(), extra.view()]).unwrap())
            } else {
                Ok(env.clone())
            }
        })
        .unwrap();
    let o = run_experiment(&longer, &cfg).unwrap();
    assert_eq!(o.full_data.trimmed_to, Some(8));
    assert!(o.fold_records.iter().all(|r| r.removed_positions[0].iter().all(|&p| p < 8)));
    // the appended segments are dropped, so nothing changes
    assert_eq!(o.labels, run_experiment(&ds, &cfg).unwrap().labels);
}

#[test]
fn traversal_reproduces_the_built_layers() {
    let (ds, mut cfg) = small_problem(8);
    for intra in [0, 1] {
        cfg.intra_prune = intra;
        cfg.initial_cutoff = 1;
        let space = build(&ds, &cfg.deep_space()).unwrap();
        let plan = space.removal_plan();
        for (s, env) in ds.envelopes().iter().enumerate() {
            let (layers, _) = traverse(env, &plan, space.trimmed_to, &cfg.fcm()).unwrap();
            for (l, layer) in space.layers.iter().enumerate() {
                assert_eq!(&layers[l], &layer.dataset.envelopes()[s], "intra {intra} layer {l} subject {s}");
            }
        }
    }
}

#[test]
fn slots_follow_anchor_segments() {
    let u = array![[0.1, 0.2, 0.7], [0.8, 0.1, 0.1], [0.1, 0.7, 0.2]];
    assert_eq!(slot_order(&u), vec![1, 2, 0]);
    // shared anchor keeps the original order
    let u = array![[0.6, 0.4], [0.6, 0.4]];
    assert_eq!(slot_order(&u), vec![0, 1]);
}

#[test]
fn canonical_csv_round_trips() {
    let (ds, _) = small_problem(9);
    let file = tempfile::NamedTempFile::new().unwrap();
    write_canonical_csv(&ds, std::fs::File::create(file.path()).unwrap()).unwrap();
    let back: Dataset = load_dataset(file.path(), &Schema::CanonicalCsv).unwrap();
    assert_eq!(back, ds);
}

#[test]
fn fold_model_trims_long_and_rejects_short_test_envelopes() {
    let (ds, cfg) = small_problem(10);
    let model = fit_fold(&ds.select(&(1..ds.len()).collect::<Vec<_>>()).unwrap(), &cfg).unwrap();
    let env = &ds.envelopes()[0];
    let base = model.predict_subject(env, &cfg.fcm()).unwrap();
    let extra = Array2::from_elem((2, env.dim()), 5.0);
    let long = env
        .with_segments(ndarray::concatenate(ndarray::Axis(0), &[env.segments(), extra.view()]).unwrap())
        .unwrap();
    assert_eq!(model.predict_subject(&long, &cfg.fcm()).unwrap(), base);
    let short = env.with_segments(env.segments().slice(s![..7, ..]).to_owned()).unwrap();
    let err = model.predict_subject(&short, &cfg.fcm()).unwrap_err();
    assert!(err.to_string().starts_with("ragged envelopes"));
}
