//! Exported run files.
//!
//! Every file is rendered to a string first so the content is a pure function
//! of the experiment outcome; floats use Rust's shortest round-trip format and
//! percentages the exact half-up formatter.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::evaluation::{ExperimentOutcome, FoldRecord, Folds, FullDataSummary, MarkerReport, MetricsReport};
use crate::fusion::FusionWeights;
use crate::{Error, Result};

pub const REPORT_FILE: &str = "report.tsv";
pub const LAYERS_FILE: &str = "layers.tsv";
pub const WEIGHTS_FILE: &str = "weights.csv";
pub const MARKERS_FILE: &str = "markers.csv";
pub const PROVENANCE_FILE: &str = "provenance.json";

pub const TEST_PROTOCOL: &str = "segment-prune positions and stitched-feature indices frozen from each fold's training subjects; \
test envelopes clustered per subject with the training configuration";

fn metrics_row(out: &mut String, name: &str, m: &MetricsReport) {
    let flags = if m.degenerate.is_empty() {
        "-".to_string()
    } else {
        m.degenerate.join(",")
    };
    let _ = writeln!(
        out,
        "{name}\t{}\t{}\t{}\t{:.4}\t{}\t{}\t{}\t{}\t{flags}",
        m.acc.format_percent(),
        m.sen.format_percent(),
        m.spe.format_percent(),
        m.mcc,
        m.counts.tp,
        m.counts.fp,
        m.counts.tn,
        m.counts.fn_,
    );
}

fn join<T: ToString>(items: &[T], sep: &str) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(sep)
}

/// Label grid: one row per evaluated subject with actual, fused and every
/// layer's predicted label.
pub fn render_layers(o: &ExperimentOutcome) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "subject_id\tactual\tfused\t{}", o.labels.layer_names.join("\t"));
    for (r, id) in o.subject_ids.iter().enumerate() {
        let cells: Vec<String> = o.labels.e.row(r).iter().map(|&v| (v as u8).to_string()).collect();
        let _ = writeln!(out, "{id}\t{}\t{}\t{}", o.actual[r], o.fused[r], cells.join("\t"));
    }
    out
}

pub fn render_report(o: &ExperimentOutcome) -> String {
    let mut out = String::new();
    out.push_str("# config\n");
    // the output location is not part of the experiment
    for line in o.config.to_text().lines() {
        let (k, v) = line.split_once('=').unwrap_or((line, ""));
        if k.trim() != "out" {
            let _ = writeln!(out, "{}\t{}", k.trim(), v.trim());
        }
    }
    out.push_str("# protocol\n");
    let _ = writeln!(out, "fusion_mode\t{}", o.config.fusion_mode.name());
    let _ = writeln!(out, "test_protocol\t{TEST_PROTOCOL}");
    let _ = writeln!(out, "cv\t{}", o.folds.scheme.name());
    let _ = writeln!(out, "folds\t{}", o.folds.folds.len());
    let _ = writeln!(out, "split_seed\t{}", o.folds.seed);
    let _ = writeln!(out, "evaluated_subjects\t{}", o.evaluated.len());
    let trimmed = o.full_data.trimmed_to.map_or("-".to_string(), |t| t.to_string());
    let _ = writeln!(out, "trimmed_to\t{trimmed}");
    let _ = writeln!(out, "layer_counts\t{}", join(&o.full_data.counts, ","));
    out.push_str("# metrics\n");
    out.push_str("layer\tacc\tsen\tspe\tmcc\ttp\tfp\ttn\tfn\tdegenerate\n");
    for (name, m) in o.labels.layer_names.iter().zip(&o.layer_metrics) {
        metrics_row(&mut out, name, m);
    }
    metrics_row(&mut out, "fused", &o.fused_metrics);
    out.push_str("# fusion\n");
    let _ = writeln!(out, "layer\t{}", o.labels.layer_names.join("\t"));
    let _ = writeln!(out, "mean_beta_norm\t{}", join(&o.mean_beta_norm(), "\t"));
    if let [w] = o.fusion_weights.as_slice() {
        let _ = writeln!(out, "beta\t{}", join(&w.beta, "\t"));
        let _ = writeln!(out, "lambda\t{}", w.lambda);
    }
    out.push_str("# labels\n");
    out.push_str(&render_layers(o));
    out
}

/// Rows are (layer, prototype slot), columns the original features.
pub fn render_weights(heatmaps: &[MarkerReport], dim: usize) -> String {
    let mut out = String::new();
    let header: Vec<String> = (1..=dim).map(|f| format!("f{f}")).collect();
    let _ = writeln!(out, "layer,slot,{}", header.join(","));
    for h in heatmaps {
        for (slot, row) in h.weights.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", h.layer, slot + 1, join(row, ","));
        }
    }
    out
}

pub fn render_markers(heatmaps: &[MarkerReport]) -> String {
    let mut out = String::from("layer,feature,support,mean_weight\n");
    for h in heatmaps {
        for m in &h.markers {
            let _ = writeln!(out, "{},{},{},{}", h.layer, m.feature, m.support, m.mean_weight);
        }
    }
    out
}

#[derive(Serialize)]
struct Provenance<'a> {
    fusion_mode: &'static str,
    test_protocol: &'static str,
    folds: &'a Folds,
    fold_records: &'a [FoldRecord],
    fusion_weights: &'a [FusionWeights],
    full_data: &'a FullDataSummary,
}

pub fn render_provenance(o: &ExperimentOutcome) -> Result<String> {
    let p = Provenance {
        fusion_mode: o.config.fusion_mode.name(),
        test_protocol: TEST_PROTOCOL,
        folds: &o.folds,
        fold_records: &o.fold_records,
        fusion_weights: &o.fusion_weights,
        full_data: &o.full_data,
    };
    let mut s = serde_json::to_string_pretty(&p).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    s.push('\n');
    Ok(s)
}

/// Writes all report files into `dir` (created if needed); returns their paths.
pub fn write_report(o: &ExperimentOutcome, dim: usize, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let files = [
        (REPORT_FILE, render_report(o)),
        (LAYERS_FILE, render_layers(o)),
        (WEIGHTS_FILE, render_weights(&o.full_data.heatmaps, dim)),
        (MARKERS_FILE, render_markers(&o.full_data.heatmaps)),
        (PROVENANCE_FILE, render_provenance(o)?),
    ];
    let mut paths = Vec::with_capacity(files.len());
    for (name, content) in files {
        let path = dir.join(name);
        fs::write(&path, content)?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::{marker_report, Marker};

    #[test]
    fn weights_shape() {
        let h = marker_report(0, &[0.1, 0.2, 0.3, 0.4], 2, 2, 75.0, 0.5);
        let s = render_weights(&[h], 2);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines, vec!["layer,slot,f1,f2", "0,1,0.1,0.2", "0,2,0.3,0.4"]);
    }

    #[test]
    fn single_feature_heatmap() {
        let h = marker_report(3, &[0.5, 0.7, 0.2], 3, 1, 75.0, 0.5);
        let s = render_weights(&[h], 1);
        assert!(s.lines().skip(1).all(|l| l.split(',').count() == 3));
    }

    #[test]
    fn markers_rows() {
        let h = MarkerReport {
            layer: 1,
            weights: vec![],
            markers: vec![Marker {
                feature: 4,
                support: 3,
                mean_weight: 0.25,
            }],
        };
        assert_eq!(render_markers(&[h]), "layer,feature,support,mean_weight\n1,4,3,0.25\n");
    }
}
