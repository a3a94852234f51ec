//! Run configuration and its flat `key = value` text format.
//!
//! Every [`RunConfig`] field has exactly one key. Blank lines and lines starting
//! with `#` are ignored; unknown or repeated keys are errors.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifiers::{ModelKind, ModelSpec};
use crate::dataset::{Dataset, Schema};
use crate::deep_space::{layer_counts, DeepSpaceConfig, KeepRule};
use crate::fcm::FcmConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvScheme {
    Loso,
    Holdout,
    Kfold,
}

impl CvScheme {
    pub fn name(&self) -> &'static str {
        match self {
            CvScheme::Loso => "loso",
            CvScheme::Holdout => "holdout",
            CvScheme::Kfold => "kfold",
        }
    }
}

impl FromStr for CvScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "loso" => Ok(CvScheme::Loso),
            "holdout" => Ok(CvScheme::Holdout),
            "kfold" => Ok(CvScheme::Kfold),
            other => Err(Error::InvalidConfig(format!("unknown cv scheme {other:?}"))),
        }
    }
}

/// Which rows the fusion weights are fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionMode {
    /// Weights for a test fold never see that fold's rows.
    Strict,
    /// One weight vector fitted on the whole cross-validated label matrix.
    Faithful,
}

impl FusionMode {
    pub fn name(&self) -> &'static str {
        match self {
            FusionMode::Strict => "strict",
            FusionMode::Faithful => "faithful",
        }
    }
}

impl FromStr for FusionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(FusionMode::Strict),
            "faithful" => Ok(FusionMode::Faithful),
            other => Err(Error::InvalidConfig(format!("unknown fusion mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub schema: Schema,
    pub initial_cutoff: usize,
    pub deep_layers: usize,
    pub intra_prune: usize,
    pub fuzzifier: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub zero_dist_eps: f64,
    pub mmd_penalty: bool,
    pub keep_rule: KeepRule,
    pub classifier: ModelKind,
    pub svm_c: f64,
    pub knn_k: usize,
    pub elm_hidden: usize,
    pub standardize: bool,
    pub cv: CvScheme,
    pub holdout_fraction: f64,
    pub kfold_k: usize,
    pub fusion_lambda: f64,
    pub fusion_lambda_grid: bool,
    pub fusion_mode: FusionMode,
    pub seed: u64,
    pub marker_percentile: f64,
    pub marker_support: f64,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let fcm = FcmConfig::default();
        let model = ModelSpec::default();
        RunConfig {
            dataset: None,
            schema: Schema::CanonicalCsv,
            initial_cutoff: 6,
            deep_layers: 5,
            intra_prune: 0,
            fuzzifier: fcm.fuzzifier,
            max_iters: fcm.max_iters,
            tol: fcm.tol,
            zero_dist_eps: fcm.zero_dist_eps,
            mmd_penalty: true,
            keep_rule: KeepRule::default(),
            classifier: model.kind,
            svm_c: model.svm_c,
            knn_k: model.knn_k,
            elm_hidden: model.elm_hidden,
            standardize: model.standardize,
            cv: CvScheme::Loso,
            holdout_fraction: 0.3,
            kfold_k: 10,
            fusion_lambda: 0.1,
            fusion_lambda_grid: false,
            fusion_mode: FusionMode::Strict,
            seed: 42,
            marker_percentile: 75.0,
            marker_support: 0.5,
            out: None,
        }
    }
}

const KEYS: &[&str] = &[
    "dataset",
    "schema",
    "drop_trailing",
    "header",
    "initial_cutoff",
    "deep_layers",
    "intra_prune",
    "fuzzifier",
    "max_iters",
    "tol",
    "zero_dist_eps",
    "mmd_penalty",
    "keep_rule",
    "classifier",
    "svm_c",
    "knn_k",
    "elm_hidden",
    "standardize",
    "cv",
    "holdout_fraction",
    "kfold_k",
    "fusion_lambda",
    "fusion_lambda_grid",
    "fusion_mode",
    "seed",
    "marker_percentile",
    "marker_support",
    "out",
];

fn bad(key: &str, value: &str) -> Error {
    Error::InvalidConfig(format!("bad value for {key}: {value:?}"))
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| bad(key, value))
}

fn flag(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(bad(key, value)),
    }
}

fn parse_keep_rule(value: &str) -> Result<KeepRule> {
    let rule = match value.split_once(':') {
        Some(("fraction", f)) => KeepRule::Fraction(num("keep_rule", f)?),
        Some(("count", k)) => KeepRule::Count(num("keep_rule", k)?),
        _ => return Err(bad("keep_rule", value)),
    };
    rule.validate()?;
    Ok(rule)
}

impl RunConfig {
    /// Shipped per-dataset defaults.
    pub fn preset(name: &str) -> Result<RunConfig> {
        let base = RunConfig::default();
        Ok(match name {
            "sakar" => RunConfig {
                schema: Schema::UciSakarLike {
                    drop_trailing: 1,
                    header: false,
                },
                initial_cutoff: 6,
                deep_layers: 5,
                ..base
            },
            // ragged 6-or-7 envelopes are trimmed to 6 before weighting
            "maxlittle" => RunConfig {
                initial_cutoff: 0,
                deep_layers: 3,
                ..base
            },
            "selfdata" => RunConfig {
                initial_cutoff: 3,
                deep_layers: 4,
                ..base
            },
            "synth" => base,
            other => return Err(Error::InvalidConfig(format!("unknown preset {other:?}"))),
        })
    }

    pub const PRESETS: [&'static str; 4] = ["sakar", "maxlittle", "selfdata", "synth"];

    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        let mut schema_name = cfg.schema.id().to_string();
        let (mut drop_trailing, mut header) = (0usize, false);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::InvalidConfig(format!("unknown key {key:?} on line {}", lineno + 1)));
            }
            if !seen.insert(key.to_string()) {
                return Err(Error::InvalidConfig(format!("duplicate key {key:?}")));
            }
            match key {
                "dataset" => cfg.dataset = (!value.is_empty()).then(|| PathBuf::from(value)),
                "schema" => schema_name = value.to_string(),
                "drop_trailing" => drop_trailing = num(key, value)?,
                "header" => header = flag(key, value)?,
                "initial_cutoff" => cfg.initial_cutoff = num(key, value)?,
                "deep_layers" => cfg.deep_layers = num(key, value)?,
                "intra_prune" => cfg.intra_prune = num(key, value)?,
                "fuzzifier" => cfg.fuzzifier = num(key, value)?,
                "max_iters" => cfg.max_iters = num(key, value)?,
                "tol" => cfg.tol = num(key, value)?,
                "zero_dist_eps" => cfg.zero_dist_eps = num(key, value)?,
                "mmd_penalty" => cfg.mmd_penalty = flag(key, value)?,
                "keep_rule" => cfg.keep_rule = parse_keep_rule(value)?,
                "classifier" => cfg.classifier = value.parse()?,
                "svm_c" => cfg.svm_c = num(key, value)?,
                "knn_k" => cfg.knn_k = num(key, value)?,
                "elm_hidden" => cfg.elm_hidden = num(key, value)?,
                "standardize" => cfg.standardize = flag(key, value)?,
                "cv" => cfg.cv = value.parse()?,
                "holdout_fraction" => cfg.holdout_fraction = num(key, value)?,
                "kfold_k" => cfg.kfold_k = num(key, value)?,
                "fusion_lambda" => cfg.fusion_lambda = num(key, value)?,
                "fusion_lambda_grid" => cfg.fusion_lambda_grid = flag(key, value)?,
                "fusion_mode" => cfg.fusion_mode = value.parse()?,
                "seed" => cfg.seed = num(key, value)?,
                "marker_percentile" => cfg.marker_percentile = num(key, value)?,
                "marker_support" => cfg.marker_support = num(key, value)?,
                "out" => cfg.out = (!value.is_empty()).then(|| PathBuf::from(value)),
                _ => unreachable!("key list checked above"),
            }
        }
        cfg.schema = match schema_name.as_str() {
            "canonical-csv" => {
                if drop_trailing != 0 || header {
                    return Err(Error::InvalidConfig("drop_trailing/header only apply to uci-sakar-like".into()));
                }
                Schema::CanonicalCsv
            }
            "uci-sakar-like" => Schema::UciSakarLike { drop_trailing, header },
            other => return Err(Error::InvalidConfig(format!("unknown schema {other:?}"))),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical text form; `parse(to_text(c)) == c`.
    pub fn to_text(&self) -> String {
        let (drop_trailing, header) = match self.schema {
            Schema::CanonicalCsv => (0, false),
            Schema::UciSakarLike { drop_trailing, header } => (drop_trailing, header),
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let keep = match self.keep_rule {
            KeepRule::Fraction(f) => format!("fraction:{f:?}"),
            KeepRule::Count(k) => format!("count:{k}"),
        };
        let pairs: Vec<(&str, String)> = vec![
            ("dataset", path(&self.dataset)),
            ("schema", self.schema.id().to_string()),
            ("drop_trailing", drop_trailing.to_string()),
            ("header", header.to_string()),
            ("initial_cutoff", self.initial_cutoff.to_string()),
            ("deep_layers", self.deep_layers.to_string()),
            ("intra_prune", self.intra_prune.to_string()),
            ("fuzzifier", format!("{:?}", self.fuzzifier)),
            ("max_iters", self.max_iters.to_string()),
            ("tol", format!("{:?}", self.tol)),
            ("zero_dist_eps", format!("{:?}", self.zero_dist_eps)),
            ("mmd_penalty", self.mmd_penalty.to_string()),
            ("keep_rule", keep),
            ("classifier", self.classifier.name().to_string()),
            ("svm_c", format!("{:?}", self.svm_c)),
            ("knn_k", self.knn_k.to_string()),
            ("elm_hidden", self.elm_hidden.to_string()),
            ("standardize", self.standardize.to_string()),
            ("cv", self.cv.name().to_string()),
            ("holdout_fraction", format!("{:?}", self.holdout_fraction)),
            ("kfold_k", self.kfold_k.to_string()),
            ("fusion_lambda", format!("{:?}", self.fusion_lambda)),
            ("fusion_lambda_grid", self.fusion_lambda_grid.to_string()),
            ("fusion_mode", self.fusion_mode.name().to_string()),
            ("seed", self.seed.to_string()),
            ("marker_percentile", format!("{:?}", self.marker_percentile)),
            ("marker_support", format!("{:?}", self.marker_support)),
            ("out", path(&self.out)),
        ];
        let mut s = String::new();
        for (k, v) in pairs {
            if v.is_empty() {
                let _ = writeln!(s, "{k} =");
            } else {
                let _ = writeln!(s, "{k} = {v}");
            }
        }
        s
    }

    /// Checks that do not need the dataset.
    pub fn validate(&self) -> Result<()> {
        self.fcm().validate()?;
        self.model_spec().validate()?;
        self.keep_rule.validate()?;
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "holdout_fraction must lie in (0, 1), got {}",
                self.holdout_fraction
            )));
        }
        if self.kfold_k < 2 {
            return Err(Error::InvalidConfig("kfold_k must be at least 2".into()));
        }
        if !(self.fusion_lambda >= 0.0) {
            return Err(Error::InvalidConfig("fusion_lambda must be nonnegative".into()));
        }
        if !(0.0..=100.0).contains(&self.marker_percentile) {
            return Err(Error::InvalidConfig("marker_percentile must lie in [0, 100]".into()));
        }
        if !(self.marker_support > 0.0 && self.marker_support <= 1.0) {
            return Err(Error::InvalidConfig("marker_support must lie in (0, 1]".into()));
        }
        Ok(())
    }

    /// Shape checks against a loaded dataset; returns the per-layer segment
    /// counts the run will produce.
    pub fn validate_for(&self, ds: &Dataset) -> Result<Vec<usize>> {
        self.validate()?;
        let (min, _) = ds.segment_range();
        layer_counts(min, self.initial_cutoff, self.deep_layers, self.intra_prune)
    }

    pub fn fcm(&self) -> FcmConfig {
        FcmConfig {
            fuzzifier: self.fuzzifier,
            max_iters: self.max_iters,
            tol: self.tol,
            seed: self.seed,
            zero_dist_eps: self.zero_dist_eps,
            mmd_penalty: self.mmd_penalty,
        }
    }

    pub fn deep_space(&self) -> DeepSpaceConfig {
        DeepSpaceConfig {
            initial_cutoff: self.initial_cutoff,
            deep_layers: self.deep_layers,
            intra_prune: self.intra_prune,
            fcm: self.fcm(),
        }
    }

    pub fn model_spec(&self) -> ModelSpec {
        ModelSpec {
            kind: self.classifier,
            knn_k: self.knn_k,
            elm_hidden: self.elm_hidden,
            svm_c: self.svm_c,
            seed: self.seed,
            standardize: self.standardize,
        }
    }
}
