use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use deepenv_core::config::{FusionMode, RunConfig};
use deepenv_core::classifiers::ModelKind;
use deepenv_core::dataset::{load_dataset, write_canonical_csv};
use deepenv_core::evaluation::run_experiment;
use deepenv_core::report::write_report;
use deepenv_core::synth::{generate, SynthParams};

#[derive(Debug, Parser)]
#[command(name = "deepenv", version, about = "Subject-enveloped deep prototype learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// Config file (`key = value` lines) or a preset name: sakar, maxlittle, selfdata, synth.
    #[arg(long)]
    config: String,
    /// Dataset path; overrides the config's `dataset`.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Output directory; overrides the config's `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = ["strict", "faithful"])]
    fusion_mode: Option<String>,
    #[arg(long, value_parser = ["svm", "knn", "elm"])]
    classifier: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full pipeline and write the report files.
    Run(RunArgs),
    /// Check the config against the dataset shape without training.
    ValidateConfig(RunArgs),
    /// Write the seeded synthetic dataset as canonical CSV.
    Synth {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = if Path::new(&args.config).exists() {
        let text = std::fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config))?;
        RunConfig::parse(&text)?
    } else if RunConfig::PRESETS.contains(&args.config.as_str()) {
        RunConfig::preset(&args.config)?
    } else {
        bail!("missing file: {}", args.config);
    };
    if let Some(d) = &args.dataset {
        cfg.dataset = Some(d.clone());
    }
    if let Some(o) = &args.out {
        cfg.out = Some(o.clone());
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(m) = &args.fusion_mode {
        cfg.fusion_mode = m.parse::<FusionMode>()?;
    }
    if let Some(c) = &args.classifier {
        cfg.classifier = c.parse::<ModelKind>()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dataset_of(cfg: &RunConfig) -> Result<deepenv_core::Dataset> {
    let Some(path) = &cfg.dataset else {
        bail!("invalid config: no dataset given");
    };
    Ok(load_dataset(path, &cfg.schema)?)
}

fn run(args: &RunArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let Some(out) = cfg.out.clone() else {
        bail!("invalid config: no output directory given");
    };
    let ds = dataset_of(&cfg)?;
    let outcome = run_experiment(&ds, &cfg)?;
    write_report(&outcome, ds.dim(), &out)?;
    let m = &outcome.fused_metrics;
    println!(
        "fused ({}): acc {} sen {} spe {} mcc {:.4}; report in {}",
        cfg.fusion_mode.name(),
        m.acc.format_percent(),
        m.sen.format_percent(),
        m.spe.format_percent(),
        m.mcc,
        out.display()
    );
    Ok(())
}

fn validate(args: &RunArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let ds = dataset_of(&cfg)?;
    let counts = cfg.validate_for(&ds)?;
    let counts: Vec<String> = counts.iter().map(usize::to_string).collect();
    println!("ok: {} subjects, layer counts {}", ds.len(), counts.join(","));
    Ok(())
}

fn synth(seed: u64, out: &Path) -> Result<()> {
    let s = generate(&SynthParams::default(), seed)?;
    let file = File::create(out).with_context(|| format!("creating {}", out.display()))?;
    write_canonical_csv(&s.dataset, BufWriter::new(file))?;
    Ok(())
}

fn fail(msg: &str) -> ExitCode {
    eprintln!("error: {}", msg.trim().replace('\n', " "));
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("bad arguments");
            return fail(first.trim_start_matches("error: "));
        }
    };
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::ValidateConfig(a) => validate(a),
        Command::Synth { seed, out } => synth(*seed, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&format!("{e:#}")),
    }
}
