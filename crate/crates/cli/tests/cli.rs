use std::path::Path;
use std::process::{Command, Output};

fn deepenv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deepenv")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth_to(path: &Path, seed: &str) {
    let o = deepenv(&["synth", "--seed", seed, "--out", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
}

fn assert_single_line_error(o: &Output, starts: &str) {
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(o);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with(&format!("error: {starts}")), "{err}");
}

#[test]
fn synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a.csv"), dir.path().join("b.csv"), dir.path().join("c.csv"));
    synth_to(&a, "7");
    synth_to(&b, "7");
    synth_to(&c, "8");
    let (a, b, c) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap(), std::fs::read(c).unwrap());
    assert_eq!(a, b);
    assert_ne!(a, c);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("subject_id,label,f1,"));
    assert_eq!(text.lines().count(), 1 + 40 * 20);
}

#[test]
fn validate_config_reports_exhausted_cutoff() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("synth.csv");
    synth_to(&data, "7");
    let conf = dir.path().join("c.conf");
    std::fs::write(&conf, "initial_cutoff = 20\n").unwrap();
    let o = deepenv(&["validate-config", "--config", conf.to_str().unwrap(), "--dataset", data.to_str().unwrap()]);
    assert_single_line_error(&o, "cutoff exhausts envelope");

    let o = deepenv(&["validate-config", "--config", "synth", "--dataset", data.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "ok: 40 subjects, layer counts 14,13,12,11,10,9");
}

#[test]
fn unknown_keys_and_flags_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("c.conf");
    std::fs::write(&conf, "deep_layer = 3\n").unwrap();
    let o = deepenv(&["validate-config", "--config", conf.to_str().unwrap()]);
    assert_single_line_error(&o, "invalid config: unknown key \"deep_layer\"");

    let o = deepenv(&["run", "--config", "synth", "--bogus"]);
    assert_single_line_error(&o, "");
    let o = deepenv(&["run", "--config", dir.path().join("nope.conf").to_str().unwrap()]);
    assert_single_line_error(&o, "missing file");
}

#[test]
fn run_writes_report_files() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("synth.csv");
    synth_to(&data, "7");
    let conf = dir.path().join("quick.conf");
    std::fs::write(
        &conf,
        format!("dataset = {}\ninitial_cutoff = 14\ndeep_layers = 2\ncv = holdout\n", data.display()),
    )
    .unwrap();
    let out = dir.path().join("out");
    let args = ["run", "--config", conf.to_str().unwrap(), "--out", out.to_str().unwrap(), "--fusion-mode", "faithful", "--seed", "3"];
    let o = deepenv(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("fused (faithful): acc "));
    for f in ["report.tsv", "layers.tsv", "weights.csv", "markers.csv", "provenance.json"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let report = std::fs::read_to_string(out.join("report.tsv")).unwrap();
    assert!(report.contains("seed\t3\n"));
    assert!(report.contains("fusion_mode\tfaithful\n"));
    let layers = std::fs::read_to_string(out.join("layers.tsv")).unwrap();
    assert_eq!(layers.lines().next().unwrap(), "subject_id\tactual\tfused\toriginal\tlayer1\tlayer2");
    assert_eq!(layers.lines().count(), 1 + 12);

    // same inputs into a second directory give the same bytes
    let again = dir.path().join("again");
    let mut args2 = args;
    args2[4] = again.to_str().unwrap();
    assert!(deepenv(&args2).status.success());
    for f in ["report.tsv", "layers.tsv", "weights.csv", "markers.csv", "provenance.json"] {
        assert_eq!(std::fs::read(out.join(f)).unwrap(), std::fs::read(again.join(f)).unwrap(), "{f}");
    }
}
