use std::path::Path;
use std::process::{Command, Output};

fn qclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qclab")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn unknown_experiment_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "experiment = \"no-such-thing\"\nseed = 1\n");
    let out = qclab(&["run", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("experiment"), "{}", stderr(&out));
}

#[test]
fn randomized_run_needs_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "noseed.toml", "experiment = \"multiplier-check\"\n");
    let out = qclab(&["run", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("seed"), "{}", stderr(&out));
}

#[test]
fn missing_config_file_is_a_usage_error() {
    let out = qclab(&["run", "/nonexistent/config.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_is_reproducible_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.toml", "experiment = \"multiplier-check\"\nseed = 5\n");
    let table = |out: &Path| std::fs::read(out.join("tables").join("multiplier-check.csv")).unwrap();

    let a = dir.path().join("a");
    let out = qclab(&["run", &cfg, "--out", a.to_str().unwrap(), "--grid", "256"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("multiplier-check PASS"));
    assert!(a.join("report.json").exists());

    let b = dir.path().join("b");
    let out = qclab(&["run", &cfg, "--out", b.to_str().unwrap(), "--grid", "256"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(table(&a), table(&b));

    // no series in this report, so nothing to draw
    let out = qclab(&["plot", a.join("report.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(!a.join("plots").exists());
}

#[test]
fn plot_writes_svg_per_axis_group() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "n.toml", "experiment = \"neumann-rate\"\n");
    let o = dir.path().join("n");
    let out = qclab(&["run", &cfg, "--out", o.to_str().unwrap(), "--grid", "64"]);
    assert!(o.join("report.json").exists(), "{}", stderr(&out));
    let out = qclab(&["plot", o.join("report.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let svg = std::fs::read_to_string(o.join("plots").join("neumann-rate.svg")).unwrap();
    assert!(svg.contains("<svg"));
}

#[test]
fn seed_override_changes_the_probes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.toml", "experiment = \"multiplier-check\"\nseed = 5\n");
    let mut tables = Vec::new();
    for seed in ["5", "6"] {
        let o = dir.path().join(seed);
        let out = qclab(&["run", &cfg, "--out", o.to_str().unwrap(), "--grid", "256", "--seed", seed]);
        assert_eq!(out.status.code(), Some(0));
        tables.push(std::fs::read(o.join("tables").join("multiplier-check.csv")).unwrap());
    }
    assert_ne!(tables[0], tables[1]);
}
