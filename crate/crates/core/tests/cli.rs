//! End-to-end runs of the `vqc-lab` binary.

use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_vqc-lab");

fn vqc_lab(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn run_with(dir: &Path, sub: &str, config: &str, extra: &[&str]) -> Output {
    let cfg = write_config(dir, config);
    let out = dir.to_string_lossy().into_owned();
    let mut args = vec![sub, "--config", &cfg, "--out", &out];
    args.extend_from_slice(extra);
    vqc_lab(&args)
}

#[test]
fn unknown_config_key_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with(dir.path(), "tail", "n_values = [4]\nbogus_key = 1\n", &[]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus_key"));
}

#[test]
fn invalid_values_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with(dir.path(), "design", "n_values = [9]\n", &[]);
    assert_eq!(o.status.code(), Some(2));
    let o = vqc_lab(&["tail", "--format", "png", "--out", &dir.path().to_string_lossy()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn csv_header_is_exact_and_reruns_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "n_values = [4, 5]\nseeds = 3\nm_values = [8, 16]\n";
    let o = run_with(dir.path(), "spread", cfg, &["--seed", "17"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let first = std::fs::read(dir.path().join("spread.csv")).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    assert_eq!(text.lines().next(), Some("experiment,n,m,model,seed,statistic,value,stderr"));
    let o = run_with(dir.path(), "spread", cfg, &["--seed", "17", "--jobs", "1"]);
    assert!(o.status.success());
    assert_eq!(std::fs::read(dir.path().join("spread.csv")).unwrap(), first);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("spread.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"], 17);
}

#[test]
fn fig4_svg_and_single_point_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "n_values = [5]\ndepth = 3\ntensor_depth = 3\nseeds = 2\nm_values = [1, 8, 16]\n";
    let o = run_with(dir.path(), "fig4", cfg, &["--format", "svg"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let svg = std::fs::read_to_string(dir.path().join("fig4.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 3);

    let o = run_with(dir.path(), "fig4", cfg, &[]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("fig4.csv")).unwrap();
    let ones: Vec<&str> = csv.lines().filter(|l| l.contains(",5,1,") && l.contains(",variance_mean,")).collect();
    assert_eq!(ones.len(), 3);
    for line in ones {
        assert_eq!(line.split(',').nth(6), Some("0"), "{line}");
    }
}

#[test]
fn tail_frequency_vanishes_beyond_the_output_range() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with(dir.path(), "tail", "n_values = [4, 6]\nepsilons = [0.1, 2.0]\ntrials = 500\n", &["--format", "json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("tail.json")).unwrap()).unwrap();
    let rows = table["rows"].as_array().unwrap();
    let beyond: Vec<_> = rows.iter().filter(|r| r["statistic"] == "exceedance_eps_2").collect();
    assert_eq!(beyond.len(), 2);
    assert!(beyond.iter().all(|r| r["value"] == 0.0));
}

#[test]
fn printed_paths_exist() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with(dir.path(), "concentration", "n_values = [3, 4]\ntrials = 100\n", &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    let paths: Vec<&str> = stdout.lines().collect();
    assert_eq!(paths.len(), 2);
    assert!(paths.iter().all(|p| Path::new(p).exists()));
}
