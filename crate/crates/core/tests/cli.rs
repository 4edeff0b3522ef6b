//! The `smale-lab` binary: exit codes and output layout.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use smale_lab::config::RunConfig;

fn out_dir(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("smale-lab-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smale-lab")).arg("--out-dir").arg(dir).args(args).output().unwrap()
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap_or_default().to_string()
}

#[test]
fn describe_prints_constants() {
    let d = out_dir("describe");
    let o = run(&d, &["describe"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["backend"], "sft");
    assert_eq!(v["lambda"], 2.0);
    assert!(d.join("describe.json").exists());
}

#[test]
fn torus_preset_describes() {
    let d = out_dir("torus");
    let o = run(&d, &["--preset", "golden-torus", "describe"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["backend"], "torus");
}

#[test]
fn covers_table_layout() {
    let d = out_dir("covers");
    let o = run(&d, &["covers", "--depth", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(first_line(&d.join("covers.csv")).starts_with("n,count,diam,leb_lower_bound,multiplicity"));
    assert_eq!(fs::read_to_string(d.join("covers.csv")).unwrap().lines().count(), 6);
}

#[test]
fn sample_is_keyed_by_cell() {
    let d = out_dir("sample");
    let o = run(&d, &["sample", "--max-level", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("sample.json")).unwrap()).unwrap();
    let m = v.as_object().unwrap();
    // 1 + 2 + 5 + 13 cells of the golden mean shift.
    assert_eq!(m.len(), 21);
    assert!(m.contains_key("1:0") && m.contains_key("1:1"));
}

#[test]
fn verify_table_layout() {
    let d = out_dir("verify");
    let o = run(&d, &["verify", "quasi-invariance", "--nmax", "8", "--j", "1"]);
    assert!(matches!(o.status.code(), Some(0) | Some(1)));
    assert_eq!(first_line(&d.join("quasi_invariance.csv")), "series,n,measured,closed_form,residual,window_exact");
    let o = run(&d, &["verify", "groupoid-lemmas"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn config_file_is_used() {
    let d = out_dir("config");
    let mut cfg = RunConfig::torus([[2, 1], [1, 1]]);
    cfg.out_dir = d.clone();
    let path = d.join("run.json");
    fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_smale-lab")).arg("--config").arg(&path).arg("describe").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["backend"], "torus");
    assert!(d.join("describe.json").exists());
}

#[test]
fn bad_input_exits_two() {
    let d = out_dir("bad");
    let path = d.join("bad.json");
    fs::write(&path, r#"{"nope": 1}"#).unwrap();
    assert_eq!(run(&d, &["--config", path.to_str().unwrap(), "describe"]).status.code(), Some(2));
    assert_eq!(run(&d, &["--config", d.join("missing.json").to_str().unwrap(), "describe"]).status.code(), Some(2));
    assert_eq!(run(&d, &["verify", "bogus"]).status.code(), Some(2));
    assert_eq!(run(&d, &["frobnicate"]).status.code(), Some(2));
}

#[test]
fn non_hyperbolic_matrix_is_rejected() {
    let d = out_dir("elliptic");
    let mut cfg = RunConfig::torus([[1, 1], [1, 1]]);
    cfg.out_dir = d.clone();
    let path = d.join("run.json");
    fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_smale-lab")).arg("--config").arg(&path).arg("describe").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
