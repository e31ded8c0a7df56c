use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use verbum_core::lexicon::Lexicon;
use verbum_core::rasch::{RaschFit, ResponseMatrix};

fn verbum(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_verbum"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn data(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "data", name].iter().collect();
    p.to_str().unwrap().to_string()
}

#[test]
fn default_lexicon_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let out = verbum(dir.path(), &["lexicon", "default", "-k", "3", "--owner", "zed"]);
    assert_eq!(out.status.code(), Some(0));
    let lex: Lexicon = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(lex, Lexicon::default_lexicon(3).unwrap().with_owner("zed"));
}

#[test]
fn invalid_lexicon_exits_one_with_json_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let bad = r#"{"owner": "x", "labels": [
        {"name": "hi", "meaning": {"a": 0.6, "b": 0.7, "c": 0.8, "d": 0.9}},
        {"name": "lo", "meaning": {"a": 0.0, "b": 0.1, "c": 0.2, "d": 0.3}}]}"#;
    std::fs::write(dir.path().join("bad.json"), bad).unwrap();
    let out = verbum(dir.path(), &["lexicon", "validate", "bad.json"]);
    assert_eq!(out.status.code(), Some(1));
    let diag: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(diag["message"].as_str().is_some(), "{diag}");

    let out = verbum(dir.path(), &["bayes", "run", "--kind", "psychic"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn ambiguous_argument_exits_two_until_resolved() {
    let dir = tempfile::tempdir().unwrap();
    let (arg, q) = (data("argument.json"), data("quantifiers.json"));
    let out = verbum(dir.path(), &["argue", "eval", &arg, "--quantifiers", &q]);
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["outcome"], "pending");
    assert_eq!(v["ambiguities"][0]["senses"].as_array().unwrap().len(), 2);

    let out = verbum(dir.path(), &["argue", "eval", &arg, "--quantifiers", &q, "--resolve", "w1=0.7,0.7,0.7,0.7"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["claim"]["b"].as_f64().unwrap(), 0.9 * 0.7 * 0.5);
}

#[test]
fn simulate_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    let out = verbum(dir.path(), &["rasch", "simulate", "--subjects", "80", "--items", "6", "--seed", "4", "-o", "m.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let m = ResponseMatrix::read_csv(std::fs::File::open(dir.path().join("m.csv")).unwrap()).unwrap();
    assert_eq!((m.subjects(), m.items()), (80, 6));
    let out = verbum(dir.path(), &["rasch", "fit", "m.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let f: RaschFit = serde_json::from_slice(&out.stdout).unwrap();
    assert!(f.converged);
    // items were generated easiest first
    assert!(f.difficulties.first() < f.difficulties.last());
}

#[test]
fn bayes_and_plot_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = verbum(
        dir.path(),
        &["bayes", "run", "--trials", "10", "--draws", "5", "--kind", "bayesian", "--kind", "conservative:0.5", "-o", "b.csv"],
    );
    assert_eq!(out.status.code(), Some(0));
    let table = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    assert!(table.starts_with("step,kind,mean_abs_deviation\n"));
    assert_eq!(table.lines().count(), 1 + 2 * 5);
    assert!(table.contains("1,bayesian,0.0\n"));

    let out = verbum(dir.path(), &["plot", "b.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("series,x,y\n"));
    assert!(csv.contains("conservative(0.5),5,"));
}
