//! Runs every checked-in fuzz seed through its parser.

use std::fs;
use std::path::PathBuf;

use policylearn::config::ExperimentConfig;
use policylearn::env::parse_classification_csv;
use policylearn::io::{parse_logged, parse_results};
use policylearn::treepolicy::TreePolicy;

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|entry| {
            let path = entry.unwrap().path();
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            (name, fs::read(&path).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn tree_seeds_round_trip() {
    for (name, data) in seeds("parse_tree") {
        let text = String::from_utf8(data).unwrap();
        let tree: TreePolicy = text.parse().unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(tree.to_string(), text, "{name}");
    }
}

#[test]
fn logged_seeds() {
    for (name, data) in seeds("parse_logged") {
        let parsed = parse_logged(data.as_slice());
        assert_eq!(parsed.is_ok(), !name.starts_with("bad_"), "{name}: {parsed:?}");
    }
}

#[test]
fn config_seeds() {
    for (name, data) in seeds("parse_config") {
        let cfg = ExperimentConfig::parse(std::str::from_utf8(&data).unwrap());
        assert!(cfg.is_ok(), "{name}: {cfg:?}");
    }
}

#[test]
fn classification_seeds() {
    for (name, data) in seeds("parse_classification") {
        let split = data.iter().position(|&b| b == b'\n').unwrap();
        let label = std::str::from_utf8(&data[..split]).unwrap();
        let env = parse_classification_csv(&data[split + 1..], label);
        assert!(env.is_ok(), "{name}: {env:?}");
    }
}

#[test]
fn results_seeds() {
    for (name, data) in seeds("parse_results") {
        assert!(parse_results(data.as_slice()).is_ok(), "{name}");
    }
}
