#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

/// Scenario grid of the equal-size study.
pub const SCENARIOS: [(&str, [f64; 5]); 6] = [
    ("S1", [0.15, 0.15, 0.15, 0.15, 0.15]),
    ("S2", [0.15, 0.15, 0.15, 0.30, 0.30]),
    ("S3", [0.15, 0.30, 0.30, 0.30, 0.30]),
    ("S4", [0.15, 0.30, 0.30, 0.45, 0.45]),
    ("S5", [0.15, 0.45, 0.45, 0.45, 0.45]),
    ("S6", [0.30, 0.30, 0.30, 0.30, 0.30]),
];

/// Five baskets of 25 with one futility look after 10 patients.
pub fn equal_config(method: &str, replicates: usize, seed: u64) -> String {
    let baskets: Vec<String> = (1..=5)
        .map(|k| format!(r#"{{"name": "{k}", "n_max": 25, "looks": [{{"size": 10, "futility_max_responses": 1}}]}}"#))
        .collect();
    let scenarios: Vec<String> = SCENARIOS
        .iter()
        .map(|(name, orr)| format!(r#"{{"name": "{name}", "orr": {orr:?}}}"#))
        .collect();
    format!(
        r#"{{
  "design": {{"baskets": [{}], "p0": 0.15, "alpha": 0.1}},
  "method": {method},
  "prior": {{"b1": 0.15, "b2": 0.85}},
  "scenarios": [{}],
  "run": {{"M": {replicates}, "seed": {seed}}}
}}
"#,
        baskets.join(", "),
        scenarios.join(", ")
    )
}

pub fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

pub fn basketsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_basketsim"))
        .args(args)
        .env_remove("BASKETSIM_WORKERS")
        .output()
        .expect("binary runs")
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}
