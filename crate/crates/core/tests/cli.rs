//! The `gpm` binary: headers, exit codes and manifest round trips.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gpm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn header(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

/// Experiment, parameters, and `(file suffix, header)` per data file.
type Case = (
    &'static str,
    &'static str,
    &'static [(&'static str, &'static str)],
);

const CASES: &[Case] = &[
    (
        "fock-ideal",
        r#"{"n_t": [9, 16], "N": 3}"#,
        &[("", "n_t,N,round,multiplier,duration_ns,elapsed_ns,fidelity,success_prob,cumulative_prob")],
    ),
    (
        "fock-noisy",
        r#"{"n_t": 4, "N": 2, "kappa": [1e4]}"#,
        &[("", "protocol,n_t,N,kappa,round,duration_ns,elapsed_ns,fidelity,success_prob,cumulative_prob")],
    ),
    (
        "dispersive-compare",
        r#"{"n_t": 4, "N": 2, "kappa": 1e4}"#,
        &[
            ("_resonant", "protocol,n_t,N,kappa,round,duration_ns,elapsed_ns,fidelity,success_prob,cumulative_prob"),
            ("_dispersive", "protocol,n_t,N,kappa,round,duration_ns,elapsed_ns,fidelity,success_prob,cumulative_prob"),
        ],
    ),
    (
        "fock-scaling",
        r#"{"n_t": [16, 64]}"#,
        &[("", "n_t,threshold,min_rounds,log2_sqrt_n_t")],
    ),
    (
        "dicke-ideal",
        r#"{"M": [10, 20], "N": 3}"#,
        &[("", "M,N,round,ancilla,xi,duration_ns,elapsed_ns,fidelity,success_prob,cumulative_prob")],
    ),
    (
        "dicke-scaling",
        r#"{"M": [50, 100]}"#,
        &[("", "M,threshold,min_rounds,log2_sqrt_M")],
    ),
    ("qfi-sweep", r#"{"M": [10, 20], "N": 2}"#, &[("", "M,N,qfi,ideal_qfi,fidelity")]),
];

#[test]
fn list_names_every_experiment() {
    let out = gpm(&["list-experiments"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for (name, _, _) in CASES {
        assert!(
            text.lines().any(|l| l.starts_with(name)),
            "{name} missing from\n{text}"
        );
    }
}

#[test]
fn golden_headers_and_reproducible_manifests() {
    let dir = tempfile::tempdir().unwrap();
    for (name, params, files) in CASES {
        let body = format!(
            r#"{{"experiment": "{name}", "parameters": {params}, "output_path": "{name}.csv"}}"#
        );
        let config = write_config(dir.path(), &format!("{name}.json"), &body);
        let first = dir.path().join("first");
        let out = gpm(&["run", "--config", &config, "--out", first.to_str().unwrap()]);
        assert!(
            out.status.success(),
            "{name}: {}",
            String::from_utf8_lossy(&out.stderr)
        );

        for (suffix, expected) in *files {
            assert_eq!(
                header(&first.join(format!("{name}{suffix}.csv"))),
                *expected,
                "{name}{suffix}"
            );
        }

        // Feeding the manifest back must reproduce every data file exactly.
        let manifest = first.join(format!("{name}.manifest.json"));
        let second = dir.path().join("second");
        let out = gpm(&[
            "run",
            "--config",
            manifest.to_str().unwrap(),
            "--out",
            second.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{name}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        for (suffix, _) in *files {
            let file = format!("{name}{suffix}.csv");
            assert_eq!(
                fs::read(first.join(&file)).unwrap(),
                fs::read(second.join(&file)).unwrap(),
                "{file} differs on re-run"
            );
        }
    }
}

#[test]
fn validate_prints_resolved_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "c.json",
        r#"{"experiment": "fock-noisy", "parameters": {"n_t": 100, "N": 7, "kappa": [1e3, 5e3]}}"#,
    );
    let out = gpm(&["validate", "--config", &config, "--set", "gamma=2e5"]);
    assert!(out.status.success());
    let resolved: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(resolved["parameters"]["gamma"], 2e5);
    assert_eq!(resolved["parameters"]["gamma_phi"], 1e5);
    assert_eq!(resolved["parameters"]["g"], 1e8);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = [
        r#"{"experiment": "fock-ideal", "parameters": {"n_t": 100}}"#,
        r#"{"experiment": "fock-ideal", "parameters": {"n_t": 100, "N": 5, "bogus": 1}}"#,
        r#"{"experiment": "warp-drive", "parameters": {}}"#,
        r#"{"experiment": "fock-noisy", "parameters": {"n_t": 100, "N": 7, "kappa": -5}}"#,
        "{ not json",
    ];
    for (i, body) in bad.iter().enumerate() {
        let config = write_config(dir.path(), &format!("bad{i}.json"), body);
        for sub in ["validate", "run"] {
            let out = gpm(&[sub, "--config", &config]);
            assert_eq!(out.status.code(), Some(2), "{sub} {body}");
            assert!(!out.stderr.is_empty());
        }
    }
    let missing = dir.path().join("absent.json");
    assert_eq!(
        gpm(&["validate", "--config", missing.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    let ok = write_config(
        dir.path(),
        "ok.json",
        r#"{"experiment": "fock-ideal", "parameters": {"n_t": 4, "N": 1}}"#,
    );
    assert_eq!(
        gpm(&["run", "--config", &ok, "--set", "N"]).status.code(),
        Some(2)
    );
    assert_eq!(
        gpm(&["run", "--config", &ok, "--jobs", "0"]).status.code(),
        Some(2)
    );
}

#[test]
fn run_failures_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "c.json",
        r#"{"experiment": "fock-ideal", "parameters": {"n_t": 4, "N": 1}}"#,
    );
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = gpm(&[
        "run",
        "--config",
        &config,
        "--out",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
