use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn rmvqe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rmvqe")).args(args).output().unwrap()
}

fn run(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    rmvqe(&args)
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn stderr_error(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().rev().find(|l| l.contains("\"error\"")).unwrap_or_else(|| panic!("no error json in {text}"));
    serde_json::from_str(line).unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// The H2 config rewritten into `dir`, with `edit` applied to the text.
fn edited_config(dir: &Path, edit: impl Fn(String) -> String) -> PathBuf {
    let text = std::fs::read_to_string(fixture("h2_run.toml")).unwrap();
    let text = text.replace(
        "integrals = \"h2_scattering.fcidump\"",
        &format!("integrals = {:?}", fixture("h2_scattering.fcidump").to_str().unwrap()),
    );
    let path = dir.join("run.toml");
    std::fs::write(&path, edit(text)).unwrap();
    path
}

#[test]
fn validate_config_reports_the_layout() {
    let tmp = TempDir::new().unwrap();
    let v = stdout_json(&run("validate-config", &fixture("h2_run.toml"), tmp.path(), &[]));
    assert_eq!(v["valid"], true);
    assert_eq!(v["n_qubits"], 7);
    assert_eq!(v["trials"], 5);
    assert_eq!(v["n_params"], 10);
    assert_eq!(v["sector_size"], 5);
    assert_eq!(v["eigenstate_qubits"], serde_json::json!([6]));
    assert!(v["measurement_budget"]["subspace"].as_u64() < v["measurement_budget"]["variance"].as_u64());
}

#[test]
fn full_pipeline_writes_every_document() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path();
    let config = fixture("h2_run.toml");
    let target = stdout_json(&run("solve-target", &config, out, &[]));
    assert_eq!(target["blocks"].as_array().unwrap().len(), 2);
    assert!(out.join("target.json").exists() && out.join("trace_target_ag.csv").exists());

    let summary = stdout_json(&run("solve-scattering", &config, out, &[]));
    assert_eq!(summary["kind"], "subspace");
    assert!(summary["max_abs_error"].as_f64().unwrap() < 1e-7);
    assert_eq!(summary, read_json(&out.join("summary.json")));
    let solution = read_json(&out.join("solution.json"));
    assert_eq!(solution["channels"], serde_json::json!(["G", "U", "D1", "D2"]));
    let trace = std::fs::read_to_string(out.join("trace_subspace.csv")).unwrap();
    assert_eq!(trace.lines().count() as u64, 1 + solution["evaluations"].as_u64().unwrap());

    let r = stdout_json(&run("rmatrix", &config, out, &[]));
    assert_eq!(r["rows"], 100);
    assert_eq!(r["skipped"], 0);
    let csv = std::fs::read_to_string(out.join("rmatrix.csv")).unwrap();
    assert_eq!(csv.lines().count(), 101);
    assert_eq!(csv.lines().next().unwrap().split(',').count(), 17);
    let poles = read_json(&out.join("poles.json"));
    assert_eq!(poles["poles"], solution["energies"]);

    let oracle = stdout_json(&run("oracle-spectrum", &config, out, &[]));
    assert_eq!(oracle["energies"], summary["oracle_energies"]);
    assert_eq!(oracle["sector"].as_array().unwrap().len(), 5);
}

#[test]
fn every_cost_flag_runs() {
    let tmp = TempDir::new().unwrap();
    let config = fixture("h2_run.toml");
    for cost in ["variance", "folded", "sum-variance"] {
        let s = stdout_json(&run("solve-scattering", &config, tmp.path(), &["--cost", cost]));
        assert_eq!(s["kind"], cost);
        assert!(s["max_abs_error"].as_f64().unwrap() < 1e-7, "{cost}");
        assert!(tmp.path().join(format!("trace_{cost}.csv")).exists());
    }
}

#[test]
fn exhausted_budget_exits_3_with_a_trace() {
    let tmp = TempDir::new().unwrap();
    let config = fixture("h2_run.toml");
    stdout_json(&run("solve-target", &config, tmp.path(), &[]));
    let o = run("solve-scattering", &config, tmp.path(), &["--max-evals", "20"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_error(&o)["error"]["kind"], "convergence");
    let trace = std::fs::read_to_string(tmp.path().join("trace_subspace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 21);
}

#[test]
fn input_problems_exit_4() {
    let tmp = TempDir::new().unwrap();
    let o = run("validate-config", &tmp.path().join("absent.toml"), tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(4));

    let config = edited_config(tmp.path(), |t| {
        t.replace(
            &format!("{:?}", fixture("h2_scattering.fcidump").to_str().unwrap()),
            "\"missing.fcidump\"",
        )
    });
    let o = run("validate-config", &config, tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(stderr_error(&o)["error"]["kind"], "read");

    // rmatrix without a solution, then with a corrupt one
    let config = fixture("h2_run.toml");
    let o = run("rmatrix", &config, tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(4));
    std::fs::write(tmp.path().join("solution.json"), "{\"kind\": 1}").unwrap();
    let o = run("rmatrix", &config, tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(stderr_error(&o)["error"]["kind"], "document");
}

#[test]
fn config_problems_exit_2() {
    let tmp = TempDir::new().unwrap();
    let cases: [(&str, &str); 4] = [
        ("seed = 0", "seed = 0\nunknown_key = 1"),
        ("n_target_electrons = 2", "n_target_electrons = 3"),
        ("trial = \"G\"", "trial = \"Z\""),
        ("energy_tolerance = 1e-12", "energy_tolerance = -1.0"),
    ];
    for (from, to) in cases {
        let config = edited_config(tmp.path(), |t| t.replacen(from, to, 1));
        let o = run("validate-config", &config, tmp.path(), &[]);
        assert_eq!(o.status.code(), Some(2), "{to}: {}", String::from_utf8_lossy(&o.stderr));
        stderr_error(&o);
    }
    // clap rejects unknown cost names before any work is done
    let o = run("solve-scattering", &fixture("h2_run.toml"), tmp.path(), &["--cost", "energy"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seeded_perturbation_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let config = edited_config(tmp.path(), |t| t.replace("seed = 0", "seed = 0\nperturbation = 0.1"));
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let sa = stdout_json(&run("solve-scattering", &config, &a, &["--seed", "5"]));
    let sb = stdout_json(&run("solve-scattering", &config, &b, &["--seed", "5"]));
    assert_eq!(sa, sb);
    let sc = stdout_json(&run("solve-scattering", &config, &b, &["--seed", "6"]));
    assert_ne!(sa["energies"], sc["energies"]);
    assert!(sc["max_abs_error"].as_f64().unwrap() < 1e-7);
}
