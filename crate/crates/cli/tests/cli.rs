use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_railbridge");

const REFERENCE_CONFIG: &str =
    "gamma1 = 0.2\ngamma23 = 0.054\nalpha = 0.2\neta_d = 0.03\neta = 0.5\norder = \"exact\"\ncutoff = 2\n";

fn run(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("RAILBRIDGE_SEED");
    if let Some(s) = seed_env {
        cmd.env("RAILBRIDGE_SEED", s);
    }
    cmd.output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args, None);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn schema_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(format!("{name}.v1.json"))
}

fn assert_schema(name: &str, doc: &Value) {
    let schema = read_json(&schema_path(name));
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{name}: {errors:?}");
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("error report on stderr");
    let v: Value = serde_json::from_str(line).expect("stderr is JSON");
    assert_schema("error", &v);
    v
}

fn dir(t: &TempDir, name: &str) -> String {
    t.path().join(name).display().to_string()
}

fn write(t: &TempDir, name: &str, text: &str) -> String {
    let p = t.path().join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn fock_json(n: usize, cutoff: usize) -> String {
    let d = cutoff + 1;
    let re: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| f64::from(u8::from(i == n && j == n))).collect())
        .collect();
    let im = vec![vec![0.0; d]; d];
    serde_json::json!({ "labels": ["B.V"], "cutoff": cutoff, "re": re, "im": im }).to_string()
}

#[test]
fn simulate_default_is_exact_teleportation() {
    let t = TempDir::new().unwrap();
    let out = dir(&t, "sim");
    ok(&["simulate", "--out", &out]);
    let doc = read_json(&Path::new(&out).join("simulate.json"));
    assert_schema("simulate", &doc);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 6);
    assert!((doc["mean_fidelity"].as_f64().unwrap() - 1.0).abs() < 5e-4);
    let manifest = read_json(&Path::new(&out).join("manifest.json"));
    assert_schema("manifest", &manifest);
    assert_eq!(manifest["outputs"], serde_json::json!(["simulate.json"]));
}

#[test]
fn simulate_exact_order_degrades_fidelity() {
    let t = TempDir::new().unwrap();
    let cfg = write(&t, "reference.toml", REFERENCE_CONFIG);
    let out = dir(&t, "sim");
    ok(&["simulate", "--config", &cfg, "--out", &out]);
    let mean = read_json(&Path::new(&out).join("simulate.json"))["mean_fidelity"]
        .as_f64()
        .unwrap();
    assert!((0.87..=0.97).contains(&mean), "{mean}");
}

#[test]
fn missing_key_is_named() {
    let t = TempDir::new().unwrap();
    let cfg = write(&t, "c.toml", &REFERENCE_CONFIG.replace("gamma1 = 0.2\n", ""));
    let out = run(&["simulate", "--config", &cfg, "--out", &dir(&t, "o")], None);
    assert!(!out.status.success());
    let err = stderr_json(&out);
    assert_eq!(err["error"], "missing_keys");
    assert_eq!(err["keys"], serde_json::json!(["gamma1"]));
}

#[test]
fn unknown_keys_are_named() {
    let t = TempDir::new().unwrap();
    let cfg = write(&t, "c.toml", &format!("{REFERENCE_CONFIG}gama = 1\n"));
    let out = run(&["rates", "--config", &cfg, "--out", &dir(&t, "o")], None);
    assert!(!out.status.success());
    assert_eq!(stderr_json(&out)["keys"], serde_json::json!(["gama"]));
}

#[test]
fn flag_overrides_are_validated() {
    let t = TempDir::new().unwrap();
    let out = run(&["simulate", "--eta-d", "1.5", "--out", &dir(&t, "o")], None);
    assert!(!out.status.success());
    assert_eq!(stderr_json(&out)["keys"], serde_json::json!(["eta_d"]));
}

#[test]
fn reconstruct_rejects_empty_csv() {
    let t = TempDir::new().unwrap();
    let csv = write(&t, "empty.csv", "");
    let out = run(&["reconstruct", "--input", &csv, "--out", &dir(&t, "o")], None);
    assert!(!out.status.success());
    assert_eq!(stderr_json(&out)["line"], 1);

    let csv = write(&t, "header.csv", "theta_rad,x\n");
    let out = run(&["reconstruct", "--input", &csv, "--out", &dir(&t, "o")], None);
    assert!(!out.status.success());
    assert_eq!(stderr_json(&out)["error"], "empty_dataset");
}

#[test]
fn reconstruct_reports_bad_line() {
    let t = TempDir::new().unwrap();
    let csv = write(&t, "bad.csv", "theta_rad,x\n0.1,0.5\n0.2,1,5\n");
    let out = run(&["reconstruct", "--input", &csv, "--out", &dir(&t, "o")], None);
    assert!(!out.status.success());
    assert_eq!(stderr_json(&out)["line"], 3);
}

#[test]
fn wigner_of_single_photon_dips_at_origin() {
    let t = TempDir::new().unwrap();
    let state = write(&t, "one.json", &fock_json(1, 4));
    let out = dir(&t, "w");
    ok(&["wigner", "--state", &state, "--out", &out, "--grid-points", "41"]);
    let csv = fs::read_to_string(Path::new(&out).join("wigner.csv")).unwrap();
    let rows: Vec<[f64; 3]> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            [v[0], v[1], v[2]]
        })
        .collect();
    assert_eq!(rows.len(), 41 * 41);
    let min = rows.iter().min_by(|a, b| a[2].total_cmp(&b[2])).unwrap();
    assert!(min[0].abs() < 1e-12 && min[1].abs() < 1e-12);
    assert!((min[2] + 1.0 / PI).abs() < 1e-8);
}

#[test]
fn sample_then_reconstruct_round_trip() {
    let t = TempDir::new().unwrap();
    let state = write(&t, "one.json", &fock_json(1, 4));
    let s = dir(&t, "s");
    ok(&[
        "sample",
        "--state",
        &state,
        "--samples",
        "20000",
        "--seed",
        "5",
        "--eta",
        "0.6",
        "--out",
        &s,
    ]);
    let csv = Path::new(&s).join("quadratures.csv");
    assert!(fs::read_to_string(&csv).unwrap().starts_with("theta_rad,x\n"));
    let r = dir(&t, "r");
    ok(&[
        "reconstruct",
        "--input",
        csv.to_str().unwrap(),
        "--eta",
        "0.6",
        "--out",
        &r,
    ]);
    let doc = read_json(&Path::new(&r).join("reconstruction.json"));
    assert_schema("reconstruction", &doc);
    assert_schema("density", &doc);
    assert_eq!(doc["diagnostics"]["eta_used"], 0.6);
    let p1 = doc["re"][1][1].as_f64().unwrap();
    assert!(p1 > 0.95, "{p1}");
}

#[test]
fn outputs_are_deterministic_and_seeded() {
    let t = TempDir::new().unwrap();
    let state = write(&t, "one.json", &fock_json(1, 2));
    let sample = |name: &str, seed: Option<&str>, env: Option<&str>| {
        let out = dir(&t, name);
        let mut args = vec![
            "sample",
            "--state",
            state.as_str(),
            "--samples",
            "50",
            "--out",
            out.as_str(),
        ];
        if let Some(s) = seed {
            args.extend(["--seed", s]);
        }
        let o = run(&args, env);
        assert!(o.status.success());
        fs::read(Path::new(&out).join("quadratures.csv")).unwrap()
    };
    let a = sample("a", Some("9"), None);
    assert_eq!(a, sample("b", Some("9"), None));
    assert_eq!(a, sample("c", None, Some("9")));
    assert_eq!(a, sample("d", Some("9"), Some("4")));
    assert_ne!(a, sample("e", None, Some("4")));
}

#[test]
fn invalid_seed_env_is_an_error() {
    let t = TempDir::new().unwrap();
    let out = run(&["rates", "--out", &dir(&t, "o")], Some("seven"));
    assert!(!out.status.success());
    assert_eq!(stderr_json(&out)["keys"], serde_json::json!(["RAILBRIDGE_SEED"]));
}

#[test]
fn rates_report_matches_count_arithmetic() {
    let t = TempDir::new().unwrap();
    let out = dir(&t, "r");
    ok(&["rates", "--out", &out]);
    let doc = read_json(&Path::new(&out).join("rates.json"));
    assert_schema("rates", &doc);
    let r = &doc["rates"];
    assert!((r["eta_d"].as_f64().unwrap() - 0.030).abs() < 1e-12);
    assert!((r["gamma1"].as_f64().unwrap() - 0.20).abs() < 0.005);
    assert!((r["gamma23"].as_f64().unwrap() - 0.054).abs() < 0.005);
    assert!((r["predicted_triple_rate"].as_f64().unwrap() - 0.12).abs() < 0.01);
}

#[test]
fn usage_errors_are_json() {
    let out = run(&["simulate", "--order", "sideways"], None);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "usage");
}

#[test]
fn pipeline_agrees_with_protocol_oracle() {
    let t = TempDir::new().unwrap();
    let cfg = write(&t, "reference.toml", REFERENCE_CONFIG);
    let out = dir(&t, "p");
    ok(&["pipeline", "--config", &cfg, "--out", &out]);
    let doc = read_json(&Path::new(&out).join("pipeline.json"));
    assert_schema("pipeline", &doc);
    let manifest = read_json(&Path::new(&out).join("manifest.json"));
    assert_schema("manifest", &manifest);
    for name in manifest["outputs"].as_array().unwrap() {
        assert!(Path::new(&out).join(name.as_str().unwrap()).is_file());
    }
    for row in doc["teleport"]["rows"].as_array().unwrap() {
        let f = |k: &str| row[k].as_f64().unwrap();
        let (sim, cor, err) = (f("simulated_fidelity"), f("fidelity_corrected"), f("error"));
        assert!(
            (cor - sim).abs() <= 3.0 * err,
            "{}: {cor} vs {sim} ± {err}",
            row["input"]
        );
        assert!(f("fidelity_uncorrected") < sim + 3.0 * err);
    }
    let swap = &doc["swap"];
    assert_eq!(swap["corrected"]["entangled"], true);
    assert_eq!(swap["uncorrected"]["entangled"], true);

    let again = dir(&t, "p2");
    ok(&["pipeline", "--config", &cfg, "--out", &again]);
    assert_eq!(
        fs::read(Path::new(&out).join("pipeline.json")).unwrap(),
        fs::read(Path::new(&again).join("pipeline.json")).unwrap()
    );
}
