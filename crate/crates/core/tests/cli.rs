use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const DEPLOYED_MU: f64 = 0.510_825_623_765_990_7;

fn pns(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pns"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path
}

fn decoy_config(dir: &TempDir, attack: &str) -> PathBuf {
    let body = format!(
        r#"{{
  "source": {{"decoy": [
    {{"mean": 0.5, "weight": 0.7}},
    {{"mean": 0.1, "weight": 0.2}},
    {{"mean": 0.002, "weight": 0.1}}
  ]}},
  "transmittance": 0.1,
  "attack": "{attack}",
  "trials": 1000000,
  "seed": 7
}}"#
    );
    write_config(dir, &format!("{attack}.json"), &body)
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn analytic_reports_four_db_leak() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "a.json",
        &format!(r#"{{"source": {{"poisson": {DEPLOYED_MU}}}, "loss_db": 4}}"#),
    );
    let out = pns(&["analytic", "--config", arg(&cfg), "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let leak = rows[0]["spns_leak_threshold"].as_f64().unwrap();
    assert!((leak - 0.337).abs() < 0.002, "{leak}");

    let table = stdout(&pns(&["analytic", "--config", arg(&cfg)]));
    assert!(table.contains("0.336925"), "{table}");
}

#[test]
fn simulate_flags_original_pns_but_not_spns() {
    let dir = TempDir::new().unwrap();
    for (attack, expected) in [("spns", true), ("original_pns", false)] {
        let cfg = decoy_config(&dir, attack);
        let out = pns(&["simulate", "--config", arg(&cfg), "--format", "json"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        assert_eq!(report["decoy_test_passed"], expected, "{attack}");
    }
}

#[test]
fn csv_output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = decoy_config(&dir, "spns");
    let paths: Vec<PathBuf> = (0..2).map(|i| dir.path().join(format!("run{i}.csv"))).collect();
    for p in &paths {
        let out = pns(&[
            "simulate",
            "--config",
            arg(&cfg),
            "--trials",
            "100000",
            "--format",
            "csv",
            "--out",
            arg(p),
        ]);
        assert!(out.status.success());
    }
    let a = fs::read(&paths[0]).unwrap();
    assert_eq!(a, fs::read(&paths[1]).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "intensity,pulses,detections,yield,expected_yield,z,sifted,errors,qber,eve_known,leak_fraction"
    );
    assert_eq!(text.lines().count(), 4);

    let other = stdout(&pns(&[
        "simulate",
        "--config",
        arg(&cfg),
        "--trials",
        "100000",
        "--seed",
        "8",
        "--format",
        "csv",
    ]));
    assert_ne!(other, text);
}

#[test]
fn configured_output_files_are_written() {
    let dir = TempDir::new().unwrap();
    let json = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    let body = format!(
        r#"{{"source": {{"poisson": 0.5}}, "transmittance": 0.1, "attack": "spns", "trials": 20000,
            "output": {{"json": "{}", "csv": "{}"}}}}"#,
        json.display(),
        csv.display()
    );
    let cfg = write_config(&dir, "o.json", &body);
    assert!(pns(&["simulate", "--config", arg(&cfg)]).status.success());
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["pulses"], 20000);
    assert!(fs::read_to_string(&csv).unwrap().starts_with("intensity,"));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad = write_config(&dir, "bad.json", r#"{"source": {"poisson": -1}, "loss_db": 4}"#);
    let out = pns(&["analytic", "--config", arg(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("source.poisson"));

    let unknown = write_config(
        &dir,
        "unknown.json",
        r#"{"source": {"poisson": 0.5}, "loss_db": 4, "los_db": 3}"#,
    );
    assert_eq!(pns(&["analytic", "--config", arg(&unknown)]).status.code(), Some(2));

    let both = write_config(
        &dir,
        "both.json",
        r#"{"source": {"poisson": 0.5}, "loss_db": 4, "transmittance": 0.1}"#,
    );
    assert_eq!(pns(&["simulate", "--config", arg(&both)]).status.code(), Some(2));

    assert_eq!(
        pns(&["simulate", "--config", "/no/such/file.json"]).status.code(),
        Some(2)
    );
    assert_eq!(pns(&["simulate"]).status.code(), Some(2));

    let good = write_config(&dir, "good.json", r#"{"source": {"poisson": 0.5}, "loss_db": 4}"#);
    let unwritable = dir.path().join("missing").join("out.csv");
    let out = pns(&["analytic", "--config", arg(&good), "--out", arg(&unwritable)]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn reproduce_published_figures() {
    let out = pns(&["reproduce-paper", "--trials", "200000", "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for row in rows {
        let analytic = row["analytic"].as_f64().unwrap();
        let published = row["published"].as_f64().unwrap();
        assert!((analytic - published).abs() < 0.01, "{row}");
    }
    let table = stdout(&pns(&["reproduce-paper", "--trials", "100000"]));
    assert!(table.contains("38.5%"), "{table}");
}
