use std::fs;
use std::process::Command;

use freightsim::cli::run;

fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("freightsim").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn write_config(dir: &tempfile::TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn modes_list_shows_provenance() {
    let (code, out, _) = run_cli(&["modes", "list"]);
    assert_eq!(code, 0);
    assert!(out.contains("auto_iwt"));
    assert!(out.contains("0.0276"));
    // every mode is followed by its provenance line
    assert_eq!(out.lines().filter(|l| l.starts_with("    ")).count(), 10);

    let (code, json, _) = run_cli(&["modes", "list", "--json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["modes"].as_array().unwrap().len(), 10);
}

#[test]
fn sensitivity_defaults() {
    let (code, out, _) = run_cli(&["sensitivity"]);
    assert_eq!(code, 0);
    let row = out
        .lines()
        .find(|l| l.trim_start().starts_with("6%"))
        .expect("6% row");
    assert_eq!(row.split_whitespace().nth(1), Some("2025"));

    let (code, json, _) = run_cli(&["sensitivity", "--json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["cells"][2][0], 2025);
    assert_eq!(v["cells"].as_array().unwrap().len(), 4);
}

#[test]
fn sensitivity_custom_axes() {
    let (code, out, _) = run_cli(&["sensitivity", "--multiples", "1.0", "--deltas", "0.01,0.05"]);
    assert_eq!(code, 0);
    assert_eq!(out.matches("2018").count(), 2, "{out}");
}

#[test]
fn calibrate_prints_adjusted_cost() {
    let (code, out, _) = run_cli(&[
        "calibrate",
        "--value",
        "1.766",
        "--rate",
        "0.055",
        "--from",
        "2016",
        "--to",
        "2017",
    ]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "1.669");

    let (code, _, err) = run_cli(&[
        "calibrate",
        "--value",
        "1.0",
        "--rate",
        "0.05",
        "--from",
        "2017",
        "--to",
        "2016",
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("to_year"), "{err}");
}

#[test]
fn usage_errors() {
    let (code, _, err) = run_cli(&["simulate", "--bogus"]);
    assert_eq!(code, 2);
    assert!(err.contains("Usage"), "{err}");
    let (code, _, _) = run_cli(&[]);
    assert_eq!(code, 2);
    let (code, out, _) = run_cli(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("sensitivity"));
}

#[test]
fn simulate_writes_artifacts_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        "s.json",
        r#"{"name": "cli", "seed": 42, "iterations": 5, "end_year": 2022, "enabled_modes": ["ocean", "truck"]}"#,
    );
    let csv_a = dir.path().join("a.csv");
    let csv_b = dir.path().join("b.csv");
    let svg = dir.path().join("a.svg");
    let (code, out, err) = run_cli(&[
        "simulate",
        "--config",
        &cfg,
        "--out-csv",
        csv_a.to_str().unwrap(),
        "--out-svg",
        svg.to_str().unwrap(),
        "--focus",
        "ocean",
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("25 records"), "{out}");
    let (code, _, _) = run_cli(&[
        "simulate",
        "--config",
        &cfg,
        "--out-csv",
        csv_b.to_str().unwrap(),
        "--workers",
        "3",
    ]);
    assert_eq!(code, 0);

    let a = fs::read(&csv_a).unwrap();
    assert_eq!(a, fs::read(&csv_b).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 26);
    assert!(
        text.starts_with("scenario,year,replicate,trip_cost_usd,n_legs,frac_ocean,frac_truck\n")
    );
    assert!(!text.contains('\r'));
    roxmltree::Document::parse(&fs::read_to_string(&svg).unwrap()).unwrap();
}

#[test]
fn simulate_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = dir.path().join("x.csv");
    let out_csv = out_csv.to_str().unwrap();

    let cfg = write_config(
        &dir,
        "bad.json",
        r#"{"enabled_modes": ["ocean"], "end_year": 2010}"#,
    );
    let (code, _, err) = run_cli(&["simulate", "--config", &cfg, "--out-csv", out_csv]);
    assert_eq!(code, 1);
    assert!(err.contains("end_year"), "{err}");

    let cfg = write_config(
        &dir,
        "typo.json",
        r#"{"enabled_modes": ["ocean"], "iteratons": 3}"#,
    );
    let (code, _, err) = run_cli(&["simulate", "--config", &cfg, "--out-csv", out_csv]);
    assert_eq!(code, 1);
    assert!(err.contains("iteratons"), "{err}");

    let missing = dir.path().join("missing.json");
    let (code, _, _) = run_cli(&[
        "simulate",
        "--config",
        missing.to_str().unwrap(),
        "--out-csv",
        out_csv,
    ]);
    assert_eq!(code, 1);

    let cfg = write_config(
        &dir,
        "ok.json",
        r#"{"enabled_modes": ["ocean"], "iterations": 1, "end_year": 2018}"#,
    );
    let svg = dir.path().join("x.svg");
    let (code, _, err) = run_cli(&[
        "simulate",
        "--config",
        &cfg,
        "--out-csv",
        out_csv,
        "--out-svg",
        svg.to_str().unwrap(),
        "--focus",
        "air",
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("air"), "{err}");
}

#[test]
fn crossover_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        "c.json",
        r#"{"seed": 3, "iterations": 40, "enabled_modes": ["air"]}"#,
    );
    let (code, out, err) = run_cli(&["crossover", "--config", &cfg, "--mode", "ocean", "--json"]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["auto_mode"], "auto_ocean");
    assert_eq!(v["deterministic_year"], 2024);
    assert_eq!(v["basis"].as_array().unwrap().len(), 33);

    let (code, out, _) = run_cli(&["crossover", "--config", &cfg, "--mode", "ocean"]);
    assert_eq!(code, 0);
    assert!(out.contains("deterministic crossover: 2024"), "{out}");

    let (code, _, err) = run_cli(&["crossover", "--config", &cfg, "--mode", "hovercraft"]);
    assert_eq!(code, 1);
    assert!(err.contains("hovercraft"), "{err}");
}

#[test]
fn binary_runs() {
    let out = Command::new(env!("CARGO_BIN_EXE_freightsim"))
        .args([
            "calibrate",
            "--value",
            "0.058",
            "--rate",
            "0.019",
            "--from",
            "2005",
            "--to",
            "2017",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "0.04607");

    let out = Command::new(env!("CARGO_BIN_EXE_freightsim"))
        .arg("nonsense")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
