use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cdma-paging"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = "carriers = [{pop = 5}, {pop = 5}]\nmu = 1\nhorizon = 5000\nseed = 3\n";

#[test]
fn erlang_command() {
    let v = json(&run(&[
        "erlang",
        "--load",
        "7",
        "--channels",
        "14",
        "--mu",
        "1",
    ]));
    assert_eq!(v["awd"].as_f64().unwrap(), 1.0 / 7.0);
    assert!((v["awa"].as_f64().unwrap() - v["p_delay"].as_f64().unwrap() / 7.0).abs() < 1e-15);

    let v = json(&run(&[
        "erlang",
        "--load",
        "0.0001",
        "--channels",
        "14",
        "--mu",
        "1",
    ]));
    assert!(v["p_delay"].as_f64().unwrap() < 1e-30);

    let out = run(&["erlang", "--load", "15", "--channels", "14", "--mu", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("unstable: offered load exceeds channels"));
    assert_eq!(err.trim().lines().count(), 1);
}

#[test]
fn markov_command() {
    let v = json(&run(&["markov", "--pop", "5,5"]));
    assert_eq!(v["expected_steps"].as_f64().unwrap(), 1.5);
    let v = json(&run(&["markov", "--pop", "9"]));
    assert_eq!(v["expected_steps"].as_f64().unwrap(), 1.0);
    let v = json(&run(&["markov", "--pop", "5,3,2"]));
    assert!((v["expected_steps"].as_f64().unwrap() - 1.7).abs() < 1e-12);
    assert_eq!(v["absorption"].as_array().unwrap().len(), 3);

    assert_eq!(run(&["markov", "--pop", "0,0"]).status.code(), Some(2));
    assert_eq!(run(&["markov", "--pop", "x"]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        run(&["erlang", "--load", "abc", "--channels", "3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn compare_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", SMALL);
    let out = dir.path().join("out.csv");
    let res = run(&[
        "compare",
        "--config",
        &cfg,
        "--lambda-grid",
        "0.5,3,6.5",
        "--simulate",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );

    let mut reader = csv::Reader::from_path(&out).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, cdma_paging::sweep::CSV_COLUMNS);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    // 3 lambdas x 2 scenarios x {analytic, sim}
    assert_eq!(rows.len(), 12);
    for r in &rows {
        let load: f64 = r[7].parse().unwrap();
        let channels: f64 = r[3].parse().unwrap();
        assert_eq!(&r[18] == "true", load >= channels);
        if &r[8] == "sim" {
            assert!(!r[14].is_empty(), "sim rows carry CI half-widths");
            assert!(!r[19].is_empty());
        }
    }

    let manifest: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out.csv.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["config_digest"].as_str().unwrap().len(), 64);
    assert!(manifest["timestamp"].as_str().unwrap().ends_with('Z'));
}

#[test]
fn compare_flags_unstable_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", SMALL);
    let res = run(&["compare", "--config", &cfg, "--lambda-grid", "8"]);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    let seq = text.lines().find(|l| l.contains(",sequential,")).unwrap();
    let conc = text.lines().find(|l| l.contains(",concurrent,")).unwrap();
    assert!(seq.contains(",true,"));
    assert!(conc.contains(",false,"));
}

#[test]
fn compare_low_load_shape() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", SMALL);
    let res = run(&["compare", "--config", &cfg, "--lambda-grid", "0.0001"]);
    let mut reader = csv::Reader::from_reader(res.stdout.as_slice());
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    let t = |scenario: &str| -> f64 {
        rows.iter().find(|r| &r[4] == scenario).unwrap()[12]
            .parse()
            .unwrap()
    };
    assert!((t("sequential") - 1.0).abs() < 1e-9);
    assert!((t("concurrent") - 1.5).abs() < 1e-9);
}

#[test]
fn config_errors_exit_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        "carriers = [{pop = 5}]\nmu = 1\nspeed = 2\n",
    );
    let out = dir.path().join("out.csv");
    let res = run(&[
        "compare",
        "--config",
        &cfg,
        "--lambda-grid",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8(res.stderr).unwrap().contains("speed"));
    assert!(!out.exists());

    let good = write_config(dir.path(), "good.toml", SMALL);
    let res = run(&["compare", "--config", &good, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2), "missing grid");
    assert!(!out.exists());

    let res = run(&[
        "compare",
        "--config",
        "/nonexistent/x.toml",
        "--lambda-grid",
        "1",
    ]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_internal_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", SMALL);
    let out = dir.path().join("missing-dir").join("out.csv");
    let res = run(&[
        "compare",
        "--config",
        &cfg,
        "--lambda-grid",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn json_config_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        r#"{"carriers":[{"pop":5},{"pop":5}],"mu":1,"lambda_grid":[1,2],"scenarios":["concurrent"]}"#,
    );
    let res = run(&["compare", "--config", &cfg]);
    assert!(res.status.success());
    assert_eq!(String::from_utf8(res.stdout).unwrap().lines().count(), 3);
}

#[test]
fn simulate_command() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", SMALL);
    let v = json(&run(&[
        "simulate",
        "--config",
        &cfg,
        "--lambda",
        "1",
        "--scenario",
        "concurrent",
        "--mode",
        "mechanistic",
    ]));
    assert_eq!(v["scenario"], "concurrent");
    let pages = v["stats"]["pages_per_user_hat"].as_f64().unwrap();
    assert!((1.0..=2.0).contains(&pages));

    let a = run(&["simulate", "--config", &cfg, "--lambda", "5"]);
    let b = run(&["simulate", "--config", &cfg, "--lambda", "5"]);
    let stats = |o: &Output| json(o)["stats"].clone();
    assert_eq!(stats(&a), stats(&b));

    assert_eq!(run(&["simulate", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(
        run(&[
            "simulate",
            "--config",
            &cfg,
            "--lambda",
            "1",
            "--horizon",
            "1"
        ])
        .status
        .code(),
        Some(2)
    );
}
