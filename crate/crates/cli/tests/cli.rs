use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_continuant-lab"));
    c.env_remove("CONTINUANT_LAB_CACHE");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn dimension_reports_delta() {
    let v = json(&["dimension", "--alphabet", "1,2"]);
    assert!((v["delta"].as_f64().unwrap() - 0.5312805062772051).abs() < 1e-10);
    assert_eq!(v["nodes"], 64);
    assert!(v["residual"].as_f64().unwrap() < 1e-10);
    assert!(v["seconds"].is_null());
    assert!(
        json(&["dimension", "--alphabet", "1,2", "--timing"])["seconds"]
            .as_f64()
            .unwrap()
            >= 0.0
    );
    assert_eq!(v["header"]["seed"], 20_240_101);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(
        run(&["dimension", "--alphabet", "1,2", "--frobnicate"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["nonsense"]).status.code(), Some(2));
    assert_eq!(run(&["dimension", "--alphabet", "0,2"]).status.code(), Some(2));
    assert_eq!(
        run(&["dimension", "--alphabet", "1,2", "--tol", "1e-15"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["qmc", "zn", "--b", "4", "--d", "8"]).status.code(), Some(2));
    assert_eq!(
        run(&["qmc", "disc", "--in", "/nonexistent/points.csv"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["dimension", "--alphabet", "1,2", "--format", "csv"])
            .status
            .code(),
        Some(2)
    );
    // exact discrepancy is capped
    assert_eq!(
        run(&["qmc", "disc", "--b", "3", "--d", "20000"]).status.code(),
        Some(3)
    );
    assert_eq!(
        run(&["modular", "closure", "--alphabet", "1,2", "--q", "20000"])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn exceptions_example() {
    let out = run(&["exceptions", "--alphabet", "1,2,3,4", "--N", "200"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows, ["d", "6", "54", "150"]);
}

#[test]
fn files_carry_headers_and_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |p: &Path, threads: &str| {
        vec![
            "enumerate".to_string(),
            "mult".into(),
            "--alphabet".into(),
            "1..3".into(),
            "--N".into(),
            "5000".into(),
            "--threads".into(),
            threads.into(),
            "--out".into(),
            p.to_str().unwrap().into(),
        ]
    };
    assert!(bin().args(args(&a, "1")).status().unwrap().success());
    assert!(bin().args(args(&b, "4")).status().unwrap().success());
    let text = read(&a);
    assert_eq!(text, read(&b));
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        format!("# continuant-lab {}", env!("CARGO_PKG_VERSION"))
    );
    assert!(lines
        .next()
        .unwrap()
        .starts_with("# config: {\"command\":{\"enumerate\""));
    assert_eq!(lines.next().unwrap(), "# seed: 20240101");
    assert!(text.lines().any(|l| l == "d,count"));
}

#[test]
fn sampled_runs_depend_only_on_the_seed() {
    let go = |seed: &str, threads: &str| {
        run(&[
            "ensemble",
            "--alphabet",
            "1,2",
            "--N",
            "100000",
            "--sample",
            "50",
            "--seed",
            seed,
            "--threads",
            threads,
        ])
        .stdout
    };
    let first = go("5", "1");
    assert_eq!(first, go("5", "3"));
    assert_ne!(first, go("6", "1"));
    let v: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(v["all_ok"], true);
    assert_eq!(v["check"]["samples"], 50);

    let disc = |seed: &str| {
        json(&[
            "qmc",
            "disc",
            "--b",
            "13",
            "--d",
            "20011",
            "--sampled",
            "--columns",
            "16",
            "--seed",
            seed,
        ])
    };
    let (x, y) = (disc("1"), disc("1"));
    assert_eq!(x, y);
    assert_eq!(x["exact"], false);
}

#[test]
fn points_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("points.csv");
    let out = run(&[
        "qmc",
        "zn",
        "--b",
        "34",
        "--d",
        "55",
        "--out",
        p.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = read(&p);
    let first = text.lines().find(|l| !l.starts_with('#') && *l != "x,y").unwrap();
    // 17 significant digits, exact round trip
    let x = first.split(',').next().unwrap();
    let mantissa = x.split('e').next().unwrap();
    assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
    assert_eq!(x.parse::<f64>().unwrap(), 1.0 / 55.0);
    let from_file = json(&["qmc", "disc", "--in", p.to_str().unwrap()]);
    let direct = json(&["qmc", "disc", "--b", "34", "--d", "55"]);
    assert_eq!(from_file["star_discrepancy"], direct["star_discrepancy"]);
    assert!(direct["star_discrepancy"].as_f64().unwrap() <= direct["zaremba_bound"].as_f64().unwrap());
}

#[test]
fn cache_memoizes_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let go = || {
        let out = Command::new(env!("CARGO_BIN_EXE_continuant-lab"))
            .args(["dimension", "--alphabet", "1,3"])
            .env("CONTINUANT_LAB_CACHE", dir.path())
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    let first = go();
    let cache = dir.path().join("dimension.json");
    let stored: Value = serde_json::from_str(&read(&cache)).unwrap();
    assert_eq!(stored.as_object().unwrap().len(), 1);
    assert_eq!(go(), first);
    // a corrupt cache is ignored
    std::fs::write(&cache, "not json").unwrap();
    assert_eq!(go(), first);
}

#[test]
fn modular_examples() {
    let v = json(&["modular", "closure", "--alphabet", "2,4,6,8,10", "--q", "4"]);
    assert_eq!(v["attainable_d"], serde_json::json!([0, 1, 2]));
    assert_eq!(v["full"], false);
    let s = json(&["modular", "sseries", "--n", "30030", "--P", "100000"]);
    assert!(s["value"].as_f64().unwrap() > 0.0);
    let nu = json(&["modular", "nu", "--q", "2", "--a", "1"]);
    assert_eq!(nu["exact"], "-1/3");
    let adm = json(&["modular", "admissible", "--alphabet", "2,4,6,8,10", "--d", "7"]);
    assert_eq!(adm["admissible"], false);
    assert_eq!(adm["witness"], 4);
}

#[test]
fn cf_commands() {
    let v = json(&["cf", "expand", "--fraction", "3535/4547"]);
    assert_eq!(v["word"], serde_json::json!([1, 3, 2, 35, 1, 1, 1, 4]));
    assert_eq!(v["max_quotient"], 35);
    let m = json(&["cf", "matrix", "--word", "[1,3,2]"]);
    assert_eq!(m["determinant"], "-1");
    assert_eq!(m["fraction"], "7/9");
}

#[test]
fn expsum_profile_example() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("arcs.csv");
    let out = run(&[
        "expsum",
        "profile",
        "--alphabet",
        "1,2",
        "--N",
        "100000",
        "--Q",
        "8",
        "--K",
        "4",
        "--out",
        p.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = read(&p);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "Q,K,measure,mass,ratio");
    // Q in {2,4,8} times K in {0,1,2,4}
    assert_eq!(rows.len(), 1 + 12);
    let r = json(&["expsum", "repr", "--alphabet", "1,2", "--N", "3000"]);
    assert_eq!(r["agree"], true);
}

#[test]
fn repro_fig7_writes_both_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "repro",
        "fig7",
        "--N",
        "1000",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let mult = read(&dir.path().join("mult.csv"));
    let norm = read(&dir.path().join("normalized.csv"));
    assert!(mult.contains("d,count,trend") && norm.contains("d,normalized"));
    let data = |t: &str| t.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(data(&mult), 998);
    assert_eq!(data(&norm), 998);
    // every d in [2, 1000) is attained
    assert!(mult
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with('d'))
        .all(|l| l.split(',').nth(1).unwrap() != "0"));
}

#[test]
fn repro_small_figures() {
    let dir = tempfile::tempdir().unwrap();
    for fig in ["fig2", "fig5", "fig8"] {
        let out = run(&["repro", fig, "--N", "2000", "--out", dir.path().to_str().unwrap()]);
        assert!(out.status.success(), "{fig}");
    }
    let fig2 = read(&dir.path().join("fig2.csv"));
    assert_eq!(fig2.lines().filter(|l| !l.starts_with('#')).count(), 1 + 4547);
    assert!(dir.path().join("fig5.csv").exists() && dir.path().join("fig8.csv").exists());
}
