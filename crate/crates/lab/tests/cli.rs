use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn piggyback(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_piggyback"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn analytic_defaults_to_progress_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out = piggyback(dir.path(), &["analytic", "--out", "rate.csv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("rate.csv")).unwrap();
    assert!(csv.starts_with("alpha,rate\n"), "{csv}");
    assert!(csv.contains("\n0.5,0.5\n"));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("rate.json")).unwrap()).unwrap();
    assert_eq!(json["kind"], "analytic");
    assert_eq!(json["spec_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn figures_write_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = piggyback(dir.path(), &["figure", "fig4", "--out", "figs/fig4.csv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("figs/fig4.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("q,n_for_0.9,n_for_0.99,n_for_0.999"));
    assert_eq!(csv.lines().count(), 32);
    assert!(dir.path().join("figs/fig4.json").exists());

    let out = piggyback(
        dir.path(),
        &["figure", "fig2", "--seeds", "2", "--horizon", "20000", "--out", "fig2.csv"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("fig2.json")).unwrap()).unwrap();
    assert_eq!(json["seeds"], serde_json::json!([0, 1]));
    assert!(json["aggregates"]["max_abs_error"].as_f64().unwrap() < 0.05);
}

#[test]
fn unknown_figure_exits_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = piggyback(dir.path(), &["figure", "fig9"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("fig9"));
}

#[test]
fn config_errors_cite_the_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.conf"),
        "# two pools\npool.0.strategy = SELFISH\npool.0.power = 0.5\npool.1.strategy = HONEST\npool.1.power = 0.6\n",
    )
    .unwrap();
    let out = piggyback(dir.path(), &["simulate", "--config", "bad.conf"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("line 5"), "{err}");
    assert!(err.contains("powers sum to 1.1"), "{err}");

    fs::write(dir.path().join("typo.conf"), "pool.0.strategy = SELFSH\npool.0.power = 1\n").unwrap();
    let out = piggyback(dir.path(), &["simulate", "--config", "typo.conf"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 1"), "{}", stderr(&out));
}

#[test]
fn simulate_reports_one_row_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.conf"),
        "seeds_per_point = 3\nhorizon = 5000\npool.0.strategy = SELFISH\npool.0.power = 0.3\npool.1.strategy = HONEST\npool.1.power = 0.7\n",
    )
    .unwrap();
    let out = piggyback(dir.path(), &["simulate", "--config", "run.conf", "--seed", "9"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("simulate.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("9,5000,"), "{}", lines[1]);
    assert!(lines[3].starts_with("11,5000,"), "{}", lines[3]);
}

#[test]
fn resilience_and_maxrev_print_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = piggyback(dir.path(), &["resilience", "0.2", "--strategy", "honest"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "0.5");
    let out = piggyback(dir.path(), &["resilience", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = piggyback(dir.path(), &["maxrev", "0.4", "0.5"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("0.4 "));
}
