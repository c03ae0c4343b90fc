use std::path::Path;
use std::process::{Command, Output};

use wncs::config::SystemConfig;
use wncs::engine::{Engine, EngineOptions};
use wncs::metrics::MetricsReport;

fn wncs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wncs")).args(args).output().unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn solve_matches_library() {
    let out = wncs(&["solve", "--engine", "geo-mg"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# wncs "));
    let rows = csv_rows(&text);
    let r = MetricsReport::evaluate(&SystemConfig::default(), Engine::GeoMg, &EngineOptions::default()).unwrap();
    assert_eq!(rows[0][7], "coma");
    assert_eq!(rows[1][0], "geo-mg");
    assert_eq!(rows[1][7].parse::<f64>().unwrap(), r.coma);
    assert_eq!(rows[1][5].parse::<f64>().unwrap(), r.aoa[0].value());
}

#[test]
fn erlang_at_zero_load() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "z.conf", "gen_prob_1 = 0\ngen_prob_2 = 0\n");
    let out = wncs(&["solve", "--engine", "erlang", "--config", &cfg]);
    assert!(out.status.success());
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows[1][3], "1");
    assert_eq!(rows[1][4], "1");
    assert_eq!(rows[1][7], "0");
    assert_eq!(rows[1][5], "inf");
}

#[test]
fn exit_codes_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    let bad_syntax = write(dir.path(), "a.conf", "capacity = twelve\n");
    let bad_value = write(dir.path(), "b.conf", "gen_prob_1 = 1.2\n");
    let huge = write(dir.path(), "c.conf", "capacity = 40\nservice_slots_1 = 30\nservice_slots_2 = 30\n");

    assert_eq!(wncs(&["solve", "--config", &bad_syntax]).status.code(), Some(3));
    assert_eq!(wncs(&["solve", "--config", "/nonexistent/x.conf"]).status.code(), Some(3));
    assert_eq!(wncs(&["solve", "--config", &bad_value]).status.code(), Some(4));
    let resource = wncs(&["solve", "--engine", "det", "--config", &huge, "--state-cap", "10000"]);
    assert_eq!(resource.status.code(), Some(6));
    assert!(String::from_utf8_lossy(&resource.stderr).contains("10000"));
    assert_eq!(wncs(&["solve", "--engine", "nope"]).status.code(), Some(2));

    let broke = write(dir.path(), "d.conf", "energy_rate = 0\n");
    let empty = wncs(&["pareto", "--config", &broke, "--grid-powers", "3", "--grid-admit", "3"]);
    assert_eq!(empty.status.code(), Some(7));
}

#[test]
fn dump_matrix_writes_states_and_triplets() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("geo");
    let out = wncs(&["solve", "--engine", "geo-direct", "--dump-matrix", prefix.to_str().unwrap()]);
    assert!(out.status.success());
    let states = std::fs::read_to_string(dir.path().join("geo.states")).unwrap();
    let triplets = std::fs::read_to_string(dir.path().join("geo.triplets")).unwrap();
    assert_eq!(states.lines().filter(|l| !l.starts_with('#')).count(), 15);
    assert!(triplets.starts_with("# row col value\n"));
}

#[test]
fn compare_single_point_row_count() {
    let out = wncs(&["compare", "--points", "1", "--g2-min", "0.05", "--slots", "20000"]);
    assert!(out.status.success());
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    // header + 6 models x 2 tasks
    assert_eq!(rows.len(), 13);
    assert_eq!(rows[0], ["g1", "g2", "model", "task", "blocking", "blocking_se", "det_le_geo"]);
    assert!(rows[1..].iter().all(|r| r[6] == "true"));
}

#[test]
fn sweep_single_point() {
    let out = wncs(&["sweep", "--points", "1", "--eta-min", "1.0", "--no-sim"]);
    assert!(out.status.success());
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 4);
    assert!(rows[1..].iter().all(|r| r[0] == "1"));
}

#[test]
fn simulate_seed_flag_changes_output() {
    let a = wncs(&["simulate", "--slots", "30000", "--seed", "5"]);
    let b = wncs(&["simulate", "--slots", "30000", "--seed", "6"]);
    assert!(a.status.success() && b.status.success());
    assert_ne!(a.stdout, b.stdout);
    let rows = csv_rows(&String::from_utf8(a.stdout).unwrap());
    assert_eq!(rows[1][0], "5");
    assert_eq!(rows[1][6], "end-of-slot");
}
