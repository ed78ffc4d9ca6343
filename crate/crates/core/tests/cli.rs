use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pool_contract::cli::export::load_levels;
use pool_contract::cli::manifest::{recorded_sha256, sha256_hex};
use pool_contract::{build_all, PoolParams, SolverSettings};

const REFERENCE: &str = "\
# reference pool
I=3
mu=1
B=0.1
epsilon=0.5
r=0.05
alpha=0.25,0.25,0.25
";

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pool-contract"))
        .args(args)
        .output()
        .expect("spawn")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn check_passes_and_fails_with_margins() {
    let tmp = tempfile::tempdir().unwrap();
    let good = write_config(tmp.path(), "good.cfg", REFERENCE);
    let out = cli(&["check", "--config", s(&good)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("overall=pass"));

    let bad = write_config(tmp.path(), "bad.cfg", &REFERENCE.replace("B=0.1", "B=0.6"));
    let out = cli(&["check", "--config", s(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    let line = text
        .lines()
        .find(|l| l.contains("A2") && l.starts_with("FAIL"))
        .unwrap();
    let margin: f64 = line.rsplit("margin=").next().unwrap().parse().unwrap();
    assert!(margin < 0.0, "{line}");
}

#[test]
fn parse_and_io_failures_exit_three() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_config(tmp.path(), "bad.cfg", &format!("{REFERENCE}colour=blue\n"));
    let out = cli(&["check", "--config", s(&bad)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout(&out).contains("line 8"));

    let short = write_config(
        tmp.path(),
        "short.cfg",
        &REFERENCE.replace("0.25,0.25,0.25", "0.25"),
    );
    let out = cli(&["solve", "--config", s(&short)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout(&out).contains("expected I = 3"));

    let missing = tmp.path().join("nope.cfg");
    assert_eq!(
        cli(&["solve", "--config", s(&missing)]).status.code(),
        Some(3)
    );
    assert_eq!(cli(&["solve"]).status.code(), Some(3));
}

#[test]
fn solve_rejects_infeasible_pool() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_config(tmp.path(), "bad.cfg", &REFERENCE.replace("B=0.1", "B=0.6"));
    let out = cli(&["solve", "--config", s(&bad), "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn solve_writes_tables_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "ref.cfg", REFERENCE);
    let dir = tmp.path().join("out");
    let out = cli(&["solve", "--config", s(&cfg), "--out", s(&dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));

    let values = std::fs::read_to_string(dir.join("value_functions.csv")).unwrap();
    let row = values
        .lines()
        .filter(|l| l.starts_with("2,"))
        .map(|l| l.split(',').collect::<Vec<_>>())
        .find(|c| (c[1].parse::<f64>().unwrap() - 1.6).abs() < 1e-12)
        .expect("row at the level-2 cap");
    assert!((row[2].parse::<f64>().unwrap() - 6.08).abs() < 1e-6);
    assert_eq!(row[5], "linear-high");

    let bounds = std::fs::read_to_string(dir.join("boundaries.csv")).unwrap();
    let gamma2: f64 = bounds
        .lines()
        .nth(2)
        .unwrap()
        .split(',')
        .nth(3)
        .unwrap()
        .parse()
        .unwrap();
    assert!((gamma2 - 1.6).abs() < 1e-12);

    let manifest = std::fs::read_to_string(dir.join("manifest.txt")).unwrap();
    assert_eq!(
        recorded_sha256(&manifest),
        Some(sha256_hex(values.as_bytes()).as_str())
    );
    assert!(manifest.contains("config.alpha=0.25,0.25,0.25\n"));
    assert!(manifest.contains("solver.quad_tol=0.0000000001\n"));

    // a second run, once from the manifest, gives identical tables
    let again = tmp.path().join("again");
    let out = cli(&[
        "solve",
        "--manifest",
        s(&dir.join("manifest.txt")),
        "--out",
        s(&again),
    ]);
    assert_eq!(out.status.code(), Some(0));
    for f in ["value_functions.csv", "boundaries.csv"] {
        assert_eq!(
            std::fs::read(dir.join(f)).unwrap(),
            std::fs::read(again.join(f)).unwrap()
        );
    }
}

#[test]
fn export_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "ref.cfg", REFERENCE);
    let dir = tmp.path().join("plot");
    let out = cli(&["export", "--config", s(&cfg), "--out", s(&dir)]);
    assert_eq!(out.status.code(), Some(0));
    for j in 1..=3 {
        assert!(dir.join(format!("level_{j}.csv")).exists());
    }
    let values = std::fs::read_to_string(dir.join("value_functions.csv")).unwrap();
    let bounds = std::fs::read_to_string(dir.join("boundaries.csv")).unwrap();
    let levels = load_levels(&values, &bounds).unwrap();

    let vf = build_all(&PoolParams::reference(), &SolverSettings::default()).unwrap();
    for (loaded, solved) in levels.iter().zip(&vf.levels) {
        for &u in &solved.grid {
            assert!((loaded.value(u) - vf.eval(solved.j, u).unwrap()).abs() <= 1e-9);
        }
        let mid: Vec<f64> = solved
            .grid
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect();
        for u in mid {
            assert!((loaded.value(u) - solved.value(u)).abs() <= 1e-12);
        }
    }
}

#[test]
fn single_loan_export_has_one_transition() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "one.cfg",
        "I=1\nmu=1\nB=0.1\nepsilon=0.5\nr=0.05\nalpha=0.25\n",
    );
    let dir = tmp.path().join("plot");
    assert_eq!(
        cli(&["export", "--config", s(&cfg), "--out", s(&dir)])
            .status
            .code(),
        Some(0)
    );
    let text = std::fs::read_to_string(dir.join("level_1.csv")).unwrap();
    let regions: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap())
        .collect();
    assert_eq!(regions, ["linear-low", "linear-high"]);
    let u: f64 = text
        .lines()
        .nth(2)
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!((u - 0.8).abs() < 1e-15);
    assert!(!dir.join("level_2.csv").exists());
}

#[test]
fn patient_simulation_hits_first_best() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "patient.cfg",
        &REFERENCE.replace("r=0.05", "r=0"),
    );
    let out = cli(&[
        "simulate",
        "--config",
        s(&cfg),
        "--paths",
        "100000",
        "--seed",
        "5",
    ]);
    let text = stdout(&out);
    assert_eq!(out.status.code(), Some(0), "{text}");
    let line = text.lines().find(|l| l.starts_with("investor ")).unwrap();
    let target: f64 = line
        .split("target=")
        .nth(1)
        .unwrap()
        .split(' ')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((target - 9.6).abs() < 1e-9, "{line}");
    assert!(text.contains("result=pass"));
}

#[test]
fn simulate_writes_events() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "ref.cfg", REFERENCE);
    let dir = tmp.path().join("sim");
    let out = cli(&[
        "simulate",
        "--config",
        s(&cfg),
        "--out",
        s(&dir),
        "--paths",
        "200",
        "--u0",
        "1.2",
        "--events",
    ]);
    assert!(matches!(out.status.code(), Some(0) | Some(2)));
    let events = std::fs::read_to_string(dir.join("events.csv")).unwrap();
    let mut lines = events.lines();
    assert_eq!(
        lines.next(),
        Some("path_index,event_time,level_before,event,u_before,u_after")
    );
    let liquidations = lines.filter(|l| l.contains(",default-liquidated,")).count();
    assert_eq!(liquidations, 200);
    assert!(std::fs::read_to_string(dir.join("simulate.txt"))
        .unwrap()
        .contains("paths=200"));
}

#[test]
fn ictest_reports_profiles() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "ref.cfg",
        &format!("{REFERENCE}shirk=1,1,0\nn_paths=50000\n"),
    );
    let out = cli(&["ictest", "--config", s(&cfg)]);
    let text = stdout(&out);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.contains("profile=configured shirk=1,1,0"));
    assert!(text.contains("profile=full shirk=3,2,1"));
}
