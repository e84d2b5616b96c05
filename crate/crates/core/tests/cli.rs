use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use wkbsplit::harness::{presets, read_csv, CSV_HEADER};

fn wkbsplit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wkbsplit"))
        .args(args)
        .env("RUST_LOG", "warn")
        .env("WKBSPLIT_THREADS", "2")
        .output()
        .unwrap()
}

fn small_config(dir: &Path, t_final: Option<f64>) -> String {
    let mut cfg = presets::smoothed1d();
    cfg.name = Some("small".into());
    cfg.grid.n = vec![128];
    cfg.eps = vec![0.5];
    cfg.steps = vec![4, 8, 16];
    cfg.t_final = t_final;
    cfg.snapshots = true;
    let path = dir.join("small.json");
    fs::write(&path, cfg.to_json()).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn run_writes_table_plots_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), None);
    let out = dir.path().join("out");
    let res = wkbsplit(&["run", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));

    let csv = out.join("results.csv");
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    assert_eq!(read_csv(&csv).unwrap().len(), 3);
    assert!(out.join("err_amp.svg").exists());
    assert!(out.join("config.json").exists());
    assert!(!out.join("failures.txt").exists());
    let snaps: Vec<_> = fs::read_dir(out.join("snapshots")).unwrap().collect();
    assert_eq!(snaps.len(), 3 * 4);

    let orders = wkbsplit(&["orders", csv.to_str().unwrap()]);
    assert_eq!(orders.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&orders.stdout);
    assert!(stdout.starts_with("eps,metric,order,constant,r2"));
    assert!(stdout.lines().any(|l| l.starts_with("0.5,err_amp,")));
}

#[test]
fn identical_configs_give_identical_tables() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), None);
    let table = |name: &str| {
        let out = dir.path().join(name);
        let res = wkbsplit(&["run", &config, "--out", out.to_str().unwrap()]);
        assert_eq!(res.status.code(), Some(0));
        read_csv(out.join("results.csv"))
            .unwrap()
            .into_iter()
            .map(|mut r| {
                r.walltime_s = 0.0;
                r
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(table("a"), table("b"));
}

#[test]
fn guard_trips_in_every_cell_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), Some(50.0));
    let out = dir.path().join("out");
    let res = wkbsplit(&["run", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3));
    let failures = fs::read_to_string(out.join("failures.txt")).unwrap();
    assert_eq!(failures.lines().count(), 3);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"grid": {"n": [64], "length": [8.0]}, "bogus": 1}"#).unwrap();
    assert_eq!(wkbsplit(&["run", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(wkbsplit(&["run", "--scenario", "nope"]).status.code(), Some(2));
    let threads = Command::new(env!("CARGO_BIN_EXE_wkbsplit"))
        .args(["presets"])
        .env("WKBSPLIT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(threads.status.code(), Some(2));
}

#[test]
fn presets_list_and_show() {
    let list = wkbsplit(&["presets"]);
    let names: Vec<String> = String::from_utf8_lossy(&list.stdout).lines().map(str::to_owned).collect();
    assert_eq!(names, presets::NAMES);
    let shown = wkbsplit(&["presets", "--show", "harmonic-linear"]);
    let cfg = wkbsplit::harness::ScenarioConfig::from_json(&String::from_utf8_lossy(&shown.stdout)).unwrap();
    assert_eq!(cfg, presets::harmonic_linear());
}
