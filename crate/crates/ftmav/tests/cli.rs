use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ftmav::config::{GridBlock, Mode};
use ftmav::scenarios::{healthy_tracking, planning_mission};
use ftmav::ScenarioConfig;
use tempfile::TempDir;

fn ftmav(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ftmav")).args(args).current_dir(dir).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write_config(dir: &Path, name: &str, cfg: &ScenarioConfig) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, cfg.to_json()).unwrap();
    path
}

fn short_sim() -> ScenarioConfig {
    let mut c = healthy_tracking();
    c.sim.duration = 0.5;
    c
}

#[test]
fn help_succeeds_and_bad_usage_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&ftmav(&["--help"], dir.path())), 0);
    assert_eq!(code(&ftmav(&["frobnicate"], dir.path())), 2);
    let cfg = write_config(dir.path(), "c.json", &short_sim());
    let o = ftmav(&["analyze-controllability", cfg.to_str().unwrap(), "--order", "3"], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn missing_or_malformed_config_exits_2() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&ftmav(&["simulate", "absent.json"], dir.path())), 2);
    std::fs::write(dir.path().join("bad.json"), r#"{"schema_version": 1, "name": "x", "bogus": 1}"#).unwrap();
    assert_eq!(code(&ftmav(&["simulate", "bad.json"], dir.path())), 2);
    let mut c = short_sim();
    c.schema_version = 99;
    write_config(dir.path(), "v.json", &c);
    assert_eq!(code(&ftmav(&["simulate", "v.json"], dir.path())), 2);
}

#[test]
fn simulate_writes_identical_logs_for_identical_configs() {
    let dir = TempDir::new().unwrap();
    let mut c = short_sim();
    c.sim.gyro_noise_std = 0.01;
    c.sim.seed = 3;
    c.output.log = Some("run.csv".into());
    write_config(dir.path(), "a.json", &c);
    assert_eq!(code(&ftmav(&["simulate", "a.json"], dir.path())), 0);
    let first = std::fs::read(dir.path().join("run.csv")).unwrap();
    assert_eq!(code(&ftmav(&["simulate", "a.json"], dir.path())), 0);
    assert_eq!(first, std::fs::read(dir.path().join("run.csv")).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("t,x,y,z,"));
    assert_eq!(text.lines().count(), 1 + 1 + 50);
}

#[test]
fn controllability_and_polytope_csv() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", &short_sim());
    let o = ftmav(&["analyze-controllability", cfg.to_str().unwrap(), "--order", "2"], dir.path());
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 28);
    assert!(text.lines().any(|l| l.starts_with("M13,stabilizable,")));

    let o = ftmav(&["build-polytope", cfg.to_str().unwrap(), "--faults", "1,6"], dir.path());
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("a,b,c,d,e"));
    assert!(text.lines().count() > 5);

    let o = ftmav(&["build-polytope", cfg.to_str().unwrap(), "--faults", "9"], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn pipeline_without_feasible_time_exits_3() {
    let dir = TempDir::new().unwrap();
    let mut c = planning_mission(Mode::Rsp, vec![vec![1]]);
    c.mission.grid = GridBlock { min: 8.0, max: 10.0, step: 1.0 };
    write_config(dir.path(), "p.json", &c);
    assert_eq!(code(&ftmav(&["rsp-pipeline", "p.json"], dir.path())), 3);
}

#[test]
fn reproduce_table_rejects_unknown_ids() {
    let dir = TempDir::new().unwrap();
    let o = ftmav(&["reproduce-table", "quad-single"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("fault_set,class,"));
    assert_eq!(code(&ftmav(&["reproduce-table", "nope"], dir.path())), 2);
}
