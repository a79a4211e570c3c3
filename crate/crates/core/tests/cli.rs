//! End-to-end checks of the command-line binary.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn exe() -> Command {
    Command::new(env!("CARGO_BIN_EXE_antipt-cavity"))
}

fn run(args: &[&str]) -> Output {
    exe().args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("antipt-cli-{}-{name}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn mirror_spectrum_layout() {
    let o = run(&["mirror-spectrum"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    let meta = lines.next().unwrap();
    assert!(meta.starts_with("# {"));
    let json: serde_json::Value = serde_json::from_str(&meta[2..]).unwrap();
    assert_eq!(json["command"], "mirror-spectrum");
    assert_eq!(json["grid_count"], 1001);
    assert_eq!(lines.next().unwrap(), "delta,R,T,arg_r");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 1001);
    assert!(rows.iter().all(|r| r.len() == 4));
    assert_eq!(rows[0][0], -5.0);
    assert_eq!(rows[1000][0], 5.0);
}

#[test]
fn phase_diagram_columns() {
    let o = run(&["phase-diagram"]);
    let text = stdout(&o);
    assert_eq!(text.lines().nth(1).unwrap(), "W,reE1,reE2,reE3,reE4,imE1,imE2,imE3,imE4");
    assert_eq!(text.lines().count(), 2 + 961);
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = scratch("det");
    let (a, b) = (dir.join("a.csv"), dir.join("b.csv"));
    for path in [&a, &b] {
        let o = run(&["transmission", "--omega", "0.2", "--gamma", "0.2", "--out", path.to_str().unwrap()]);
        assert!(o.status.success());
        assert!(o.stdout.is_empty());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn config_file_and_flag_override() {
    let dir = scratch("cfg");
    let cfg = dir.join("run.json");
    fs::write(&cfg, r#"{"command":"dynamics","omega":0.1,"gamma":0.1,"gamma_prime":0.02,"t_max":5}"#).unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "--gamma_prime", "0"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let json: serde_json::Value = serde_json::from_str(&text.lines().next().unwrap()[2..]).unwrap();
    assert_eq!(json["command"], "dynamics");
    assert_eq!(json["omega"], 0.1);
    assert_eq!(json["gamma_prime"], 0.0);
    assert_eq!(text.lines().nth(1).unwrap(), "t,probe,total,mirror_a,mirror_b,mirror_c,mirror_d");
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn usage_errors_exit_with_one_and_name_the_key() {
    let o = run(&["transmission", "--omega", "abc"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("omega"));

    let o = run(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(1));

    let o = run(&["--omega", "0.1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("command"));

    let dir = scratch("bad");
    let cfg = dir.join("bad.json");
    fs::write(&cfg, r#"{"command":"transmission","omegaa":0.1}"#).unwrap();
    let o = run(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("omegaa"));
    fs::write(&cfg, r#"{"command":"transmission","gamma":"big"}"#).unwrap();
    let o = run(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma"));
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn physics_errors_exit_with_two_and_leave_no_file() {
    let dir = scratch("phys");
    let out = dir.join("never.csv");
    // Ω = 1 sits on an exceptional point where the probe couplings diverge
    let o = run(&["coupling-vs-w", "--grid_min", "3.9", "--grid_max", "4", "--grid_count", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("coupling-vs-w"));
    assert!(!out.exists());
    assert_eq!(fs::read_dir(&dir).unwrap().count(), 0);
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn validate_reports_every_check() {
    let o = run(&["validate"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().count() >= 10);
    for line in text.lines() {
        let fields: Vec<&str> = line.split(' ').collect();
        assert_eq!(fields.len(), 4, "{line}");
        assert_eq!(fields[0], "PASS", "{line}");
        assert!(fields[2].parse::<f64>().is_ok() && fields[3].parse::<f64>().is_ok());
    }
}

#[test]
fn every_command_runs_with_defaults() {
    for cmd in [
        "mirror-spectrum",
        "r0-curve",
        "phase-diagram",
        "supermodes-vs-r0",
        "supermodes",
        "coupling-map",
        "coupling-vs-w",
        "eta-curve",
        "transmission",
        "polaritons",
        "linewidth-scan",
        "dynamics",
    ] {
        let o = run(&[cmd]);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        let text = stdout(&o);
        let width = text.lines().nth(1).unwrap().split(',').count();
        assert!(text.lines().skip(2).all(|l| l.split(',').count() == width), "{cmd}");
        assert!(text.lines().count() > 3, "{cmd}");
    }
}

#[test]
fn help_exits_cleanly() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("mirror-spectrum"));
}
