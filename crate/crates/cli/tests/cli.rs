use std::path::Path;
use std::process::{Command, Output};

fn rho_lab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rho-lab"))
        .args(args)
        .env("RHO_LAB_OUT", out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn records(path: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn solve_prints_logarithm() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    let o = rho_lab(&out, &["solve", "--q", "23", "--p", "11", "--x", "2", "--y", "13", "--seed", "42"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().any(|l| l == "k = 7"), "{}", stdout(&o));
    let recs = records(&out);
    assert_eq!(recs.len(), 1);
    let r = &recs[0];
    assert_eq!(r["command"], "solve");
    assert_eq!(r["seed"], 42);
    assert_eq!(r["params"]["q"], 23);
    assert_eq!(r["outputs"]["k"], 7);
    assert_eq!(r["version"], "rho-lab/0.1.0");
    assert!(chrono::DateTime::parse_from_rfc3339(r["started_at"].as_str().unwrap()).is_ok());
    assert!(r["duration_ms"].is_u64());
}

#[test]
fn operation_errors_exit_one_with_name() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    let o = rho_lab(&out, &["solve", "--q", "24", "--p", "11", "--x", "2", "--y", "13"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("QNotPrime"));
    let o = rho_lab(&out, &["mix", "--p", "9", "--k", "9"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("InvalidExponent"));
    assert!(!out.exists(), "failed runs are not recorded");
}

#[test]
fn argument_errors_exit_two_with_usage() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    for args in [&["solve", "--q", "23"][..], &["mix", "--p", "x"], &["frobnicate"], &["mix", "--p", "7", "--seed", "-1"]] {
        let o = rho_lab(&out, args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(stderr(&o).contains("Usage"), "{args:?}");
    }
    assert_eq!(rho_lab(&out, &["--help"]).status.code(), Some(0));
}

#[test]
fn mix_prints_tau() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    let o = rho_lab(&out, &["mix", "--p", "7", "--k", "6", "--eps", "0.5", "--seed", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("tau_s = 4\n"));
    let o = rho_lab(&out, &["mix", "--p", "31", "--block", "--seed", "0"]);
    assert!(stdout(&o).starts_with("tau_s = 4\n"));
}

#[test]
fn csv_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    let o = rho_lab(&out, &["fourier", "--p", "7", "--s", "3,6", "--csv", "--seed", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "p,m,s,exact_l2,l2_bound,sep_exact");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("7,3,3,"));
    for cell in lines[1].split(',') {
        cell.parse::<f64>().unwrap();
    }
}

#[test]
fn missing_seed_is_drawn_and_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    for _ in 0..2 {
        assert_eq!(rho_lab(&out, &["collide", "--p", "101", "--trials", "50"]).status.code(), Some(0));
    }
    let recs = records(&out);
    assert!(recs[0]["seed"].is_u64());
    assert_ne!(recs[0]["seed"], recs[1]["seed"]);
    for line in ["1", "2"] {
        let o = rho_lab(&out, &["replay", out.to_str().unwrap(), "--line", line]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
}

#[test]
fn out_flag_overrides_env() {
    let dir = tempfile::tempdir().unwrap();
    let env_out = dir.path().join("env.jsonl");
    let flag_out = dir.path().join("sub/flag.jsonl");
    let o = rho_lab(&env_out, &["mix", "--p", "7", "--seed", "1", "--out", flag_out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(flag_out.exists());
    assert!(!env_out.exists());
}

#[test]
fn replay_detects_edits_and_parse_failures() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    let o = rho_lab(&out, &["collide", "--p", "101", "--trials", "200", "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let replay = |file: &Path| rho_lab(&out, &["replay", file.to_str().unwrap()]);
    assert_eq!(replay(&out).status.code(), Some(0));

    let line = std::fs::read_to_string(&out).unwrap();
    let mut rec: serde_json::Value = serde_json::from_str(line.trim()).unwrap();

    rec["seed"] = serde_json::json!(6);
    let edited = dir.path().join("edited.jsonl");
    std::fs::write(&edited, rec.to_string()).unwrap();
    let o = replay(&edited);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("outputs."), "{}", stdout(&o));

    let truncated = dir.path().join("truncated.jsonl");
    std::fs::write(&truncated, &line[..line.len() / 2]).unwrap();
    assert_eq!(replay(&truncated).status.code(), Some(2));
    assert_eq!(replay(&dir.path().join("absent.jsonl")).status.code(), Some(2));
}
