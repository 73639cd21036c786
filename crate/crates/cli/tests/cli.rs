use std::fs;
use std::process::{Command, Output};

use qverify_core::games::{standard_game, GameDefinition, StandardGame};
use serde_json::Value;

fn qverify(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qverify"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_line(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).trim_end().to_string()
}

#[test]
fn bound_reports_planner_size() {
    let out = qverify(&[
        "bound", "--game", "mermin3", "--c", "0.5858", "--eta", "0.1", "--eps1", "0.03", "--delta", "0.01",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["sample_size"], 516);
    assert_eq!(v["protocol"], "verification");
    assert!(v["tail_bound"].as_f64().unwrap() <= 0.01);
}

#[test]
fn bound_with_mu_is_certification() {
    let out = qverify(&["bound", "--mu", "0.5", "--eps1", "0.02", "--eps2", "0.05"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["protocol"], "certification");
    assert_eq!(v["sample_size"], 761);
}

#[test]
fn fig2a_ratio_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = qverify(&["figure", "fig2a", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("fig2a.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("eta,N_DI,N_DD,ratio"));
    for line in lines {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        if cells[0] <= 0.01 {
            assert!((cells[3] / 2.2761 - 1.0).abs() < 1e-3, "{line}");
        }
    }
    assert!(dir.path().join("fig2a.json").is_file());
}

#[test]
fn noiseless_verification_passes_with_all_wins() {
    let out = qverify(&["verify", "--source", "iid-ghz-depolarized:0.0", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["verdict"]["outcome"], "success");
    assert_eq!(v["verdict"]["p"], 1.0);
}

#[test]
fn white_noise_is_inconclusive() {
    let out = qverify(&["verify", "--source", "iid-target:1.0", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["verdict"]["outcome"], "inconclusive");
}

#[test]
fn same_argv_same_bytes() {
    let args = [
        "certify",
        "--source",
        "iid-ghz-depolarized:0.05",
        "--seed",
        "11",
        "--format",
        "csv",
    ];
    let a = qverify(&args);
    let b = qverify(&args);
    assert_eq!(a.stdout, b.stdout);
    assert!(String::from_utf8_lossy(&a.stdout).starts_with("round,measured,i1,i2,i3,o1,o2,o3,win"));
}

#[test]
fn trial_output_ignores_worker_count() {
    let base = ["verify", "--source", "coinflip:0.08", "--seed", "5", "--trials", "300"];
    let one = qverify(&[&base[..], &["--workers", "1"]].concat());
    let four = qverify(&[&base[..], &["--workers", "4"]].concat());
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(json(&one)["estimate"]["trials"], 300);
}

#[test]
fn planner_errors_are_one_line_exit_1() {
    let out = qverify(&["plan-verify", "--eps1", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    let line = stderr_line(&out);
    assert!(line.starts_with("error: indistinguishable-hypotheses: "), "{line}");
    assert!(!line.contains('\n'));

    let out = qverify(&["plan-certify", "--game", "chsh"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_line(&out).starts_with("error: missing-constant: "));

    let out = qverify(&["certify", "--source", "coinflip"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_line(&out).starts_with("error: non-iid-certification: "));

    let out = qverify(&["verify"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_line(&out).starts_with("error: usage: "));
}

#[test]
fn unknown_flag_prints_usage() {
    let out = qverify(&["bound", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage:"));
    assert_eq!(qverify(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_file_sits_between_flags_and_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"eta": 0.2, "eps1": 0.05, "delta": 0.001}"#).unwrap();
    let out = qverify(&["plan-verify", "--config", cfg.to_str().unwrap(), "--eta", "0.15"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["eta"], 0.15);
    assert_eq!(v["eps1"], 0.05);
    assert_eq!(v["delta"], 0.001);

    fs::write(&cfg, r#"{"etaa": 0.2}"#).unwrap();
    let out = qverify(&["plan-verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_line(&out).starts_with("error: config: "));
}

#[test]
fn oracle_bound_dominates_exact() {
    let out = qverify(&[
        "oracle",
        "--protocol",
        "certification",
        "--source",
        "bernoulli:0.93",
        "--n",
        "200",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["bound_applies"], true);
    assert!(v["slack"].as_f64().unwrap() >= 0.0);
}

#[test]
fn game_definition_file_with_bernoulli_source() {
    let dir = tempfile::tempdir().unwrap();
    let (game, robustness) = standard_game(StandardGame::Mermin3);
    let path = dir.path().join("game.json");
    fs::write(
        &path,
        serde_json::to_string(&GameDefinition { game, robustness }).unwrap(),
    )
    .unwrap();
    let src = dir.path().join("src.json");
    fs::write(
        &src,
        r#"{"kind": "bernoulli", "probs": [1.0, 1.0, 1.0, 1.0, 1.0, 1.0]}"#,
    )
    .unwrap();
    let out = qverify(&[
        "verify",
        "--game",
        path.to_str().unwrap(),
        "--source",
        src.to_str().unwrap(),
        "--n",
        "6",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr_line(&out));
    assert_eq!(json(&out)["verdict"]["q1"], 6);
}
