use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn liblab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_liblab"))
        .args(args)
        .current_dir(dir)
        .env("LIBLAB_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn result(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    doc["result"].clone()
}

#[test]
fn verify_haar_reports_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let r = result(&liblab(&["verify", "--preset", "haar_half"], dir.path()));
    for key in ["i_star", "chi_orb", "gap"] {
        assert!(r[key].as_f64().unwrap().abs() < 1e-6, "{key}: {}", r[key]);
    }
    assert_eq!(r["holds"], Value::Bool(true));
}

#[test]
fn chiorb_of_free_projections_vanishes() {
    let dir = tempfile::tempdir().unwrap();
    let r = result(&liblab(
        &["chiorb", "--preset", "free_projections", "--tauP", "0.5", "--tauQ", "0.6"],
        dir.path(),
    ));
    assert!(r["chi_orb"].as_f64().unwrap().abs() < 1e-6, "{}", r["chi_orb"]);
}

#[test]
fn evolve_writes_moment_and_density_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = liblab(&["evolve", "--preset", "delta_zero", "--t", "1", "--out", "m.csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("m.csv")).unwrap();
    let mut lines = text.lines();
    let header: Vec<_> = lines.next().unwrap().split(',').collect();
    assert_eq!(&header[..3], ["t", "c1", "c2"]);
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(row[0], 1.0);
    assert!((row[1] - (-1.0f64).exp()).abs() < 1e-5, "{}", row[1]);
    let density = std::fs::read_to_string(dir.path().join("m.csv.density.csv")).unwrap();
    assert_eq!(density.lines().next(), Some("t,theta,density"));
    assert_eq!(density.lines().count(), 1 + liblab_core::DEFAULT_GRID);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["evolve", "--preset", "raised_cosine", "--t", "0.5,1", "--grid", "512", "--out", "r.json"];
    let read = || {
        assert!(liblab(&args, dir.path()).status.success());
        (
            std::fs::read(dir.path().join("r.json")).unwrap(),
            std::fs::read(dir.path().join("r.json.density.csv")).unwrap(),
        )
    };
    let first = read();
    assert_eq!(first, read());
    let doc: Value = serde_json::from_slice(&first.0).unwrap();
    assert_eq!(doc["provenance"]["spec_sha256"].as_str().unwrap().len(), 64);
    assert!(doc["provenance"]["counters"]["dropped_characteristics"].is_u64());
    assert_eq!(doc["result"]["flows"].as_array().unwrap().len(), 2);
}

#[test]
fn config_files_round_trip_and_report_positions() {
    let dir = tempfile::tempdir().unwrap();
    let good = r#"{
  "command": "moments",
  "params": {"tau_p": 0.5, "tau_q": 0.5},
  "initial_measure": {"density": {"kind": "named", "name": "delta_zero"}},
  "times": [0.5],
  "n_max": 4
}"#;
    std::fs::write(dir.path().join("good.json"), good).unwrap();
    let r = result(&liblab(&["run", "--config", "good.json"], dir.path()));
    let c = r["flows"][0]["moments"].as_array().unwrap();
    assert!((c[0].as_f64().unwrap() - (-0.5f64).exp()).abs() < 1e-8);

    // the same file through the subcommand, with an inline override
    let r = result(&liblab(&["moments", "--config", "good.json", "--t", "1"], dir.path()));
    assert_eq!(r["flows"][0]["t"].as_f64(), Some(1.0));
    let wrong = liblab(&["verify", "--config", "good.json"], dir.path());
    assert_eq!(wrong.status.code(), Some(1));

    let bad = good.replace("\"n_max\": 4", "\"n_max\": 4,\n  \"nmax\": 5");
    std::fs::write(dir.path().join("bad.json"), bad).unwrap();
    let out = liblab(&["run", "--config", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("line 7") && msg.contains("nmax"), "{msg}");
}

#[test]
fn invalid_flags_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["verify", "--preset", "nope"][..],
        &["verify"],
        &["chiorb", "--preset", "haar_half", "--tauP", "1.5"],
        &["moments", "--preset", "delta_zero", "--tauP", "0.4"],
        &["evolve", "--preset", "haar_half", "--grid", "100"],
        &["oracle-mc", "--preset", "free_projections", "--dt", "0.1"],
        &["no-such-command"],
    ] {
        assert_eq!(liblab(args, dir.path()).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn numerical_failures_exit_with_two_and_echo_the_spec() {
    let dir = tempfile::tempdir().unwrap();
    let out = liblab(&["evolve", "--preset", "raised_cosine", "--t", "1e300", "--grid", "64"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "NewtonDivergence");
    assert_eq!(err["spec"]["grid_size"], 64);
}

#[test]
fn oracle_writes_eigenvalues_and_distances() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "oracle-mc", "--preset", "free_projections", "--n", "40", "--samples", "2", "--t", "0,0.1",
        "--grid", "512", "--seed", "3", "--out", "mc.json",
    ];
    assert!(liblab(&args, dir.path()).status.success());
    let doc: Value = serde_json::from_slice(&std::fs::read(dir.path().join("mc.json")).unwrap()).unwrap();
    let ks = doc["result"]["ks"].as_array().unwrap();
    assert_eq!(ks.len(), 2);
    assert!(ks.iter().all(|k| k["distance"].as_f64().unwrap() < 0.3));
    let mut csv_args = args.to_vec();
    *csv_args.last_mut().unwrap() = "mc.csv";
    assert!(liblab(&csv_args, dir.path()).status.success());
    let text = std::fs::read_to_string(dir.path().join("mc.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("t,eigenvalue_index,value"));
    assert_eq!(text.lines().count(), 1 + 2 * 80);
}

#[test]
fn pde_check_reports_both_steps() {
    let dir = tempfile::tempdir().unwrap();
    let r = result(&liblab(
        &["pde-check", "--preset", "raised_cosine", "--t", "0.5", "--grid", "256"],
        dir.path(),
    ));
    assert!(r["fine"]["max"].as_f64().unwrap() < 1e-4);
    assert!((r["ratio"].as_f64().unwrap() - 4.0).abs() < 1.2);
}
