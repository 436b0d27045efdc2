use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qst(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qst")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn manifest_of(path: &Path) -> Value {
    let m = format!("{}.manifest.json", path.display());
    serde_json::from_str(&std::fs::read_to_string(m).expect("manifest written")).unwrap()
}

#[test]
fn verify_passes_for_both_hamiltonians() {
    for h in ["opt", "opt-prime"] {
        let o = qst(&["verify", "--n", "8", "--j0", "1", "--hamiltonian", h]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let v = stdout_json(&o);
        assert!(v["fidelity"].as_f64().unwrap() >= 1.0 - 1e-10);
        assert_eq!(v["form_valid"], true);
        assert_eq!(v["bound_violations"], 0);
    }
    let o = qst(&["verify", "--n", "8", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("n,j0,hamiltonian,time,fidelity"));
}

#[test]
fn verify_rejects_small_n() {
    assert_eq!(code(&qst(&["verify", "--n", "2"])), 2);
    assert_eq!(code(&qst(&["verify", "--n", "8", "--hamiltonian", "other"])), 2);
}

#[test]
fn case_table_rows() {
    let o = qst(&["case-table", "--n", "8", "--j0", "1"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "case,zero_multipliers,zero_slacks,minimum_time");
    for r in &rows[1..6] {
        assert!(r.ends_with(",none"));
    }
    assert!(rows[8].split(',').last().unwrap().starts_with("0.785398"));
    assert_eq!(code(&qst(&["case-table", "--n", "8", "--j1n-bar", "1.2", "--j0", "1"])), 2);
}

#[test]
fn qb_check_cases() {
    let o = qst(&["qb-check", "--case", "8", "--n", "8"]);
    assert_eq!(code(&o), 0);
    assert!(stdout_json(&o)["max_residual"].as_f64().unwrap() <= 1e-8);

    let o = qst(&["qb-check", "--case", "7", "--n", "8"]);
    assert_eq!(code(&o), 0);
    assert!(stdout_json(&o)["note"].as_str().unwrap().contains("case 8"));

    assert_eq!(code(&qst(&["qb-check", "--case", "3"])), 3);
}

#[test]
fn speed_scan_real_controls() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan.csv");
    let o = qst(&[
        "speed-scan", "--n", "4", "--target", "1e-6", "--family", "real", "--seed", "3", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let v = stdout_json(&o);
    assert!(v["relative_error"].as_f64().unwrap().abs() <= 0.02);
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("T,best_fidelity,evaluations,restarts_hit_bound\n"));
    assert_eq!(manifest_of(&out)["seeds"], serde_json::json!([3]));
}

#[test]
fn speed_scan_trivial_and_invalid_targets() {
    let o = qst(&["speed-scan", "--n", "3", "--target", "1"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["t_star"], 0.0);
    assert_eq!(code(&qst(&["speed-scan", "--n", "3", "--target", "0"])), 2);
}

#[test]
fn noise_is_reproducible_and_zero_without_noise() {
    let o = qst(&["noise", "--n", "20", "--sigma-c", "0", "--sigma-f", "0", "--trials", "5"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert!(row[5].parse::<f64>().unwrap().abs() < 1e-12);

    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let o = qst(&[
            "noise", "--n", "60", "--sigma-c", "0.1", "--sigma-f", "0.1", "--trials", "200", "--seed", "42", "--measure",
            "modulus", "--out", p.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0);
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let m = manifest_of(&a);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 1);
    let digest = m["outputs"][0]["sha256"].as_str().unwrap();
    assert_eq!(digest, manifest_of(&b)["outputs"][0]["sha256"].as_str().unwrap());
    assert_eq!(digest.len(), 64);

    let text = String::from_utf8(ta).unwrap();
    let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!(row[5] <= 0.005 + 3.0 * row[6], "{text}");
}

#[test]
fn fit_over_a_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("sweep.csv");
    let o = qst(&[
        "noise", "--n", "20,40,80", "--sigma-c", "0.1", "--trials", "300", "--seed", "1", "--out",
        sweep.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let fit = dir.path().join("fit.json");
    let svg = dir.path().join("fit.svg");
    let o = qst(&[
        "fit", "--input", sweep.to_str().unwrap(), "--model", "power", "--out", fit.to_str().unwrap(), "--svg",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&fit).unwrap()).unwrap();
    assert_eq!(v["model"], "power");
    let exponent = v["params"][0].as_f64().unwrap();
    assert!((-0.7..=-0.3).contains(&exponent), "{exponent}");
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
    let m = manifest_of(&fit);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);

    let o = qst(&["fit", "--input", sweep.to_str().unwrap(), "--model", "linear"]);
    assert_eq!(code(&o), 1, "single sigma value is a degenerate line");

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "x,y\n1,2\n").unwrap();
    assert_eq!(code(&qst(&["fit", "--input", bad.to_str().unwrap(), "--model", "power"])), 2);
}

#[test]
fn reduce_model_file() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    std::fs::write(&model, qst_core::spin_model::build_h_opt(6, 1.0).unwrap().to_json()).unwrap();
    let o = qst(&["reduce", "--input", model.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert!((v["effective"]["j1a"][0].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!((v["effective"]["da"].as_f64().unwrap() + 3.0).abs() < 1e-12);
}
