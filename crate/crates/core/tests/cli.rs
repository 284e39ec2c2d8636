use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use magwalk::coin::random_coin_system;
use magwalk::SpectrumReport;
use serde_json::Value;

fn magwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magwalk")).args(args).output().expect("run magwalk")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json_file(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn verify_all_passes_and_records_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = magwalk(&[
        "--task", "verify-all", "--n", "3", "--coin", "grover", "--nu", "random", "--samples", "5", "--seed", "7",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = json_file(&out);
    assert_eq!(report["passed"], true);
    assert_eq!(report["header"]["seed"], 7);
    assert_eq!(report["header"]["task"], "verify-all");
    for (name, ok) in report["summary"].as_object().unwrap() {
        assert_eq!(ok, &Value::Bool(true), "{name}");
    }
    assert!(report["car"]["anticommutator_identity"].as_f64().unwrap() <= 1e-12);
    assert!(report["point_spectrum"]["hausdorff_distance"].as_f64().unwrap() <= 1e-8);
    assert_eq!(report["stability"]["potentials"].as_array().unwrap().len(), 6);
}

#[test]
fn simulate_csv_rows_sum_to_one() {
    let o = magwalk(&[
        "--task", "simulate", "--n", "2", "--coin", "grover", "--nu", "null", "--steps", "10", "--initial", "vertex:0",
        "--format", "csv",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,sigma_bitmask,probability"));
    let mut totals = [0.0f64; 11];
    let mut rows = 0;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        let t: usize = cols[0].parse().unwrap();
        let sigma: u32 = cols[1].parse().unwrap();
        let p: f64 = cols[2].parse().unwrap();
        assert!(sigma < 8);
        if t == 1 && p > 0.0 {
            assert_eq!(sigma.count_ones(), 1, "step 1 reaches only neighbors of the empty set");
        }
        totals[t] += p;
        rows += 1;
    }
    assert_eq!(rows, 11 * 8);
    for (t, total) in totals.iter().enumerate() {
        assert!((total - 1.0).abs() <= 1e-10, "t={t}: {total}");
    }
}

#[test]
fn spectrum_ignores_potential() {
    let run = |nu: &str| {
        let o = magwalk(&["--task", "spectrum", "--n", "1", "--coin", "hadamard-partition", "--nu", nu]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let v: Value = serde_json::from_slice(&o.stdout).unwrap();
        serde_json::from_value::<SpectrumReport>(v["spectrum"].clone()).unwrap()
    };
    let with = run("0.3,0.9");
    let without = run("null");
    assert_eq!(with.nu, Some(vec![0.3, 0.9]));
    assert!(with.hausdorff_distance(&without) <= 1e-8);
    assert!(with.multiset_matches(&without, 1e-8));
    assert_eq!(with.eigenvalues.len(), 6);
}

#[test]
fn reports_are_byte_identical_for_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let o = magwalk(&[
            "--task", "verify-stability", "--n", "2", "--coin", "random:4", "--samples", "3", "--seed", "42", "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        fs::read(path).unwrap()
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn input_errors_exit_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never.json");
    let cases: [(&[&str], &str); 5] = [
        (&["--task", "spectrum", "--n", "1", "--nu", "0.1"], "nu"),
        (&["--task", "spectrum", "--n", "1", "--nu", "7,0"], "nu"),
        (&["--task", "spectrum", "--coin", "sprocket"], "coin"),
        (&["--task", "simulate", "--n", "1", "--initial", "vertex:9"], "initial"),
        (&["--task", "verify-point", "--format", "csv"], "format"),
    ];
    for (args, field) in cases {
        let mut full = args.to_vec();
        full.extend(["--out", out.to_str().unwrap()]);
        let o = magwalk(&full);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(stderr(&o).contains(field), "{args:?}: {}", stderr(&o));
        assert!(!out.exists());
    }
    assert_eq!(magwalk(&["--task", "bogus"]).status.code(), Some(2));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0, "temporary files left behind");
}

#[test]
fn capacity_guard_exit_2_with_hint() {
    let o = magwalk(&["--task", "spectrum", "--n", "11", "--coin", "grover"]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("capacity") && msg.contains("22528"), "{msg}");
}

#[test]
fn theorem_failure_exit_1_keeps_report() {
    // at a tolerance below rounding error the two spectra cannot match
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = magwalk(&[
        "--task", "verify-point", "--n", "2", "--coin", "random", "--nu", "random", "--seed", "5", "--tol-spectrum",
        "1e-300", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert_eq!(json_file(&out)["passed"], false);
}

#[test]
fn config_file_with_flag_override_and_coin_file() {
    let dir = tempfile::tempdir().unwrap();
    let coin_path = dir.path().join("coin.json");
    fs::write(&coin_path, random_coin_system(1, 3, 99).unwrap().to_json().unwrap()).unwrap();
    let cfg_path = dir.path().join("cfg.json");
    let cfg = serde_json::json!({
        "n": 1,
        "coin_file": coin_path,
        "nu": "0.5,-1.5",
        "task": "verify-aev",
        "seed": 3
    });
    fs::write(&cfg_path, cfg.to_string()).unwrap();
    let out = dir.path().join("r.json");
    let o = magwalk(&["--config", cfg_path.to_str().unwrap(), "--seed", "11", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = json_file(&out);
    assert_eq!(report["header"]["seed"], 11);
    assert_eq!(report["header"]["d"], 3);
    assert_eq!(report["header"]["nu"], serde_json::json!([0.5, -1.5]));
    assert!(report["approximate_spectrum"]["max_witness_residual"].as_f64().unwrap() <= 1e-8);

    fs::write(&cfg_path, r#"{"n": 1, "colour": "blue"}"#).unwrap();
    let o = magwalk(&["--config", cfg_path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("config"));
}

#[test]
fn simulate_json_carries_final_state() {
    let o = magwalk(&[
        "--task", "simulate", "--n", "1", "--coin", "hadamard-partition", "--nu", "0.2,0.4", "--steps", "3",
        "--initial", "eigen:2:1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["final_state"].as_array().unwrap().len(), 8);
    // a magnetic eigenstate has the uniform position distribution at every step
    for row in v["distributions"].as_array().unwrap() {
        for p in row.as_array().unwrap() {
            assert!((p.as_f64().unwrap() - 0.25).abs() < 1e-12);
        }
    }
}
