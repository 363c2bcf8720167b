//! End-to-end tests of the `depconc` binary: document round-trips, format
//! parity, the block method, environment overrides, and output files.

use std::process::Command;

fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn depconc_cmd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_depconc"))
}

#[test]
fn csv_and_json_carry_identical_numbers() {
    let args = |format: &str| {
        vec![
            "analyze".to_string(),
            "--model".to_string(),
            fixture("m1_model.json"),
            "--function".to_string(),
            fixture("hamming.json"),
            "--methods".to_string(),
            "goldstein,chazottes".to_string(),
            "--t".to_string(),
            "0.5,1.0,1.5".to_string(),
            "--format".to_string(),
            format.to_string(),
        ]
    };
    let json_out = depconc_cmd().args(args("json")).output().unwrap();
    let csv_out = depconc_cmd().args(args("csv")).output().unwrap();
    assert!(json_out.status.success() && csv_out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&json_out.stdout).unwrap();
    let csv = String::from_utf8(csv_out.stdout).unwrap();
    let mut csv_numbers = std::collections::BTreeMap::new();
    for line in csv.lines().filter(|l| !l.starts_with('#') && !l.starts_with("method,")) {
        let cells: Vec<&str> = line.split(',').collect();
        csv_numbers.insert((cells[0].to_string(), cells[1].to_string()), cells[2].to_string());
    }
    for result in report["results"].as_array().unwrap() {
        let method = result["method"].as_str().unwrap();
        for (idx, value) in result["values"].as_array().unwrap().iter().enumerate() {
            let t = &report["t_grid"][idx];
            let key = (method.to_string(), serde_json::to_string(t).unwrap());
            let json_rendered = serde_json::to_string(value).unwrap();
            assert_eq!(
                csv_numbers.get(&key),
                Some(&json_rendered),
                "mismatch for {method} at t = {t}"
            );
        }
    }
}

#[test]
fn blocks_method_runs_from_the_command_line() {
    let output = depconc_cmd()
        .args([
            "analyze",
            "--model",
            &fixture("m1_model.json"),
            "--function",
            &fixture("hamming.json"),
            "--methods",
            "blocks",
            "--blocks",
            "1,2-3",
            "--t",
            "1.0",
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    let gamma = &report["results"][0]["gamma"];
    assert_eq!(gamma.as_array().unwrap().len(), 2);
    assert!((gamma[0][0].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((gamma[1][1].as_f64().unwrap() - 2.0).abs() < 1e-12);
    // Per-suffix coupling entry: 0.7 + 0.49.
    assert!((gamma[0][1].as_f64().unwrap() - 1.19).abs() < 1e-12);

    // A non-contiguous partition is an input error.
    let output = depconc_cmd()
        .args([
            "analyze",
            "--model",
            &fixture("m1_model.json"),
            "--function",
            &fixture("hamming.json"),
            "--methods",
            "blocks",
            "--blocks",
            "1,3",
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn state_cap_env_is_honored() {
    let output = depconc_cmd()
        .args([
            "analyze",
            "--model",
            &fixture("p1_model.json"),
            "--function",
            &fixture("hamming.json"),
        ])
        .env("DEPCONC_STATE_CAP", "4")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("cap"), "stderr: {stderr}");
}

#[test]
fn out_file_is_written_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let output = depconc_cmd()
        .args([
            "analyze",
            "--model",
            &fixture("p1_model.json"),
            "--function",
            &fixture("hamming.json"),
            "--t",
            "1.5",
            "--out",
            path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    assert!(output.stdout.is_empty());
    let content = std::fs::read_to_string(&path).unwrap();
    let report: serde_json::Value = serde_json::from_str(&content).unwrap();
    assert_eq!(report["state_count"].as_u64(), Some(8));
    assert!(!dir.path().join("report.tmp").exists());
}

#[test]
fn mc_mode_is_reproducible_and_close_to_exact() {
    let run = || {
        depconc_cmd()
            .args([
                "validate",
                "--model",
                &fixture("p1_model.json"),
                "--function",
                &fixture("hamming.json"),
                "--t",
                "1.5",
                "--mode",
                "mc",
                "--samples",
                "20000",
                "--seed",
                "3",
            ])
            .output()
            .unwrap()
    };
    let first = run();
    let second = run();
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    let report: serde_json::Value = serde_json::from_slice(&first.stdout).unwrap();
    let estimate = report["exact_tails"][0].as_f64().unwrap();
    assert!((estimate - 0.25).abs() < 0.02, "estimate {estimate}");
    assert!(report["standard_errors"][0].as_f64().unwrap() > 0.0);
}

#[test]
fn gibbs_document_round_trips_through_analysis() {
    let output = depconc_cmd()
        .args([
            "validate",
            "--model",
            &fixture("gibbs_model.json"),
            "--function",
            &fixture("hamming.json"),
            "--t",
            "auto",
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(report["violations"].as_array().unwrap().len(), 0);
    assert_eq!(report["t_grid"].as_array().unwrap().len(), 11);
    // Markov-representation methods are flagged inapplicable on a gibbs law.
    let markov_row = report["results"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["method"] == "markov_theta")
        .unwrap();
    assert_eq!(markov_row["applicable"].as_bool(), Some(false));
}

#[test]
fn selftest_writes_soundness_reports() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("soundness.json");
    let output = depconc_cmd()
        .args(["selftest", "--seed", "9", "--instances", "4", "--out", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(output.status.success());
    let reports: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let reports = reports.as_array().unwrap();
    assert_eq!(reports.len(), 4);
    for report in reports {
        assert!(report["model_digest"].as_str().unwrap().len() == 64);
        for method in report["per_method"].as_array().unwrap() {
            if method["applicable"].as_bool().unwrap() {
                assert!(method["max_violation"].as_f64().unwrap() <= 0.0);
            }
        }
    }
}

#[test]
fn unknown_method_is_an_input_error() {
    let output = depconc_cmd()
        .args([
            "analyze",
            "--model",
            &fixture("p1_model.json"),
            "--function",
            &fixture("hamming.json"),
            "--methods",
            "sinkhorn",
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn one_state_coordinates_do_not_poison_the_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let model_path = dir.path().join("model.json");
    std::fs::write(
        &model_path,
        r#"{
            "version": "1",
            "coordinates": [
                {"size": 1, "metric": {"type": "trivial", "alpha": 1.0}},
                {"size": 2, "metric": {"type": "trivial", "alpha": 1.0}}
            ],
            "law": {"type": "product", "marginals": [[1.0], [0.3, 0.7]]}
        }"#,
    )
    .unwrap();
    let output = depconc_cmd()
        .args([
            "validate",
            "--model",
            model_path.to_str().unwrap(),
            "--function",
            &fixture("hamming.json"),
            "--t",
            "0.5",
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(report["violations"].as_array().unwrap().len(), 0);
    for result in report["results"].as_array().unwrap() {
        for v in result["values"].as_array().unwrap() {
            assert!(v.as_f64().unwrap().is_finite());
        }
        for (_, c) in result["constants"].as_object().unwrap() {
            assert!(c.as_f64().unwrap().is_finite(), "constant in {}", result["method"]);
        }
    }
}

#[test]
fn indicator_function_document_resolves() {
    let output = depconc_cmd()
        .args([
            "analyze",
            "--model",
            &fixture("p1_model.json"),
            "--function",
            &fixture("indicator.json"),
            "--methods",
            "goldstein",
            "--t",
            "0.5",
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    // The indicator of a single state oscillates by 1 in every coordinate.
    for d in report["delta"].as_array().unwrap() {
        assert_eq!(d.as_f64(), Some(1.0));
    }
}
