//! End-to-end checks of the command-line interface: subcommands, file
//! formats, exit codes and manifest-based reproducibility.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fastslow"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fastslow-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn classify_reports_verdict_and_rule() {
    let out = run(&["classify", "--kind", "fold", "--g", "1.0"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("Critical"), "{text}");
    assert!(text.contains("rule:"));

    let out = run(&["classify", "--kind", "hopf", "--l1", "-1", "--g", "1.0"]);
    assert!(stdout(&out).starts_with("NotCritical"));

    let out = run(&["classify", "--kind", "hopf-hopf", "--g", "1.0", "--g2", "0.2"]);
    assert!(stdout(&out).starts_with("Indeterminate"));
}

#[test]
fn usage_errors_exit_with_code_two() {
    let out = run(&["classify", "--kind", "unknown-kind", "--g", "1.0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = bin().arg("classify").output().unwrap(); // missing required flags
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["fit", "--input", "/nonexistent.csv", "--law", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_estimate_fit_files_round_trip() {
    let dir = tmpdir("pipeline");
    let ens_bin = dir.join("ens.bin");
    let ens_csv = dir.join("ens.csv");
    let var_csv = dir.join("var.csv");
    let fit_json = dir.join("fit.json");

    let out = run(&[
        "simulate",
        "--preset",
        "stommel",
        "--paths",
        "40",
        "--dt",
        "0.0005",
        "--s-end",
        "0.55",
        "--stride",
        "4",
        "--seed",
        "11",
        "--out-bin",
        ens_bin.to_str().unwrap(),
        "--out-csv",
        ens_csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    // binary payload carries the documented magic
    let bytes = std::fs::read(&ens_bin).unwrap();
    assert_eq!(&bytes[..6], b"FSSDE1");
    // csv carries the documented header
    let text = std::fs::read_to_string(&ens_csv).unwrap();
    assert!(text.starts_with("s,y_1,x_1,path_id"));

    for input in [&ens_bin, &ens_csv] {
        let out = run(&[
            "estimate",
            "--input",
            input.to_str().unwrap(),
            "--method",
            "m3",
            "--out",
            var_csv.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let text = std::fs::read_to_string(&var_csv).unwrap();
    assert!(text.starts_with("y,v_1_1"));

    let out = run(&[
        "fit",
        "--input",
        var_csv.to_str().unwrap(),
        "--law",
        "inv-sqrt",
        "--law",
        "linear",
        "--y-min",
        "0.96",
        "--y-max",
        "1.4",
        "--out",
        fit_json.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&fit_json).unwrap()).unwrap();
    let fits = json["fits"].as_array().unwrap();
    assert_eq!(fits.len(), 2);
    for f in fits {
        for key in ["law", "a", "y_c", "rss", "converged"] {
            assert!(f.get(key).is_some(), "missing {key}");
        }
    }

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn estimate_m4_runs_from_a_preset() {
    let dir = tmpdir("m4");
    let var_csv = dir.join("m4.csv");
    let out = run(&[
        "estimate",
        "--input",
        "/dev/null",
        "--method",
        "m4",
        "--preset",
        "buckling",
        "--y-grid",
        "2.0:2.8:3",
        "--t-end",
        "200",
        "--dt-fast",
        "0.02",
        "--seed",
        "3",
        "--out",
        var_csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&var_csv).unwrap();
    assert_eq!(text.lines().count(), 4);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn scaling_table_has_tiny_residuals() {
    let out = run(&["scaling", "--kind", "bogdanov-takens", "--grid", "1e-4:1e-1:6"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "y,i,j,closed_form,lyapunov,rel_err");
    for line in lines {
        let rel: f64 = line.split(',').next_back().unwrap().parse().unwrap();
        assert!(rel <= 1e-10, "{line}");
    }
}

#[test]
fn model_dumps_analytics_json() {
    let out = run(&["model", "--preset", "sis"]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((json["threshold"].as_f64().unwrap() - 0.0201).abs() < 1e-12);

    let out = run(&["model"]);
    assert!(stdout(&out).lines().count() >= 5);
}

#[test]
fn run_spec_produces_manifest_and_reruns_identically() {
    let dir = tmpdir("run");
    let spec_path = dir.join("exp.json");
    let manifest = dir.join("manifest.json");
    let spec = serde_json::json!({
        "system": {
            "kind": "fold",
            "g": [1.0],
            "eps": 0.01,
            "sigma": 0.01,
            "diffusion": [[1.0]]
        },
        "sim": {"dt": 0.001, "s_end": 0.8, "record_stride": 2, "master_seed": 9, "n_paths": 30},
        "estimator": {"method": "m3"},
        "fit": {"laws": ["inv-sqrt"], "y_min": -0.9, "y_max": -0.05},
        "outputs": {
            "ensemble_bin": dir.join("e.bin").to_str().unwrap(),
            "variance_csv": dir.join("v.csv").to_str().unwrap(),
            "fit_json": dir.join("f.json").to_str().unwrap(),
            "manifest_json": manifest.to_str().unwrap()
        }
    });
    std::fs::write(&spec_path, serde_json::to_string_pretty(&spec).unwrap()).unwrap();

    let out = run(&["run", "--spec", spec_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let snapshot = |p: &Path| std::fs::read(p).unwrap();
    let first: Vec<Vec<u8>> = ["e.bin", "v.csv", "f.json"]
        .iter()
        .map(|f| snapshot(&dir.join(f)))
        .collect();
    let manifest_bytes = snapshot(&manifest);

    // the manifest lists every written artifact
    let m: serde_json::Value = serde_json::from_slice(&manifest_bytes).unwrap();
    let outputs: Vec<String> = m["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    for f in ["e.bin", "v.csv", "f.json"] {
        assert!(
            outputs.iter().any(|o| o.ends_with(f)),
            "manifest missing {f}: {outputs:?}"
        );
    }

    let out = run(&["run", "--manifest", manifest.to_str().unwrap()]);
    assert!(out.status.success());
    for (f, want) in ["e.bin", "v.csv", "f.json"].iter().zip(&first) {
        assert_eq!(&snapshot(&dir.join(f)), want, "{f} differs after rerun");
    }
    assert_eq!(snapshot(&manifest), manifest_bytes, "manifest differs");

    // unknown keys are rejected up front
    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"preset": "stommel", "unknown_key": 1}"#).unwrap();
    let out = run(&["run", "--spec", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn run_shorthand_builds_the_spec_from_flags() {
    let dir = tmpdir("shorthand");
    let out = bin()
        .args([
            "run",
            "--preset",
            "stommel",
            "--paths",
            "60",
            "--estimator",
            "m3",
            "--fit",
            "inv-sqrt",
            "--seed",
            "7",
            "--out-dir",
        ])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let fit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("stommel-7-fit.json")).unwrap())
            .unwrap();
    let y_c = fit["fits"][0]["y_c"].as_f64().unwrap();
    assert!((0.90..=0.97).contains(&y_c), "y_c = {y_c}");
    assert!(dir.join("stommel-7-manifest.json").exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn verify_exit_codes_follow_the_contract() {
    let out = run(&["verify", "laplace"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("[PASS]"));
    let out = run(&["verify", "not-a-suite"]);
    assert_eq!(out.status.code(), Some(2));
}
