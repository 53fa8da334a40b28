//! End-to-end smoke tests of the binary: subcommand plumbing, file formats,
//! exit codes, and output reproducibility.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_momentcert"))
}

fn workspace_root() -> PathBuf {
    // crates/cli -> workspace root
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .unwrap()
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("momentcert_cli_tests").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn momentcert");
    assert!(
        out.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn certify_bundled_gaussian_tensor() {
    let tensor = workspace_root().join("data/gaussian_d2_m4.json");
    let out = run_ok(bin().args(["certify", "--input"]).arg(&tensor).args(["--s-known", "1.0"]));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let b_min = report["b_min"].as_f64().unwrap();
    assert!(
        (1.3155..=1.3166).contains(&b_min),
        "B_min = {b_min}, expected within [1.3155, 1.3166]"
    );
    assert!(report["certificate"].is_object());
    assert!(report["witness"].is_object());
    let ratio = report["ratio"].as_f64().unwrap();
    assert!((ratio - b_min / 2.0).abs() <= 1e-12);
}

#[test]
fn injective_norm_of_bundled_rademacher() {
    let tensor = workspace_root().join("data/rademacher_d2_m4.json");
    let out = run_ok(bin()
        .args(["injective-norm", "--input"])
        .arg(&tensor)
        .args(["--method", "grid2d"]));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let value = report["value"].as_f64().unwrap();
    assert!((value - 2.0).abs() <= 1e-6, "value = {value}");
}

#[test]
fn sample_contaminate_robust_mean_pipeline() {
    let dir = tmp_dir("pipeline");
    let root = workspace_root();
    let clean = dir.join("clean.csv");
    run_ok(bin()
        .args(["sample", "--config"])
        .arg(root.join("configs/sample_gaussian.toml"))
        .arg("--output")
        .arg(&clean));
    let text = std::fs::read_to_string(&clean).unwrap();
    assert_eq!(text.lines().count(), 2000);

    let bad = dir.join("bad.csv");
    run_ok(bin()
        .args(["contaminate", "--config"])
        .arg(root.join("configs/contaminate_cluster.toml"))
        .arg("--input")
        .arg(&clean)
        .arg("--output")
        .arg(&bad));
    let changed = std::fs::read_to_string(&bad)
        .unwrap()
        .lines()
        .zip(text.lines())
        .filter(|(a, b)| a != b)
        .count();
    assert_eq!(changed, 200, "ceil(0.1 * 2000) rows replaced");

    let out = run_ok(bin()
        .args(["robust-mean", "--input"])
        .arg(&bad)
        .args(["--epsilon", "0.1", "--method", "both"]));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for method in ["deg2", "deg4"] {
        let mu = report[method]["mu_hat"].as_array().unwrap();
        let norm: f64 = mu
            .iter()
            .map(|v| v.as_f64().unwrap().powi(2))
            .sum::<f64>()
            .sqrt();
        // the adversary sits at distance 12 with eps 0.1: naive error ~ 1.2
        assert!(norm <= 0.4, "{method} error {norm}");
    }

    let res = run_ok(bin()
        .args(["resilience", "--input"])
        .arg(&clean)
        .args(["--epsilon", "0.1"]));
    let report: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(report["witness_subset_len"].as_u64().unwrap(), 200);
}

#[test]
fn sample_output_is_reproducible() {
    let dir = tmp_dir("repro");
    let root = workspace_root();
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    for path in [&a, &b] {
        run_ok(bin()
            .args(["sample", "--config"])
            .arg(root.join("configs/sample_gaussian.toml"))
            .arg("--output")
            .arg(path));
    }
    assert_eq!(
        std::fs::read(&a).unwrap(),
        std::fs::read(&b).unwrap(),
        "identical config + seed must reproduce bytes"
    );
}

#[test]
fn seed_env_override_changes_output() {
    let dir = tmp_dir("seed_env");
    let root = workspace_root();
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    run_ok(bin()
        .args(["sample", "--config"])
        .arg(root.join("configs/sample_gaussian.toml"))
        .arg("--output")
        .arg(&a));
    run_ok(bin()
        .env("SOS_CERT_SEED", "777")
        .args(["sample", "--config"])
        .arg(root.join("configs/sample_gaussian.toml"))
        .arg("--output")
        .arg(&b));
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn error_sweep_writes_artifacts_with_matching_digests() {
    let dir = tmp_dir("sweep");
    let config = dir.join("sweep.toml");
    std::fs::write(
        &config,
        r#"
[distribution]
family = "gaussian-iso"
d = 2

[sweep]
epsilon_list = [0.05, 0.1]
trials = 2
n = 2000
seed = 5
"#,
    )
    .unwrap();
    let out_dir = dir.join("out");
    run_ok(bin()
        .args(["error-sweep", "--config"])
        .arg(&config)
        .arg("--output-dir")
        .arg(&out_dir));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    let outputs = manifest["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 3);
    for entry in outputs {
        let path = entry["path"].as_str().unwrap();
        let expected = entry["sha256"].as_str().unwrap();
        let bytes = std::fs::read(path).unwrap();
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        let got: String = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(got, expected, "digest mismatch for {path}");
    }
    let plot = std::fs::read_to_string(out_dir.join("sweep_plot.csv")).unwrap();
    assert!(plot.starts_with("epsilon,clean,naive,deg2,deg4"));
    assert_eq!(plot.lines().count(), 3, "header plus one row per epsilon");
}

#[test]
fn pexp_validate_verdicts() {
    let dir = tmp_dir("pexp");
    let valid = dir.join("valid.json");
    std::fs::write(
        &valid,
        r#"{"num_vars":1,"degree":2,"entries":[[[0],1.0],[[1],0.0],[[2],1.0]]}"#,
    )
    .unwrap();
    let out = run_ok(bin().args(["pexp", "validate", "--input"]).arg(&valid));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("Valid"), "got {text}");

    let invalid = dir.join("invalid.json");
    std::fs::write(
        &invalid,
        r#"{"num_vars":1,"degree":2,"entries":[[[0],1.0],[[1],0.0],[[2],-0.5]]}"#,
    )
    .unwrap();
    let out = run_ok(bin().args(["pexp", "validate", "--input"]).arg(&invalid));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("Violations"), "got {text}");
}

#[test]
fn malformed_config_exits_one() {
    let dir = tmp_dir("badconfig");
    let config = dir.join("bad.toml");
    std::fs::write(&config, "[distribution]\nfamily = \"no-such-family\"\nd = 2\n").unwrap();
    let out = bin()
        .args(["profile", "--config"])
        .arg(&config)
        .arg("--output")
        .arg(dir.join("out.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("error:"), "stderr: {err}");
}
