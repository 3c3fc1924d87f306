use std::fs;
use std::path::Path;

use assert_cmd::Command;
use marginlab::mlp::idx::{encode_images, encode_labels};
use predicates::prelude::*;
use serde_json::Value;
use tempfile::TempDir;

const DATA: &str = "1,1,0.2\n1,0.8,0.5\n-1,-1,0.1\n-1,-0.7,-0.6\n1,0.9,-0.3\n";

fn cli(dir: &Path) -> Command {
    let mut cmd = Command::cargo_bin("marginlab").unwrap();
    cmd.current_dir(dir)
        .env_remove("MARGINLAB_SEED")
        .env_remove("MARGINLAB_MANIFEST")
        .env_remove("MARGINLAB_MNIST_DIR");
    cmd
}

fn workspace() -> TempDir {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("d.csv"), DATA).unwrap();
    fs::write(dir.path().join("k.csv"), "1,2,0\n1,2.5,0.5\n1,3,-0.2\n").unwrap();
    fs::write(dir.path().join("l.csv"), "1,-2,0\n1,-2.2,0.4\n").unwrap();
    fs::write(dir.path().join("v.csv"), "1,1,0\n1,0.6,0.8\n1,0.6,-0.5\n").unwrap();
    fs::write(dir.path().join("basis.csv"), "1,1,0,0\n1,0,1,0\n1,0,0,1\n").unwrap();
    dir
}

fn validate(report: &Value) {
    let text = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/schema.json")).unwrap();
    let schema: Value = serde_json::from_str(&text).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(report).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "schema errors: {errors:?}");
}

fn run_json(dir: &Path, args: &[&str]) -> Value {
    let out = cli(dir).args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    validate(&report);
    report
}

#[test]
fn beta_without_threshold_is_a_usage_error() {
    let dir = workspace();
    cli(dir.path())
        .args(["train", "--algo", "beta", "--data", "d.csv"])
        .assert()
        .code(2)
        .stderr(predicate::str::contains("--beta"));
}

#[test]
fn missing_data_file_exits_2() {
    let dir = workspace();
    cli(dir.path())
        .args(["oracle", "--data", "missing.csv"])
        .assert()
        .code(2)
        .stderr(predicate::str::contains("missing.csv"));
}

#[test]
fn unknown_flag_exits_2() {
    let dir = workspace();
    cli(dir.path()).args(["census", "--frobnicate"]).assert().code(2);
    cli(dir.path()).arg("bogus").assert().code(2);
}

#[test]
fn train_reports_validate_and_pass() {
    let dir = workspace();
    for args in [
        vec!["train", "--algo", "classic", "--data", "d.csv"],
        vec!["train", "--algo", "beta", "--beta", "1", "--data", "d.csv"],
        vec!["train", "--algo", "r-indep", "--data", "d.csv", "--scan", "first"],
        vec!["train", "--algo", "combined", "--alpha", "1.5", "--data", "d.csv"],
    ] {
        let r = run_json(dir.path(), &args);
        assert_eq!(r["command"], "train");
        assert!(r["bound_checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
    }
}

#[test]
fn trace_is_written_as_csv() {
    let dir = workspace();
    cli(dir.path())
        .args(["train", "--algo", "classic", "--data", "d.csv", "--out", "r.json", "--trace", "t.csv"])
        .assert()
        .success();
    let trace = fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert!(trace.starts_with("t,i,beta\n"));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(trace.lines().count() - 1, report["update_count"].as_u64().unwrap() as usize);
}

#[test]
fn infinity_variant_rejects_radius_above_one() {
    let dir = workspace();
    cli(dir.path())
        .args(["train", "--algo", "inf", "--alpha", "1.5", "--data", "d.csv"])
        .assert()
        .code(2);
}

#[test]
fn exhausted_update_cap_is_a_failed_check() {
    let dir = workspace();
    cli(dir.path())
        .args(["train", "--algo", "beta", "--beta", "10", "--data", "d.csv", "--max-updates", "1"])
        .assert()
        .code(1)
        .stderr(predicate::str::contains("failed check: terminated"));
}

#[test]
fn identical_arguments_give_identical_reports() {
    let dir = workspace();
    let run = |args: &[&str]| cli(dir.path()).args(args).output().unwrap().stdout;
    for args in [
        &["project", "--data", "d.csv", "--k", "7", "--seed", "3"][..],
        &["genexp", "--eps", "0.3", "--m", "300", "--delta", "0.05", "--trials", "3", "--test-size", "500"][..],
        &["train", "--algo", "r-indep", "--data", "d.csv"][..],
    ] {
        let a = run(args);
        assert!(!a.is_empty());
        assert_eq!(a, run(args), "{args:?}");
    }
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = workspace();
    let with_env = cli(dir.path())
        .env("MARGINLAB_SEED", "9")
        .args(["project", "--data", "d.csv", "--k", "4"])
        .output()
        .unwrap()
        .stdout;
    let with_flag = cli(dir.path())
        .args(["project", "--data", "d.csv", "--k", "4", "--seed", "9"])
        .output()
        .unwrap()
        .stdout;
    assert_eq!(with_env, with_flag);
    let r: Value = serde_json::from_slice(&with_env).unwrap();
    assert_eq!(r["seed"], 9);
}

#[test]
fn every_subcommand_emits_schema_valid_json() {
    let dir = workspace();
    let p = dir.path();
    let o = run_json(p, &["oracle", "--data", "d.csv"]);
    assert_eq!(o["separable"], true);
    let s = run_json(p, &["separate", "--k", "k.csv", "--l", "l.csv", "--eps", "0.2"]);
    assert_eq!(s["outcome"]["kind"], "hyperplane");
    let g = run_json(p, &["game", "--v", "v.csv"]);
    assert_eq!(g["terminated"], true);
    run_json(p, &["project", "--data", "d.csv", "--k", "5"]);
    let c = run_json(p, &["census", "--data", "basis.csv", "--eps", "0.5"]);
    assert_eq!(c["count"], 8);
    run_json(p, &["dimred", "--data", "basis.csv", "--eps", "0.5", "--delta", "0.1", "--trials", "2"]);
    run_json(
        p,
        &["dimred", "--data", "basis.csv", "--eps", "0.5", "--delta", "0.1", "--trials", "2", "--sampled", "10"],
    );
    run_json(
        p,
        &["genexp", "--dist", "planted", "--eps", "0.3", "--m", "200", "--delta", "0.05", "--trials", "2", "--test-size", "100"],
    );
    let sh = run_json(p, &["sharpness", "--alpha", "1.9", "--eps", "0.6,0.5"]);
    assert!(sh["points"][0]["simulated"].is_u64());
}

#[test]
fn verify_all_writes_a_summary() {
    let dir = workspace();
    cli(dir.path())
        .args(["verify-all", "--only", "5,12", "--out", "v.json"])
        .assert()
        .success()
        .stdout(predicate::str::contains("PASS [ 5]").and(predicate::str::contains("2/2 criteria passed")));
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("v.json")).unwrap()).unwrap();
    validate(&v);
    assert_eq!(v["all_pass"], true);
    cli(dir.path()).args(["verify-all", "--only", "13"]).assert().code(2);
}

#[test]
fn missing_mnist_fails_the_mnist_criterion() {
    let dir = workspace();
    cli(dir.path())
        .args(["verify-all", "--full", "--only", "11", "--mnist-dir", "nowhere"])
        .assert()
        .code(1)
        .stdout(predicate::str::contains("FAIL [11]"))
        .stderr(predicate::str::contains("criterion 11"));
}

#[test]
fn quick_suite_passes() {
    let dir = workspace();
    cli(dir.path())
        .args(["verify-all", "--quick", "--seed", "1"])
        .assert()
        .success()
        .stdout(predicate::str::contains("11/11 criteria passed"));
}

fn write_tiny_mnist(dir: &Path) {
    let (n, rows, cols) = (40, 4, 4);
    let mut pixels = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let class = (i % 3) as u8;
        labels.push(class);
        for p in 0..rows * cols {
            pixels.push(if p % 3 == class as usize { 200 } else { (i * 7 % 50) as u8 });
        }
    }
    for prefix in ["train", "t10k"] {
        fs::write(dir.join(format!("{prefix}-images-idx3-ubyte")), encode_images(n, rows, cols, &pixels)).unwrap();
        fs::write(dir.join(format!("{prefix}-labels-idx1-ubyte")), encode_labels(&labels)).unwrap();
    }
}

#[test]
fn mlp_log_turns_into_csv() {
    let dir = workspace();
    let p = dir.path();
    write_tiny_mnist(p);
    let log = run_json(
        p,
        &["mlp", "--mnist-dir", ".", "--hidden", "6", "--schedule", "power:0.75", "--lr", "0.1", "--epochs", "3", "--batch", "dynamic:4"],
    );
    assert_eq!(log["epochs"].as_array().unwrap().len(), 3);
    fs::write(p.join("log.json"), serde_json::to_string(&log).unwrap()).unwrap();
    cli(p).args(["sharpness", "--eps", "0.6,0.5", "--out", "sharp.json"]).assert().success();
    cli(p).args(["plots", "log.json", "sharp.json", "--out-dir", "csv"]).assert().success();
    let epochs = fs::read_to_string(p.join("csv/log.error_vs_epoch.csv")).unwrap();
    assert!(epochs.starts_with("epoch,train_error,test_error\n"));
    assert_eq!(epochs.lines().count(), 4);
    let sharp = fs::read_to_string(p.join("csv/sharp.updates_vs_eps.csv")).unwrap();
    assert!(sharp.starts_with("eps,updates,simulated\n0.6,"));
}

#[test]
fn mlp_explicit_paths_and_bad_flags() {
    let dir = workspace();
    let p = dir.path();
    write_tiny_mnist(p);
    run_json(
        p,
        &[
            "mlp",
            "--train-images", "train-images-idx3-ubyte",
            "--train-labels", "train-labels-idx1-ubyte",
            "--test-images", "t10k-images-idx3-ubyte",
            "--test-labels", "t10k-labels-idx1-ubyte",
            "--hidden", "0",
            "--epochs", "1",
            "--global-clock",
        ],
    );
    cli(p).args(["mlp", "--mnist-dir", ".", "--schedule", "linear:1"]).assert().code(2);
    cli(p).args(["mlp", "--mnist-dir", ".", "--batch", "fixed:0"]).assert().code(2);
}

#[test]
fn plots_edge_cases() {
    let dir = workspace();
    let p = dir.path();
    cli(p).arg("plots").assert().success().stdout("");
    cli(p).args(["plots", "absent.json"]).assert().code(2);
    cli(p)
        .args(["oracle", "--data", "d.csv", "--out", "cert.json"])
        .assert()
        .success();
    cli(p).args(["plots", "cert.json"]).assert().code(2);
}

#[test]
fn train_reports_aggregate_into_margin_series() {
    let dir = workspace();
    let p = dir.path();
    for b in ["0.5", "2"] {
        cli(p)
            .args(["train", "--algo", "beta", "--beta", b, "--data", "d.csv", "--out", &format!("beta{b}.json")])
            .assert()
            .success();
    }
    cli(p).args(["plots", "beta0.5.json", "beta2.json"]).assert().success();
    let csv = fs::read_to_string(p.join("margin_vs_beta.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "report,algorithm,beta,alpha,eps_star,margin,update_count");
    assert!(lines[1].starts_with("beta0.5,beta,0.5,,"));
    assert_eq!(lines.len(), 3);
}

#[test]
fn every_run_appends_one_manifest() {
    let dir = workspace();
    let p = dir.path();
    cli(p).args(["oracle", "--data", "d.csv", "--out", "cert.json"]).assert().success();
    cli(p).args(["oracle", "--data", "missing.csv"]).assert().code(2);
    cli(p).args(["census", "--data", "d.csv", "--eps", "0.3", "--no-manifest"]).assert().success();
    let log = fs::read_to_string(p.join("marginlab-runs.jsonl")).unwrap();
    let lines: Vec<Value> = log.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["command"], "oracle");
    assert_eq!(lines[0]["artifacts"][0], "cert.json");
    assert_eq!(lines[0]["pass"], true);
    assert_eq!(lines[1]["exit_code"], 2);
    for key in ["parameters", "seed", "wall_clock_secs", "failed_checks"] {
        assert!(lines[0].get(key).is_some(), "{key}");
    }
}
