use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_piconvae"));
    c.env_remove("PICONVAE_OUT_DIR");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().arg("--out-dir").arg(dir).args(args).output().unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stdout: {}\nstderr: {}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr));
}

fn failure_line(out: &Output, code: i32, class: &str) {
    assert_eq!(out.status.code(), Some(code), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.starts_with(&format!("error class={class} kind=")), "{err}");
}

fn small_model(dir: &Path) -> String {
    let cfg = dir.join("model.json");
    fs::write(&cfg, r#"{"window": 20, "latent_per_feature": 5, "epochs": 2, "seed": 3}"#).unwrap();
    cfg.to_string_lossy().into_owned()
}

fn generated(dir: &Path) -> String {
    ok(&run(dir, &["generate", "--length", "2016", "--seed", "4"]));
    dir.join("series.csv").to_string_lossy().into_owned()
}

fn injected(dir: &Path) -> String {
    let series = generated(dir);
    ok(&run(dir, &["inject", "--input", &series, "--seed", "4"]));
    dir.join("attacked.csv").to_string_lossy().into_owned()
}

#[test]
fn help_and_version_succeed() {
    assert!(bin().arg("--help").output().unwrap().status.success());
    assert!(bin().arg("--version").output().unwrap().status.success());
}

#[test]
fn bad_arguments_exit_with_usage_code() {
    let out = bin().args(["train", "--no-such-flag"]).output().unwrap();
    failure_line(&out, 1, "usage");
    let out = bin().args(["inject"]).output().unwrap();
    failure_line(&out, 1, "usage");
}

#[test]
fn generate_writes_series_and_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().env("PICONVAE_OUT_DIR", dir.path()).args(["generate", "--length", "500", "--seed", "9"]).output().unwrap();
    ok(&out);
    let csv = fs::read_to_string(dir.path().join("series.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,V,I,theta,delta,P,Q");
    assert_eq!(csv.lines().count(), 501);
    let cfg: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("generate_config.json")).unwrap()).unwrap();
    assert_eq!(cfg["length"], 500);
    assert_eq!(cfg["seed"], 9);
    let again = tempfile::tempdir().unwrap();
    ok(&run(again.path(), &["generate", "--length", "500", "--seed", "9"]));
    assert_eq!(csv, fs::read_to_string(again.path().join("series.csv")).unwrap());
}

#[test]
fn inject_labels_only_the_test_split() {
    let dir = tempfile::tempdir().unwrap();
    let attacked = injected(dir.path());
    let text = fs::read_to_string(&attacked).unwrap();
    let labels: Vec<&str> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(labels.len(), 2016);
    let first_test = (2016.0f64 * 0.8).round() as usize;
    assert!(labels[..first_test].iter().all(|&l| l == "0"));
    assert_eq!(labels.iter().filter(|&&l| l == "1").count(), 105);
    let cfg: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("inject_config.json")).unwrap()).unwrap();
    assert_eq!(cfg["suite"]["specs"].as_array().unwrap().len(), 7);
}

#[test]
fn inject_rejects_attacks_outside_test_split_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    let series = generated(dir.path());
    let suite = dir.path().join("suite.json");
    fs::write(&suite, r#"{"specs": [{"kind": "combined", "params": {"b": 0, "delta_z": 0.1}, "t_start": 10, "t_end": 20}]}"#).unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&out_dir, &["inject", "--input", &series, "--suite", suite.to_str().unwrap()]);
    failure_line(&out, 1, "usage");
    assert!(!out_dir.exists() || fs::read_dir(&out_dir).unwrap().next().is_none());
}

#[test]
fn missing_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let series = generated(dir.path());
    let out = run(dir.path(), &["train", "--input", &series, "--config", "/nonexistent/model.json"]);
    failure_line(&out, 1, "usage");
    fs::write(dir.path().join("broken.json"), "{ not json").unwrap();
    let out = run(dir.path(), &["train", "--input", &series, "--config", dir.path().join("broken.json").to_str().unwrap()]);
    failure_line(&out, 1, "usage");
}

#[test]
fn malformed_data_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "t,V,I\n0,1,2\n").unwrap();
    let cfg = small_model(dir.path());
    let out = run(dir.path(), &["train", "--input", bad.to_str().unwrap(), "--config", &cfg]);
    failure_line(&out, 2, "data");
    assert!(!dir.path().join("checkpoint.json").exists());
}

#[test]
fn divergent_training_exits_with_training_code() {
    let dir = tempfile::tempdir().unwrap();
    let series = generated(dir.path());
    let cfg = small_model(dir.path());
    let out = run(dir.path(), &["train", "--input", &series, "--config", &cfg, "--learning-rate", "1e300"]);
    failure_line(&out, 3, "training");
    assert!(!dir.path().join("checkpoint.json").exists());
}

#[test]
fn train_detect_evaluate_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let attacked = injected(p);
    let cfg = small_model(p);
    ok(&run(p, &["train", "--input", &attacked, "--config", &cfg, "--progress"]));
    for f in ["checkpoint.json", "loss_log.csv", "train_config.json"] {
        assert!(p.join(f).exists(), "{f}");
    }
    let log = fs::read_to_string(p.join("loss_log.csv")).unwrap();
    assert_eq!(log.lines().count(), 3);

    let ckpt = p.join("checkpoint.json");
    ok(&run(p, &["detect", "--input", &attacked, "--model", ckpt.to_str().unwrap()]));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(p.join("report.json")).unwrap()).unwrap();
    let c = &report["confusion"];
    let total = ["tp", "fp", "tn", "fn"].iter().map(|k| c[k].as_u64().unwrap()).sum::<u64>();
    let test_len = 2016 - (2016.0f64 * 0.8).round() as u64;
    assert_eq!(total, test_len);
    assert_eq!(c["tp"].as_u64().unwrap() + c["fn"].as_u64().unwrap(), 105);
    let scores = fs::read_to_string(p.join("scores.csv")).unwrap();
    assert_eq!(scores.lines().next().unwrap(), "t,a_r,a_p,a_q,a,predicted,label");
    let resolved: serde_json::Value = serde_json::from_str(&fs::read_to_string(p.join("detect_config.json")).unwrap()).unwrap();
    assert_eq!(resolved["scoring"]["mode"], "combined");

    let eval_dir = p.join("eval");
    let report_arg = format!("pi={}", p.join("report.json").display());
    let scores_arg = format!("pi-scores={}", p.join("scores.csv").display());
    ok(&run(&eval_dir, &["evaluate", "--reports", &report_arg, "--scores", &scores_arg]));
    let metrics = fs::read_to_string(eval_dir.join("metrics.csv")).unwrap();
    let rows: Vec<&str> = metrics.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].split_once(',').unwrap().1, rows[1].split_once(',').unwrap().1);

    ok(&run(p, &["plot", "loss", "--input", p.join("loss_log.csv").to_str().unwrap()]));
    ok(&run(p, &["plot", "scores", "--input", p.join("scores.csv").to_str().unwrap(), "--report", p.join("report.json").to_str().unwrap()]));
    ok(&run(p, &["plot", "overlay", "--input", &attacked, "--model", ckpt.to_str().unwrap(), "--channel", "P"]));
    for f in ["loss.svg", "scores.svg", "overlay.svg"] {
        let svg = fs::read_to_string(p.join(f)).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"), "{f}");
    }
}

#[test]
fn kmeans_detector_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let attacked = injected(p);
    let cfg = small_model(p);
    ok(&run(p, &["train", "--kind", "kmeans", "--input", &attacked, "--config", &cfg, "--k", "4"]));
    ok(&run(p, &["detect", "--input", &attacked, "--model", p.join("kmeans.json").to_str().unwrap()]));
    let scores = fs::read_to_string(p.join("scores.csv")).unwrap();
    let row: Vec<&str> = scores.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[2], "0");
    assert_eq!(row[3], "0");
}

#[test]
fn compare_and_scarcity_tables() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let cfg = p.join("experiment.json");
    fs::write(
        &cfg,
        r#"{"seed": 2, "length": 2016, "model": {"window": 20, "latent_per_feature": 5, "epochs": 1}, "kmeans_k": 4}"#,
    )
    .unwrap();
    ok(&run(p, &["compare", "--config", cfg.to_str().unwrap(), "--detectors", "convae,kmeans"]));
    let table = fs::read_to_string(p.join("comparison.csv")).unwrap();
    assert_eq!(table.lines().next().unwrap(), "detector,tp,fp,tn,fn,accuracy,precision,recall,f1");
    assert_eq!(table.lines().count(), 3);
    for f in ["report_convae.json", "report_kmeans.json", "scores_kmeans.csv", "compare_config.json"] {
        assert!(p.join(f).exists(), "{f}");
    }
    ok(&run(p, &["scarcity", "--config", cfg.to_str().unwrap(), "--detectors", "kmeans", "--ratios", "0.5,0.2"]));
    let table = fs::read_to_string(p.join("scarcity.csv")).unwrap();
    assert_eq!(table.lines().next().unwrap(), "ratio,detector,tp,fp,tn,fn,accuracy,precision,recall,f1");
    assert_eq!(table.lines().count(), 3);
    let out = run(p, &["scarcity", "--ratios", "1.5"]);
    failure_line(&out, 1, "usage");
}
