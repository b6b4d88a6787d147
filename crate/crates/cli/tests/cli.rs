use std::path::Path;
use std::process::{Command, Output};

use qdc_core::experiment::{data_lines, parse_csv};

fn qdc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdc")).args(args).output().expect("qdc runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_record(o: &Output) -> serde_json::Value {
    let text = String::from_utf8(o.stderr.clone()).unwrap();
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

#[test]
fn kind_subcommand_writes_csv_to_stdout() {
    let o = qdc(&["theorem1", "--set", "params.instances=4"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("# qdc "));
    let (header, rows) = parse_csv(&text).unwrap();
    assert_eq!(header[..2], ["experiment", "seed"]);
    assert_eq!(rows.len(), 4);
    let ok = header.iter().position(|h| h == "bound_ok").unwrap();
    assert!(rows.iter().all(|r| r[ok] == "true"));
}

#[test]
fn cmaybe_scan_shape() {
    let o = qdc(&["cmaybe-scan"]);
    assert!(o.status.success());
    let (_, rows) = parse_csv(&stdout(&o)).unwrap();
    assert_eq!(rows.len(), 80);
}

#[test]
fn run_is_deterministic_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"kind": "lemma1", "params": {"instances": 5}}"#);
    let a = stdout(&qdc(&["run", "--config", &cfg]));
    let b = stdout(&qdc(&["run", "--config", &cfg, "--threads", "1"]));
    let c = stdout(&qdc(&["run", "--config", &cfg, "--seed", "1"]));
    assert_eq!(data_lines(&a), data_lines(&b));
    assert_ne!(data_lines(&a), data_lines(&c));
    assert!(c.contains("# seed: 1"));
}

#[test]
fn threads_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_qdc"))
        .args(["theorem2-stress", "--set", "params.instances=3"])
        .env("QDC_THREADS", "1")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(data_lines(&stdout(&o)).len(), 16);
}

#[test]
fn out_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = qdc(&["pip", "--set", "params.n=5", "--set", "params.times=[0.5]", "--out", out.to_str().unwrap(), "--sidecar"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(data_lines(&text).len(), 7);
    let side: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("t.csv.json")).unwrap()).unwrap();
    assert_eq!(side["config"]["params"]["n"], 5);
}

#[test]
fn config_errors_exit_2_with_record() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        write(dir.path(), "a.json", "{not json"),
        write(dir.path(), "b.json", r#"{"kind": "spin-evolve", "params": {"times": []}}"#),
        write(dir.path(), "c.json", r#"{"kind": "nope"}"#),
        write(dir.path(), "d.json", r#"{"kind": "theorem1", "params": {"unknown": 1}}"#),
    ];
    for cfg in &cases {
        let o = qdc(&["run", "--config", cfg]);
        assert_eq!(o.status.code(), Some(2), "{cfg}");
        let rec = error_record(&o);
        assert_eq!(rec["error"], "config_error");
        assert!(rec["message"].is_string());
    }
    let o = qdc(&["pip", "--config", &cases[3]]);
    assert_eq!(o.status.code(), Some(2));
    let o = qdc(&["run"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_config_is_io_error() {
    let o = qdc(&["run", "--config", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(error_record(&o)["error"], "io_error");
}

#[test]
fn verify_reports_per_criterion() {
    let o = qdc(&["verify", "--suite", "fast", "--only", "1,5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.lines().filter(|l| l.starts_with("[PASS]")).count() == 2, "{text}");
    let o = qdc(&["verify", "--only", "3", "--json"]);
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["results"][0]["id"], 3);
    assert!(summary["results"][0]["elapsed_s"].is_number());
}

#[test]
fn shipped_configs_run() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let stem = path.file_stem().unwrap().to_str().unwrap().to_string();
        let o = qdc(&["run", "--config", path.to_str().unwrap()]);
        assert!(o.status.success(), "{stem}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains(&format!("# kind: {stem}\n")), "{stem}");
        seen += 1;
    }
    assert_eq!(seen, 9);
}
