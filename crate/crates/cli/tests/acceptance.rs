//! Full acceptance suite: one pass/fail line per criterion. Determinism is
//! checked in-process and through two runs of the `qdc` binary.

use std::path::Path;
use std::process::Command;

use qdc_core::experiment::data_lines;
use qdc_core::par::ExecMode;
use qdc_core::verify::{self, CriterionResult, Suite};

fn qdc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qdc"))
}

fn binary_run(config: &Path, out: &Path) -> Result<String, String> {
    let status = qdc()
        .args(["run", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .status()
        .map_err(|e| e.to_string())?;
    if !status.success() {
        return Err(format!("qdc run exited with {status}"));
    }
    let text = std::fs::read_to_string(out).map_err(|e| e.to_string())?;
    Ok(data_lines(&text).join("\n"))
}

/// Two `qdc run` invocations on the same config file.
fn binary_determinism() -> (bool, String) {
    let dir = tempfile::tempdir().expect("temp dir");
    let configs = [
        r#"{"kind": "spin-evolve", "seed": 3, "params": {"n": 8, "realizations": 3, "time_grid": {"t0": 0.1, "t1": 50.0, "points": 6}, "m": [2], "per_realization": true}}"#,
        r#"{"kind": "theorem2-stress", "seed": 11, "params": {"instances": 20}}"#,
        r#"{"kind": "cmaybe-consensus", "params": {"n": 30}}"#,
    ];
    let mut same = 0;
    for (i, text) in configs.iter().enumerate() {
        let cfg = dir.path().join(format!("c{i}.json"));
        std::fs::write(&cfg, text).expect("write config");
        let a = binary_run(&cfg, &dir.path().join(format!("a{i}.csv")));
        let b = binary_run(&cfg, &dir.path().join(format!("b{i}.csv")));
        match (a, b) {
            (Ok(a), Ok(b)) if a == b && !a.is_empty() => same += 1,
            (Err(e), _) | (_, Err(e)) => return (false, e),
            _ => {}
        }
    }
    (same == configs.len(), format!("{same}/{} binary runs byte-identical", configs.len()))
}

#[test]
fn acceptance_suite() {
    let mut results: Vec<CriterionResult> = Vec::new();
    for id in 1..=10 {
        let mut r = verify::run_criterion(id, Suite::Full, ExecMode::auto());
        if id == 10 {
            let (ok, detail) = binary_determinism();
            r.passed &= ok;
            r.detail = format!("{}; {detail}", r.detail);
        }
        println!("{r}");
        results.push(r);
    }
    let failed: Vec<u8> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
