//! `qdc`: run consensus-measure experiments from JSON configs and check the
//! numerical acceptance suite.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qdc_core::experiment::{emit, run, ExperimentConfig, ExperimentKind, RunError};
use qdc_core::par::{self, ExecMode};
use qdc_core::verify::{self, Suite};

#[derive(Parser)]
#[command(name = "qdc", version, about = "Consensus measures on branching, c-maybe and spin-model states")]
struct Cli {
    /// Worker threads (default: hardware parallelism).
    #[arg(long, global = true, env = "QDC_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// I(S:F) against fragment size for the c-maybe model.
    CmaybeScan(RunArgs),
    /// Consensus measures for the c-maybe model under tilted measurements.
    CmaybeConsensus(RunArgs),
    /// Holevo and refined information against the measurement tilt.
    HolevoTilt(RunArgs),
    /// Ensemble time series of the spin model.
    SpinEvolve(RunArgs),
    /// Partial information plots of the spin model.
    Pip(RunArgs),
    /// Redundancy of the spin model over time.
    Redundancy(RunArgs),
    /// Deficit identity on random decohered branching states.
    Theorem1(RunArgs),
    /// Finite-remainder decomposition on random branching states.
    Lemma1(RunArgs),
    /// Refined information under random POVMs.
    Theorem2Stress(RunArgs),
    /// Run the experiment named by the config's `kind`.
    Run(RunArgs),
    /// Run the acceptance suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. `params.n=12` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output CSV path; stdout when neither this nor the config names one.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write `<out>.json` with the config echo.
    #[arg(long)]
    sidecar: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "fast")]
    suite: Suite,
    /// Run only these criteria (comma separated).
    #[arg(long, value_delimiter = ',')]
    only: Vec<u8>,
    /// Print the summary as JSON instead of text.
    #[arg(long)]
    json: bool,
}

fn load_config(kind: Option<ExperimentKind>, args: &RunArgs) -> Result<ExperimentConfig, RunError> {
    let text = match &args.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?,
        None => match kind {
            Some(k) => serde_json::json!({ "kind": k.name() }).to_string(),
            None => return Err(RunError::Config("`qdc run` needs --config".into())),
        },
    };
    let mut raw: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| RunError::Config(format!("invalid JSON: {e}")))?;
    if let (Some(k), Some(obj)) = (kind, raw.as_object_mut()) {
        match obj.get("kind").and_then(|v| v.as_str()) {
            Some(found) if found != k.name() => {
                return Err(RunError::Config(format!("config kind '{found}' does not match subcommand '{k}'")))
            }
            Some(_) => {}
            None => {
                obj.insert("kind".into(), k.name().into());
            }
        }
    }
    let mut cfg = ExperimentConfig::from_json_with_overrides(&raw.to_string(), &args.set)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output = Some(out.display().to_string());
    }
    cfg.sidecar |= args.sidecar;
    Ok(cfg)
}

fn run_experiment(kind: Option<ExperimentKind>, args: &RunArgs) -> Result<(), RunError> {
    let cfg = load_config(kind, args)?;
    let table = run(&cfg, ExecMode::auto())?;
    match &cfg.output {
        Some(path) => {
            emit(&table, &PathBuf::from(path), cfg.sidecar)?;
        }
        None => {
            // a closed pipe (`qdc ... | head`) is not an error
            let csv = table.to_csv()?;
            match std::io::stdout().lock().write_all(csv.as_bytes()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(RunError::Io(e.to_string())),
                _ => {}
            }
        }
    }
    Ok(())
}

fn run_verify(args: &VerifyArgs) -> ExitCode {
    let mode = ExecMode::auto();
    let ids: Vec<u8> = if args.only.is_empty() { (1..=10).collect() } else { args.only.clone() };
    let mut results = Vec::new();
    for id in ids {
        let r = verify::run_criterion(id, args.suite, mode);
        if !args.json {
            println!("{r}");
            let _ = std::io::stdout().flush();
        }
        results.push(r);
    }
    let passed = results.iter().all(|r| r.passed);
    let summary = verify::Summary { suite: args.suite, results };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    } else {
        let failed = summary.failed();
        if failed.is_empty() {
            println!("all {} criteria passed", summary.results.len());
        } else {
            println!("failed criteria: {failed:?}");
        }
    }
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads.filter(|&n| n > 0) {
        par::configure_threads(n);
    }
    let (kind, args) = match &cli.command {
        Command::Verify(v) => return run_verify(v),
        Command::Run(a) => (None, a),
        Command::CmaybeScan(a) => (Some(ExperimentKind::CmaybeScan), a),
        Command::CmaybeConsensus(a) => (Some(ExperimentKind::CmaybeConsensus), a),
        Command::HolevoTilt(a) => (Some(ExperimentKind::HolevoTilt), a),
        Command::SpinEvolve(a) => (Some(ExperimentKind::SpinEvolve), a),
        Command::Pip(a) => (Some(ExperimentKind::Pip), a),
        Command::Redundancy(a) => (Some(ExperimentKind::Redundancy), a),
        Command::Theorem1(a) => (Some(ExperimentKind::Theorem1), a),
        Command::Lemma1(a) => (Some(ExperimentKind::Lemma1), a),
        Command::Theorem2Stress(a) => (Some(ExperimentKind::Theorem2Stress), a),
    };
    match run_experiment(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
