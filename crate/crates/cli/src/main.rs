use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ancilla::harness::{self, ExperimentConfig, ExperimentKind, SystemSpec};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ancilla", version, about = "Repeated-interaction thermalization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean distance to the Gibbs state along sampled trajectories
    Simulate(Common),
    /// Smallest number of interactions reaching the target distance
    MinL(Common),
    /// Minimal interactions across inverse temperatures
    SweepBeta(Common),
    /// Minimal interactions across target accuracies, with a power-law fit
    SweepEpsilon(Common),
    /// Minimal interactions across ancilla-gap noise widths
    SweepGammaNoise(Common),
    /// Weak-coupling Markov chain quantities (no sampling)
    Markov(Common),
    /// Coupling, time and interaction count for a target accuracy
    Plan(Common),
    /// Invariant checks for a system and channel
    Validate(Common),
    /// Monte Carlo checks of the Haar averages
    HaarCheck(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: the configured one, else the current directory)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on this
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the configured number of trials
    #[arg(long)]
    trials: Option<usize>,
}

impl Command {
    fn split(self) -> (ExperimentKind, Common) {
        match self {
            Command::Simulate(c) => (ExperimentKind::Trajectory, c),
            Command::MinL(c) => (ExperimentKind::MinL, c),
            Command::SweepBeta(c) => (ExperimentKind::SweepBeta, c),
            Command::SweepEpsilon(c) => (ExperimentKind::SweepEpsilon, c),
            Command::SweepGammaNoise(c) => (ExperimentKind::SweepGammaNoise, c),
            Command::Markov(c) => (ExperimentKind::Markov, c),
            Command::Plan(c) => (ExperimentKind::Plan, c),
            Command::Validate(c) => (ExperimentKind::Validate, c),
            Command::HaarCheck(c) => (ExperimentKind::HaarCheck, c),
        }
    }
}

fn load_config(kind: ExperimentKind, common: &Common) -> Result<ExperimentConfig, String> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let mut value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            // the subcommand decides the experiment kind
            if let Some(obj) = value.as_object_mut() {
                obj.insert("kind".into(), serde_json::to_value(kind).expect("kind serializes"));
            }
            serde_json::from_value::<ExperimentConfig>(value).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None if kind == ExperimentKind::HaarCheck => ExperimentConfig::from_json(
            &serde_json::json!({
                "name": "haar_check",
                "kind": kind,
                "system": SystemSpec::Qubit { gap: 1.0 },
            })
            .to_string(),
        )
        .map_err(|e| e.to_string())?,
        None => return Err("--config is required for this command".into()),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(t) = common.trials {
        cfg.trials = t;
        if let Some(m) = cfg.max_trials {
            cfg.max_trials = Some(m.max(t));
        }
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn print_summary(out: &harness::RunOutput) {
    let r = &out.report;
    let rec = &r.records;
    match rec.kind.as_str() {
        "validate" | "haar_check" => {
            for row in &rec.rows {
                let status = if row[4] == "true" { "PASS" } else { "FAIL" };
                println!("[{status}] {}/{}: {} (tolerance {})", row[0], row[1], row[2], row[3]);
            }
        }
        "plan" => {
            for (c, v) in rec.columns.iter().zip(&rec.rows[0]) {
                println!("{c:>16}: {v}");
            }
        }
        _ => println!("{} rows", rec.rows.len()),
    }
    println!("summary: {}", r.summary);
    println!("wrote {} and {}", out.csv.display(), out.meta.display());
}

fn run(command: Command) -> Result<bool, String> {
    let (kind, common) = command.split();
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    }
    let cfg = load_config(kind, &common)?;
    let out_dir = common.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("."));
    let base = common.config.as_deref().and_then(Path::parent);
    let out = harness::run(&cfg, &out_dir, base).map_err(|e| e.to_string())?;
    print_summary(&out);
    Ok(out.report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
