use chemosim::experiments::{self, analyze, run_experiment, sweep, ExperimentConfig, ExperimentError};
use chemosim::kinetics::{check_assumptions, AssumptionQuery};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Chemotaxis simulations with signal-dependent motility.
#[derive(Parser)]
#[command(name = "chemosim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run {
        /// Config file, or `preset:<name>` for a bundled scenario.
        config: String,
        /// Output directory (overrides `[output] dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Random seed (overrides `[initial] seed`).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run one experiment per value of a config key.
    Sweep {
        config: String,
        /// Key to vary, as `section.key`.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<String>,
        /// Worker threads (default: logical cores minus one).
        #[arg(long)]
        jobs: Option<usize>,
        /// Root directory for the runs (default: `[output] dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the motility function of a config against the growth hypotheses.
    CheckGamma {
        config: String,
        #[command(flatten)]
        query: QueryArgs,
    },
    /// Re-derive the verdict and diagnostics summary of a finished run.
    Analyze { dir: PathBuf },
    /// Print a bundled scenario config (or list them).
    Preset { name: Option<String> },
}

#[derive(Args)]
struct QueryArgs {
    /// Exponent for the algebraic lower bound s^k γ(s).
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    /// Exponent for the upper bound s^l γ(s).
    #[arg(long, default_value_t = 0.0)]
    l: f64,
    /// Rate for the exponential lower bound e^(χs) γ(s).
    #[arg(long, default_value_t = 1.0)]
    chi: f64,
    /// Weight b0 in the growth-control combination.
    #[arg(long, default_value_t = 1.0)]
    b0: f64,
    #[arg(long, default_value_t = 1e-3)]
    s_min: f64,
    #[arg(long, default_value_t = 1e3)]
    s_max: f64,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Space dimension for the regime test.
    #[arg(long, default_value_t = 2)]
    dim: usize,
}

enum Failure {
    Config(String),
    Solver(String),
    Other(String),
}

fn load(spec: &str) -> Result<ExperimentConfig, Failure> {
    let text = match spec.strip_prefix("preset:") {
        Some(name) => experiments::preset(name)
            .ok_or_else(|| Failure::Config(format!("unknown preset `{name}`")))?
            .to_string(),
        None => std::fs::read_to_string(spec).map_err(|e| Failure::Config(format!("{spec}: {e}")))?,
    };
    ExperimentConfig::parse(&text).map_err(|e| Failure::Config(format!("{spec}:\n{e}")))
}

fn classify(e: ExperimentError) -> Failure {
    match e {
        ExperimentError::Config(_) | ExperimentError::Grid(_) | ExperimentError::Init(_) => Failure::Config(e.to_string()),
        ExperimentError::EmptySweep | ExperimentError::BadAxis(_) => Failure::Config(e.to_string()),
        ExperimentError::Diagnostics(_) => Failure::Solver(e.to_string()),
        _ => Failure::Other(e.to_string()),
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config, out, seed } => {
            let mut cfg = load(&config)?;
            if let Some(dir) = out {
                cfg.output.dir = dir;
            }
            if let Some(seed) = seed {
                cfg.initial.seed = seed;
            }
            let a = run_experiment(&cfg).map_err(classify)?;
            println!("verdict: {}", a.verdict.summary());
            println!("steps: {}", a.steps);
            println!("output: {}", a.dir.display());
            match a.failure {
                Some(msg) => Err(Failure::Solver(msg)),
                None => Ok(()),
            }
        }
        Command::Sweep { config, axis, values, jobs, out } => {
            let cfg = load(&config)?;
            let root = out.unwrap_or_else(|| cfg.output.dir.clone());
            let values: Vec<String> = values.into_iter().map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
            let s = sweep(&cfg, &axis, &values, jobs, &root).map_err(classify)?;
            for r in &s.rows {
                let verdict = r.verdict.map(|v| v.to_string()).unwrap_or_else(|| "error".into());
                let delta = r.delta.map(|d| format!(" delta={d:e}")).unwrap_or_default();
                let err = r.error.as_deref().map(|e| format!(" ({e})")).unwrap_or_default();
                println!("{}={}: {verdict}{delta}{err}", s.axis, r.value);
            }
            println!("summary: {}", s.summary_path.display());
            Ok(())
        }
        Command::CheckGamma { config, query: q } => {
            let cfg = load(&config)?;
            let query = AssumptionQuery {
                k: q.k,
                l: q.l,
                chi: q.chi,
                b0: q.b0,
                s_min: q.s_min,
                s_max: q.s_max,
                samples: q.samples,
                space_dim: q.dim,
            };
            let report = check_assumptions(&cfg.params().motility, &query).map_err(|e| Failure::Config(e.to_string()))?;
            println!("{report}");
            Ok(())
        }
        Command::Analyze { dir } => {
            let report = analyze(&dir).map_err(|e| match e {
                ExperimentError::MissingDiagnostics(_) | ExperimentError::Malformed(_) => Failure::Config(e.to_string()),
                other => classify(other),
            })?;
            println!("{report}");
            Ok(())
        }
        Command::Preset { name: None } => {
            for (name, _) in experiments::PRESETS {
                println!("{name}");
            }
            Ok(())
        }
        Command::Preset { name: Some(name) } => {
            let text = experiments::preset(&name).ok_or_else(|| Failure::Config(format!("unknown preset `{name}`")))?;
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver failure: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
