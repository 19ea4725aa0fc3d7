//! `gauss-extremes`: batch front end for the asymptotic formulas, the
//! constant estimators and the Monte Carlo validations.
//!
//! Exit codes: 0 success, 1 error, 2 validation ran but failed.

mod commands;
mod config;
mod params;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use commands::{Outcome, CSV_HEADER};
use params::*;

pub const COMMANDS: [&str; 6] = [
    "simulate",
    "constant",
    "approx",
    "ruin",
    "passage-time",
    "validate",
];

/// Worker-count cap for the Monte Carlo loops.
const THREADS_VAR: &str = "GAUSS_EXTREMES_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "gauss-extremes",
    version,
    about = "Extremes of Gaussian processes with trend"
)]
struct Cli {
    /// TOML file with one table per subcommand, e.g. `[validate]`; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// JSON output file (stdout when absent).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// CSV table for `ruin` and `validate`.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample paths and optionally estimate an exceedance probability.
    Simulate(SimulateFlags),
    /// Pickands or Piterbarg constant by Monte Carlo.
    Constant(ConstantFlags),
    /// Asymptotic tail approximation: classic, locstat, nonstat or ruin.
    Approx {
        case: String,
        #[command(flatten)]
        flags: ApproxFlags,
    },
    /// Exact and asymptotic ruin probabilities, optionally with Monte Carlo.
    Ruin(RuinFlags),
    /// Conditional passage-time distribution: bridge, locstat or ruin.
    PassageTime {
        case: String,
        #[command(flatten)]
        flags: PassageFlags,
    },
    /// Monte Carlo against asymptotic and exact values: bridge or ruin.
    Validate {
        case: String,
        #[command(flatten)]
        flags: ValidateFlags,
    },
}

fn section(config: Option<&Path>, name: &str) -> Result<serde_json::Map<String, Value>> {
    config.map_or_else(
        || Ok(serde_json::Map::new()),
        |p| config::file_section(p, name),
    )
}

fn resolved<P, F>(config: Option<&Path>, name: &str, flags: &F) -> Result<P>
where
    P: Serialize + serde::de::DeserializeOwned + Default,
    F: Serialize,
{
    config::resolve(section(config, name)?, flags)
}

fn dispatch(cli: &Cli) -> Result<(Value, Outcome)> {
    let cfg = cli.config.as_deref();
    let with = |name: &str, case: Option<&str>, params: Value| {
        let mut v = json!({ "command": name });
        if let Some(c) = case {
            v["case"] = json!(c);
        }
        v["params"] = params;
        v
    };
    Ok(match &cli.command {
        Command::Simulate(f) => {
            let p: SimulateParams = resolved(cfg, "simulate", f)?;
            (
                with("simulate", None, serde_json::to_value(&p)?),
                commands::simulate(&p)?,
            )
        }
        Command::Constant(f) => {
            let p: ConstantParams = resolved(cfg, "constant", f)?;
            (
                with("constant", None, serde_json::to_value(&p)?),
                commands::constant(&p)?,
            )
        }
        Command::Approx { case, flags } => {
            let p: ApproxParams = resolved(cfg, "approx", flags)?;
            (
                with("approx", Some(case), serde_json::to_value(&p)?),
                commands::approx(case, &p)?,
            )
        }
        Command::Ruin(f) => {
            let p: RuinParams = resolved(cfg, "ruin", f)?;
            (
                with("ruin", None, serde_json::to_value(&p)?),
                commands::ruin(&p)?,
            )
        }
        Command::PassageTime { case, flags } => {
            let p: PassageParams = resolved(cfg, "passage-time", flags)?;
            (
                with("passage-time", Some(case), serde_json::to_value(&p)?),
                commands::passage_time(case, &p)?,
            )
        }
        Command::Validate { case, flags } => {
            let p: ValidateParams = resolved(cfg, "validate", flags)?;
            (
                with("validate", Some(case), serde_json::to_value(&p)?),
                commands::validate(case, &p)?,
            )
        }
    })
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .with_context(|| format!("{THREADS_VAR} must be a positive integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the worker pool")?;
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn run(cli: &Cli) -> Result<bool> {
    configure_threads()?;
    let (config, outcome) = dispatch(cli)?;
    let doc = json!({ "config": config, "result": outcome.result, "passed": outcome.passed });
    let text = serde_json::to_string_pretty(&doc)? + "\n";
    match &cli.output {
        Some(path) => write_file(path, &text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    if let Some(path) = &cli.csv {
        let rows = outcome
            .rows
            .as_ref()
            .context("--csv applies to `ruin` and `validate` only")?;
        let mut csv = format!(
            "# config: {}\n{CSV_HEADER}\n",
            serde_json::to_string(&config)?
        );
        for r in rows {
            csv.push_str(&r.csv());
            csv.push('\n');
        }
        write_file(path, &csv)?;
    }
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("validation failed: ratios do not settle at 1 within tolerance");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
