//! `foglink` — dual-hop AF optical wireless link analysis under combined fog
//! and pointing-error fading.
//!
//! Subcommands: `metrics` (one operating point, all routes side by side),
//! `sweep` (curve data as CSV/JSON with a provenance sidecar), `simulate`
//! (Monte Carlo only), `validate` (internal cross-check suite).
//!
//! Exit codes: 0 ok, 1 validation-suite failure, 2 configuration error,
//! 3 numerical non-convergence.

mod config;
mod metrics;
mod sweep;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{ModeName, RunConfig, SweepSection, SweepVar};

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or invocation; exit 2.
    Config(String),
    /// Quadrature/series non-convergence; exit 3.
    Numerical(String),
    /// Validation suite found a broken invariant; exit 1.
    Invariant(usize),
}

impl CliError {
    /// Map a core error, keeping the numerical/config distinction.
    pub fn num(e: foglink::Error) -> Self {
        match e {
            foglink::Error::NonConvergence { .. } | foglink::Error::EvaluationFailure { .. } => {
                CliError::Numerical(e.to_string())
            }
            other => CliError::Config(other.to_string()),
        }
    }

    /// Same, but name the quantity whose evaluation failed.
    pub fn num_in(label: &str) -> impl Fn(foglink::Error) -> CliError + '_ {
        move |e| match e {
            foglink::Error::NonConvergence { .. } | foglink::Error::EvaluationFailure { .. } => {
                CliError::Numerical(format!("{label}: {e}"))
            }
            other => CliError::Config(format!("{label}: {other}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatName {
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct CommonArgs {
    /// JSON configuration file; defaults match the reference setup
    /// (k=2, beta=13.12, R=0.41, sigma_w^2=1e-14, d=1 km, midpoint relay).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout table only when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format for --out.
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatName,
    /// Override sim.master_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override sim.trials; 0 disables the Monte Carlo method.
    #[arg(long)]
    trials: Option<u64>,
    /// Override sim.mode (also selects the quadrature route).
    #[arg(long, value_enum)]
    mode: Option<ModeName>,
}

impl CommonArgs {
    fn build_config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.sim.master_seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.sim.trials = trials;
        }
        if let Some(mode) = self.mode {
            cfg.sim.mode = mode;
        }
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Sweep request as <var>:<lo>:<hi>:<n> with var one of
    /// pt_dbm, d, d_r, gamma_th_db. Overrides the config's sweep section.
    #[arg(long)]
    sweep: Option<String>,
}

#[derive(Parser, Debug)]
#[command(name = "foglink", version, about = "Dual-hop AF optical wireless link analysis under fog and pointing errors")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Evaluate outage / average SNR / ergodic rate at one operating point.
    Metrics(CommonArgs),
    /// Sweep one variable and emit curve data plus a config sidecar.
    Sweep(SweepArgs),
    /// Run the Monte Carlo simulation only.
    Simulate(CommonArgs),
    /// Run the internal cross-validation suite.
    Validate(CommonArgs),
}

fn parse_sweep_flag(text: &str) -> Result<SweepSection, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 4 {
        return Err(CliError::Config(format!(
            "--sweep expects <var>:<lo>:<hi>:<n>, got '{text}'"
        )));
    }
    let variable = SweepVar::parse(parts[0])?;
    let lo: f64 = parts[1]
        .parse()
        .map_err(|_| CliError::Config(format!("bad sweep lo '{}'", parts[1])))?;
    let hi: f64 = parts[2]
        .parse()
        .map_err(|_| CliError::Config(format!("bad sweep hi '{}'", parts[2])))?;
    let points: usize = parts[3]
        .parse()
        .map_err(|_| CliError::Config(format!("bad sweep point count '{}'", parts[3])))?;
    Ok(SweepSection {
        variable,
        lo,
        hi,
        points,
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Metrics(args) => {
            let cfg = args.build_config()?;
            metrics::cmd_metrics(&cfg, args.out.as_deref(), args.format)
        }
        Cmd::Sweep(args) => {
            let mut cfg = args.common.build_config()?;
            if let Some(text) = &args.sweep {
                cfg.sweep = Some(parse_sweep_flag(text)?);
            }
            if cfg.sweep.is_none() {
                return Err(CliError::Config(
                    "sweep requires --sweep <var>:<lo>:<hi>:<n> or a config sweep section".into(),
                ));
            }
            sweep::cmd_sweep(&cfg, args.common.out.as_deref(), args.common.format)
        }
        Cmd::Simulate(args) => {
            let cfg = args.build_config()?;
            metrics::cmd_simulate(&cfg, args.out.as_deref())
        }
        Cmd::Validate(args) => {
            let cfg = args.build_config()?;
            validate::cmd_validate(&cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Invariant(n)) => {
            eprintln!("validation failed: {n} invariant(s) violated");
            ExitCode::from(1)
        }
        Err(CliError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical non-convergence: {msg}");
            ExitCode::from(3)
        }
    }
}
