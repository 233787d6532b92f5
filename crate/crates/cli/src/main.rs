//! `querylab`: runs one experiment and writes its table as CSV or JSON.
//!
//! Exit status is 0 when the experiment's check passes, 2 when it fails and
//! 1 on any error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use querylab::experiments::{self, ExperimentConfig, ExperimentKind, Format, SolverKind};

#[derive(Parser, Debug)]
#[command(
    name = "querylab",
    version,
    about = "Query-complexity experiments on symmetric matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Failure frequency of lambda_min estimation across query budgets.
    Tradeoff(Common),
    /// Corner distribution after adaptive queries against fresh draws.
    Posterior(Common),
    /// Eigenvector search on conditioned hard instances.
    Reduction(Common),
    /// Estimator outcome against the unqueried corner.
    Decoupling(Common),
    /// Hard-edge statistic against its limiting law.
    Density(Common),
    /// Good-event constants.
    Calibrate(Common),
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, default_value_t = 64)]
    d: usize,
    /// Block size of hard instances (defaults to d).
    #[arg(long)]
    s: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, env = "QUERYLAB_SEED", default_value_t = 0)]
    seed: u64,
    /// lanczos, power, shift_invert or cg.
    #[arg(long)]
    solver: Option<String>,
    /// Comma-separated query budgets.
    #[arg(long, value_delimiter = ',')]
    grid: Vec<usize>,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long, default_value_t = 0.3)]
    delta: f64,
    #[arg(long)]
    pilot_n: Option<usize>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    round_constant: Option<f64>,
    #[arg(long)]
    budget_constant: Option<f64>,
    #[arg(long)]
    slack: Option<f64>,
    #[arg(long)]
    threshold: Option<f64>,
}

impl Common {
    fn into_config(
        self,
        kind: ExperimentKind,
    ) -> querylab::Result<(ExperimentConfig, Option<PathBuf>)> {
        let mut cfg = ExperimentConfig::new(kind);
        cfg.d = self.d;
        cfg.s = self.s.unwrap_or(self.d);
        cfg.beta = self.beta;
        cfg.trials = self.trials;
        cfg.seed = self.seed;
        if let Some(s) = &self.solver {
            cfg.solver = s.parse::<SolverKind>()?;
        }
        cfg.grid = self.grid;
        cfg.format = self.format.parse::<Format>()?;
        cfg.delta = self.delta;
        if let Some(v) = self.pilot_n {
            cfg.pilot_n = v;
        }
        if let Some(v) = self.c {
            cfg.c = v;
        }
        if let Some(v) = self.restarts {
            cfg.restarts = v;
        }
        if let Some(v) = self.round_constant {
            cfg.round_constant = v;
        }
        if let Some(v) = self.budget_constant {
            cfg.budget_constant = v;
        }
        if let Some(v) = self.slack {
            cfg.slack = v;
        }
        if let Some(v) = self.threshold {
            cfg.threshold = v;
        }
        Ok((cfg, self.out))
    }
}

fn execute(cli: Cli) -> querylab::Result<bool> {
    let (kind, common) = match cli.command {
        Command::Tradeoff(c) => (ExperimentKind::Tradeoff, c),
        Command::Posterior(c) => (ExperimentKind::Posterior, c),
        Command::Reduction(c) => (ExperimentKind::Reduction, c),
        Command::Decoupling(c) => (ExperimentKind::Decoupling, c),
        Command::Density(c) => (ExperimentKind::Density, c),
        Command::Calibrate(c) => (ExperimentKind::Calibrate, c),
    };
    let (cfg, out) = common.into_config(kind)?;
    let report = experiments::run(&cfg)?;
    let text = experiments::render(&report, cfg.format)?;
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    let verdict = if report.pass { "PASS" } else { "FAIL" };
    eprintln!("{kind}: {verdict}");
    Ok(report.pass)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
