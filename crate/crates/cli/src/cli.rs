//! Argument definitions and dispatch.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{self, Outcome, SimulateOptions, DEFAULT_STAGES, DEFAULT_STEPS};
use crate::config::RunConfig;
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "bubble",
    version,
    about = "Asset bubbles under heterogeneous beliefs about a CIR dividend rate"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Config file, output path and per-key overrides.
#[derive(Debug, Args)]
pub struct Common {
    /// Flat key=value config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (curves) or directory (figures).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub kappa1: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub kappa2: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub theta1: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub theta2: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub sigma1: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub sigma2: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub lambda: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub d_max: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub grid_n: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub tol: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub horizon: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub dt: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub paths: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub seed: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Existence predicate, thresholds and the sign test on E.
    Check,
    /// Closed-form price curve.
    Price,
    /// Grid solve of the HJB equation; allows sigma1 != sigma2.
    Solve,
    /// Resale fixed-point iteration.
    Iterate {
        #[arg(long, default_value_t = DEFAULT_STAGES)]
        stages: usize,
        /// Implicit time steps per stage.
        #[arg(long, default_value_t = DEFAULT_STEPS)]
        steps: usize,
    },
    /// Monte Carlo verification report.
    Simulate {
        #[arg(long, allow_hyphen_values = true)]
        d0: Option<f64>,
        /// Time of the conditional-mean check.
        #[arg(long, default_value_t = 5.0)]
        t: f64,
        /// Time step of the intrinsic-value integral.
        #[arg(long, default_value_t = 5.0)]
        intrinsic_dt: f64,
        /// Horizon of the resale-at-boundary estimate.
        #[arg(long, default_value_t = 20.0)]
        stop_horizon: f64,
    },
    /// Curves and summary for the three reference parameter sets.
    Figures {
        #[arg(long, default_value_t = 1001)]
        points: usize,
    },
}

impl Common {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let fields = [
            ("kappa1", &self.kappa1),
            ("kappa2", &self.kappa2),
            ("theta1", &self.theta1),
            ("theta2", &self.theta2),
            ("sigma1", &self.sigma1),
            ("sigma2", &self.sigma2),
            ("lambda", &self.lambda),
            ("d_max", &self.d_max),
            ("grid_n", &self.grid_n),
            ("tol", &self.tol),
            ("horizon", &self.horizon),
            ("dt", &self.dt),
            ("paths", &self.paths),
            ("seed", &self.seed),
        ];
        fields
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k, v.clone())))
            .collect()
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        let text = match &self.config {
            Some(path) => {
                Some(fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?)
            }
            None => None,
        };
        RunConfig::parse(text.as_deref(), &self.overrides())
    }
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    let out = cli.common.out.as_deref();
    match &cli.command {
        Command::Figures { points } => commands::figures(out.unwrap_or("figures".as_ref()), *points),
        command => {
            let cfg = cli.common.run_config()?;
            match command {
                Command::Check => commands::check(&cfg),
                Command::Price => commands::price(&cfg, out),
                Command::Solve => commands::solve(&cfg, out),
                Command::Iterate { stages, steps } => commands::iterate(&cfg, *stages, *steps, out),
                Command::Simulate {
                    d0,
                    t,
                    intrinsic_dt,
                    stop_horizon,
                } => commands::simulate(
                    &cfg,
                    SimulateOptions {
                        d0: *d0,
                        t: *t,
                        intrinsic_dt: *intrinsic_dt,
                        stop_horizon: *stop_horizon,
                    },
                ),
                Command::Figures { .. } => unreachable!("handled above"),
            }
        }
    }
}

/// Runs `cli`, printing results and errors; returns the exit code.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(outcome) => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(outcome.text.as_bytes()).and_then(|_| stdout.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    eprintln!("error: writing stdout: {e}");
                    return 1;
                }
                _ => {}
            }
            match outcome.failure {
                Some(f) => {
                    eprintln!("error: {f}");
                    f.exit_code()
                }
                None => 0,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
