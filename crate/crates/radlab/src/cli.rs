use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{self, Outcome};
use crate::config::RunConfig;
use crate::error::{CliError, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "radlab", version, about = "Moment-closure radiation hydrodynamics lab")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// JSON run configuration (defaults when omitted)
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`)
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closure coefficients on an alpha grid, checked against closed forms
    ClosureTables {
        #[command(flatten)]
        common: Common,
        /// Closure order (overrides `model.N`)
        #[arg(long)]
        n: Option<usize>,
    },
    /// Structural stability certification at sampled equilibria
    StabilityCheck {
        #[command(flatten)]
        common: Common,
        /// RNG seed (overrides `stability.seed`)
        #[arg(long)]
        seed: Option<u64>,
        /// States per closure order (overrides `stability.states`)
        #[arg(long)]
        states: Option<usize>,
    },
    /// Relaxation run from the configured profile
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "VALUE")]
        eps: Option<f64>,
        #[arg(long, value_name = "M")]
        cells: Option<usize>,
        #[arg(long, value_name = "T")]
        tfinal: Option<f64>,
    },
    /// Limit system, first corrector and initial layer
    Limit {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "M")]
        cells: Option<usize>,
        #[arg(long, value_name = "T")]
        tfinal: Option<f64>,
    },
    /// Epsilon sweep against the limit system
    Converge {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "M")]
        cells: Option<usize>,
        #[arg(long, value_name = "T")]
        tfinal: Option<f64>,
    },
}

fn load(common: &Common, patch: impl FnOnce(&mut RunConfig)) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.output.dir = out.clone();
    }
    patch(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one parsed command.
pub fn dispatch(cmd: Command) -> Result<Outcome, CliError> {
    match cmd {
        Command::ClosureTables { common, n } => {
            let cfg = load(&common, |c| {
                if let Some(n) = n {
                    c.model.n = n;
                }
            })?;
            commands::closure_tables(&cfg)
        }
        Command::StabilityCheck { common, seed, states } => {
            let cfg = load(&common, |c| {
                if let Some(s) = seed {
                    c.stability.seed = s;
                }
                if let Some(s) = states {
                    c.stability.states = s;
                }
            })?;
            commands::stability_check(&cfg)
        }
        Command::Simulate { common, eps, cells, tfinal } => {
            if let Some(e) = eps {
                if !(e > 0.0) {
                    return Err(CliError::Usage(format!(
                        "--eps must be positive, got {e}; the eps = 0 problem is solved by `radlab limit`"
                    )));
                }
            }
            let cfg = load(&common, |c| {
                if let Some(e) = eps {
                    c.solver.eps = e;
                }
                if let Some(m) = cells {
                    c.solver.cells = m;
                }
                if let Some(t) = tfinal {
                    c.solver.tfinal = t;
                }
            })?;
            commands::simulate(&cfg)
        }
        Command::Limit { common, cells, tfinal } => {
            let cfg = load(&common, |c| grid_overrides(c, cells, tfinal))?;
            commands::limit(&cfg)
        }
        Command::Converge { common, cells, tfinal } => {
            let cfg = load(&common, |c| grid_overrides(c, cells, tfinal))?;
            commands::converge(&cfg)
        }
    }
}

fn grid_overrides(c: &mut RunConfig, cells: Option<usize>, tfinal: Option<f64>) {
    if let Some(m) = cells {
        c.solver.cells = m;
    }
    if let Some(t) = tfinal {
        c.solver.tfinal = t;
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("radlab: {e}");
            e.exit_code()
        }
    }
}
