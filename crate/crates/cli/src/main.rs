//! Experiment runner binary. Exit codes: 0 success, 2 configuration error,
//! 3 non-contractive series, 4 Fredholm case (i) detected, 5 solver failure,
//! 1 other failures (including a failing suite).

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "morrey-lab",
    version,
    about = "Dirichlet problems with boundary-singular lower-order coefficients"
)]
struct Cli {
    /// Size of the worker thread pool (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured boundary value problem and write solution + report CSVs.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Override the configured strategy: `neumann` or `direct`.
        #[arg(long)]
        strategy: Option<String>,
        /// Output prefix (overrides the config's `[output] prefix`).
        #[arg(long)]
        out: Option<String>,
    },
    /// Morrey norm of the configured data measure.
    MorreyNorm {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<String>,
    },
    /// Capacity of a concentric condenser.
    Capacity {
        /// Inner plate radius.
        #[arg(long, default_value_t = 0.5)]
        inner: f64,
        /// Outer boundary radius.
        #[arg(long, default_value_t = 1.0)]
        outer: f64,
        #[arg(long, default_value_t = 256)]
        resolution: u32,
        #[arg(long)]
        out: Option<String>,
    },
    /// Capacity-density ratios swept along the boundary.
    CdcCheck {
        /// Domain preset name.
        #[arg(long)]
        domain: String,
        /// Number of boundary sample points.
        #[arg(long)]
        points: usize,
        /// Comma-separated radii, e.g. `0.05,0.1,0.2`.
        #[arg(long)]
        radii: String,
        #[arg(long, default_value_t = 256)]
        resolution: u32,
        #[arg(long)]
        out: Option<String>,
    },
    /// Hölder exponent fit of a field CSV (`x,y,value` rows).
    HolderFit {
        /// Input field CSV.
        #[arg(long = "in")]
        input: PathBuf,
        /// Fit window `min,max` in distance units.
        #[arg(long)]
        range: String,
        #[arg(long)]
        out: Option<String>,
    },
    /// Run the pinned acceptance battery and write a summary CSV.
    Suite {
        #[arg(long)]
        out: Option<String>,
    },
    /// Re-run the configured solve over a list of parameter values.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// One of: b_scale, c_scale, beta, resolution.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long)]
        values: String,
        #[arg(long)]
        out: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e))
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Solve {
            config,
            strategy,
            out,
        } => {
            if let Some(s) = &strategy {
                if morrey_lab::Strategy::parse(s).is_none() {
                    return Err(config_error(anyhow::anyhow!(
                        "strategy must be `neumann` or `direct`, got {s}"
                    )));
                }
            }
            let config = RunConfig::load(&config).map_err(config_error)?;
            commands::cmd_solve(&config, strategy.as_deref(), out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::MorreyNorm { config, out } => {
            let config = RunConfig::load(&config).map_err(config_error)?;
            commands::cmd_morrey_norm(&config, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Capacity {
            inner,
            outer,
            resolution,
            out,
        } => {
            commands::cmd_capacity(inner, outer, resolution, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::CdcCheck {
            domain,
            points,
            radii,
            resolution,
            out,
        } => {
            let radii = commands::parse_radii(&radii).map_err(config_error)?;
            commands::cmd_cdc_check(&domain, points, &radii, resolution, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::HolderFit { input, range, out } => {
            let range = commands::parse_range(&range).map_err(config_error)?;
            commands::cmd_holder_fit(&input, range, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Suite { out } => {
            let all_passed = commands::cmd_suite(out.as_deref().unwrap_or("acceptance"))?;
            Ok(if all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Sweep {
            config,
            param,
            values,
            out,
        } => {
            let config = RunConfig::load(&config).map_err(config_error)?;
            let values = commands::parse_values(&values).map_err(config_error)?;
            commands::cmd_sweep(&config, &param, &values, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Marker wrapper so configuration problems map to exit code 2.
#[derive(Debug)]
struct ConfigError(anyhow::Error);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("invalid configuration")
    }
}

impl std::error::Error for ConfigError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(self.0.as_ref())
    }
}

fn config_error(e: anyhow::Error) -> anyhow::Error {
    anyhow::Error::new(ConfigError(e))
}

fn classify(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match e.downcast_ref::<morrey_lab::Error>() {
        Some(morrey_lab::Error::NonContractive { .. }) => 3,
        Some(morrey_lab::Error::FredholmCaseOne { .. }) => 4,
        Some(morrey_lab::Error::SolverBreakdown { .. }) => 5,
        Some(_) => 5,
        None => 1,
    }
}
