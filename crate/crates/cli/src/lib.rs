//! Command-line driver: configuration, subcommand dispatch and CSV output.
//!
//! Every run resolves a [`config::RunConfig`] (file, then command-line
//! overrides), computes one table and writes `<out>/<stem>.csv` together
//! with `<out>/<stem>.sidecar.toml`. Feeding the sidecar back through
//! `--config` reproduces the CSV byte for byte.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod validate;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{load_config, LoopDirection, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{write_outputs, Written};

#[derive(Debug, Parser)]
#[command(name = "casimir-dyn", version, about = "Casimir forces and parametrically coupled cantilever dynamics")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// TOML configuration file; built-in defaults when absent.
    #[arg(long, global = true, env = "CASDYN_CONFIG")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "CASDYN_OUT", default_value = ".")]
    pub out: PathBuf,
    /// Seed; overrides the `seed` key of the configuration.
    #[arg(long, global = true, env = "CASDYN_SEED")]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, env = "CASDYN_JOBS", value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: Option<u16>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Cw,
    Acw,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Casimir force, derivatives and thermal fraction versus separation.
    Force,
    /// Eigenvalues of the effective Hamiltonian over (f_mod, delta_d).
    Spectrum,
    /// Exceptional-point location.
    EpLocate,
    /// One trajectory under constant modulation.
    Simulate,
    /// Thermally driven PSD map of cantilever 2.
    PsdMap,
    /// Energy transfer around a control loop.
    Loop {
        #[arg(long, value_enum)]
        direction: Option<DirectionArg>,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        excite: Option<u8>,
    },
    /// Clockwise-loop transfer efficiency versus maximum modulation frequency.
    Efficiency {
        /// Comma-separated f_max values, Hz.
        #[arg(long, value_delimiter = ',')]
        fmax_list: Option<Vec<f64>>,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        excite: Option<u8>,
    },
    /// Analytic-oracle suite; exits 0 only when every check passes.
    Validate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Force => "force",
            Command::Spectrum => "spectrum",
            Command::EpLocate => "ep-locate",
            Command::Simulate => "simulate",
            Command::PsdMap => "psd-map",
            Command::Loop { .. } => "loop",
            Command::Efficiency { .. } => "efficiency",
            Command::Validate => "validate",
        }
    }
}

/// Load the configuration and apply command-line overrides, so that the
/// result states everything the run depends on.
pub fn resolve_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut config = match &cli.global.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default().normalized(),
    };
    config.run = None;
    if let Some(seed) = cli.global.seed {
        config.seed = seed;
    }
    match &cli.command {
        Command::Loop { direction, excite } => {
            if let Some(d) = direction {
                config.experiment.control_loop.direction = match d {
                    DirectionArg::Cw => LoopDirection::Cw,
                    DirectionArg::Acw => LoopDirection::Acw,
                };
            }
            if let Some(e) = excite {
                config.experiment.control_loop.excite = *e;
            }
        }
        Command::Efficiency { fmax_list, excite } => {
            if let Some(list) = fmax_list {
                config.experiment.efficiency.f_max_list = Some(list.clone());
            }
            if let Some(e) = excite {
                config.experiment.efficiency.excite = *e;
            }
        }
        _ => {}
    }
    config.validate()?;
    Ok(config)
}

/// Run a parsed command line; returns the files written.
pub fn execute(cli: &Cli) -> CliResult<Written> {
    let config = resolve_config(cli)?;
    let name = cli.command.name();
    let table = match &cli.command {
        Command::Force => commands::force(&config)?,
        Command::Spectrum => commands::spectrum(&config)?,
        Command::EpLocate => commands::ep_locate_cmd(&config)?,
        Command::Simulate => commands::simulate_cmd(&config)?,
        Command::PsdMap => commands::psd_map_cmd(&config)?,
        Command::Loop { .. } => commands::loop_cmd(&config)?,
        Command::Efficiency { .. } => commands::efficiency(&config)?,
        Command::Validate => {
            let checks = validate::run_checks(&config)?;
            for c in &checks {
                println!(
                    "{} {}: value {:e}, reference {:e}, error {:e} (tolerance {:e})",
                    if c.passed() { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.reference,
                    c.error,
                    c.tolerance
                );
            }
            let written = write_outputs(&cli.global.out, name, name, &validate::to_table(&checks), &config)?;
            let failed = checks.iter().filter(|c| !c.passed()).count();
            if failed > 0 {
                return Err(CliError::Checks(failed));
            }
            return Ok(written);
        }
    };
    for (k, v) in &table.notes {
        println!("{k} = {v}");
    }
    let stem = match &cli.command {
        Command::Loop { .. } => {
            let l = &config.experiment.control_loop;
            let d = match l.direction {
                LoopDirection::Cw => "cw",
                LoopDirection::Acw => "acw",
            };
            format!("loop_{d}_excite{}", l.excite)
        }
        _ => name.replace('-', "_"),
    };
    let written = write_outputs(&cli.global.out, &stem, name, &table, &config)?;
    println!("wrote {} ({} rows)", written.csv.display(), table.rows.len());
    Ok(written)
}

/// Entry point shared by the binary: parse, set up the worker pool, run
/// and map every failure to its exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => CliError::Usage(String::new()).exit_code(),
            };
        }
    };
    if let Some(jobs) = cli.global.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs as usize).build_global() {
            eprintln!("{}", CliError::Usage(format!("cannot size the worker pool: {e}")));
            return CliError::Usage(String::new()).exit_code();
        }
    }
    match execute(&cli) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
