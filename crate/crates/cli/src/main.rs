//! Command-line driver for the buffered two-way relay engine.
//!
//! Three subcommands share one configuration: `sweep` evaluates a transmit
//! SNR range and emits a CSV table, `single` dumps every metric at one
//! operating point, and `validate` runs the cross-backend consistency
//! suite. Configuration comes from built-in defaults, then an optional flat
//! `key = value` file, then command-line flags, in that order.
//!
//! Exit codes: 0 on success, 1 for configuration errors, 2 for numerical
//! failures.

mod config;
mod runner;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bufrelay_core::policy::Thresholds;
use config::{parse_backend_list, parse_pair, parse_policy_list, ConfigError, SweepSpec};

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

#[derive(Parser)]
#[command(
    name = "bufrelay",
    version,
    about = "Adaptive mode selection for a buffered two-way relay: exact chain \
             evaluation, slot simulation, and high-SNR asymptotics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a transmit-SNR sweep and emit a CSV table.
    Sweep(CommonArgs),
    /// Evaluate one operating point and dump every metric.
    Single(CommonArgs),
    /// Run the cross-backend consistency checks at one operating point.
    Validate(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Flat `key = value` configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Destination file; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Simulation seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Backend list override, comma separated.
    #[arg(long, value_name = "LIST")]
    backends: Option<String>,
    /// Policy list override, comma separated.
    #[arg(long, value_name = "LIST")]
    policies: Option<String>,
    /// Queue threshold override.
    #[arg(long, value_name = "T1,T2")]
    thresholds: Option<String>,
    /// Buffer capacity override.
    #[arg(long, value_name = "C1,C2")]
    caps: Option<String>,
}

impl CommonArgs {
    fn resolve(&self) -> Result<SweepSpec, ConfigError> {
        let mut spec = SweepSpec::default();
        if let Some(path) = &self.config {
            spec.apply_file(path)?;
        }
        if let Some(seed) = self.seed {
            spec.seed = seed;
        }
        if let Some(list) = &self.backends {
            spec.backends = parse_backend_list("--backends", list)?;
        }
        if let Some(list) = &self.policies {
            spec.policies = parse_policy_list("--policies", list)?;
        }
        if let Some(pair) = &self.thresholds {
            let (t1, t2) = parse_pair("--thresholds", pair)?;
            spec.thresholds = Thresholds::new(t1, t2);
        }
        if let Some(pair) = &self.caps {
            let (c1, c2) = parse_pair("--caps", pair)?;
            spec.l1_max = c1;
            spec.l2_max = c2;
        }
        if let Some(path) = &self.output {
            spec.output = Some(path.clone());
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn emit(spec: &SweepSpec, text: &str) -> Result<(), ConfigError> {
    match &spec.output {
        Some(path) => std::fs::write(path, text).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(EXIT_CONFIG);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let args = match &cli.command {
        Command::Sweep(a) | Command::Single(a) | Command::Validate(a) => a,
    };
    let spec = match args.resolve() {
        Ok(spec) => spec,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let (text, numerically_ok) = match &cli.command {
        Command::Sweep(_) => (runner::run_sweep(&spec), true),
        Command::Single(_) => runner::run_single(&spec),
        Command::Validate(_) => runner::run_validate(&spec),
    };
    if let Err(e) = emit(&spec, &text) {
        eprintln!("{e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    if numerically_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NUMERICAL)
    }
}
