//! `gcf`: design, analyse and simulate fixed-point generalized comb filters.
//!
//! Exit codes: 0 success, 1 validation failure, 2 config error,
//! 3 numeric or overflow error.

mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{DesignConfig, Overrides};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "gcf", version, about = "Generalized comb filter design toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Size coefficient word lengths and write exact / quantized coefficients.
    Design {
        #[command(flatten)]
        ov: Overrides,
        /// Also tabulate F_n over chi, y and every split.
        #[arg(long)]
        sweep: bool,
        /// Decimation factors for --sweep (f_c D is kept fixed).
        #[arg(long, value_delimiter = ',')]
        sweep_decimations: Option<Vec<usize>>,
    },
    /// Exact, quantized and comb responses with folding-band tables.
    Response {
        #[command(flatten)]
        ov: Overrides,
    },
    /// S_T, model sigma and realized error on the response grid.
    Sensitivity {
        #[command(flatten)]
        ov: Overrides,
    },
    /// Monte Carlo coverage plus factorization, split and derivative oracles.
    Validate {
        #[command(flatten)]
        ov: Overrides,
        /// Perturb one stored coefficient to exercise the failure path.
        #[arg(long, hide = true)]
        corrupt_coefficient: bool,
    },
    /// Sigma-delta modulation followed by fixed-point decimation.
    Simulate {
        #[command(flatten)]
        ov: Overrides,
    },
    /// Per-band attenuation of the GCF against the third-order comb.
    Compare {
        #[command(flatten)]
        ov: Overrides,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Design { ov, sweep, sweep_decimations } => {
            let cfg = DesignConfig::resolve(&ov)?;
            let decimations = sweep.then(|| sweep_decimations.unwrap_or(vec![cfg.decimation_factor]));
            commands::design(&cfg, decimations.as_deref())
        }
        Command::Response { ov } => commands::response(&DesignConfig::resolve(&ov)?),
        Command::Sensitivity { ov } => commands::sensitivity_grid(&DesignConfig::resolve(&ov)?),
        Command::Validate { ov, corrupt_coefficient } => {
            commands::validate(&DesignConfig::resolve(&ov)?, corrupt_coefficient)
        }
        Command::Simulate { ov } => commands::simulate(&DesignConfig::resolve(&ov)?),
        Command::Compare { ov } => commands::compare(&DesignConfig::resolve(&ov)?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gcf: {e}");
            e.exit_code()
        }
    }
}
