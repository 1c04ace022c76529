use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chargecap::oracle::OracleCaps;
use chargecap_cli::run::{
    cmd_capacity, cmd_graphs, cmd_oracle, cmd_sweep, cmd_verify, emit, load_spec, CliError, Mode,
    OracleKind, SolverArgs,
};

/// Capacity of remotely powered (charger-fed, finite-battery) noiseless
/// channels under four charger side-information regimes.
#[derive(Parser)]
#[command(name = "chargecap", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute C(gamma) for one budget and mode
    Capacity {
        /// Channel spec file (TOML)
        spec: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Cost budget, e.g. "2/3" or "0.5"
        #[arg(long)]
        gamma: String,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write output to a file instead of stdout
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Sweep the dual multiplier and emit a capacity-curve CSV
    Sweep {
        spec: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the verification suite; nonzero exit on any failing check
    Verify {
        spec: PathBuf,
        /// Oracle verification depth for non-reference specs
        #[arg(long)]
        oracle_depth: Option<usize>,
        /// Seed for randomized cross-checks
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Dump the battery-state graphs, one edge per line: from symbol cost to
    Graphs {
        spec: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a brute-force oracle computation
    Oracle {
        spec: PathBuf,
        #[arg(long, value_enum, default_value = "counts")]
        which: OracleKind,
        /// Horizon n
        #[arg(long, default_value_t = 4)]
        horizon: usize,
        /// Cost budget for feasibility counting
        #[arg(long)]
        gamma: Option<String>,
        /// Dual multiplier for the J oracles
        #[arg(long, default_value_t = 0.0)]
        rho: f64,
        /// Comma-separated input labels for the minimal-energy oracle
        #[arg(long)]
        inputs: Option<String>,
        /// Horizon cap for |E|^n searches
        #[arg(long, default_value_t = 12)]
        generic_cap: usize,
        /// Horizon cap for |X|^n tree searches
        #[arg(long, default_value_t = 8)]
        tree_cap: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn dispatch(cli: Cli) -> Result<Option<String>, CliError> {
    match cli.command {
        Command::Capacity {
            spec,
            mode,
            gamma,
            solver,
            output,
        } => {
            let spec = load_spec(&spec.display().to_string())?;
            let text = cmd_capacity(&spec, mode, &gamma, &solver)?;
            emit(text, output.as_deref())
        }
        Command::Sweep {
            spec,
            mode,
            solver,
            output,
        } => {
            let spec = load_spec(&spec.display().to_string())?;
            let text = cmd_sweep(&spec, mode, &solver)?;
            emit(text, output.as_deref())
        }
        Command::Verify {
            spec,
            oracle_depth,
            seed,
            output,
        } => {
            let spec = load_spec(&spec.display().to_string())?;
            let text = cmd_verify(&spec, oracle_depth, seed)?;
            emit(text, output.as_deref())
        }
        Command::Graphs { spec, output } => {
            let spec = load_spec(&spec.display().to_string())?;
            let text = cmd_graphs(&spec)?;
            emit(text, output.as_deref())
        }
        Command::Oracle {
            spec,
            which,
            horizon,
            gamma,
            rho,
            inputs,
            generic_cap,
            tree_cap,
            output,
        } => {
            let spec = load_spec(&spec.display().to_string())?;
            let caps = OracleCaps {
                generic_horizon: generic_cap,
                tree_horizon: tree_cap,
            };
            let text = cmd_oracle(
                &spec,
                which,
                horizon,
                gamma.as_deref(),
                rho,
                inputs.as_deref(),
                caps,
            )?;
            emit(text, output.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(Some(text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
