mod commands;
mod config;
mod error;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use secure_regen::rlnc::DEFAULT_RLNC_PRIME;

use crate::config::{ParamArgs, RunArgs, RunConfig};
use crate::error::CliError;

/// Secure regenerating-code storage simulator.
///
/// Exit codes: 0 ok, 2 validation error, 3 property failure, 4 IO error.
/// Set SECURE_REGEN_LOG (e.g. `info`, `debug`) for logs on stderr.
#[derive(Debug, Parser)]
#[command(name = "secure-regen", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Output {
    /// Write JSON here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SourceArgs {
    /// Snapshot from `simulate`; otherwise the run flags are simulated.
    #[arg(long)]
    history: Option<PathBuf>,
    /// Eavesdropper budget replacing ell.
    #[arg(long)]
    override_budget: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bounds and code dimensions for a parameter set.
    Params {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        output: Output,
    },
    /// Construct the outer code and check its MDS properties.
    Build {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        output: Output,
    },
    /// Store a secret, replay a failure trace and dump the history.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        output: Output,
    },
    /// Leakage to one eavesdropper set.
    Attack {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        source: SourceArgs,
        /// Physical node ids, e.g. "5,6".
        #[arg(long)]
        nodes: String,
        /// Cross-check with exhaustive enumeration.
        #[arg(long)]
        bruteforce: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Worst-case leakage over every eavesdropper set.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        source: SourceArgs,
        /// Largest subset count swept exhaustively.
        #[arg(long)]
        sweep_limit: Option<u64>,
        /// Random subsets drawn past the limit.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Random linear network coding baseline under the two-newcomer attack.
    Rlnc {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(short = 'q', default_value_t = DEFAULT_RLNC_PRIME)]
        q: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Run every invariant suite; exits 3 if any fails.
    Verify {
        #[command(flatten)]
        run: RunArgs,
        /// Random repair traces to replay.
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Also compare rank leakage with exhaustive enumeration.
        #[arg(long)]
        bruteforce: bool,
        #[command(flatten)]
        output: Output,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    use commands::*;
    match cli.command {
        Command::Params { params, output } => emit(&cmd_params(&params)?, output.out.as_deref()),
        Command::Build { run, output } => emit(&cmd_build(&run)?, output.out.as_deref()),
        Command::Simulate { run, output } => emit(&cmd_simulate(&run)?, output.out.as_deref()),
        Command::Attack {
            run,
            source,
            nodes,
            bruteforce,
            output,
        } => {
            let h = load_history(source.history.as_ref(), &run)?;
            let report = cmd_attack(&h, &nodes, source.override_budget, bruteforce)?;
            emit(&report, output.out.as_deref())
        }
        Command::Sweep {
            run,
            source,
            sweep_limit,
            samples,
            output,
        } => {
            let h = load_history(source.history.as_ref(), &run)?;
            let report = cmd_sweep(&h, source.override_budget, sweep_limit, samples, run.seed)?;
            emit(&report, output.out.as_deref())
        }
        Command::Rlnc {
            trials,
            q,
            seed,
            output,
        } => emit(&cmd_rlnc(trials, q, seed)?, output.out.as_deref()),
        Command::Verify {
            run,
            trials,
            bruteforce,
            output,
        } => {
            let config = RunConfig::from_args(&run)?;
            let report = verify::cmd_verify(&config, trials, bruteforce)?;
            emit(&report, output.out.as_deref())?;
            match report.checks.iter().find(|c| !c.passed) {
                Some(c) => Err(CliError::Property(format!("{}: {}", c.name, c.detail))),
                None => Ok(()),
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("SECURE_REGEN_LOG")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
