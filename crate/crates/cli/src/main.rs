use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{error::ErrorKind, Parser, Subcommand, ValueEnum};
use splitsolve_cli::commands::{
    cmd_bench, cmd_check, cmd_diag, cmd_solve, SolveArgs, EXIT_ERROR, SEED_ENV,
};
use splitsolve_cli::config::StepMode;

/// Primal-dual splitting solver.
#[derive(Parser)]
#[command(name = "splitsolve", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Steps {
    Auto,
    Manual,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a configured problem and write the run CSV.
    ///
    /// Exit codes: 0 converged, 1 config error or refusal, 2 max_iter, 3 diverged.
    Solve {
        config: PathBuf,
        /// Output CSV; stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Override the step mode of the config.
        #[arg(long, value_enum)]
        steps: Option<Steps>,
        /// Run even when the step sizes are not admissible.
        #[arg(long)]
        unsafe_steps: bool,
        /// Record wall-clock milliseconds per iteration.
        #[arg(long)]
        timing: bool,
    },
    /// Print norms, step constants, admissibility and qualification.
    Check { config: PathBuf },
    /// Run a benchmark suite and write its CSVs into a directory.
    Bench {
        suite: String,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Certify the product-space operator properties for a config.
    Diag { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_ERROR),
            };
        }
    };
    let seed = match std::env::var(SEED_ENV) {
        Ok(s) => match s.trim().parse::<u64>() {
            Ok(v) => Some(v),
            Err(_) => {
                eprintln!("error: {SEED_ENV} must be a non-negative integer, got '{s}'");
                return ExitCode::from(EXIT_ERROR);
            }
        },
        Err(_) => None,
    };
    let (stdout, stderr) = (io::stdout(), io::stderr());
    let (mut out, mut err) = (stdout.lock(), stderr.lock());
    let code = match cli.command {
        Command::Solve {
            config,
            out: path,
            steps,
            unsafe_steps,
            timing,
        } => {
            let args = SolveArgs {
                config,
                out: path,
                steps: steps.map(|s| match s {
                    Steps::Auto => StepMode::Auto,
                    Steps::Manual => StepMode::Manual,
                }),
                unsafe_steps,
                timing,
            };
            cmd_solve(&args, seed, &mut out, &mut err)
        }
        Command::Check { config } => cmd_check(&config, seed, &mut out, &mut err),
        Command::Bench { suite, out: dir } => cmd_bench(&suite, &dir, &mut out, &mut err),
        Command::Diag { config } => cmd_diag(&config, seed, &mut out, &mut err),
    };
    let _ = out.flush();
    ExitCode::from(code)
}
