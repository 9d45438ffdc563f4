use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qsl_cli::{run, run_report, JobKind, RunOptions};

/// Quantum speed limits of multi-qubit gates and circuit resource estimates.
#[derive(Parser)]
#[command(name = "qsl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one gate at a fixed duration.
    Optimize(RunArgs),
    /// Scan a descending duration ladder for the quantum speed limit.
    Scan(RunArgs),
    /// Compile QFT/QAOA circuits and tabulate weighted times and gate counts.
    Circuits(RunArgs),
    /// Entangling power of constraint gates over a gamma sweep.
    Epower(RunArgs),
    /// Reduction statistics from a `sweep.csv` written by `circuits`.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON job configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: $QSL_OUT_DIR/<job>, else qsl-out/<job>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    /// Sweep table to summarize.
    #[arg(long)]
    input: PathBuf,
    /// Output directory (default: `report/` next to the input).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Optimize(a) => (JobKind::Optimize, a),
        Command::Scan(a) => (JobKind::QslScan, a),
        Command::Circuits(a) => (JobKind::CircuitSweep, a),
        Command::Epower(a) => (JobKind::EntanglingPower, a),
        Command::Report(a) => {
            return match run_report(&a.input, a.out.as_deref()) {
                Ok((summary, rows)) => {
                    for r in rows {
                        println!(
                            "{:?} {:?} {} within {}: time {:.1}%, two-qubit {:.1}%, multi-qubit {:.1}% ({} pairs)",
                            r.comparison,
                            r.algorithm,
                            r.platform,
                            r.within,
                            r.weighted_time_pct,
                            r.two_qubit_pct,
                            r.multi_qubit_pct,
                            r.pairs
                        );
                    }
                    println!("{} -> {}", summary.message, summary.out_dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            };
        }
    };
    let opts = RunOptions {
        config: args.config,
        out: args.out,
        seed: args.seed,
        threads: args.threads,
    };
    match run(kind, &opts) {
        Ok(summary) => {
            println!("{}", summary.message);
            println!("results in {}", summary.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
