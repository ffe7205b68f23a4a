use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use pampere::config::Command;
use pampere::runner::{run_from_path, RunOptions};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    CellSolve,
    BuildAncient,
    IbvpSolve,
    HomogenizeSweep,
    FitDecomposition,
    LevelSet,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::CellSolve => Command::CellSolve,
            Cmd::BuildAncient => Command::BuildAncient,
            Cmd::IbvpSolve => Command::IbvpSolve,
            Cmd::HomogenizeSweep => Command::HomogenizeSweep,
            Cmd::FitDecomposition => Command::FitDecomposition,
            Cmd::LevelSet => Command::LevelSet,
        }
    }
}

/// Parabolic Monge-Ampere experiments with periodic data.
#[derive(Parser, Debug)]
#[command(name = "pampere", version)]
struct Args {
    command: Cmd,
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: config's output_dir, else ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for sampled checks.
    #[arg(long)]
    seed: Option<u64>,
    /// Record wall-clock times; outputs are then no longer reproducible.
    #[arg(long)]
    timings: bool,
    /// Also write raw field dumps.
    #[arg(long)]
    dump: bool,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let opts = RunOptions { out_dir: args.out, seed: args.seed, timings: args.timings, dump: args.dump };
    let code = run_from_path(args.command.into(), &args.config, &opts);
    ExitCode::from(code as u8)
}
