mod bench;
mod data;
mod eval;
mod infer;
mod train;

use std::path::Path;
use std::process::ExitCode;

use causalpt::Error;
use clap::{Parser, Subcommand};
use serde::Serialize;

pub type Result<T> = causalpt::Result<T>;

#[derive(Parser)]
#[command(name = "causalpt", version, about = "Causal pretraining on synthetic time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic SEM dataset from a preset or a JSON config.
    Gen(data::GenArgs),
    /// Generate a Kuramoto oscillator dataset.
    Kuramoto(data::KuramotoArgs),
    /// Train one network and write its best checkpoint and history.
    Train(train::TrainArgs),
    /// Grid search over batch size, learning rate, weight decay and techniques.
    Grid(train::GridArgs),
    /// AUROC of a checkpoint next to the CT and GVAR baselines.
    Eval(eval::EvalArgs),
    /// Score an external CSV series with a checkpoint.
    Infer(infer::InferArgs),
    /// Time batched network scoring against the baselines.
    Bench(bench::BenchArgs),
}

/// Exit status per error class: 2 configuration, 3 data, 4 divergence.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::Divergence(_) => 4,
        Error::Data(_) | Error::Shape { .. } | Error::Format { .. } | Error::Io { .. } | Error::Json { .. } => 3,
    }
}

fn init_threads() -> Result<()> {
    let Ok(value) = std::env::var("CPL_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("CPL_THREADS must be a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot size the thread pool: {e}")))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    std::fs::write(path, text + "\n").map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("report types serialize"));
}

fn run(cli: Cli) -> Result<()> {
    init_threads()?;
    match cli.command {
        Command::Gen(a) => data::gen(a),
        Command::Kuramoto(a) => data::kuramoto(a),
        Command::Train(a) => train::train(a),
        Command::Grid(a) => train::grid(a),
        Command::Eval(a) => eval::eval(a),
        Command::Infer(a) => infer::infer(a),
        Command::Bench(a) => bench::bench(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
