//! Thin command-line driver: parses flags, loads the run configuration, and
//! executes the requested pipeline. All heavy lifting lives in the library.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use nopair::cli::{load_config, results_csv, run, RunMode};

#[derive(Parser)]
#[command(
    name = "nopair",
    about = "Variational two-electron Dirac-Coulomb(-Breit) solver over correlated Gaussians"
)]
struct Args {
    /// Path to the key-value run configuration file.
    #[arg(short, long)]
    config: PathBuf,

    /// Override the run mode from the config file.
    #[arg(short, long)]
    mode: Option<RunMode>,

    /// Override the output directory.
    #[arg(short, long)]
    output_dir: Option<PathBuf>,

    /// Size of the worker thread pool (default: all cores).
    #[arg(short, long)]
    threads: Option<usize>,

    /// Print the result table to stdout as well.
    #[arg(short, long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::FAILURE;
        }
    }
    let mut config = match load_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    if let Some(mode) = args.mode {
        config.mode = mode;
    }
    if let Some(dir) = args.output_dir {
        config.output_dir = dir;
    }
    match run(&config) {
        Ok(summary) => {
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            if args.verbose {
                print!("{}", results_csv(&summary.rows, config.spec.as_ref(), &config));
            }
            for f in &summary.files {
                eprintln!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
