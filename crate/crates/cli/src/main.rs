use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fracschro_cli::{load_config_with, run, Overrides, RunError};

/// Run a fracschro experiment described by a `key = value` config file.
#[derive(Debug, Parser)]
#[command(name = "fracschro", version)]
struct Args {
    /// Path to the run configuration.
    config: PathBuf,
    /// Directory for output files (overrides `output_dir`).
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Seed for randomized ensembles (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress the progress summary on stdout.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let overrides = Overrides {
        output_dir: args.output_dir,
        seed: args.seed,
    };
    let result = load_config_with(&args.config, &overrides)
        .map_err(RunError::from)
        .and_then(|cfg| {
            for w in &cfg.warnings {
                eprintln!("fracschro: warning: {w}");
            }
            run(&cfg)
        });
    match result {
        Ok(outcome) => {
            if !args.quiet {
                for line in &outcome.summary {
                    println!("{line}");
                }
                for f in &outcome.files {
                    println!("wrote {}", f.display());
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("fracschro: error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
