use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use qrbsde::{run, Overrides};
use qrbsde_core::verify::render_table;

/// Runs one quadratic RBSDE experiment from a JSON configuration.
#[derive(Debug, Parser)]
#[command(name = "qrbsde", version)]
struct Args {
    /// Path to the JSON configuration.
    config: PathBuf,

    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Overrides the configured experiment.
    #[arg(long)]
    experiment: Option<String>,

    /// Overrides the configured output directory.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let overrides = Overrides {
        seed: args.seed,
        experiment: args.experiment,
        output_dir: args.output_dir,
    };
    match run(&args.config, &overrides) {
        Ok(outcome) => {
            print!("{}", render_table(&outcome.reports));
            println!("artifacts written to {}", outcome.output_dir.display());
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
