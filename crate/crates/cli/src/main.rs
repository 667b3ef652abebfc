use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dfhc_cli::config::env_seed;
use dfhc_cli::error::read_json;
use dfhc_cli::{cmd_compare, cmd_encode, cmd_train, write_synthetic, DatasetManifest, Result, RunConfig, SynthSpec};

/// Encode multi-channel time series as images and classify them.
#[derive(Parser)]
#[command(name = "dfhc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode every segment of a CSV dataset to PNG and write index.csv.
    Encode {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split, train and evaluate on an encoded index.
    Train {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate test accuracy across training runs on the same dataset.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        runs: Vec<PathBuf>,
        /// Also write comparison.csv and comparison.txt here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic CSV dataset with its manifest.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Encode { manifest, config, out } => {
            let config = RunConfig::load(&config)?;
            let manifest = DatasetManifest::load(&manifest)?;
            let out = config.resolve_output(out.as_deref())?;
            let summary = cmd_encode(&manifest, &config, &out)?;
            println!(
                "encoded {} segments ({} failed); index at {}",
                summary.written,
                summary.failed,
                summary.index_path.display()
            );
        }
        Command::Train { index, config, out } => {
            let config = RunConfig::load(&config)?;
            let out = config.resolve_output(out.as_deref())?;
            let report = cmd_train(&index, &config, &out)?;
            println!(
                "{}: test accuracy {:.4}; report in {}",
                report.method,
                report.test_accuracy,
                out.display()
            );
        }
        Command::Compare { runs, out } => {
            let (_, text) = cmd_compare(&runs, out.as_deref())?;
            print!("{text}");
        }
        Command::Synth { spec, out } => {
            let mut spec: SynthSpec = read_json(&spec)?;
            if let Some(seed) = env_seed()? {
                spec.seed = seed;
            }
            let manifest = write_synthetic(&spec, &out)?;
            println!("wrote synthetic dataset; manifest at {}", manifest.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
