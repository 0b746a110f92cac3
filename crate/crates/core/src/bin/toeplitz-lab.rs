use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use toeplitz_lab::experiment::{run, ExperimentKind, Manifest, Overrides};

/// Run a named experiment and write CSV tables and JSON summaries.
#[derive(Parser, Debug)]
#[command(name = "toeplitz-lab", version)]
struct Cli {
    /// theorem1 | theorem2 | inverse | model | distinguish
    #[arg(long)]
    experiment: Option<ExperimentKind>,
    /// JSON manifest; defaults apply to every missing parameter.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Output path prefix.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("--threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let manifest = match &cli.manifest {
        Some(path) => Manifest::load(path),
        None => Ok(Manifest::default()),
    };
    let overrides = Overrides { experiment: cli.experiment, out: cli.out, seed: cli.seed };
    match manifest.and_then(|m| run(&m, &overrides)) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprint!("{e}");
            if !e.to_string().ends_with('\n') {
                eprintln!();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
