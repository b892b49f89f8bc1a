use clap::Parser;
use fbm_euler::cli::{exit_code, parse_config, run_with_threads, ExperimentKind};
use fbm_euler::Error;
use std::path::PathBuf;
use std::process::ExitCode;

/// Euler schemes for fBm-driven SDEs: sampling and convergence experiments.
#[derive(Debug, Parser)]
#[command(name = "fbm-euler", version)]
struct Args {
    /// sample | strong-rate | weak-rate | limit-check | qv-scaling | mixed-scaling
    kind: String,
    /// Flat `key = value` config file.
    #[arg(long)]
    config: PathBuf,
    /// Directory for the CSV output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(&args) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

fn execute(args: &Args) -> Result<String, Error> {
    let kind: ExperimentKind = args.kind.parse()?;
    let text = std::fs::read_to_string(&args.config)?;
    let mut config = parse_config(&text, kind)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let threads = args
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(Error::Domain("--threads must be positive".into()));
    }
    let outcome = run_with_threads(&config, args.out.as_deref(), threads)?;
    Ok(outcome.summary)
}
