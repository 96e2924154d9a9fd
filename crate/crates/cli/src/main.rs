use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use homogenizer_cli::{load_config, run, Experiment, RunError};

#[derive(Parser)]
#[command(name = "homogenizer", version, about = "Collision-model homogenizer experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Markovian and composite trajectories plus per-step medians.
    Converge(Common),
    /// Memory-witness gap over a coupling grid.
    GapCurve(Common),
    /// First sign change of the witness gap (JSON only).
    Crossing(Common),
    /// Operator-sum regimes over a grid of swap probabilities.
    Regimes(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match cli.command {
        Command::Converge(a) => (Experiment::Converge, a),
        Command::GapCurve(a) => (Experiment::GapCurve, a),
        Command::Crossing(a) => (Experiment::Crossing, a),
        Command::Regimes(a) => (Experiment::Regimes, a),
    };
    let result = load_config(&args.config, experiment, args.seed, args.out)
        .map_err(RunError::from)
        .and_then(|config| run(&config, args.jobs));
    match result {
        Ok(artifacts) => {
            for f in artifacts.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
