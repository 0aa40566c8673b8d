use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use melnikov::commands::thread_pool;
use melnikov::{AnalysisConfig, CliError, Command, Session};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Verb {
    /// Construct the Melnikov vector.
    Build,
    /// Locate its zeros in the search window.
    Zeros,
    /// Compare against the perturbed return map and shoot periodic orbits.
    Verify,
    /// Build, zeros and verify.
    All,
}

#[derive(Debug, Parser)]
#[command(version, about = "Melnikov vector analysis of piecewise smooth systems with two switching planes")]
struct Args {
    command: Verb,
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: the config's `output`, else `melnikov_out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomly sampled verification levels.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    quiet: bool,
}

fn run(args: Args) -> Result<(), CliError> {
    let cfg = AnalysisConfig::load(&args.config)?;
    let out = args.out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("melnikov_out"));
    let cmd = match args.command {
        Verb::Build => Command::Build,
        Verb::Zeros => Command::Zeros,
        Verb::Verify => Command::Verify,
        Verb::All => Command::All,
    };
    let pool = thread_pool()?;
    let mut session = Session::new(cfg, out, args.seed, args.quiet);
    pool.install(|| session.run(cmd))
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("melnikov: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
