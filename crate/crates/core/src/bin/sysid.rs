use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use finite_sysid::cli::{run, Command};

#[derive(Parser)]
#[command(name = "sysid", version, about = "Finite-sample system identification toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate trajectories and write them as CSV and JSON
    Simulate(Common),
    /// Fit a model and compute its certificates
    Certify(Common),
    /// Run Monte Carlo coverage experiments
    Coverage(Common),
    /// Emit the three figure panels (SVG + CSV)
    Figure(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the seed in the config
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Certify(a) => (Command::Certify, a),
        Cmd::Coverage(a) => (Command::Coverage, a),
        Cmd::Figure(a) => (Command::Figure, a),
    };
    match run(cmd, &args.config, args.out.as_deref(), args.seed) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
