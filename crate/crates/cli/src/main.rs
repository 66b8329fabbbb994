use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fracfill_cli::{run, Config, ExperimentKind};

#[derive(Parser)]
#[command(
    name = "fracfill",
    about = "Fractional p-Laplacians on finite metric measure spaces via hyperbolic fillings",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment configuration (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output directory for reports and data
    #[arg(long)]
    out: PathBuf,
    /// Override the seed from the config
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the hyperbolic filling and export the graph
    Build(CommonArgs),
    /// Solve the discrete Neumann problem on the filling
    SolveNeumann(CommonArgs),
    /// Solve the fractional problem on the base space
    SolveFractional(CommonArgs),
    /// Run the invariant verification battery
    Verify(CommonArgs),
    /// Stability of solutions under data perturbations
    Stability(CommonArgs),
    /// Build the sphericalized product graph and run closed-form checks
    Sphericalize(CommonArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Build(a) => (ExperimentKind::Build, a),
        Command::SolveNeumann(a) => (ExperimentKind::SolveNeumann, a),
        Command::SolveFractional(a) => (ExperimentKind::SolveFractional, a),
        Command::Verify(a) => (ExperimentKind::Verify, a),
        Command::Stability(a) => (ExperimentKind::Stability, a),
        Command::Sphericalize(a) => (ExperimentKind::Sphericalize, a),
    };
    let (config, raw) = match Config::load(&args.config) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(kind, &config, &raw, &args.out, args.seed) {
        Ok(()) => {
            println!("{} complete: reports in {}", kind.as_str(), args.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
