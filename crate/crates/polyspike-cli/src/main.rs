use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

#[derive(Parser)]
#[command(name = "polyspike", version, about = "Segregated multi-bump solutions of a sublinearly coupled NLS system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the radial ground state and write its profile.
    Groundstate(Common),
    /// Sample the coupling conditions on G and its smoothing.
    Certify(Common),
    /// Build the pair at one ell by the reduction fixed point.
    Construct(Common),
    /// Sample the reduced energy over the parameter box and fit its expansion.
    EnergyScan(Common),
    /// Radial dead-core threshold, supersolution certificate and planar detection.
    Deadcore(Common),
    /// Run every acceptance check and print the pass/fail table.
    VerifyAll(Common),
}

#[derive(Args, Clone)]
pub struct Common {
    /// TOML configuration; defaults are used for anything it leaves out.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Overrides geometry.ell and rebuilds the ring radii for it.
    #[arg(long)]
    pub ell: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Coarse grid and reduced sample counts.
    #[arg(long)]
    pub quick: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Groundstate(c) => commands::run("groundstate", &c, commands::groundstate),
        Command::Certify(c) => commands::run("certify", &c, commands::certify),
        Command::Construct(c) => commands::run("construct", &c, commands::construct),
        Command::EnergyScan(c) => commands::run("energy-scan", &c, commands::energy_scan),
        Command::Deadcore(c) => commands::run("deadcore", &c, commands::deadcore),
        Command::VerifyAll(c) => commands::run("verify-all", &c, commands::verify_all),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
