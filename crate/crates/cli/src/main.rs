mod config;
mod error;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::Mode;

#[derive(Parser)]
#[command(name = "petc", version, about = "Performance-barrier event-triggered control experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for sampled initial conditions (sets sim.seed and platoon.seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Override a key, `section.key=value` or a bare `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Platoon,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one closed loop; writes trajectory.csv, events.csv, summary.json.
    Simulate(Common),
    /// Minimum inter-event times of a linear plant; writes miet.json, lambda_min.csv.
    Miet(Common),
    /// Multi-trial trigger comparison; writes report.json, table.csv.
    Benchmark {
        target: Target,
        /// Also write the trial-0 trajectory of every design.
        #[arg(long)]
        trajectories: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Consensus tracking against its envelope; writes tracking.csv.
    ConsensusCheck(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, common) = match &cli.command {
        Command::Simulate(c) => (Mode::Simulate, c),
        Command::Miet(c) => (Mode::Miet, c),
        Command::Benchmark { common, .. } => (Mode::Benchmark, common),
        Command::ConsensusCheck(c) => (Mode::ConsensusCheck, c),
    };
    let result = config::load(common.config.as_deref(), &common.overrides, common.seed, mode).and_then(|cfg| {
        let base = common.config.as_deref().and_then(|p| p.parent()).map(PathBuf::from);
        let ctx = run::Context { out: common.out.clone(), base };
        match &cli.command {
            Command::Simulate(_) => run::simulate(&cfg, &ctx),
            Command::Miet(_) => run::miet(&cfg, &ctx),
            Command::Benchmark { target: Target::Platoon, trajectories, .. } => run::benchmark(&cfg, &ctx, *trajectories),
            Command::ConsensusCheck(_) => run::consensus_check(&cfg, &ctx),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("petc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
