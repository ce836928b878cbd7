use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sembed_lab::commands::{self, Outcome, RunArgs};

#[derive(Parser)]
#[command(name = "sembed", version, about = "Experiments on s-embeddings and the critical FK-Ising observable")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// experiment config file
    config: PathBuf,
    /// override the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// override the output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// worker threads
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

impl From<&Common> for RunArgs {
    fn from(c: &Common) -> Self {
        Self { config: c.config.clone(), seed: c.seed, out: c.out.clone(), jobs: c.jobs.max(1) }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build the embedding for every delta
    Build(Common),
    /// Run the identity suite
    Validate(Common),
    /// Compare chain frequencies with exact enumeration
    Sample(Common),
    /// Estimate F and H
    Observable(Common),
    /// Solve the continuum problem
    Continuum(Common),
    /// Convergence study of H against the continuum solution
    Study(Common),
    /// Draw the embedding as SVG
    Render {
        #[command(flatten)]
        common: Common,
        /// position of delta in the config list
        #[arg(long, default_value_t = 0)]
        delta_index: usize,
        /// draw one sampled interface
        #[arg(long)]
        interface: bool,
    },
}

fn main() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    let outcome: Outcome = match &cli.command {
        Command::Build(c) => commands::build(&c.into())?,
        Command::Validate(c) => commands::validate(&c.into())?,
        Command::Sample(c) => commands::sample(&c.into())?,
        Command::Observable(c) => commands::observable(&c.into())?,
        Command::Continuum(c) => commands::continuum(&c.into())?,
        Command::Study(c) => commands::study(&c.into())?,
        Command::Render { common, delta_index, interface } => {
            commands::render(&common.into(), *delta_index, *interface)?
        }
    };
    for line in &outcome.summary {
        println!("{line}");
    }
    println!("{}", if outcome.passed { "PASS" } else { "FAIL" });
    Ok(if outcome.passed { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
