use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ticksim_cli::{run, Command, Options};

#[derive(Parser)]
#[command(name = "ticksim", version, about = "Simulate and check autonomous ticking clocks")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Tick delay densities on the configured grid.
    Delay(Common),
    /// Mean, variance and R for each configured tick.
    Accuracy(Common),
    /// Monte Carlo tick records, empirical accuracy and the alternate-ticks game.
    Trajectories(Common),
    /// Axiom and structural checks.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `outputs` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for parallel sections.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { ticksim_cli::exit::USAGE } else { 0 });
        }
    };
    let (command, c) = match cli.command {
        Sub::Delay(c) => (Command::Delay, c),
        Sub::Accuracy(c) => (Command::Accuracy, c),
        Sub::Trajectories(c) => (Command::Trajectories, c),
        Sub::Verify(c) => (Command::Verify, c),
    };
    let opts = Options {
        command,
        config: c.config,
        out: c.out,
        seed: c.seed,
        threads: c.threads,
    };
    match run(&opts) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
