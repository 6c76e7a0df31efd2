use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};

mod commands;
mod scenario;

use scenario::{Overrides, Scenario};

/// Multitype sticky particle simulations and checks.
#[derive(Parser, Debug)]
#[command(name = "mspd", version)]
struct Cli {
    /// Scenario file (TOML, flat keys).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for the CSV output; created if missing.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Comma separated output times, e.g. 0.5,1,2.
    #[arg(long, global = true, value_delimiter = ',')]
    times: Option<Vec<f64>>,
    /// Particles per type.
    #[arg(long, global = true)]
    n: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Particle trajectories and the event log.
    Simulate,
    /// Approximate solution: CDF snapshots and particle quantiles.
    Solve,
    /// Self-similar Riemann profile.
    Riemann,
    /// Run a verification check; exit status 1 on any violation.
    Check {
        #[arg(value_enum)]
        which: Check,
    },
    /// W1 error against the scalar closed form over an n sweep.
    Convergence,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Check {
    Stability,
    Rarefaction,
    Flow,
    Tbar,
}

fn run(cli: &Cli) -> Result<commands::Output> {
    let path = cli.config.as_ref().context("--config <path> is required")?;
    let overrides = Overrides {
        seed: cli.seed,
        trials: cli.trials,
        times: cli.times.clone(),
        n: cli.n,
    };
    let s = Scenario::load(path, &overrides)?;
    match &cli.command {
        Command::Simulate => commands::simulate(&s),
        Command::Solve => commands::solve(&s),
        Command::Riemann => commands::riemann(&s),
        Command::Check { which } => match which {
            Check::Stability => commands::check_stability_cmd(&s),
            Check::Rarefaction => commands::check_rarefaction(&s),
            Check::Flow => commands::check_flow(&s),
            Check::Tbar => commands::check_tbar(&s),
        },
        Command::Convergence => commands::convergence(&s),
    }
}

fn write_all(dir: &PathBuf, out: &commands::Output) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (name, bytes) in &out.files {
        let path = dir.join(name);
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        info!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MSPD_LOG", "warn")).init();
    let cli = Cli::parse();
    let out = match run(&cli) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = write_all(&cli.out_dir, &out) {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    if let Some(line) = &out.summary {
        println!("{line}");
    }
    if out.violations > 0 {
        warn!("{} violations", out.violations);
        eprintln!("{} violations", out.violations);
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
