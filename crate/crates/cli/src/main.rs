use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use hypsgn_cli::{cmd_bench, cmd_converge, cmd_run, resolve_threads, with_threads, Config};

#[derive(Parser)]
#[command(name = "hypsgn", version, about = "Hyperbolic Serre-Green-Naghdi solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads; overrides the config and THREADS.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write gauges, snapshots and conservation data.
    Run(Common),
    /// Run a grid convergence study against the exact solution.
    Converge(Common),
    /// Time right-hand side evaluations over a ladder of grid sizes.
    Bench(Common),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<ExitCode> {
    let cli = Cli::parse();
    let (Command::Run(common) | Command::Converge(common) | Command::Bench(common)) = &cli.command;
    let cfg = Config::load(&common.config)?;
    let threads = resolve_threads(common.threads, cfg.run.threads)?;
    let out = common
        .output
        .clone()
        .or_else(|| cfg.run.output.clone())
        .unwrap_or_else(|| PathBuf::from("output"));
    match &cli.command {
        Command::Run(_) => {
            let outcome = with_threads(threads, || cmd_run(&cfg, &out))??;
            if outcome.completed {
                log::info!("run finished, results in {}", out.display());
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("run aborted at t = {}; partial results in {}", outcome.record.t_final, out.display());
                Ok(ExitCode::from(2))
            }
        }
        Command::Converge(_) => {
            let table = with_threads(threads, || cmd_converge(&cfg, &out))??;
            let failed = table.rows.iter().any(|r| r.failure.is_some());
            Ok(if failed { ExitCode::from(2) } else { ExitCode::SUCCESS })
        }
        Command::Bench(_) => {
            with_threads(threads, || cmd_bench(&cfg, &out))??;
            Ok(ExitCode::SUCCESS)
        }
    }
}
