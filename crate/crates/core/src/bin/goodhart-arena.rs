use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use goodhart_arena::harness::{
    list_scenarios, load_config, read_report, run_experiment, ConfigError, HarnessError, RunOptions,
};

#[derive(Parser)]
#[command(name = "goodhart-arena", version, about = "Proxy-metric overoptimization scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List registered scenarios.
    List,
    /// Run an experiment file.
    Run(RunArgs),
    /// Run an experiment file that has a `sweep` block.
    Sweep(RunArgs),
    /// Verify and summarize a finished run directory.
    Report { run_dir: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides `master_seed` in the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, env = "GOODHART_ARENA_JOBS", value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
}

fn execute(args: RunArgs, require_sweep: bool) -> Result<(), HarnessError> {
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if require_sweep && cfg.sweep.is_none() {
        return Err(ConfigError::invariant("sweep", "the sweep command needs a `sweep` block").into());
    }
    let manifest = run_experiment(
        &cfg,
        &RunOptions {
            output_dir: args.out,
            jobs: args.jobs.map(|j| j as usize),
        },
    )?;
    println!("wrote {}", manifest.output_dir.display());
    for (name, sum) in &manifest.files {
        println!("  {name}  sha256 {sum}");
    }
    if cfg.sweep.is_some() {
        print!("{}", read_report(&manifest.output_dir)?);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::List => {
            for e in list_scenarios() {
                let kinds = if e.sub_kinds.is_empty() {
                    String::new()
                } else {
                    format!(" [{}]", e.sub_kinds.join(", "))
                };
                println!("{:<4} {}{}\n     {}", e.id, e.model, kinds, e.description);
            }
            Ok(())
        }
        Command::Run(args) => execute(args, false),
        Command::Sweep(args) => execute(args, true),
        Command::Report { run_dir } => read_report(&run_dir).map(|r| print!("{r}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
