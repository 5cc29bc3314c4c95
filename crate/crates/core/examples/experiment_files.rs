//! Runs an experiment file end to end and reads the result back.
//!
//! cargo run --release --example experiment_files -- configs/s0_sweep.json /tmp/s0-run

use std::path::PathBuf;

use goodhart_arena::harness::{load_config, read_report, run_experiment, RunOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let config = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/s0_sweep.json")));
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("goodhart-arena-example"));

    let cfg = load_config(&config)?;
    println!("config digest {}", cfg.digest());
    let manifest = run_experiment(
        &cfg,
        &RunOptions {
            output_dir: Some(out),
            jobs: None,
        },
    )?;
    for (name, sum) in &manifest.files {
        println!("{name:<14} {sum}");
    }
    print!("{}", read_report(&manifest.output_dir)?);
    Ok(())
}
