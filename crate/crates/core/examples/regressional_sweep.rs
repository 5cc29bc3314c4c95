//! Best-of-n selection on a noisy proxy: the gap between the selected
//! metric and its true goal grows with n.
//!
//! cargo run --release --example regressional_sweep

use goodhart_arena::analysis::{detect_divergence, pressure_sweep, Quantity};
use goodhart_arena::scenarios::{RegressionalConfig, ScenarioSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ScenarioSpec::S0(RegressionalConfig::default());
    let grid = [1, 2, 4, 8, 16, 32, 64, 128, 256];
    let sweep = pressure_sweep(&spec, &grid, 200, 1)?;

    println!("{:>5} {:>10} {:>10} {:>22}", "n", "metric", "goal", "gap (95% CI)");
    for p in &sweep.points {
        println!(
            "{:>5} {:>10.4} {:>10.4} {:>8.4} [{:.4}, {:.4}]",
            p.pressure, p.metric.mean, p.goal.mean, p.gap.mean, p.gap.ci_lower, p.gap.ci_upper
        );
    }
    let z = sweep.adjacent_increase_z(Quantity::Gap);
    println!(
        "adjacent gap z: {:?}",
        z.iter().map(|z| format!("{z:.1}")).collect::<Vec<_>>()
    );
    // Regressional noise inflates the metric but never lowers the goal.
    println!("divergence: {:?}", detect_divergence(&sweep)?);
    Ok(())
}
