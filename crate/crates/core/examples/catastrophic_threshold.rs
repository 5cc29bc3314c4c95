//! Agents each nudge a private quantity upward; the shared goal collapses
//! once the sum crosses a threshold. A quantilizer crosses later.
//!
//! cargo run --release --example catastrophic_threshold

use goodhart_arena::analysis::mitigation_compare;
use goodhart_arena::engine::SelectionOperator;
use goodhart_arena::scenarios::{threshold_goal, ScenarioDetails, ScenarioSpec, ThresholdConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ThresholdConfig::default();
    let spec = ScenarioSpec::S1b(cfg.clone());
    let trace = spec.run(None, 0, 0)?;
    if let ScenarioDetails::Threshold(t) = &trace.details {
        println!(
            "crossing step {:?}, peak goal at step {}",
            t.crossing_step, t.peak_goal_step
        );
    }
    for s in trace.agent_steps(0).filter(|s| (18..=23).contains(&s.step)) {
        let total = s.metric * cfg.agent_count as f64;
        println!(
            "step {:>2}  total {:>5.2}  goal {:>7.2}  formula {:>7.2}",
            s.step,
            total,
            s.goal,
            threshold_goal(total, cfg.offset, cfg.threshold)
        );
    }

    let max = SelectionOperator::maximizer(8)?;
    let quant = SelectionOperator::quantilizer(8, 0.5)?;
    let cmp = mitigation_compare(&spec, &max, &quant, 500, 6)?;
    println!(
        "terminal goal: maximizer {:.3}, quantilizer {:.3}, difference {:.3} [{:.3}, {:.3}], z {:.1}",
        cmp.mean_goal_a, cmp.mean_goal_b, cmp.mean_difference, cmp.ci_lower, cmp.ci_upper, cmp.z
    );
    Ok(())
}
