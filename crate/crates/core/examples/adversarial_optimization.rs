//! Goal poisoning with planted noisy items, and optimization theft where an
//! opponent's worthless metric gains value on the victim's selection.
//!
//! cargo run --release --example adversarial_optimization

use goodhart_arena::analysis::conditional_correlation;
use goodhart_arena::engine::ReplicateStreams;
use goodhart_arena::scenarios::{
    theft_sample, PoisonPoolConfig, ScenarioDetails, ScenarioId, ScenarioSpec, TheftConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for enabled in [false, true] {
        let spec = ScenarioSpec::S3a(PoisonPoolConfig {
            adversary_enabled: enabled,
            ..Default::default()
        });
        let (mut goal, mut planted) = (0.0, 0);
        for r in 0..200 {
            let t = spec.run(None, 3, r)?;
            goal += t.terminal_goal / 200.0;
            if let ScenarioDetails::Poisoning(p) = t.details {
                planted += p.selected_injected as usize;
            }
        }
        println!("poisoning adversary={enabled}: mean selected goal {goal:.3}, planted picks {planted}/200");
    }

    let cfg = TheftConfig::default();
    let sample = theft_sample(&cfg, &ReplicateStreams::new(0, ScenarioId::S3b.tag(), 0))?;
    let c = conditional_correlation(
        &sample.opponent_goal,
        &sample.opponent_metric(),
        &sample.selection_mask(),
    )?;
    println!(
        "theft: corr(G_O, M_O) full {:.4} over {}, selected {:.4} over {}",
        c.r_full, c.n_full, c.r_selected, c.n_selected
    );
    let t = ScenarioSpec::S3b(cfg).run(None, 0, 0)?;
    if let ScenarioDetails::Theft(o) = t.details {
        println!(
            "opponent goal on the victim's picks: {:.4} (opponent disabled: {:.4})",
            o.mean_opponent_goal, o.mean_opponent_goal_disabled
        );
    }
    Ok(())
}
