//! Reward tampering, output interception and label flipping against simple
//! victims.
//!
//! cargo run --release --example goal_co_option

use goodhart_arena::learners::FlipStrategy;
use goodhart_arena::scenarios::{CoOptionConfig, InterceptConfig, LabelFlipConfig, ScenarioSpec, TamperConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let configs = [
        CoOptionConfig::RewardTamper(TamperConfig {
            steps: 2000,
            ..Default::default()
        }),
        CoOptionConfig::OutputIntercept(InterceptConfig::default()),
    ];
    for cfg in configs {
        let trace = ScenarioSpec::S5(cfg).run(None, 5, 0)?;
        println!("{:?}", trace.extras());
    }

    for strategy in [
        FlipStrategy::Random,
        FlipStrategy::NearestBoundary,
        FlipStrategy::Greedy,
    ] {
        let spec = ScenarioSpec::S5(CoOptionConfig::LabelFlip(LabelFlipConfig {
            strategy,
            ..Default::default()
        }));
        let (mut clean, mut attacked) = (0.0, 0.0);
        for r in 0..20 {
            let t = spec.run(None, 5, r)?;
            let x = t.extras();
            clean += x["accuracy_clean"].as_f64().unwrap() / 20.0;
            attacked += x["accuracy_attacked"].as_f64().unwrap() / 20.0;
        }
        println!("label flip {strategy:?}: clean accuracy {clean:.4}, attacked {attacked:.4}");
    }
    Ok(())
}
