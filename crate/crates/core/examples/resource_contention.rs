//! Two agents bid for a shared resource. Best response settles far above the
//! welfare-maximizing profile.
//!
//! cargo run --release --example resource_contention

use goodhart_arena::analysis::welfare_gap;
use goodhart_arena::scenarios::{ContentionConfig, ContentionMode, ScenarioDetails, ScenarioSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for mode in [ContentionMode::Selfish, ContentionMode::Shared] {
        let spec = ScenarioSpec::S2(ContentionConfig {
            mode,
            ..Default::default()
        });
        let trace = spec.run(None, 0, 0)?;
        let ScenarioDetails::Contention(r) = &trace.details else {
            unreachable!()
        };
        println!(
            "{mode:?}: bids {:?} after {} passes, welfare {:.4} vs coordinated {:.4} (gap {:.4})",
            r.equilibrium.bids,
            r.passes,
            r.equilibrium.welfare,
            r.coordinated.welfare,
            welfare_gap(&trace)?
        );
    }
    Ok(())
}
