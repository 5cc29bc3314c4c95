//! Attacks on learners fed by an event stream: fake rewards, sybil answers
//! and filtered records.
//!
//! cargo run --release --example stream_poisoning

use goodhart_arena::scenarios::{
    FilterConfig, InjectionConfig, ScenarioDetails, ScenarioSpec, StreamOutcome, SybilConfig,
};

fn outcome(spec: &ScenarioSpec, replicate: u64) -> Result<StreamOutcome, Box<dyn std::error::Error>> {
    match spec.run(None, 11, replicate)?.details {
        ScenarioDetails::Stream(o) => Ok(o),
        _ => unreachable!(),
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for enabled in [false, true] {
        let spec = ScenarioSpec::S4a(InjectionConfig {
            attack_enabled: enabled,
            ..Default::default()
        });
        println!("injection attack={enabled}: {:?}", outcome(&spec, 0)?);

        let spec = ScenarioSpec::S4b(SybilConfig {
            attack_enabled: enabled,
            ..Default::default()
        });
        println!("sybil attack={enabled}: {:?}", outcome(&spec, 0)?);
    }
    for rate in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let spec = ScenarioSpec::S4c(FilterConfig {
            filter_rate: rate,
            horizon: 100_000,
            ..Default::default()
        });
        if let StreamOutcome::Filter {
            bias, hidden_events, ..
        } = outcome(&spec, 0)?
        {
            println!("filter rate {rate:.2}: bias {bias:.4}, hidden {hidden_events}");
        }
    }
    println!("half-normal mean {:.4}", (2.0 / std::f64::consts::PI).sqrt());
    Ok(())
}
