use serde::Serialize;

use crate::scenarios::ScenarioId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegistryEntry {
    pub id: ScenarioId,
    pub description: &'static str,
    /// The failure-mode model the scenario realizes.
    pub model: &'static str,
    /// Attack variants selectable through the `attack` parameter.
    pub sub_kinds: &'static [&'static str],
}

/// Every registered scenario, in lexicographic id order.
pub fn list_scenarios() -> Vec<RegistryEntry> {
    ScenarioId::ALL
        .into_iter()
        .map(|id| {
            let (description, model, sub_kinds): (&str, &str, &[&str]) = match id {
                ScenarioId::S0 => (
                    "best-of-n selection on a noisy proxy inflates the metric over the goal",
                    "regressional Goodhart baseline",
                    &[],
                ),
                ScenarioId::S1a => (
                    "agents raise a shared metric past the point where it stops helping",
                    "group over-optimization, reversing metric",
                    &[],
                ),
                ScenarioId::S1b => (
                    "private increments jointly cross a catastrophic threshold",
                    "group over-optimization, catastrophic threshold",
                    &[],
                ),
                ScenarioId::S2 => (
                    "proportional bidding for a contested resource wastes funds",
                    "resource contention (proportional allocation)",
                    &[],
                ),
                ScenarioId::S3a => (
                    "an opponent plants high-noise, low-value items the victim selects",
                    "goal poisoning via heteroscedastic noise",
                    &[],
                ),
                ScenarioId::S3b => (
                    "a worthless opponent metric gains value on the victim's selection",
                    "optimization theft",
                    &[],
                ),
                ScenarioId::S4a => (
                    "fabricated rewards steer an arm estimator to the worst arm",
                    "input spoofing",
                    &[],
                ),
                ScenarioId::S4b => (
                    "sybil answers push an active learner's interval off the truth",
                    "active-learning manipulation",
                    &[],
                ),
                ScenarioId::S4c => (
                    "hiding below-mean records biases a mean estimator",
                    "input filtering",
                    &[],
                ),
                ScenarioId::S5 => (
                    "an attacker edits the victim's reward, outputs or training labels",
                    "goal co-option",
                    &["reward_tamper", "output_intercept", "label_flip"],
                ),
            };
            RegistryEntry {
                id,
                description,
                model,
                sub_kinds,
            }
        })
        .collect()
}
