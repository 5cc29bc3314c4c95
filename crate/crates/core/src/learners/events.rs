use serde::{Deserialize, Serialize};

/// Where a record in a victim's data stream came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Honest,
    /// Fabricated or altered by an attacker.
    Injected,
    /// Genuine, but withheld from the victim.
    Hidden,
}

/// One entry of the ground-truth event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time: u64,
    pub payload: Vec<f64>,
    pub label: Option<bool>,
    pub provenance: Provenance,
}

/// The part of an [`EventRecord`] a victim is allowed to see.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub time: u64,
    pub payload: Vec<f64>,
    pub label: Option<bool>,
}

impl EventRecord {
    pub fn new(time: u64, payload: Vec<f64>, label: Option<bool>, provenance: Provenance) -> Self {
        Self {
            time,
            payload,
            label,
            provenance,
        }
    }

    /// The victim's view of this record; `None` for hidden records.
    pub fn observation(&self) -> Option<Observation> {
        match self.provenance {
            Provenance::Hidden => None,
            Provenance::Honest | Provenance::Injected => Some(Observation {
                time: self.time,
                payload: self.payload.clone(),
                label: self.label,
            }),
        }
    }
}

/// Victim-visible view of a log, in order, hidden records dropped.
pub fn visible(log: &[EventRecord]) -> Vec<Observation> {
    log.iter().filter_map(EventRecord::observation).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hidden_records_are_not_visible() {
        let log = vec![
            EventRecord::new(0, vec![1.0], None, Provenance::Honest),
            EventRecord::new(1, vec![2.0], None, Provenance::Hidden),
            EventRecord::new(2, vec![3.0], Some(true), Provenance::Injected),
        ];
        let v = visible(&log);
        assert_eq!(v.len(), 2);
        assert_eq!(v[0].payload, vec![1.0]);
        assert_eq!(v[1].label, Some(true));
    }

    #[test]
    fn honest_and_injected_look_the_same() {
        let a = EventRecord::new(4, vec![0.5], Some(false), Provenance::Honest);
        let mut b = a.clone();
        b.provenance = Provenance::Injected;
        assert_eq!(a.observation(), b.observation());
    }
}
