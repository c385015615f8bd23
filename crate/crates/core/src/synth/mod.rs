//! Generators: scripted book scenarios, zero-intelligence order flow and
//! observations drawn from the impact models.

pub mod observations;
pub mod scenarios;
pub mod zero_intelligence;

use sha2::{Digest, Sha256};

use crate::flow::{format_event, OrderEvent, TickSize};

pub use observations::{model_observations, DepthDist, ObservationConfig, Truth, TruthRecord};
pub use scenarios::{scripted_scenario, Scenario, SCENARIOS};
pub use zero_intelligence::{zero_intelligence_flow, FlowConfig};

/// Hex SHA-256 of the CSV lines of the first `count` events, each line
/// terminated by `\n`.
pub fn event_digest(events: &[OrderEvent], count: usize, tick: TickSize) -> String {
    let mut h = Sha256::new();
    for ev in events.iter().take(count) {
        h.update(format_event(ev, tick).as_bytes());
        h.update(b"\n");
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
