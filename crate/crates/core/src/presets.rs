//! Built-in instances and scenarios.

use crate::churn::{EventKind, PeerRef, Scenario, ScenarioEvent};
use crate::model::{GameInstance, PeerId, PeerProfile};

fn peers(credits: &[f64], capacities: &[f64]) -> Vec<PeerProfile> {
    credits
        .iter()
        .zip(capacities)
        .enumerate()
        .map(|(i, (&c, &d))| PeerProfile::new(format!("p{}", i + 1), c, d).expect("preset peer"))
        .collect()
}

/// Equal capacities (150), credits 100, 150, 200, 250.
pub fn example1_peers() -> Vec<PeerProfile> {
    peers(&[100.0, 150.0, 200.0, 250.0], &[150.0; 4])
}

/// Equal credits (150), capacities 100, 150, 200, 250.
pub fn example2_peers() -> Vec<PeerProfile> {
    peers(&[150.0; 4], &[100.0, 150.0, 200.0, 250.0])
}

/// Credits 400, 300, 200, 100 with capacities 2, 1.5, 1, 0.5 (all `c/d = 200`).
pub fn example4_peers() -> Vec<PeerProfile> {
    peers(&[400.0, 300.0, 200.0, 100.0], &[2.0, 1.5, 1.0, 0.5])
}

pub fn example1_game(uploader_capacity: f64) -> GameInstance {
    GameInstance::new(uploader_capacity, example1_peers()).expect("preset game")
}

pub fn example2_game(uploader_capacity: f64) -> GameInstance {
    GameInstance::new(uploader_capacity, example2_peers()).expect("preset game")
}

pub fn example4_game() -> GameInstance {
    GameInstance::new(EXAMPLE4_CAPACITY, example4_peers()).expect("preset game")
}

pub const EXAMPLE4_CAPACITY: f64 = 2.0;
/// Uploader capacity attached to the example1/example2 instances. Price
/// sweeps ignore it; it only matters when those instances are solved.
pub const EXAMPLE12_CAPACITY: f64 = 300.0;
/// Capacity sweep range for example3.
pub const EXAMPLE3_RANGE: (f64, f64) = (0.0, 600.0);
pub const EXAMPLE3_STEPS: usize = 60;
pub const SCENARIO_END: f64 = 100.0;

/// Peers arrive one by one at 20, 40, 60 and 80 s.
pub fn example4_scenario() -> Scenario {
    let events = example4_peers()
        .into_iter()
        .enumerate()
        .map(|(i, peer)| ScenarioEvent {
            time: 20.0 * (i + 1) as f64,
            kind: EventKind::Join { peer },
        })
        .collect();
    Scenario::new(EXAMPLE4_CAPACITY, events).with_end_time(SCENARIO_END)
}

/// All four peers arrive at 20 s; p4, p3 and p2 leave at 40, 60 and 80 s.
pub fn example5_scenario() -> Scenario {
    let mut events: Vec<ScenarioEvent> = example4_peers()
        .into_iter()
        .map(|peer| ScenarioEvent {
            time: 20.0,
            kind: EventKind::Join { peer },
        })
        .collect();
    for (time, id) in [(40.0, "p4"), (60.0, "p3"), (80.0, "p2")] {
        events.push(ScenarioEvent {
            time,
            kind: EventKind::Leave {
                peer: PeerRef { id: PeerId::from(id) },
            },
        });
    }
    Scenario::new(EXAMPLE4_CAPACITY, events).with_end_time(SCENARIO_END)
}
