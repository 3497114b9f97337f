use serde::Serialize;

use crate::model::{Equilibrium, PeerId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    Direct,
    Bargaining,
}

/// One price broadcast and the replies it drew.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    pub price: f64,
    /// `(peer, demand)` in the game's peer order.
    pub demands: Vec<(PeerId, f64)>,
    pub total_demand: f64,
}

/// A probe that overshot the capacity band, after which the step shrank.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Refinement {
    /// Index of the last accepted round before the probe.
    pub after_round: usize,
    pub probe: RoundRecord,
    /// Step used from here on.
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolTrace {
    pub kind: ProtocolKind,
    pub initial_price: f64,
    /// Bargaining only.
    pub initial_step: Option<f64>,
    /// Bargaining only.
    pub epsilon: Option<f64>,
    /// Accepted rounds: prices strictly decrease, total demand never does.
    pub rounds: Vec<RoundRecord>,
    pub refinements: Vec<Refinement>,
    /// Messages delivered over the whole run.
    pub messages: usize,
    pub equilibrium: Option<Equilibrium>,
}

impl ProtocolTrace {
    pub fn last_round(&self) -> Option<&RoundRecord> {
        self.rounds.last()
    }

    /// Human-readable lines describing step refinements.
    pub fn diagnostics(&self) -> Vec<String> {
        self.refinements
            .iter()
            .map(|r| {
                format!(
                    "overshoot at price {} (demand {}) after round {}; step refined to {}",
                    r.probe.price, r.probe.total_demand, r.after_round, r.step
                )
            })
            .collect()
    }
}
