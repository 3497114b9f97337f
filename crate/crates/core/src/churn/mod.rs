//! Discrete-event simulation of peers joining and leaving one uploader.
//!
//! Every change in membership re-solves the game over the peers present,
//! using their current ledger balances as credits, and opens a new epoch.
//! Settlement events move credits from downloaders to the uploader at the
//! price in force.

mod ledger;
mod scenario;

pub use ledger::{apply_transaction, Ledger, Transaction};
pub use scenario::{EventKind, PeerRef, Scenario, ScenarioEvent};

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{ChurnError, ModelError};
use crate::model::{Equilibrium, GameInstance, PeerId, PeerProfile};
use crate::solver::{solve, SolverConfig};

/// Peers that left and arrived between two epochs.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MembershipChange {
    pub departed: Vec<PeerId>,
    pub joined: Vec<PeerId>,
}

/// Revenue condition across a membership change.
///
/// After departures only, the new revenue must be at least the old revenue
/// minus what the departed peers paid. After arrivals only, the result says
/// whether revenue strictly increased. Mixed changes use the departure test.
/// A missing equilibrium counts as zero revenue.
pub fn churn_check(
    old: Option<&Equilibrium>,
    new: Option<&Equilibrium>,
    change: &MembershipChange,
) -> bool {
    let old_revenue = old.map_or(0.0, |e| e.revenue);
    let new_revenue = new.map_or(0.0, |e| e.revenue);
    let tol = 1e-9 * old_revenue.abs().max(1.0);
    if change.departed.is_empty() {
        return new_revenue > old_revenue + tol;
    }
    let departed_paid: f64 = old.map_or(0.0, |e| {
        change
            .departed
            .iter()
            .filter_map(|id| e.bandwidth_of(id))
            .map(|x| e.price * x)
            .sum()
    });
    new_revenue >= old_revenue - departed_paid - tol
}

/// A maximal interval with constant membership.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Epoch {
    pub start: f64,
    /// `None` for a trailing epoch when the scenario has no end time.
    pub end: Option<f64>,
    /// Peers present, with their balances as credits; `None` when empty.
    pub game: Option<GameInstance>,
    pub equilibrium: Option<Equilibrium>,
    pub change: MembershipChange,
    /// [`churn_check`] against the previous epoch.
    pub revenue_check: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timeline {
    pub epochs: Vec<Epoch>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationOutcome {
    pub timeline: Timeline,
    pub ledger: Ledger,
}

/// Checks ordering, membership and ids without running anything.
pub fn validate(scenario: &Scenario) -> Result<(), ChurnError> {
    if !(scenario.uploader_capacity > 0.0 && scenario.uploader_capacity.is_finite()) {
        return Err(ModelError::InvalidUploaderCapacity(scenario.uploader_capacity).into());
    }
    if !(scenario.uploader_credits >= 0.0 && scenario.uploader_credits.is_finite()) {
        return Err(ChurnError::InvalidUploaderCredits(scenario.uploader_credits));
    }
    let mut present = BTreeSet::new();
    let mut last = 0.0f64;
    for (index, event) in scenario.events.iter().enumerate() {
        let time = event.time;
        if !(time.is_finite() && time >= last) {
            return Err(ChurnError::UnsortedEvent { index, time });
        }
        last = time;
        match &event.kind {
            EventKind::Join { peer } => {
                if *peer.id() == scenario.uploader_id {
                    return Err(ChurnError::UploaderCollision(peer.id().clone()));
                }
                if !present.insert(peer.id().clone()) {
                    return Err(ChurnError::AlreadyPresent {
                        index,
                        peer: peer.id().clone(),
                    });
                }
            }
            EventKind::Leave { peer } => {
                if !present.remove(&peer.id) {
                    return Err(ChurnError::AbsentPeer {
                        index,
                        peer: peer.id.clone(),
                    });
                }
            }
            EventKind::Settle { duration } => {
                if !(duration.is_finite() && *duration >= 0.0) {
                    return Err(ChurnError::InvalidDuration {
                        index,
                        duration: *duration,
                    });
                }
            }
        }
    }
    if let Some(end) = scenario.end_time {
        if !(end.is_finite() && end >= last) {
            return Err(ChurnError::EndBeforeLastEvent { end, last });
        }
    }
    Ok(())
}

/// Runs the scenario. Events sharing a timestamp form one batch: settlements
/// in it use the equilibrium in force before the batch, and the game is
/// re-solved once after it if membership changed.
pub fn run_scenario(scenario: &Scenario) -> Result<SimulationOutcome, ChurnError> {
    validate(scenario)?;
    let config = SolverConfig::default();
    let uploader = &scenario.uploader_id;
    let mut ledger = Ledger::new();
    ledger.open_account(uploader, scenario.uploader_credits);
    let mut epochs: Vec<Epoch> = Vec::new();
    // Present peers in arrival order, with their announced capacities.
    let mut present: Vec<(PeerId, f64)> = Vec::new();

    let events = &scenario.events;
    let mut i = 0;
    while i < events.len() {
        let time = events[i].time;
        let before: Vec<PeerId> = present.iter().map(|(id, _)| id.clone()).collect();
        while i < events.len() && events[i].time == time {
            match &events[i].kind {
                EventKind::Join { peer } => {
                    ledger.open_account(peer.id(), peer.credits());
                    present.push((peer.id().clone(), peer.capacity()));
                }
                EventKind::Leave { peer } => present.retain(|(id, _)| *id != peer.id),
                EventKind::Settle { .. } => {
                    if let Some(eq) = epochs.last().and_then(|e| e.equilibrium.as_ref()) {
                        ledger = apply_transaction(ledger, eq, uploader, time);
                    }
                }
            }
            i += 1;
        }
        let after: Vec<PeerId> = present.iter().map(|(id, _)| id.clone()).collect();
        if after == before {
            continue;
        }

        let change = MembershipChange {
            departed: before.iter().filter(|id| !after.contains(id)).cloned().collect(),
            joined: after.iter().filter(|id| !before.contains(id)).cloned().collect(),
        };
        let game = if present.is_empty() {
            None
        } else {
            let peers = present
                .iter()
                .map(|(id, capacity)| {
                    let credits = ledger.balance(id).unwrap_or(0.0).max(0.0);
                    PeerProfile::new(id.clone(), credits, *capacity)
                })
                .collect::<Result<Vec<_>, _>>()?;
            Some(GameInstance::new(scenario.uploader_capacity, peers)?)
        };
        let equilibrium = game.as_ref().map(|g| solve(g, &config)).transpose()?;
        let previous = epochs.last_mut();
        let revenue_check = churn_check(
            previous.as_ref().and_then(|e| e.equilibrium.as_ref()),
            equilibrium.as_ref(),
            &change,
        );
        if let Some(prev) = previous {
            prev.end = Some(time);
        }
        epochs.push(Epoch {
            start: time,
            end: None,
            game,
            equilibrium,
            change,
            revenue_check,
        });
    }
    if let Some(last) = epochs.last_mut() {
        last.end = scenario.end_time;
    }
    Ok(SimulationOutcome {
        timeline: Timeline { epochs },
        ledger,
    })
}
