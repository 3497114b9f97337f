use thiserror::Error;

use crate::model::PeerId;
use crate::protocol::ProtocolTrace;

/// Violations of the game's domain (bad inputs to pure functions).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("price must be positive and finite, got {0}")]
    NonPositivePrice(f64),
    #[error("bandwidth {bandwidth} outside [0, {capacity}] for peer {peer}")]
    BandwidthOutOfRange {
        peer: PeerId,
        bandwidth: f64,
        capacity: f64,
    },
    #[error("peer {peer}: credits must be finite and >= 0, got {value}")]
    InvalidCredits { peer: PeerId, value: f64 },
    #[error("peer {peer}: capacity must be finite and > 0, got {value}")]
    InvalidCapacity { peer: PeerId, value: f64 },
    #[error("uploader capacity must be finite and > 0, got {0}")]
    InvalidUploaderCapacity(f64),
    #[error("game has no requesting peers")]
    EmptyPeerSet,
    #[error("duplicate peer id {0}")]
    DuplicatePeer(PeerId),
    #[error("peer id must not be empty")]
    EmptyPeerId,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("peers must satisfy c1/d1 > c2/d2 strictly ({h1} vs {h2})")]
    UnorderedPeers { h1: f64, h2: f64 },
    #[error("uploader capacity {capacity} exceeds total demand {demand}; use solve")]
    NotOversubscribed { capacity: f64, demand: f64 },
    #[error("threshold ordering h1 > ... > hn > h1/2 > ... > hn/2 does not hold; use solve")]
    OrderingViolated,
    #[error("no closed-form branch matched uploader capacity {0}")]
    NoBranch(f64),
    #[error("residual tolerance must be positive and finite, got {0}")]
    InvalidConfig(f64),
    #[error("allocation residual {residual} exceeds tolerance {tolerance}")]
    Residual { residual: f64, tolerance: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid grid: min {min}, max {max}, resolution {resolution}")]
    InvalidGrid { min: f64, max: f64, resolution: f64 },
    #[error("no admissible grid price in [{min}, {max}] after widening")]
    NoAdmissiblePrice { min: f64, max: f64 },
    #[error("every peer has zero credits; the price window is empty")]
    DegenerateWindow,
    #[error("deviation probe needs at least 2 steps, got {0}")]
    TooFewSteps(usize),
}

#[derive(Debug, Clone, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("invalid bargaining configuration: {0}")]
    InvalidConfig(String),
    #[error("no peer holds credits, so nothing can be sold; aborting")]
    EmptyDemand,
    #[error("message from unknown peer {0}")]
    UnknownPeer(PeerId),
    #[error("missing {what} from peer {peer}")]
    MissingMessage { peer: PeerId, what: &'static str },
    #[error("peer {peer} replied {reported} at price {price}, best response is {expected}; aborting")]
    InconsistentReply {
        peer: PeerId,
        price: f64,
        expected: f64,
        reported: f64,
    },
    #[error("no convergence after {rounds} price broadcasts")]
    MaxRounds {
        rounds: usize,
        trace: Box<ProtocolTrace>,
    },
    #[error(
        "demand {total} at price {price} overshoots capacity {capacity} past epsilon \
         after {refinements} step refinements; use a smaller step or a larger epsilon"
    )]
    Overshoot {
        price: f64,
        total: f64,
        capacity: f64,
        refinements: usize,
        trace: Box<ProtocolTrace>,
    },
    #[error("price would fall to {price} before demand reaches capacity")]
    CapacityUnreachable {
        price: f64,
        trace: Box<ProtocolTrace>,
    },
}

impl ProtocolError {
    /// The partial trace, for errors raised mid-run.
    pub fn trace(&self) -> Option<&ProtocolTrace> {
        match self {
            Self::MaxRounds { trace, .. }
            | Self::Overshoot { trace, .. }
            | Self::CapacityUnreachable { trace, .. } => Some(trace),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChurnError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("event {index}: time {time} must be finite, >= 0 and not earlier than the previous event")]
    UnsortedEvent { index: usize, time: f64 },
    #[error("event {index}: peer {peer} is not present")]
    AbsentPeer { index: usize, peer: PeerId },
    #[error("event {index}: peer {peer} is already present")]
    AlreadyPresent { index: usize, peer: PeerId },
    #[error("event {index}: settlement duration must be finite and >= 0, got {duration}")]
    InvalidDuration { index: usize, duration: f64 },
    #[error("peer id {0} collides with the uploader id")]
    UploaderCollision(PeerId),
    #[error("end time {end} precedes the last event at {last}")]
    EndBeforeLastEvent { end: f64, last: f64 },
    #[error("uploader credits must be finite and >= 0, got {0}")]
    InvalidUploaderCredits(f64),
}
