use serde::{Deserialize, Serialize};

use crate::model::{PeerId, PeerProfile};

/// A timed sequence of joins, leaves and settlements against one uploader.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub uploader_capacity: f64,
    #[serde(default = "default_uploader_id")]
    pub uploader_id: PeerId,
    /// The uploader's opening balance.
    #[serde(default)]
    pub uploader_credits: f64,
    /// Closes the last epoch; without it the last epoch stays open.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_time: Option<f64>,
    pub events: Vec<ScenarioEvent>,
}

fn default_uploader_id() -> PeerId {
    PeerId::from("uploader")
}

impl Scenario {
    pub fn new(uploader_capacity: f64, events: Vec<ScenarioEvent>) -> Self {
        Self {
            uploader_capacity,
            uploader_id: default_uploader_id(),
            uploader_credits: 0.0,
            end_time: None,
            events,
        }
    }

    pub fn with_end_time(mut self, end_time: f64) -> Self {
        self.end_time = Some(end_time);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEvent {
    pub time: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EventKind {
    /// A peer arrives. A peer that was here before keeps its ledger balance
    /// and the credits given here are ignored.
    Join { peer: PeerProfile },
    Leave { peer: PeerRef },
    /// Every present downloader pays for its current allocation once.
    Settle {
        #[serde(default = "unit_duration")]
        duration: f64,
    },
}

fn unit_duration() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeerRef {
    pub id: PeerId,
}
