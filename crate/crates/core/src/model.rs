//! Domain types for one uploader and its requesting downloaders, plus the
//! downloader side of the game: best response, satisfaction and utility.
//!
//! A downloader with credits `c` and download capacity `d` facing the unit
//! price `μ` maximizes `c·log2(1 + x/d) − μ·x` over `0 ≤ x ≤ d`. The optimum
//! is piecewise in `μ` with two thresholds, `c/(2d·ln2)` (below which it
//! downloads at full capacity) and `c/(d·ln2)` (above which it buys nothing).

use std::collections::HashSet;
use std::f64::consts::LN_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::solver::RegionLabel;

/// Opaque peer identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PeerId(String);

impl PeerId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PeerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PeerId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for PeerId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

/// The two price thresholds of a downloader's best response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// At or below this price the peer downloads its full capacity.
    pub saturate: f64,
    /// Above this price the peer buys nothing.
    pub reject: f64,
}

/// Which branch of the best response a peer is on at a given price.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Saturated,
    Interior,
    Rejected,
}

/// A requesting downloader: identity, credit balance and download capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPeer")]
pub struct PeerProfile {
    id: PeerId,
    credits: f64,
    capacity: f64,
}

#[derive(Deserialize)]
struct RawPeer {
    id: PeerId,
    credits: f64,
    capacity: f64,
}

impl TryFrom<RawPeer> for PeerProfile {
    type Error = ModelError;

    fn try_from(raw: RawPeer) -> Result<Self, Self::Error> {
        PeerProfile::new(raw.id, raw.credits, raw.capacity)
    }
}

impl PeerProfile {
    pub fn new(id: impl Into<PeerId>, credits: f64, capacity: f64) -> Result<Self, ModelError> {
        let id = id.into();
        if id.as_str().is_empty() {
            return Err(ModelError::EmptyPeerId);
        }
        if !credits.is_finite() || credits < 0.0 {
            return Err(ModelError::InvalidCredits { peer: id, value: credits });
        }
        if !capacity.is_finite() || capacity <= 0.0 {
            return Err(ModelError::InvalidCapacity { peer: id, value: capacity });
        }
        Ok(Self { id, credits, capacity })
    }

    pub fn id(&self) -> &PeerId {
        &self.id
    }

    pub fn credits(&self) -> f64 {
        self.credits
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    /// Same peer with a different credit balance.
    pub fn with_credits(&self, credits: f64) -> Result<Self, ModelError> {
        Self::new(self.id.clone(), credits, self.capacity)
    }

    /// Priority ratio `c/d`.
    pub fn priority(&self) -> f64 {
        self.credits / self.capacity
    }

    /// Both thresholds derive from the priority ratio so that peers with equal
    /// `c/d` get bit-identical thresholds.
    pub fn thresholds(&self) -> Thresholds {
        let h = self.priority();
        Thresholds {
            saturate: h / (2.0 * LN_2),
            reject: h / LN_2,
        }
    }

    pub fn regime(&self, price: f64) -> Regime {
        let t = self.thresholds();
        if price <= t.saturate {
            Regime::Saturated
        } else if price < t.reject {
            Regime::Interior
        } else {
            Regime::Rejected
        }
    }

    /// Best-response bandwidth at `price`. The caller guarantees `price > 0`;
    /// see [`best_response`] for the checked form.
    pub fn demand(&self, price: f64) -> f64 {
        let t = self.thresholds();
        if price <= t.saturate {
            self.capacity
        } else if price < t.reject {
            (self.credits / (price * LN_2) - self.capacity).clamp(0.0, self.capacity)
        } else {
            // The interior branch vanishes at the reject threshold itself.
            0.0
        }
    }
}

fn check_price(price: f64) -> Result<(), ModelError> {
    if price.is_finite() && price > 0.0 {
        Ok(())
    } else {
        Err(ModelError::NonPositivePrice(price))
    }
}

fn check_bandwidth(peer: &PeerProfile, x: f64) -> Result<(), ModelError> {
    if x.is_finite() && (0.0..=peer.capacity).contains(&x) {
        Ok(())
    } else {
        Err(ModelError::BandwidthOutOfRange {
            peer: peer.id.clone(),
            bandwidth: x,
            capacity: peer.capacity,
        })
    }
}

/// Utility-maximizing bandwidth of `peer` at unit price `price`.
pub fn best_response(peer: &PeerProfile, price: f64) -> Result<f64, ModelError> {
    check_price(price)?;
    Ok(peer.demand(price))
}

/// Performance satisfaction `log2(1 + x/d)`, in `[0, 1]`.
pub fn satisfaction(peer: &PeerProfile, x: f64) -> Result<f64, ModelError> {
    check_bandwidth(peer, x)?;
    Ok((1.0 + x / peer.capacity).log2())
}

/// `c·satisfaction(x) − price·x`.
pub fn downloader_utility(peer: &PeerProfile, x: f64, price: f64) -> Result<f64, ModelError> {
    check_price(price)?;
    Ok(peer.credits * satisfaction(peer, x)? - price * x)
}

/// One uploader's capacity and the peers requesting from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGame")]
pub struct GameInstance {
    uploader_capacity: f64,
    peers: Vec<PeerProfile>,
}

#[derive(Deserialize)]
struct RawGame {
    uploader_capacity: f64,
    peers: Vec<PeerProfile>,
}

impl TryFrom<RawGame> for GameInstance {
    type Error = ModelError;

    fn try_from(raw: RawGame) -> Result<Self, Self::Error> {
        GameInstance::new(raw.uploader_capacity, raw.peers)
    }
}

impl GameInstance {
    pub fn new(uploader_capacity: f64, peers: Vec<PeerProfile>) -> Result<Self, ModelError> {
        if !uploader_capacity.is_finite() || uploader_capacity <= 0.0 {
            return Err(ModelError::InvalidUploaderCapacity(uploader_capacity));
        }
        if peers.is_empty() {
            return Err(ModelError::EmptyPeerSet);
        }
        let mut seen = HashSet::with_capacity(peers.len());
        for p in &peers {
            if !seen.insert(p.id()) {
                return Err(ModelError::DuplicatePeer(p.id().clone()));
            }
        }
        Ok(Self { uploader_capacity, peers })
    }

    pub fn uploader_capacity(&self) -> f64 {
        self.uploader_capacity
    }

    pub fn peers(&self) -> &[PeerProfile] {
        &self.peers
    }

    pub fn with_uploader_capacity(&self, capacity: f64) -> Result<Self, ModelError> {
        Self::new(capacity, self.peers.clone())
    }

    pub fn total_capacity(&self) -> f64 {
        self.peers.iter().map(PeerProfile::capacity).sum()
    }

    /// Total download capacity strictly exceeds what the uploader can serve.
    pub fn oversubscribed(&self) -> bool {
        self.total_capacity() > self.uploader_capacity
    }

    pub fn peer(&self, id: &PeerId) -> Option<&PeerProfile> {
        self.peers.iter().find(|p| p.id() == id)
    }

    /// Lowest saturation threshold among paying peers; `None` if nobody has credits.
    pub fn min_saturate_threshold(&self) -> Option<f64> {
        self.peers
            .iter()
            .filter(|p| p.credits() > 0.0)
            .map(|p| p.thresholds().saturate)
            .reduce(f64::min)
    }

    /// `max_i c_i/(d_i ln2)`, the price above which nobody buys.
    pub fn max_reject_threshold(&self) -> f64 {
        self.peers
            .iter()
            .map(|p| p.thresholds().reject)
            .fold(0.0, f64::max)
    }
}

/// Total best-response demand at `price`.
pub fn aggregate_demand(game: &GameInstance, price: f64) -> Result<f64, ModelError> {
    check_price(price)?;
    Ok(total_demand(game, price))
}

pub(crate) fn total_demand(game: &GameInstance, price: f64) -> f64 {
    game.peers.iter().map(|p| p.demand(price)).sum()
}

/// A peer's share of an equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeerOutcome {
    pub peer: PeerId,
    pub bandwidth: f64,
    pub utility: f64,
}

/// Price, allocation and payoffs of one game round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Equilibrium {
    pub price: f64,
    /// One entry per peer, in the game's peer order.
    pub outcomes: Vec<PeerOutcome>,
    pub revenue: f64,
    pub region: RegionLabel,
}

impl Equilibrium {
    /// Every peer best-responds to `price`; revenue is what the uploader collects.
    pub fn at_price(game: &GameInstance, price: f64) -> Result<Self, ModelError> {
        check_price(price)?;
        let outcomes: Vec<PeerOutcome> = game
            .peers()
            .iter()
            .map(|p| {
                let x = p.demand(price);
                PeerOutcome {
                    peer: p.id().clone(),
                    bandwidth: x,
                    utility: p.credits() * (1.0 + x / p.capacity()).log2() - price * x,
                }
            })
            .collect();
        let total: f64 = outcomes.iter().map(|o| o.bandwidth).sum();
        Ok(Self {
            price,
            revenue: price * total,
            region: RegionLabel::classify(game, price),
            outcomes,
        })
    }

    pub fn total_allocated(&self) -> f64 {
        self.outcomes.iter().map(|o| o.bandwidth).sum()
    }

    pub fn allocation(&self) -> Vec<f64> {
        self.outcomes.iter().map(|o| o.bandwidth).collect()
    }

    pub fn bandwidth_of(&self, id: &PeerId) -> Option<f64> {
        self.outcomes.iter().find(|o| &o.peer == id).map(|o| o.bandwidth)
    }

    /// Peers that receive a positive allocation.
    pub fn winners(&self) -> impl Iterator<Item = &PeerId> {
        self.outcomes.iter().filter(|o| o.bandwidth > 0.0).map(|o| &o.peer)
    }
}
