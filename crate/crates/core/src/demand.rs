//! Aggregate demand `D(μ) = Σ f_i(μ)` materialized as a list of segments.
//!
//! Between consecutive thresholds every peer stays on one branch of its best
//! response, so on each segment `D(μ) = S − A + C/(μ·ln2)` with `S` the
//! saturated capacity, `A` the interior capacity and `C` the interior credits.

use std::f64::consts::LN_2;

use crate::model::{GameInstance, Regime};

/// A maximal price interval `(lower, upper]` on which each peer's branch is fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    /// Exclusive left end; `0.0` for the first segment.
    pub lower: f64,
    /// Inclusive right end; `f64::INFINITY` for the trailing zero-demand segment.
    pub upper: f64,
    /// Indices (into the game's peers) on the interior branch.
    pub active: Vec<usize>,
    /// Indices downloading at full capacity.
    pub saturated: Vec<usize>,
    pub(crate) saturated_capacity: f64,
    pub(crate) active_capacity: f64,
    pub(crate) active_credits: f64,
}

impl Segment {
    /// Closed form of `D` on this segment. Exact on `(lower, upper]`; used
    /// outside that range it is the segment's analytic continuation.
    pub fn demand(&self, price: f64) -> f64 {
        if self.active.is_empty() {
            self.saturated_capacity
        } else {
            self.saturated_capacity - self.active_capacity + self.active_credits / (price * LN_2)
        }
    }

    /// Limit of `D` as the price decreases to `lower`.
    pub fn demand_at_lower(&self) -> f64 {
        if self.active.is_empty() || self.lower == 0.0 {
            // The first segment never has interior peers.
            self.saturated_capacity
        } else {
            self.demand(self.lower)
        }
    }

    pub fn demand_at_upper(&self) -> f64 {
        if self.upper.is_infinite() {
            self.saturated_capacity
        } else {
            self.demand(self.upper)
        }
    }

    /// The price at which this segment's closed form equals `target`, if
    /// the segment has interior peers.
    pub fn invert(&self, target: f64) -> Option<f64> {
        if self.active.is_empty() {
            return None;
        }
        let denom = (target - self.saturated_capacity + self.active_capacity) * LN_2;
        (denom > 0.0).then(|| self.active_credits / denom)
    }

    pub fn contains(&self, price: f64) -> bool {
        price > self.lower && price <= self.upper
    }
}

/// The piecewise demand curve of a game.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandCurve {
    breakpoints: Vec<f64>,
    segments: Vec<Segment>,
}

impl DemandCurve {
    pub fn build(game: &GameInstance) -> Self {
        let mut breakpoints: Vec<f64> = game
            .peers()
            .iter()
            .flat_map(|p| {
                let t = p.thresholds();
                [t.saturate, t.reject]
            })
            .filter(|&b| b > 0.0)
            .collect();
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();

        let mut edges = Vec::with_capacity(breakpoints.len() + 2);
        edges.push(0.0);
        edges.extend_from_slice(&breakpoints);
        edges.push(f64::INFINITY);

        let segments = edges
            .windows(2)
            .map(|w| {
                let (lower, upper) = (w[0], w[1]);
                let probe = if upper.is_infinite() {
                    lower * 2.0 + 1.0
                } else {
                    lower + (upper - lower) / 2.0
                };
                let mut seg = Segment {
                    lower,
                    upper,
                    active: Vec::new(),
                    saturated: Vec::new(),
                    saturated_capacity: 0.0,
                    active_capacity: 0.0,
                    active_credits: 0.0,
                };
                for (i, p) in game.peers().iter().enumerate() {
                    match p.regime(probe) {
                        Regime::Saturated => {
                            seg.saturated.push(i);
                            seg.saturated_capacity += p.capacity();
                        }
                        Regime::Interior => {
                            seg.active.push(i);
                            seg.active_capacity += p.capacity();
                            seg.active_credits += p.credits();
                        }
                        Regime::Rejected => {}
                    }
                }
                seg
            })
            .collect();

        Self { breakpoints, segments }
    }

    /// Distinct positive thresholds, ascending.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Index of the segment containing `price` (which must be positive).
    pub fn segment_index(&self, price: f64) -> usize {
        self.breakpoints.partition_point(|&b| b < price)
    }

    pub fn segment_at(&self, price: f64) -> &Segment {
        &self.segments[self.segment_index(price)]
    }

    pub fn evaluate(&self, price: f64) -> f64 {
        self.segment_at(price).demand(price)
    }

    /// `D(0+)`: the capacity of every paying peer.
    pub fn max_demand(&self) -> f64 {
        self.segments[0].saturated_capacity
    }
}
