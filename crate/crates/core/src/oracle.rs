//! Brute-force references for the solver and the best response.
//!
//! Nothing here shares code with the solver beyond the best-response
//! formula itself: the price oracle walks a uniform grid and keeps the best
//! price whose demand fits the uploader's capacity.

use crate::demand::DemandCurve;
use crate::error::OracleError;
use crate::model::{total_demand, GameInstance, PeerProfile};

/// A uniform price grid `min, min + resolution, …` up to `max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub resolution: f64,
}

/// Default resolution as a fraction of the window width.
pub const DEFAULT_RELATIVE_RESOLUTION: f64 = 1e-4;

impl GridSpec {
    pub fn new(min: f64, max: f64, resolution: f64) -> Result<Self, OracleError> {
        let ok = min.is_finite() && max.is_finite() && min > 0.0 && min < max;
        if !ok || !(resolution > 0.0 && resolution.is_finite()) {
            return Err(OracleError::InvalidGrid {
                min,
                max,
                resolution,
            });
        }
        Ok(Self {
            min,
            max,
            resolution,
        })
    }

    /// `[min saturation threshold / 2, max rejection threshold]` with the
    /// resolution set to `relative` times the window width.
    pub fn window(game: &GameInstance, relative: f64) -> Result<Self, OracleError> {
        let min = game
            .min_saturate_threshold()
            .ok_or(OracleError::DegenerateWindow)?
            / 2.0;
        let max = game.max_reject_threshold();
        Self::new(min, max, (max - min) * relative)
    }

    pub fn default_for(game: &GameInstance) -> Result<Self, OracleError> {
        Self::window(game, DEFAULT_RELATIVE_RESOLUTION)
    }

    fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let n = ((self.max - self.min) / self.resolution).floor() as usize;
        (0..=n)
            .map(move |k| self.min + k as f64 * self.resolution)
            .chain(std::iter::once(self.max))
    }
}

/// Best admissible grid price `(price, revenue)`. A price is admissible when
/// the best-responded demand fits the capacity; revenue is `μ·D(μ)`. Ties go
/// to the higher price. If no grid price is admissible the window is
/// widened upward once by its own width.
pub fn grid_search_price(game: &GameInstance, grid: &GridSpec) -> Result<(f64, f64), OracleError> {
    scan(game, grid).or_else(|| {
        let widened = GridSpec {
            max: grid.max + (grid.max - grid.min),
            ..*grid
        };
        scan(game, &widened)
    })
    .ok_or(OracleError::NoAdmissiblePrice {
        min: grid.min,
        max: grid.max + (grid.max - grid.min),
    })
}

fn scan(game: &GameInstance, grid: &GridSpec) -> Option<(f64, f64)> {
    let capacity = game.uploader_capacity();
    let mut best: Option<(f64, f64)> = None;
    for price in grid.points() {
        let demand = total_demand(game, price);
        if demand > capacity {
            continue;
        }
        let revenue = price * demand;
        if best.is_none_or(|(_, r)| revenue >= r) {
            best = Some((price, revenue));
        }
    }
    best
}

/// Exact maximizer of `μ·D(μ)` over admissible prices. Revenue is linear in
/// `μ` on every demand segment, so only the lowest admissible price and the
/// breakpoints above it need checking. Returns `(price, revenue)`.
pub fn revenue_maximizing_price(game: &GameInstance) -> Result<(f64, f64), OracleError> {
    let curve = DemandCurve::build(game);
    let capacity = game.uploader_capacity();
    if curve.breakpoints().is_empty() {
        return Err(OracleError::DegenerateWindow);
    }
    // Lowest admissible price: bisection on the monotone demand.
    let lowest = if curve.max_demand() <= capacity {
        curve.breakpoints()[0]
    } else {
        let (mut lo, mut hi) = (0.0f64, game.max_reject_threshold());
        for _ in 0..200 {
            let mid = lo + (hi - lo) / 2.0;
            if mid <= lo || mid >= hi {
                break;
            }
            if total_demand(game, mid) > capacity {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };
    let best = std::iter::once(lowest)
        .chain(curve.breakpoints().iter().copied().filter(|&b| b > lowest))
        .map(|price| (price, price * total_demand(game, price)))
        .fold((lowest, f64::NEG_INFINITY), |best, cand| {
            if cand.1 > best.1 {
                cand
            } else {
                best
            }
        });
    Ok(best)
}

/// Maximum downloader utility over the grid `d·j/steps`, `j = 0..=steps`.
/// Returns `(argmax, max)`; ties keep the smaller bandwidth.
pub fn deviation_probe(
    peer: &PeerProfile,
    price: f64,
    steps: usize,
) -> Result<(f64, f64), OracleError> {
    if steps < 2 {
        return Err(OracleError::TooFewSteps(steps));
    }
    if !(price > 0.0 && price.is_finite()) {
        return Err(crate::error::ModelError::NonPositivePrice(price).into());
    }
    let (c, d) = (peer.credits(), peer.capacity());
    let mut best = (0.0, 0.0);
    for j in 1..=steps {
        let x = d * j as f64 / steps as f64;
        let utility = c * (1.0 + x / d).log2() - price * x;
        if utility > best.1 {
            best = (x, utility);
        }
    }
    Ok(best)
}
