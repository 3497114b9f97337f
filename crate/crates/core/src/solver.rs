//! Uploader pricing: the highest price at which total demand exactly fills
//! the uploader's capacity, found by inverting the demand curve segment by
//! segment. The two-peer, balance-region and ordered-threshold closed forms
//! are kept as separate entry points so they can be checked against it.

use std::f64::consts::LN_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::demand::DemandCurve;
use crate::error::SolveError;
use crate::model::{total_demand, Equilibrium, GameInstance, PeerId, PeerProfile, Regime};

/// Price used when no peer holds any credit: every positive price clears
/// the (empty) demand, so the value only needs to be positive.
pub const NOMINAL_PRICE: f64 = 1.0;

/// How to pick among several prices that all fill the capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    HighestPrice,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Relative bound on `|D(μ*) − u_k| / u_k`.
    pub residual_tolerance: f64,
    pub tie_break: TieBreak,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            residual_tolerance: 1e-9,
            tie_break: TieBreak::HighestPrice,
        }
    }
}

impl SolverConfig {
    pub fn with_tolerance(residual_tolerance: f64) -> Result<Self, SolveError> {
        if !(residual_tolerance > 0.0 && residual_tolerance.is_finite()) {
            return Err(SolveError::InvalidConfig(residual_tolerance));
        }
        Ok(Self {
            residual_tolerance,
            ..Self::default()
        })
    }
}

/// Supply/demand regime at the equilibrium price.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionLabel {
    /// At least one peer is priced out.
    Insufficient,
    /// Everyone is served, nobody at full capacity.
    Balance,
    /// Everyone is served and at least one peer at full capacity.
    Sufficient,
    /// The uploader can serve every peer's full capacity.
    Saturated,
}

impl RegionLabel {
    pub fn classify(game: &GameInstance, price: f64) -> Self {
        if game.peers().iter().all(|p| p.credits() == 0.0) {
            return Self::Insufficient;
        }
        if !game.oversubscribed() {
            return Self::Saturated;
        }
        let regimes: Vec<Regime> = game.peers().iter().map(|p| p.regime(price)).collect();
        if regimes.contains(&Regime::Rejected) {
            Self::Insufficient
        } else if regimes.contains(&Regime::Saturated) {
            Self::Sufficient
        } else {
            Self::Balance
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Insufficient => "insufficient",
            Self::Balance => "balance",
            Self::Sufficient => "sufficient",
            Self::Saturated => "saturated",
        }
    }
}

/// Stackelberg equilibrium of `game`.
///
/// When the paying peers can absorb more than the uploader offers, the price
/// is the largest `μ` with `D(μ) = u_k`. Otherwise every paying peer gets its
/// full capacity at the highest price that keeps them all saturated.
pub fn solve(game: &GameInstance, config: &SolverConfig) -> Result<Equilibrium, SolveError> {
    let curve = DemandCurve::build(game);
    let capacity = game.uploader_capacity();
    let constrained = curve.max_demand() > capacity;
    let price = if constrained {
        full_allocation_price(&curve, capacity, config.tie_break)
    } else {
        game.min_saturate_threshold().unwrap_or(NOMINAL_PRICE)
    };
    let eq = Equilibrium::at_price(game, price)?;
    if constrained {
        let residual = (eq.total_allocated() - capacity).abs();
        let tolerance = config.residual_tolerance * capacity;
        if residual > tolerance {
            return Err(SolveError::Residual { residual, tolerance });
        }
    }
    Ok(eq)
}

/// Largest price at which the curve equals `target`. Requires
/// `0 < target < D(0+)`.
pub(crate) fn full_allocation_price(curve: &DemandCurve, target: f64, tie: TieBreak) -> f64 {
    let TieBreak::HighestPrice = tie;
    // Scanning from the top, the first segment whose left limit reaches the
    // target brackets it: the segment above ends strictly below the target.
    let seg = curve
        .segments()
        .iter()
        .rev()
        .find(|s| s.demand_at_lower() >= target)
        .unwrap_or(&curve.segments()[0]);
    match seg.invert(target) {
        Some(price) => {
            debug_assert!(
                price >= seg.lower * (1.0 - 1e-9) && price <= seg.upper * (1.0 + 1e-9),
                "inversion {price} escaped its segment ({}, {}]",
                seg.lower,
                seg.upper
            );
            price.clamp(seg.lower, seg.upper)
        }
        // A plateau at the target level: its supremum.
        None => seg.upper,
    }
}

/// Branch of the two-peer closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwoPeerBranch {
    /// Only the higher-priority peer buys; the other is priced out.
    FirstOnly,
    /// Both peers buy below capacity.
    BothInterior,
    /// The higher-priority peer is saturated; the other buys below capacity.
    FirstSaturated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPeerPrice {
    pub price: f64,
    /// `h2 > h1/2`: the two peers' interior ranges overlap.
    pub overlapping: bool,
    pub branch: TwoPeerBranch,
}

/// Closed-form optimal price for two peers with `c1/d1 > c2/d2`.
pub fn two_peer_price(
    first: &PeerProfile,
    second: &PeerProfile,
    capacity: f64,
) -> Result<TwoPeerPrice, SolveError> {
    let (c1, d1, h1) = (first.credits(), first.capacity(), first.priority());
    let (c2, d2, h2) = (second.credits(), second.capacity(), second.priority());
    if !(h1 > h2) {
        return Err(SolveError::UnorderedPeers { h1, h2 });
    }
    if !(capacity > 0.0) {
        return Err(SolveError::Model(crate::error::ModelError::InvalidUploaderCapacity(capacity)));
    }
    if capacity > d1 + d2 {
        return Err(SolveError::NotOversubscribed {
            capacity,
            demand: d1 + d2,
        });
    }
    let first_only = || c1 / ((capacity + d1) * LN_2);
    let first_saturated = || c2 / ((capacity - d1 + d2) * LN_2);
    let overlapping = h2 > h1 / 2.0;
    let (price, branch) = if overlapping {
        if capacity <= c1 / h2 - d1 {
            (first_only(), TwoPeerBranch::FirstOnly)
        } else if capacity <= 2.0 * c2 / h1 + d1 - d2 {
            (
                (c1 + c2) / ((capacity + d1 + d2) * LN_2),
                TwoPeerBranch::BothInterior,
            )
        } else {
            (first_saturated(), TwoPeerBranch::FirstSaturated)
        }
    } else if capacity <= d1 {
        (first_only(), TwoPeerBranch::FirstOnly)
    } else {
        (first_saturated(), TwoPeerBranch::FirstSaturated)
    };
    Ok(TwoPeerPrice {
        price,
        overlapping,
        branch,
    })
}

/// `Σc / ((u_k + Σd)·ln2)` when every peer is on its interior branch at that
/// price, i.e. `min h ≥ max h / 2` and
/// `Σc/min h − Σd < u_k ≤ 2Σc/max h − Σd`.
pub fn balance_region_price(game: &GameInstance) -> Option<f64> {
    let (min_h, max_h) = game
        .peers()
        .iter()
        .map(PeerProfile::priority)
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), h| (lo.min(h), hi.max(h)));
    if max_h == 0.0 || min_h < max_h / 2.0 {
        return None;
    }
    let credits: f64 = game.peers().iter().map(PeerProfile::credits).sum();
    let capacity = game.total_capacity();
    let u = game.uploader_capacity();
    let lower = credits / min_h - capacity;
    let upper = 2.0 * credits / max_h - capacity;
    (lower < u && u <= upper).then(|| credits / ((u + capacity) * LN_2))
}

/// Closed form for peers whose thresholds interleave as
/// `h1 > … > hn > h1/2 > … > hn/2` (sorted internally by `h`).
pub fn ordered_threshold_price(game: &GameInstance) -> Result<f64, SolveError> {
    let mut peers: Vec<&PeerProfile> = game.peers().iter().collect();
    peers.sort_by(|a, b| b.priority().total_cmp(&a.priority()));
    let n = peers.len();
    let h: Vec<f64> = peers.iter().map(|p| p.priority()).collect();
    let strictly_decreasing = h.windows(2).all(|w| w[0] > w[1]);
    if !strictly_decreasing || !(h[n - 1] > h[0] / 2.0) {
        return Err(SolveError::OrderingViolated);
    }
    let u = game.uploader_capacity();
    let total_d = game.total_capacity();
    if u > total_d {
        return Err(SolveError::NotOversubscribed {
            capacity: u,
            demand: total_d,
        });
    }

    // prefix_*[k] sums peers 0..k; suffix_*[k] sums peers k..n (0-based).
    let prefix = |f: fn(&PeerProfile) -> f64| {
        let mut acc = vec![0.0; n + 1];
        for (k, p) in peers.iter().enumerate() {
            acc[k + 1] = acc[k] + f(p);
        }
        acc
    };
    let pc = prefix(PeerProfile::credits);
    let pd = prefix(PeerProfile::capacity);
    let sc = |k: usize| pc[n] - pc[k];
    let sd = |k: usize| pd[n] - pd[k];

    // 1-based K as in the usual presentation; index K-1 below.
    let t = |k: usize| {
        if k == 1 {
            0.0
        } else {
            pc[k] / h[k - 1] - pd[k]
        }
    };
    let r = |k: usize| 2.0 * sc(k - 1) / h[k - 1] + pd[k - 1] - sd(k - 1);
    let q = |k: usize| pc[k] / ((u + pd[k]) * LN_2);
    let p = |k: usize| sc(k - 1) / ((u - pd[k - 1] + sd(k - 1)) * LN_2);

    for k in (2..=n).rev() {
        if r(k) >= u && u > r(k - 1) {
            return Ok(p(k));
        }
    }
    if r(1) >= u && u > t(n) {
        return Ok(q(n));
    }
    for k in (1..n).rev() {
        if t(k + 1) >= u && u > t(k) {
            return Ok(q(k));
        }
    }
    Err(SolveError::NoBranch(u))
}

/// Outcome of a sampled equilibrium check.
#[derive(Debug, Clone, PartialEq)]
pub struct SeReport {
    pub holds: bool,
    pub prices_sampled: usize,
    /// Largest revenue gain found at an admissible sampled price.
    pub revenue_gain: f64,
    pub revenue_gain_price: Option<f64>,
    /// Largest utility gain any peer found by deviating.
    pub utility_gain: f64,
    pub utility_gain_peer: Option<PeerId>,
}

const VERIFY_SEED: u64 = 0x5EED_CAFE;

/// Samples deviations for the uploader (prices at which the best-responded
/// demand fits the capacity) and for every downloader.
pub fn verify_se(game: &GameInstance, eq: &Equilibrium, samples: usize) -> SeReport {
    verify_se_seeded(game, eq, samples, VERIFY_SEED)
}

pub fn verify_se_seeded(
    game: &GameInstance,
    eq: &Equilibrium,
    samples: usize,
    seed: u64,
) -> SeReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let capacity = game.uploader_capacity();
    let revenue_tol = 1e-9 * eq.revenue.abs().max(1.0);
    let mut report = SeReport {
        holds: true,
        prices_sampled: 0,
        revenue_gain: 0.0,
        revenue_gain_price: None,
        utility_gain: 0.0,
        utility_gain_peer: None,
    };

    let hi = game.max_reject_threshold() * 1.1;
    let lo = game.min_saturate_threshold().map_or(hi, |m| m / 2.0);
    if hi > 0.0 {
        for _ in 0..samples {
            let price = if lo < hi { rng.random_range(lo..hi) } else { hi };
            let demand = total_demand(game, price);
            if demand > capacity {
                continue;
            }
            report.prices_sampled += 1;
            let gain = price * demand - eq.revenue;
            if gain > report.revenue_gain {
                report.revenue_gain = gain;
                report.revenue_gain_price = Some(price);
            }
        }
    }
    if report.revenue_gain > revenue_tol {
        report.holds = false;
    }

    for (peer, outcome) in game.peers().iter().zip(&eq.outcomes) {
        let d = peer.capacity();
        let x_star = outcome.bandwidth;
        if outcome.peer != *peer.id() || !(0.0..=d).contains(&x_star) {
            report.holds = false;
            report.utility_gain_peer = Some(peer.id().clone());
            continue;
        }
        let utility = |x: f64| peer.credits() * (1.0 + x / d).log2() - eq.price * x;
        let base = utility(x_star);
        let tol = 1e-9 * base.abs().max(1.0);
        for _ in 0..samples {
            let gain = utility(rng.random_range(0.0..=d)) - base;
            if gain > report.utility_gain {
                report.utility_gain = gain;
                report.utility_gain_peer = Some(peer.id().clone());
            }
            if gain > tol {
                report.holds = false;
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn peer(id: &str, c: f64, d: f64) -> PeerProfile {
        PeerProfile::new(id, c, d).unwrap()
    }

    fn game(u: f64, peers: &[(f64, f64)]) -> GameInstance {
        GameInstance::new(
            u,
            peers
                .iter()
                .enumerate()
                .map(|(i, &(c, d))| peer(&format!("p{}", i + 1), c, d))
                .collect(),
        )
        .unwrap()
    }

    /// Brute-force reference: scan a fine grid from the top for the first
    /// price whose demand reaches the capacity.
    fn scan_full_allocation(game: &GameInstance, steps: usize) -> f64 {
        let hi = game.max_reject_threshold();
        let lo = game.min_saturate_threshold().unwrap() / 2.0;
        let u = game.uploader_capacity();
        (0..=steps)
            .map(|k| hi - (hi - lo) * k as f64 / steps as f64)
            .find(|&mu| total_demand(game, mu) >= u)
            .unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn example_four_equilibrium() {
        let g = presets::example4_game();
        let eq = solve(&g, &SolverConfig::default()).unwrap();
        let expected = 1000.0 / (7.0 * LN_2);
        assert!((eq.price - expected).abs() < 1e-9 * expected);
        assert!((eq.price - 206.099).abs() < 1e-3);
        for (x, want) in eq.allocation().iter().zip([0.8, 0.6, 0.4, 0.2]) {
            assert!((x - want).abs() < 1e-3, "{x} vs {want}");
        }
        assert_eq!(eq.region, RegionLabel::Balance);
        assert!((scan_full_allocation(&g, 1_000_000) - eq.price).abs() < 1e-3);
    }

    #[test]
    fn single_peer_collapses_to_saturation() {
        let g = game(2.0, &[(400.0, 2.0)]);
        let eq = solve(&g, &SolverConfig::default()).unwrap();
        assert!((eq.price - 400.0 / (4.0 * LN_2)).abs() < 1e-9);
        assert!((eq.price - 144.270).abs() < 1e-3);
        assert_eq!(eq.allocation(), vec![2.0]);
        assert_eq!(eq.region, RegionLabel::Saturated);
    }

    #[test]
    fn undersubscribed_saturates_everyone() {
        let g = presets::example1_game(700.0);
        let eq = solve(&g, &SolverConfig::default()).unwrap();
        assert_eq!(eq.allocation(), vec![150.0; 4]);
        assert_eq!(eq.price, g.min_saturate_threshold().unwrap());
        assert_eq!(eq.region, RegionLabel::Saturated);
    }

    #[test]
    fn free_riders_only() {
        let g = game(1.0, &[(0.0, 2.0), (0.0, 3.0)]);
        let eq = solve(&g, &SolverConfig::default()).unwrap();
        assert_eq!(eq.revenue, 0.0);
        assert_eq!(eq.region, RegionLabel::Insufficient);
        assert_eq!(eq.winners().count(), 0);
        assert!(eq.price > 0.0);
    }

    #[test]
    fn free_rider_alongside_payer() {
        // Paying capacity (1) below the uploader's 1.5: the payer saturates.
        let g = game(1.5, &[(0.0, 2.0), (3.0, 1.0)]);
        let eq = solve(&g, &SolverConfig::default()).unwrap();
        assert_eq!(eq.allocation(), vec![0.0, 1.0]);
        assert_eq!(eq.region, RegionLabel::Insufficient);
    }

    #[test]
    fn plateau_resolves_to_highest_price() {
        // Separated thresholds with u_k = d1: demand equals d1 on a whole
        // interval; the supremum is the first peer's saturation threshold.
        let g = game(100.0, &[(400.0, 100.0), (100.0, 100.0)]);
        let eq = solve(&g, &SolverConfig::default()).unwrap();
        let sat1 = g.peers()[0].thresholds().saturate;
        assert!(rel(eq.price, sat1) < 1e-12, "{} vs {}", eq.price, sat1);
        assert!((eq.allocation()[0] - 100.0).abs() < 1e-9);
        assert_eq!(eq.allocation()[1], 0.0);
    }

    #[test]
    fn solve_is_deterministic() {
        let g = game(3.3, &[(120.0, 1.3), (80.0, 2.2), (300.0, 0.7), (5.0, 4.0)]);
        let a = solve(&g, &SolverConfig::default()).unwrap();
        let b = solve(&g, &SolverConfig::default()).unwrap();
        assert_eq!(a.price.to_bits(), b.price.to_bits());
        assert_eq!(a, b);
        for (p, o) in g.peers().iter().zip(&a.outcomes) {
            assert_eq!(p.demand(a.price).to_bits(), o.bandwidth.to_bits());
        }
    }

    #[test]
    fn two_peer_overlapping_first_only() {
        let r = two_peer_price(&peer("a", 200.0, 100.0), &peer("b", 150.0, 100.0), 30.0).unwrap();
        assert_eq!(r.branch, TwoPeerBranch::FirstOnly);
        assert!(r.overlapping);
        assert!((r.price - 200.0 / (130.0 * LN_2)).abs() < 1e-12);
        assert!((r.price - 2.2195).abs() < 1e-4);
        let g = game(30.0, &[(200.0, 100.0), (150.0, 100.0)]);
        let eq = solve(&g, &SolverConfig::default()).unwrap();
        assert!(rel(eq.price, r.price) < 1e-9);
        assert!((eq.allocation()[0] - 30.0).abs() < 1e-9);
        assert_eq!(eq.allocation()[1], 0.0);
    }

    #[test]
    fn two_peer_overlapping_both_interior() {
        let r = two_peer_price(&peer("a", 200.0, 100.0), &peer("b", 150.0, 100.0), 100.0).unwrap();
        assert_eq!(r.branch, TwoPeerBranch::BothInterior);
        assert!((r.price - 350.0 / (300.0 * LN_2)).abs() < 1e-12);
        assert!((r.price - 1.68315).abs() < 1e-4);
        let g = game(100.0, &[(200.0, 100.0), (150.0, 100.0)]);
        let eq = solve(&g, &SolverConfig::default()).unwrap();
        assert!(rel(eq.price, r.price) < 1e-9);
        assert!((eq.allocation()[0] - 71.43).abs() < 0.01);
        assert!((eq.allocation()[1] - 28.57).abs() < 0.01);
        assert!(rel(ordered_threshold_price(&g).unwrap(), r.price) < 1e-12);
    }

    #[test]
    fn two_peer_overlapping_first_saturated() {
        let g = game(180.0, &[(200.0, 100.0), (150.0, 100.0)]);
        let ordered = ordered_threshold_price(&g).unwrap();
        assert!((ordered - 150.0 / (180.0 * LN_2)).abs() < 1e-12);
        assert!((ordered - 1.2023).abs() < 1e-4);
        let r = two_peer_price(&g.peers()[0], &g.peers()[1], 180.0).unwrap();
        assert_eq!(r.branch, TwoPeerBranch::FirstSaturated);
        assert!(rel(solve(&g, &SolverConfig::default()).unwrap().price, ordered) < 1e-9);
    }

    #[test]
    fn two_peer_separated() {
        let r = two_peer_price(&peer("a", 400.0, 100.0), &peer("b", 100.0, 100.0), 150.0).unwrap();
        assert!(!r.overlapping);
        assert_eq!(r.branch, TwoPeerBranch::FirstSaturated);
        assert!((r.price - 100.0 / (150.0 * LN_2)).abs() < 1e-12);
        assert!((r.price - 0.9618).abs() < 1e-4);
        let g = game(150.0, &[(400.0, 100.0), (100.0, 100.0)]);
        let eq = solve(&g, &SolverConfig::default()).unwrap();
        assert!(rel(eq.price, r.price) < 1e-9);
        assert_eq!(eq.allocation()[0], 100.0);
        assert!((eq.allocation()[1] - 50.0).abs() < 1e-9);
    }

    #[test]
    fn two_peer_errors() {
        let a = peer("a", 200.0, 100.0);
        let b = peer("b", 150.0, 100.0);
        assert!(matches!(two_peer_price(&b, &a, 10.0), Err(SolveError::UnorderedPeers { .. })));
        assert!(matches!(two_peer_price(&a, &a.clone(), 10.0), Err(SolveError::UnorderedPeers { .. })));
        assert!(matches!(two_peer_price(&a, &b, 201.0), Err(SolveError::NotOversubscribed { .. })));
    }

    #[test]
    fn balance_region_examples() {
        let g = presets::example4_game();
        let p = balance_region_price(&g).unwrap();
        assert!((p - 206.099).abs() < 1e-3);
        assert_eq!(balance_region_price(&g.with_uploader_capacity(6.0).unwrap()), None);
        assert!(balance_region_price(&g.with_uploader_capacity(5.0).unwrap()).is_some());
        // Distinct priorities: the lower bound is positive.
        let distinct = game(1e-9, &[(200.0, 100.0), (150.0, 100.0)]);
        assert_eq!(balance_region_price(&distinct), None);
        // Precondition fails when priorities are more than a factor 2 apart.
        let spread = game(150.0, &[(400.0, 100.0), (100.0, 100.0)]);
        assert_eq!(balance_region_price(&spread), None);
    }

    #[test]
    fn ordered_threshold_single_peer() {
        let g = game(1.0, &[(400.0, 2.0)]);
        assert!((ordered_threshold_price(&g).unwrap() - 400.0 / (3.0 * LN_2)).abs() < 1e-12);
    }

    #[test]
    fn ordered_threshold_rejects_bad_order() {
        let g = game(150.0, &[(400.0, 100.0), (100.0, 100.0)]);
        assert_eq!(ordered_threshold_price(&g), Err(SolveError::OrderingViolated));
        assert_eq!(
            ordered_threshold_price(&presets::example4_game()),
            Err(SolveError::OrderingViolated)
        );
    }

    #[test]
    fn verify_examples() {
        let g = presets::example4_game();
        let eq = solve(&g, &SolverConfig::default()).unwrap();
        assert!(verify_se(&g, &eq, 1000).holds);
        let perturbed = Equilibrium::at_price(&g, eq.price * 1.05).unwrap();
        let report = verify_se(&g, &perturbed, 1000);
        assert!(!report.holds);
        assert!(report.revenue_gain > 0.0);

        let single = game(2.0, &[(400.0, 2.0)]);
        let eq = solve(&single, &SolverConfig::default()).unwrap();
        let report = verify_se(&single, &eq, 0);
        assert!(report.holds);
        assert_eq!(report.prices_sampled, 0);
    }

    #[test]
    fn verify_catches_misreported_allocation() {
        let g = presets::example4_game();
        let mut eq = solve(&g, &SolverConfig::default()).unwrap();
        eq.outcomes[0].bandwidth = 1.2;
        assert!(!verify_se(&g, &eq, 200).holds);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::with_tolerance(0.0).is_err());
        assert!(SolverConfig::with_tolerance(1e-6).is_ok());
    }

    #[test]
    fn separated_two_peer_never_lands_between_thresholds() {
        // With separated thresholds the price never falls strictly between
        // the second peer's reject threshold and the first's saturation one.
        let a = peer("a", 400.0, 100.0);
        let b = peer("b", 100.0, 100.0);
        let (gap_lo, gap_hi) = (b.thresholds().reject, a.thresholds().saturate);
        for k in 1..=2000 {
            let u = 200.0 * k as f64 / 2000.0;
            let g = GameInstance::new(u, vec![a.clone(), b.clone()]).unwrap();
            let price = solve(&g, &SolverConfig::default()).unwrap().price;
            assert!(!(price > gap_lo && price < gap_hi), "u={u} price={price}");
        }
    }
}
