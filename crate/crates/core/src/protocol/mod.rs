//! The game run as message exchanges between one uploader and its
//! downloaders.
//!
//! The direct protocol takes one round: peers announce credits and
//! capacity, the uploader solves for the price, broadcasts it, checks the
//! replies and grants bandwidth. The bargaining protocol starts at a price
//! nobody accepts and lowers it by a fixed step until total demand is within
//! `epsilon` of the capacity. If a step jumps past that band, the protocol
//! backs up to the last accepted price and continues with a tenth of the
//! step.

mod actors;
mod message;
mod trace;

pub use actors::MisreportHook;
pub use message::{Endpoint, Message, Payload};
pub use trace::{ProtocolKind, ProtocolTrace, Refinement, RoundRecord};

use crate::error::ProtocolError;
use crate::model::{Equilibrium, GameInstance, PeerId};
use crate::solver::{solve, SolverConfig};

use actors::Session;

/// Opening prices may sit this far (relative) below the rejection ceiling,
/// so a ceiling printed to 6 significant digits is still accepted.
pub const OPENING_PRICE_SLACK: f64 = 1e-6;

#[derive(Clone, Copy, Default)]
pub struct ProtocolOptions<'a> {
    /// Seed for the delivery order within each message batch.
    pub seed: u64,
    pub misreport: Option<&'a MisreportHook>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BargainConfig {
    /// Defaults to `max_i c_i/(d_i ln2)`, the price at which nobody buys.
    pub initial_price: Option<f64>,
    pub step: f64,
    pub epsilon: f64,
    /// Cap on price broadcasts, refinement probes included.
    pub max_rounds: usize,
    /// How many times the step may shrink tenfold after an overshoot.
    pub max_refinements: usize,
}

impl Default for BargainConfig {
    fn default() -> Self {
        Self {
            initial_price: None,
            step: 0.01,
            epsilon: 0.001,
            max_rounds: 1_000_000,
            max_refinements: 6,
        }
    }
}

pub fn run_direct(game: &GameInstance) -> Result<(Equilibrium, ProtocolTrace), ProtocolError> {
    run_direct_with(game, &ProtocolOptions::default())
}

pub fn run_direct_with(
    game: &GameInstance,
    opts: &ProtocolOptions<'_>,
) -> Result<(Equilibrium, ProtocolTrace), ProtocolError> {
    let mut session = Session::new(game, opts.seed, opts.misreport);
    let announced = session.collect_requests()?;
    if announced.peers().iter().all(|p| p.credits() == 0.0) {
        return Err(ProtocolError::EmptyDemand);
    }
    let eq = solve(&announced, &SolverConfig::default())?;
    let demands = session.price_round(eq.price)?;
    session.grant(&demands)?;
    let round = record(0, eq.price, session.roster(), demands);
    let trace = ProtocolTrace {
        kind: ProtocolKind::Direct,
        initial_price: eq.price,
        initial_step: None,
        epsilon: None,
        rounds: vec![round],
        refinements: Vec::new(),
        messages: session.messages(),
        equilibrium: Some(eq.clone()),
    };
    Ok((eq, trace))
}

pub fn run_bargaining(
    game: &GameInstance,
    cfg: &BargainConfig,
) -> Result<(Equilibrium, ProtocolTrace), ProtocolError> {
    run_bargaining_with(game, cfg, &ProtocolOptions::default())
}

pub fn run_bargaining_with(
    game: &GameInstance,
    cfg: &BargainConfig,
    opts: &ProtocolOptions<'_>,
) -> Result<(Equilibrium, ProtocolTrace), ProtocolError> {
    if !(cfg.step > 0.0 && cfg.step.is_finite()) {
        return Err(ProtocolError::InvalidConfig(format!(
            "step must be positive and finite, got {}",
            cfg.step
        )));
    }
    if !(cfg.epsilon > 0.0 && cfg.epsilon.is_finite()) {
        return Err(ProtocolError::InvalidConfig(format!(
            "epsilon must be positive and finite, got {}",
            cfg.epsilon
        )));
    }
    let mut session = Session::new(game, opts.seed, opts.misreport);
    let announced = session.collect_requests()?;
    if announced.peers().iter().all(|p| p.credits() == 0.0) {
        return Err(ProtocolError::EmptyDemand);
    }
    let ceiling = announced.max_reject_threshold();
    let initial_price = cfg.initial_price.unwrap_or(ceiling);
    if !(initial_price >= ceiling * (1.0 - OPENING_PRICE_SLACK) && initial_price.is_finite()) {
        return Err(ProtocolError::InvalidConfig(format!(
            "initial price {initial_price} is below the rejection ceiling {ceiling}"
        )));
    }

    let band = Band::new(&announced, cfg.epsilon);
    let mut trace = ProtocolTrace {
        kind: ProtocolKind::Bargaining,
        initial_price,
        initial_step: Some(cfg.step),
        epsilon: Some(cfg.epsilon),
        rounds: Vec::new(),
        refinements: Vec::new(),
        messages: 0,
        equilibrium: None,
    };
    let mut price = initial_price;
    let mut step = cfg.step;
    let mut broadcasts = 0usize;
    loop {
        if broadcasts >= cfg.max_rounds {
            trace.messages = session.messages();
            return Err(ProtocolError::MaxRounds {
                rounds: broadcasts,
                trace: Box::new(trace),
            });
        }
        let demands = session.price_round(price)?;
        broadcasts += 1;
        let rec = record(trace.rounds.len(), price, session.roster(), demands);
        match band.classify(rec.total_demand) {
            Position::Inside => {
                trace.rounds.push(rec);
                break;
            }
            Position::Above => {
                let last = trace.rounds.last().map(|r| (r.round, r.price));
                let Some((after_round, last_price)) = last.filter(|_| trace.refinements.len() < cfg.max_refinements) else {
                    let (price, total) = (rec.price, rec.total_demand);
                    trace.messages = session.messages();
                    return Err(ProtocolError::Overshoot {
                        price,
                        total,
                        capacity: band.capacity,
                        refinements: trace.refinements.len(),
                        trace: Box::new(trace),
                    });
                };
                step /= 10.0;
                trace.refinements.push(Refinement {
                    after_round,
                    probe: rec,
                    step,
                });
                price = last_price - step;
            }
            Position::Below => {
                let exhausted = band.everyone_saturated(rec.total_demand);
                let current = rec.price;
                trace.rounds.push(rec);
                if exhausted {
                    break;
                }
                price = current - step;
                if !(price > 0.0) {
                    trace.messages = session.messages();
                    return Err(ProtocolError::CapacityUnreachable {
                        price,
                        trace: Box::new(trace),
                    });
                }
            }
        }
    }

    let final_price = trace.rounds.last().expect("at least one round").price;
    let eq = Equilibrium::at_price(&announced, final_price)?;
    session.grant(&eq.allocation())?;
    trace.messages = session.messages();
    trace.equilibrium = Some(eq.clone());
    Ok((eq, trace))
}

fn record(round: usize, price: f64, roster: &[PeerId], demands: Vec<f64>) -> RoundRecord {
    let total_demand = demands.iter().sum();
    RoundRecord {
        round,
        price,
        demands: roster.iter().cloned().zip(demands).collect(),
        total_demand,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Position {
    Below,
    Inside,
    Above,
}

/// The acceptance band `|D − u| < epsilon` and the demand ceiling.
struct Band {
    capacity: f64,
    epsilon: f64,
    /// Sum of paying peers' capacities, in peer order.
    saturated_total: f64,
}

impl Band {
    fn new(game: &GameInstance, epsilon: f64) -> Self {
        Self {
            capacity: game.uploader_capacity(),
            epsilon,
            saturated_total: game
                .peers()
                .iter()
                .filter(|p| p.credits() > 0.0)
                .map(|p| p.capacity())
                .sum(),
        }
    }

    fn classify(&self, total: f64) -> Position {
        if (total - self.capacity).abs() < self.epsilon {
            Position::Inside
        } else if total > self.capacity {
            Position::Above
        } else {
            Position::Below
        }
    }

    /// Every paying peer already buys its full capacity, so lowering the
    /// price further cannot sell more.
    fn everyone_saturated(&self, total: f64) -> bool {
        total >= self.saturated_total
    }
}

/// Recomputes every reply from the best-response rule and every price from
/// the protocol's step rule. True iff the trace matches exactly.
pub fn replay(trace: &ProtocolTrace, game: &GameInstance) -> bool {
    let round_ok = |r: &RoundRecord, index: usize| {
        let mut total = 0.0;
        let demands_ok = r.round == index
            && r.demands.len() == game.peers().len()
            && r.demands.iter().zip(game.peers()).all(|((id, x), p)| {
                total += *x;
                id == p.id() && x.to_bits() == p.demand(r.price).to_bits()
            });
        demands_ok && r.price > 0.0 && total.to_bits() == r.total_demand.to_bits()
    };
    let equilibrium_ok = |price: f64| {
        Equilibrium::at_price(game, price).is_ok_and(|eq| trace.equilibrium.as_ref() == Some(&eq))
    };

    match trace.kind {
        ProtocolKind::Direct => {
            let Ok(eq) = solve(game, &SolverConfig::default()) else {
                return false;
            };
            trace.rounds.len() == 1
                && trace.refinements.is_empty()
                && trace.rounds[0].price.to_bits() == eq.price.to_bits()
                && trace.initial_price.to_bits() == eq.price.to_bits()
                && round_ok(&trace.rounds[0], 0)
                && trace.equilibrium.as_ref() == Some(&eq)
        }
        ProtocolKind::Bargaining => {
            let (Some(mut step), Some(epsilon)) = (trace.initial_step, trace.epsilon) else {
                return false;
            };
            let Some(last) = trace.rounds.last() else {
                return false;
            };
            if trace.rounds[0].price.to_bits() != trace.initial_price.to_bits()
                || trace.initial_price < game.max_reject_threshold() * (1.0 - OPENING_PRICE_SLACK)
            {
                return false;
            }
            let band = Band::new(game, epsilon);
            let mut refinements = trace.refinements.iter().peekable();
            for (i, r) in trace.rounds.iter().enumerate() {
                if !round_ok(r, i) {
                    return false;
                }
                let position = band.classify(r.total_demand);
                if i + 1 == trace.rounds.len() {
                    let stopped = position == Position::Inside
                        || (position == Position::Below && band.everyone_saturated(r.total_demand));
                    if !stopped {
                        return false;
                    }
                    break;
                }
                if position != Position::Below || band.everyone_saturated(r.total_demand) {
                    return false;
                }
                while let Some(refinement) = refinements.next_if(|f| f.after_round == i) {
                    let probe = &refinement.probe;
                    if probe.price.to_bits() != (r.price - step).to_bits()
                        || !round_ok(probe, i + 1)
                        || band.classify(probe.total_demand) != Position::Above
                    {
                        return false;
                    }
                    step /= 10.0;
                    if refinement.step.to_bits() != step.to_bits() {
                        return false;
                    }
                }
                if trace.rounds[i + 1].price.to_bits() != (r.price - step).to_bits() {
                    return false;
                }
            }
            refinements.next().is_none() && equilibrium_ok(last.price)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{total_demand, PeerProfile};
    use crate::presets;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::LN_2;

    fn game(u: f64, peers: &[(f64, f64)]) -> GameInstance {
        GameInstance::new(
            u,
            peers
                .iter()
                .enumerate()
                .map(|(i, &(c, d))| PeerProfile::new(format!("p{}", i + 1), c, d).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn example_config() -> BargainConfig {
        BargainConfig {
            initial_price: Some(288.539),
            step: 0.01,
            epsilon: 0.001,
            ..BargainConfig::default()
        }
    }

    #[test]
    fn direct_matches_solver_bit_for_bit() {
        let g = presets::example4_game();
        let (eq, trace) = run_direct(&g).unwrap();
        let solved = solve(&g, &SolverConfig::default()).unwrap();
        assert_eq!(eq, solved);
        assert_eq!(trace.rounds.len(), 1);
        assert!((eq.price - 206.099).abs() < 1e-3);
        for (x, want) in eq.allocation().iter().zip([0.8, 0.6, 0.4, 0.2]) {
            assert!((x - want).abs() < 1e-3);
        }
        assert!(replay(&trace, &g));
        // 4 requests, 4 broadcasts, 4 replies, 4 grants, 4 stream starts.
        assert_eq!(trace.messages, 20);
    }

    #[test]
    fn direct_single_peer() {
        let g = game(2.0, &[(400.0, 2.0)]);
        let (eq, trace) = run_direct(&g).unwrap();
        assert_eq!(trace.rounds.len(), 1);
        assert_eq!(eq.allocation(), vec![2.0]);
        assert!((eq.price - 400.0 / (4.0 * LN_2)).abs() < 1e-9);
    }

    #[test]
    fn direct_grants_and_starts_winners() {
        let g = game(30.0, &[(200.0, 100.0), (150.0, 100.0)]);
        let mut session = Session::new(&g, 3, None);
        let announced = session.collect_requests().unwrap();
        assert_eq!(announced, g);
        let eq = solve(&g, &SolverConfig::default()).unwrap();
        let demands = session.price_round(eq.price).unwrap();
        session.grant(&demands).unwrap();
        let state = session.streaming();
        assert_eq!(state[0].1, Some(eq.allocation()[0]));
        assert!(state[0].2);
        assert_eq!(state[1].1, Some(0.0));
        assert!(!state[1].2);
    }

    #[test]
    fn direct_aborts_on_empty_demand() {
        let g = game(1.0, &[(0.0, 1.0), (0.0, 2.0)]);
        assert!(matches!(run_direct(&g), Err(ProtocolError::EmptyDemand)));
        assert!(matches!(
            run_bargaining(&g, &BargainConfig::default()),
            Err(ProtocolError::EmptyDemand)
        ));
    }

    #[test]
    fn misreport_aborts() {
        let g = presets::example4_game();
        let hook = |id: &PeerId, _price: f64, honest: f64| {
            if id.as_str() == "p2" {
                honest * 1.5
            } else {
                honest
            }
        };
        let opts = ProtocolOptions {
            seed: 0,
            misreport: Some(&hook),
        };
        let err = run_direct_with(&g, &opts).unwrap_err();
        assert!(matches!(err, ProtocolError::InconsistentReply { ref peer, .. } if peer.as_str() == "p2"));
        // At the opening price every honest reply is 0 and 1.5·0 = 0, so
        // bargaining only notices once p2 starts buying.
        let err = run_bargaining_with(&g, &example_config(), &opts).unwrap_err();
        assert!(matches!(err, ProtocolError::InconsistentReply { .. }));
    }

    #[test]
    fn bargaining_reproduces_example_four() {
        let g = presets::example4_game();
        let (eq, trace) = run_bargaining(&g, &example_config()).unwrap();
        let target = 1000.0 / (7.0 * LN_2);
        assert!((eq.total_allocated() - 2.0).abs() < 0.001);
        assert!(trace.rounds.len() <= 8300, "{}", trace.rounds.len());
        assert!(trace.refinements.is_empty());
        assert_eq!(trace.rounds[0].price, 288.539);
        assert!(trace.rounds[0].total_demand < 1e-6);
        assert!(replay(&trace, &g));
        let bound = ((288.539 - target) / 0.01).floor() as usize + 1;
        assert!(trace.rounds.len() <= bound);
        // The protocol stops at the first price whose demand is within
        // epsilon of the capacity: the price where D = u − epsilon, rounded
        // down to the step grid.
        let band_edge = 1000.0 / ((2.0 - 0.001 + 5.0) * LN_2);
        assert!(eq.price <= band_edge && eq.price > band_edge - 0.01, "{}", eq.price);
        assert!(eq.price > target);
    }

    #[test]
    fn bargaining_default_opening_price() {
        let g = presets::example4_game();
        let cfg = BargainConfig::default();
        let (_, trace) = run_bargaining(&g, &cfg).unwrap();
        assert_eq!(trace.initial_price, 400.0 / (2.0 * LN_2));
        assert!((trace.initial_price - 288.539).abs() < 1e-3);
    }

    #[test]
    fn bargaining_single_peer() {
        let g = game(2.0, &[(400.0, 2.0)]);
        let (eq, trace) = run_bargaining(&g, &BargainConfig::default()).unwrap();
        // Demand reaches 2 − epsilon at 400/(3.999·ln2) ≈ 144.306.
        let band_edge = 400.0 / (3.999 * LN_2);
        assert!(eq.price <= band_edge && eq.price > band_edge - 0.01, "{}", eq.price);
        assert!((eq.price - 144.27).abs() < 0.04);
        assert!((eq.total_allocated() - 2.0).abs() < 0.001);
        assert!(replay(&trace, &g));
    }

    #[test]
    fn coarse_step_refines() {
        let g = presets::example4_game();
        let cfg = BargainConfig {
            step: 50.0,
            ..example_config()
        };
        let (eq, trace) = run_bargaining(&g, &cfg).unwrap();
        assert!(!trace.refinements.is_empty());
        assert!(!trace.diagnostics().is_empty());
        assert!((eq.total_allocated() - 2.0).abs() < 0.001);
        assert!(replay(&trace, &g));

        let disabled = BargainConfig {
            max_refinements: 0,
            ..cfg
        };
        let err = run_bargaining(&g, &disabled).unwrap_err();
        assert!(matches!(err, ProtocolError::Overshoot { refinements: 0, .. }));
        assert!(err.trace().is_some());
    }

    #[test]
    fn bargaining_errors() {
        let g = presets::example4_game();
        let few = BargainConfig {
            max_rounds: 10,
            ..example_config()
        };
        let err = run_bargaining(&g, &few).unwrap_err();
        assert!(matches!(err, ProtocolError::MaxRounds { rounds: 10, .. }));
        assert_eq!(err.trace().unwrap().rounds.len(), 10);

        for bad in [
            BargainConfig { step: 0.0, ..example_config() },
            BargainConfig { epsilon: -1.0, ..example_config() },
            BargainConfig { initial_price: Some(100.0), ..example_config() },
        ] {
            assert!(matches!(run_bargaining(&g, &bad), Err(ProtocolError::InvalidConfig(_))));
        }
    }

    #[test]
    fn bargaining_stops_when_everyone_saturates() {
        let g = game(10.0, &[(400.0, 2.0), (100.0, 1.0)]);
        let (eq, trace) = run_bargaining(&g, &BargainConfig { step: 1.0, ..BargainConfig::default() }).unwrap();
        assert_eq!(eq.total_allocated(), 3.0);
        let floor = solve(&g, &SolverConfig::default()).unwrap().price;
        assert!(eq.price <= floor && eq.price > floor - 1.0);
        assert!(replay(&trace, &g));
    }

    #[test]
    fn capacity_unreachable() {
        // A huge step overshoots zero before anything sells.
        let g = presets::example4_game();
        let cfg = BargainConfig {
            step: 1000.0,
            ..example_config()
        };
        assert!(matches!(
            run_bargaining(&g, &cfg),
            Err(ProtocolError::CapacityUnreachable { .. })
        ));
    }

    #[test]
    fn replay_detects_tampering() {
        let g = presets::example4_game();
        let (_, trace) = run_bargaining(&g, &example_config()).unwrap();
        let mut tampered = trace.clone();
        let last = tampered.rounds.len() - 1;
        tampered.rounds[last].demands[1].1 += 1e-6;
        assert!(!replay(&tampered, &g));

        let mut skipped = trace.clone();
        skipped.rounds.remove(5);
        assert!(!replay(&skipped, &g));

        let (_, direct) = run_direct(&g).unwrap();
        let mut moved = direct.clone();
        moved.rounds[0].price *= 1.0 + 1e-12;
        assert!(!replay(&moved, &g));
        assert!(!replay(&direct, &g.with_uploader_capacity(3.0).unwrap()));
    }

    #[test]
    fn delivery_seed_does_not_change_results() {
        let g = presets::example1_game(300.0);
        let runs: Vec<_> = (0..5)
            .map(|seed| {
                let opts = ProtocolOptions { seed, misreport: None };
                let direct = run_direct_with(&g, &opts).unwrap();
                let bargain = run_bargaining_with(&g, &BargainConfig { step: 0.001, epsilon: 0.05, ..BargainConfig::default() }, &opts).unwrap();
                (direct, bargain)
            })
            .collect();
        for r in &runs[1..] {
            assert_eq!(r.0, runs[0].0);
            assert_eq!(r.1, runs[0].1);
        }
    }

    fn random_game(rng: &mut ChaCha8Rng) -> GameInstance {
        let n = rng.random_range(1..=6);
        let peers: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.random_range(1.0..500.0), rng.random_range(0.1..5.0)))
            .collect();
        let total: f64 = peers.iter().map(|p| p.1).sum();
        game(rng.random_range(0.05..0.95) * total, &peers)
    }

    #[test]
    fn implementations_agree_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xBA26);
        for case in 0..120 {
            let g = random_game(&mut rng);
            let (direct, _) = run_direct(&g).unwrap();
            let mu = direct.price;
            // A fractional step count keeps μ* off the price grid.
            let step = (g.max_reject_threshold() - mu) / 1999.5;
            // Any price whose demand is inside the band lies below μ* + step.
            let epsilon = 0.5 * (g.uploader_capacity() - total_demand(&g, mu + step));
            let cfg = BargainConfig {
                step,
                epsilon,
                ..BargainConfig::default()
            };
            let (bargained, trace) = run_bargaining(&g, &cfg).unwrap();
            assert!((bargained.price - mu).abs() <= step + 1e-9, "case {case}: {} vs {mu}", bargained.price);
            let low = bargained.price.min(mu);
            for (p, (a, b)) in g.peers().iter().zip(bargained.allocation().iter().zip(direct.allocation())) {
                let slope = p.credits() / (low * low * LN_2);
                assert!((a - b).abs() <= slope * (bargained.price - mu).abs() + 1e-9, "case {case}");
            }
            assert!(replay(&trace, &g), "case {case}");
            if trace.refinements.is_empty() {
                // One round per step down to μ*, plus at most one below it.
                let mut bound = ((trace.initial_price - mu) / step).floor() as usize + 1;
                if bargained.price < mu {
                    bound += 1;
                }
                assert!(trace.rounds.len() <= bound, "case {case}: {} > {bound}", trace.rounds.len());
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn bargaining_trace_is_monotone(seed in any::<u64>(), step_frac in 1e-3f64..5e-2, eps_frac in 1e-3f64..5e-2) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_game(&mut rng);
            let ceiling = g.max_reject_threshold();
            let cfg = BargainConfig {
                step: step_frac * ceiling,
                epsilon: eps_frac * g.uploader_capacity(),
                ..BargainConfig::default()
            };
            if let Ok((_, trace)) = run_bargaining(&g, &cfg) {
                for w in trace.rounds.windows(2) {
                    prop_assert!(w[1].price < w[0].price);
                    prop_assert!(w[1].total_demand >= w[0].total_demand);
                }
                prop_assert!(replay(&trace, &g));
            }
        }
    }
}
