use std::f64::consts::LN_2;

use proptest::prelude::*;

use credit_game::churn::{run_scenario, Scenario};
use credit_game::oracle::revenue_maximizing_price;
use credit_game::protocol::{replay, run_bargaining, run_direct, BargainConfig};
use credit_game::{
    aggregate_demand, best_response, presets, solve, DemandCurve, GameInstance, PeerProfile,
    RegionLabel, SolverConfig,
};

fn arb_game() -> impl Strategy<Value = GameInstance> {
    (
        prop::collection::vec((1.0..500.0f64, 0.5..5.0f64), 1..=6),
        0.02..0.98f64,
    )
        .prop_map(|(peers, frac)| {
            let total: f64 = peers.iter().map(|p| p.1).sum();
            let peers = peers
                .into_iter()
                .enumerate()
                .map(|(i, (c, d))| PeerProfile::new(format!("p{i}"), c, d).unwrap())
                .collect();
            GameInstance::new(total * frac, peers).unwrap()
        })
}

proptest! {
    #[test]
    fn best_response_stays_in_range(c in 0.0..1e4f64, d in 0.01..100.0f64, mu in 1e-3..1e4f64) {
        let peer = PeerProfile::new("a", c, d).unwrap();
        let x = best_response(&peer, mu).unwrap();
        prop_assert!((0.0..=d).contains(&x));
    }

    #[test]
    fn demand_is_nonincreasing(g in arb_game(), a in 1e-3..500.0f64, b in 1e-3..500.0f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(aggregate_demand(&g, lo).unwrap() >= aggregate_demand(&g, hi).unwrap());
        let curve = DemandCurve::build(&g);
        prop_assert!((curve.evaluate(lo) - aggregate_demand(&g, lo).unwrap()).abs() < 1e-9 * g.total_capacity());
    }

    #[test]
    fn solve_sells_all_capacity(g in arb_game()) {
        let eq = solve(&g, &SolverConfig::default()).unwrap();
        let u = g.uploader_capacity();
        prop_assert!((eq.total_allocated() - u).abs() <= 1e-9 * u);
        prop_assert!(((eq.revenue - eq.price * eq.total_allocated()) / eq.revenue).abs() < 1e-12);
        // No higher price sells the same capacity.
        let above = eq.price * (1.0 + 1e-9);
        prop_assert!(aggregate_demand(&g, above).unwrap() < u);
    }

    #[test]
    fn direct_protocol_matches_solve(g in arb_game()) {
        let eq = solve(&g, &SolverConfig::default()).unwrap();
        let (got, trace) = run_direct(&g).unwrap();
        prop_assert_eq!(&got, &eq);
        prop_assert!(replay(&trace, &g));
    }

    #[test]
    fn exact_revenue_maximum_bounds_solve(g in arb_game()) {
        let eq = solve(&g, &SolverConfig::default()).unwrap();
        let (_, best) = revenue_maximizing_price(&g).unwrap();
        prop_assert!(best >= eq.revenue * (1.0 - 1e-9));
    }
}

#[test]
fn example_four_end_to_end() {
    let g = presets::example4_game();
    let eq = solve(&g, &SolverConfig::default()).unwrap();
    assert_eq!(eq.region, RegionLabel::Balance);
    assert!((eq.price - 1000.0 / (7.0 * LN_2)).abs() < 1e-9);

    let (bargained, trace) = run_bargaining(&g, &BargainConfig::default()).unwrap();
    assert!(replay(&trace, &g));
    assert!((bargained.total_allocated() - 2.0).abs() < 1e-3);
    assert!(bargained.price > eq.price);
}

#[test]
fn scenario_json_round_trip() {
    let s = presets::example5_scenario();
    let text = serde_json::to_string(&s).unwrap();
    let back: Scenario = serde_json::from_str(&text).unwrap();
    assert_eq!(back, s);
    let a = run_scenario(&s).unwrap();
    let b = run_scenario(&back).unwrap();
    assert_eq!(a.timeline.epochs.len(), b.timeline.epochs.len());
    for (x, y) in a.timeline.epochs.iter().zip(&b.timeline.epochs) {
        assert_eq!(x.equilibrium, y.equilibrium);
    }
}

#[test]
fn instance_json_round_trip() {
    let g = presets::example1_game(300.0);
    let back: GameInstance = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
    assert_eq!(back, g);
    let invalid = r#"{"uploader_capacity": 1, "peers": [{"id": "a", "credits": 1, "capacity": 0}]}"#;
    assert!(serde_json::from_str::<GameInstance>(invalid).is_err());
}
