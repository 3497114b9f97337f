//! CSV layouts for solve reports and sweeps.

use std::io::Write;

use credit_game::format::num;
use credit_game::oracle::{grid_search_price, GridSpec};
use credit_game::{Equilibrium, GameInstance, OracleError};

/// Grid-oracle cross-check of one solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleCheck {
    pub price: f64,
    pub agree: bool,
}

/// Runs the grid oracle at its default window and resolution. The prices
/// agree when they are at most one grid cell apart.
pub fn oracle_check(game: &GameInstance, eq: &Equilibrium) -> Result<OracleCheck, OracleError> {
    let grid = GridSpec::default_for(game)?;
    let (price, _) = grid_search_price(game, &grid)?;
    Ok(OracleCheck {
        price,
        agree: (price - eq.price).abs() <= grid.resolution,
    })
}

pub fn write_solve<W: Write>(
    out: W,
    game: &GameInstance,
    eq: &Equilibrium,
    oracle: Option<OracleCheck>,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "peer_id", "credits", "capacity", "allocation", "utility", "price", "revenue", "region",
    ];
    if oracle.is_some() {
        header.extend(["oracle_price", "oracle_agree"]);
    }
    w.write_record(&header)?;
    for (peer, outcome) in game.peers().iter().zip(&eq.outcomes) {
        let mut row = vec![
            peer.id().to_string(),
            num(peer.credits()),
            num(peer.capacity()),
            num(outcome.bandwidth),
            num(outcome.utility),
            num(eq.price),
            num(eq.revenue),
            eq.region.as_str().to_string(),
        ];
        if let Some(check) = oracle {
            row.extend([num(check.price), check.agree.to_string()]);
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Best responses along a price grid, one row per (price, peer).
pub fn write_price_sweep<W: Write>(out: W, game: &GameInstance, prices: &[f64]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["price", "peer_id", "credits", "capacity", "allocation"])?;
    for &price in prices {
        for peer in game.peers() {
            w.write_record([
                num(price),
                peer.id().to_string(),
                num(peer.credits()),
                num(peer.capacity()),
                num(peer.demand(price)),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One solved point of a capacity sweep; `None` when the capacity is zero
/// and nothing is sold.
pub struct CapacityPoint {
    pub capacity: f64,
    pub solved: Option<(GameInstance, Equilibrium, Option<OracleCheck>)>,
}

pub fn write_capacity_sweep<W: Write>(
    out: W,
    base: &GameInstance,
    points: &[CapacityPoint],
    with_oracle: bool,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "uploader_capacity", "price", "peer_id", "credits", "capacity", "allocation", "region",
    ];
    if with_oracle {
        header.extend(["oracle_price", "oracle_agree"]);
    }
    w.write_record(&header)?;
    for point in points {
        for (i, peer) in base.peers().iter().enumerate() {
            let mut row = vec![num(point.capacity)];
            match &point.solved {
                Some((_, eq, check)) => {
                    row.extend([
                        num(eq.price),
                        peer.id().to_string(),
                        num(peer.credits()),
                        num(peer.capacity()),
                        num(eq.outcomes[i].bandwidth),
                        eq.region.as_str().to_string(),
                    ]);
                    if with_oracle {
                        match check {
                            Some(c) => row.extend([num(c.price), c.agree.to_string()]),
                            None => row.extend([String::new(), String::new()]),
                        }
                    }
                }
                None => {
                    row.extend([
                        String::new(),
                        peer.id().to_string(),
                        num(peer.credits()),
                        num(peer.capacity()),
                        num(0.0),
                        String::new(),
                    ]);
                    if with_oracle {
                        row.extend([String::new(), String::new()]);
                    }
                }
            }
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}
