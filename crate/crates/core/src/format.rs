//! Fixed numeric formatting and the CSV layouts for traces, timelines and
//! ledgers.
//!
//! Numbers are printed with 6 significant digits, ties rounded to even,
//! trailing zeros dropped. Magnitudes outside `[1e-5, 1e6)` switch to
//! scientific notation.

use std::io::Write;

use crate::churn::{Epoch, Ledger, Timeline};
use crate::protocol::ProtocolTrace;

pub const SIGNIFICANT_DIGITS: usize = 6;

pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..6).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// One row per (round, peer) and a closing `final` row with the terminal
/// price and total demand.
pub fn write_trace_csv<W: Write>(out: W, trace: &ProtocolTrace) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["round", "price", "peer_id", "demand", "total_demand"])?;
    for r in &trace.rounds {
        for (id, x) in &r.demands {
            w.write_record([
                r.round.to_string(),
                num(r.price),
                id.to_string(),
                num(*x),
                num(r.total_demand),
            ])?;
        }
    }
    if let Some(last) = trace.last_round() {
        w.write_record([
            "final".to_string(),
            num(last.price),
            String::new(),
            String::new(),
            num(last.total_demand),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per (epoch, peer) ordered by epoch start then peer id. Empty
/// epochs get a single row with blank price and peer columns.
pub fn write_timeline_csv<W: Write>(out: W, timeline: &Timeline) -> csv::Result<()> {
    write_timeline_csv_with(out, timeline, &[], |_| Vec::new())
}

/// [`write_timeline_csv`] with extra per-epoch columns appended to every row.
pub fn write_timeline_csv_with<W, F>(
    out: W,
    timeline: &Timeline,
    extra_header: &[&str],
    mut extra: F,
) -> csv::Result<()>
where
    W: Write,
    F: FnMut(&Epoch) -> Vec<String>,
{
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["epoch_start", "epoch_end", "price", "peer_id", "allocation", "utility"];
    header.extend_from_slice(extra_header);
    w.write_record(&header)?;
    for epoch in &timeline.epochs {
        let (start, end) = (num(epoch.start), opt(epoch.end));
        let tail = extra(epoch);
        match &epoch.equilibrium {
            Some(eq) => {
                let mut outcomes: Vec<_> = eq.outcomes.iter().collect();
                outcomes.sort_by(|a, b| a.peer.cmp(&b.peer));
                for o in outcomes {
                    let mut row = vec![
                        start.clone(),
                        end.clone(),
                        num(eq.price),
                        o.peer.to_string(),
                        num(o.bandwidth),
                        num(o.utility),
                    ];
                    row.extend(tail.iter().cloned());
                    w.write_record(&row)?;
                }
            }
            None => {
                let mut row = vec![start, end, String::new(), String::new(), String::new(), String::new()];
                row.extend(tail);
                w.write_record(&row)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_ledger_csv<W: Write>(out: W, ledger: &Ledger) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time", "payer", "payee", "amount"])?;
    for t in ledger.log() {
        w.write_record([num(t.time), t.payer.to_string(), t.payee.to_string(), num(t.amount)])?;
    }
    w.flush()?;
    Ok(())
}
