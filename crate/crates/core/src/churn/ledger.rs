use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::model::{Equilibrium, PeerId};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transaction {
    pub time: f64,
    pub payer: PeerId,
    pub payee: PeerId,
    pub amount: f64,
}

/// Credit balances of every peer seen so far, the uploader included.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Ledger {
    balances: BTreeMap<PeerId, f64>,
    log: Vec<Transaction>,
    exhausted: BTreeSet<PeerId>,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Opens an account unless one already exists. Returns the balance.
    pub fn open_account(&mut self, id: &PeerId, credits: f64) -> f64 {
        *self.balances.entry(id.clone()).or_insert(credits)
    }

    pub fn balance(&self, id: &PeerId) -> Option<f64> {
        self.balances.get(id).copied()
    }

    pub fn balances(&self) -> &BTreeMap<PeerId, f64> {
        &self.balances
    }

    pub fn log(&self) -> &[Transaction] {
        &self.log
    }

    /// Peers whose charge was ever cut short by an empty balance.
    pub fn exhausted(&self) -> &BTreeSet<PeerId> {
        &self.exhausted
    }

    pub fn total(&self) -> f64 {
        self.balances.values().sum()
    }

    fn transfer(&mut self, time: f64, payer: &PeerId, payee: &PeerId, charge: f64) {
        let available = self.balances.get(payer).copied().unwrap_or(0.0);
        let amount = if charge > available {
            self.exhausted.insert(payer.clone());
            available
        } else {
            charge
        };
        if amount <= 0.0 {
            return;
        }
        *self.balances.entry(payer.clone()).or_insert(0.0) -= amount;
        *self.balances.entry(payee.clone()).or_insert(0.0) += amount;
        self.log.push(Transaction {
            time,
            payer: payer.clone(),
            payee: payee.clone(),
            amount,
        });
    }
}

/// Charges every downloader `μ·x_i` and pays the uploader. A payer that
/// cannot cover the charge hands over its whole balance and is flagged.
pub fn apply_transaction(
    mut ledger: Ledger,
    eq: &Equilibrium,
    uploader: &PeerId,
    time: f64,
) -> Ledger {
    ledger.open_account(uploader, 0.0);
    for outcome in &eq.outcomes {
        let charge = eq.price * outcome.bandwidth;
        if charge > 0.0 {
            ledger.transfer(time, &outcome.peer, uploader, charge);
        }
    }
    ledger
}
