use std::collections::BTreeMap;

use super::{Balance, Credit};
use crate::error::{Error, Result};
use crate::model::Transaction;

/// Linear yield curve `y = max(0, -a*x + b)` of a supplier towards one
/// recipient, where `x` is the supplier's balance with that recipient.
///
/// `a` is the yield coefficient (how quickly faith in settlement is lost)
/// and `b` the nominal value (the yield at a neutral balance).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YieldCurve {
    coefficient: f64,
    nominal: f64,
}

impl YieldCurve {
    pub fn new(coefficient: f64, nominal: f64) -> Result<Self> {
        if !(coefficient.is_finite() && (0.0..1.0).contains(&coefficient)) {
            return Err(Error::CoefficientOutOfRange(coefficient));
        }
        if !(nominal.is_finite() && nominal >= 0.0) {
            return Err(Error::NegativeNominal(nominal));
        }
        Ok(Self {
            coefficient,
            nominal,
        })
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn nominal(&self) -> f64 {
        self.nominal
    }

    /// Yield at balance `x`, clamped at zero past the zero crossing.
    pub fn eval(&self, x: f64) -> f64 {
        (-self.coefficient * x + self.nominal).max(0.0)
    }

    /// The balance approached by repeating the same gift forever, `b / a`.
    pub fn limit_balance(&self) -> Result<f64> {
        if self.coefficient == 0.0 {
            return Err(Error::NoFiniteLimit);
        }
        Ok(self.nominal / self.coefficient)
    }

    /// Yield at a ledger balance seen from the supplier's side.
    ///
    /// When the balance is anchored at this curve's limit the yield is
    /// `a * gap`, which keeps full relative precision however close to the
    /// limit the balance has crept.
    pub fn yield_at(&self, balance: &Balance) -> Credit {
        if self.coefficient == 0.0 {
            return Credit::from_f64(self.nominal);
        }
        let raw = if balance.is_anchored_at(self, 1.0) {
            -(balance.offset() * self.coefficient)
        } else {
            Credit::from_f64(self.nominal) - balance.to_credit() * self.coefficient
        };
        raw.max(Credit::ZERO)
    }
}

/// One yield curve per (supplier, good, recipient).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CurveTable {
    curves: BTreeMap<Transaction, YieldCurve>,
}

impl CurveTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets the curve for `transaction`, returning any curve it replaces.
    pub fn insert(&mut self, transaction: Transaction, curve: YieldCurve) -> Option<YieldCurve> {
        self.curves.insert(transaction, curve)
    }

    pub fn get(&self, transaction: &Transaction) -> Result<&YieldCurve> {
        self.curves
            .get(transaction)
            .ok_or_else(|| Error::MissingCurve(transaction.clone()))
    }

    pub fn contains(&self, transaction: &Transaction) -> bool {
        self.curves.contains_key(transaction)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Transaction, &YieldCurve)> {
        self.curves.iter()
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }
}

impl FromIterator<(Transaction, YieldCurve)> for CurveTable {
    fn from_iter<I: IntoIterator<Item = (Transaction, YieldCurve)>>(iter: I) -> Self {
        Self {
            curves: iter.into_iter().collect(),
        }
    }
}
