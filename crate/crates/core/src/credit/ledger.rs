use std::collections::BTreeMap;

use super::{Credit, CurveTable, YieldCurve};
use crate::error::{Error, Result};
use crate::model::{EntityId, Transaction, TransactionSet};

/// Account balance of one entity versus another.
///
/// The value is `anchor + offset`, where the anchor is either zero or the
/// limit balance `±b/a` of some yield curve. While a relationship keeps
/// repeating one gift the balance stays anchored at that gift's limit and
/// the (shrinking) offset carries the remaining gap with full precision.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Balance {
    anchor: Option<Anchor>,
    offset: Credit,
}

/// The exact real `sign * nominal / coefficient`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Anchor {
    coefficient: f64,
    nominal: f64,
    sign: f64,
}

impl Anchor {
    fn value(&self) -> f64 {
        self.sign * self.nominal / self.coefficient
    }
}

impl Balance {
    pub fn from_f64(x: f64) -> Self {
        Self {
            anchor: None,
            offset: Credit::from_f64(x),
        }
    }

    pub fn value(&self) -> f64 {
        match self.anchor {
            Some(anchor) => anchor.value() + self.offset.to_f64(),
            None => self.offset.to_f64(),
        }
    }

    pub(crate) fn to_credit(self) -> Credit {
        match self.anchor {
            Some(anchor) => Credit::from_f64(anchor.value()) + self.offset,
            None => self.offset,
        }
    }

    pub(crate) fn offset(&self) -> Credit {
        self.offset
    }

    /// Whether the balance is measured from `curve`'s limit, seen from the
    /// side given by `sign`.
    pub(crate) fn is_anchored_at(&self, curve: &YieldCurve, sign: f64) -> bool {
        matches!(self.anchor, Some(a) if a.sign == sign
            && a.coefficient == curve.coefficient()
            && a.nominal == curve.nominal())
    }

    /// The same balance seen from the other entity.
    pub fn reversed(self) -> Self {
        Self {
            anchor: self.anchor.map(|a| Anchor { sign: -a.sign, ..a }),
            offset: -self.offset,
        }
    }

    /// Shifts the balance by `delta`, re-expressing it relative to `anchor`
    /// (a curve limit seen from side `sign`) when one is given.
    fn shifted(self, delta: Credit, anchor: Option<(YieldCurve, f64)>) -> Self {
        let Some((curve, sign)) = anchor else {
            return Self {
                anchor: None,
                offset: self.to_credit() + delta,
            };
        };
        if self.is_anchored_at(&curve, sign) {
            return Self {
                anchor: self.anchor,
                offset: self.offset + delta,
            };
        }
        let target = Anchor {
            coefficient: curve.coefficient(),
            nominal: curve.nominal(),
            sign,
        };
        let old_anchor = self.anchor.map_or(0.0, |a| a.value());
        Self {
            anchor: Some(target),
            offset: Credit::from_f64(old_anchor - target.value()) + self.offset + delta,
        }
    }
}

/// Pairwise account balances.
///
/// Only `A(P, Q)` with `P < Q` is stored; `A(Q, P)` is read as its negation,
/// so `A(P, Q) + A(Q, P) = 0` holds exactly. Unset pairs are at zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ledger {
    balances: BTreeMap<(EntityId, EntityId), Balance>,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Balance of `p` versus `q`.
    pub fn balance(&self, p: &EntityId, q: &EntityId) -> Balance {
        if p == q {
            return Balance::default();
        }
        if p < q {
            self.stored(p, q)
        } else {
            self.stored(q, p).reversed()
        }
    }

    /// Value of `A(p, q)`.
    pub fn get(&self, p: &EntityId, q: &EntityId) -> f64 {
        if p < q {
            self.stored(p, q).value()
        } else if p > q {
            -self.stored(q, p).value()
        } else {
            0.0
        }
    }

    fn stored(&self, lo: &EntityId, hi: &EntityId) -> Balance {
        self.balances
            .get(&(lo.clone(), hi.clone()))
            .copied()
            .unwrap_or_default()
    }

    /// Sets `A(p, q) = value` (and so `A(q, p) = -value`).
    pub fn set(&mut self, p: &EntityId, q: &EntityId, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::NonFiniteBalance(value));
        }
        if p == q {
            return Err(Error::SelfBalance(p.clone()));
        }
        let (key, v) = if p < q {
            ((p.clone(), q.clone()), value)
        } else {
            ((q.clone(), p.clone()), -value)
        };
        self.balances.insert(key, Balance::from_f64(v));
        Ok(())
    }

    /// Stored pairs `(P, Q)` with `P < Q` and the value of `A(P, Q)`.
    pub fn pairs(&self) -> impl Iterator<Item = (&EntityId, &EntityId, f64)> {
        self.balances.iter().map(|((p, q), b)| (p, q, b.value()))
    }

    /// Yield of `t` as valued by `viewpoint`: the supplier's clamped curve
    /// value, its negation for the recipient, zero for anyone else.
    pub fn transaction_yield(
        &self,
        t: &Transaction,
        curves: &CurveTable,
        viewpoint: &EntityId,
    ) -> Result<Credit> {
        let curve = curves.get(t)?;
        if viewpoint == t.supplier() {
            Ok(self.supplier_yield(t, curve))
        } else if viewpoint == t.recipient() {
            Ok(-self.supplier_yield(t, curve))
        } else {
            Ok(Credit::ZERO)
        }
    }

    pub(crate) fn supplier_yield(&self, t: &Transaction, curve: &YieldCurve) -> Credit {
        curve.yield_at(&self.balance(t.supplier(), t.recipient()))
    }

    /// Applies one step's transactions. Every yield is valued against this
    /// (opening) ledger; the result is a new ledger.
    pub fn apply_transactions(&self, set: &TransactionSet, curves: &CurveTable) -> Result<Ledger> {
        struct PairUpdate<'a> {
            delta: Credit,
            only: Option<&'a Transaction>,
            mixed: bool,
        }
        let mut updates: BTreeMap<(EntityId, EntityId), PairUpdate> = BTreeMap::new();
        for (t, n) in set.transactions().iter() {
            let curve = curves.get(t)?;
            let y = self.supplier_yield(t, curve);
            let lo_supplies = t.supplier() < t.recipient();
            let key = if lo_supplies {
                (t.supplier().clone(), t.recipient().clone())
            } else {
                (t.recipient().clone(), t.supplier().clone())
            };
            let mut contribution = Credit::ZERO;
            for _ in 0..n {
                contribution += y;
            }
            if !lo_supplies {
                contribution = -contribution;
            }
            let entry = updates.entry(key).or_insert(PairUpdate {
                delta: Credit::ZERO,
                only: None,
                mixed: false,
            });
            entry.delta += contribution;
            match entry.only {
                None if !entry.mixed => entry.only = Some(t),
                Some(prev) if prev != t => {
                    entry.only = None;
                    entry.mixed = true;
                }
                _ => {}
            }
        }

        let mut next = self.clone();
        for ((lo, hi), update) in updates {
            let anchor = update.only.and_then(|t| {
                let curve = curves.get(t).ok()?;
                if curve.coefficient() == 0.0 {
                    return None;
                }
                let sign = if t.supplier() == &lo { 1.0 } else { -1.0 };
                Some((*curve, sign))
            });
            let current = next.stored(&lo, &hi);
            next.balances
                .insert((lo, hi), current.shifted(update.delta, anchor));
        }
        Ok(next)
    }
}
