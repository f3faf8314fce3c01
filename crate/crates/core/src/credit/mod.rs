//! Yield curves and the pairwise account-balance ledger.
//!
//! A gift from `P` to `Q` is worth, to `P`, the present value of its future
//! settlement. That value depends only on the balance `A(P, Q)` and falls as
//! the balance grows (diminishing returns). Yields are competible: the
//! recipient values the gift at minus the supplier's yield, so every
//! transaction moves `A(P, Q)` and `A(Q, P)` by opposite amounts.

mod amount;
mod curve;
mod ledger;

pub use amount::Credit;
pub use curve::{CurveTable, YieldCurve};
pub use ledger::{Balance, Ledger};

use crate::error::Result;
use crate::model::{EntityId, Transaction, TransactionSet};

/// `max(0, -a*x + b)`.
pub fn eval_yield(curve: &YieldCurve, balance: f64) -> f64 {
    curve.eval(balance)
}

pub fn transaction_yield(
    t: &Transaction,
    ledger: &Ledger,
    curves: &CurveTable,
    viewpoint: &EntityId,
) -> Result<Credit> {
    ledger.transaction_yield(t, curves, viewpoint)
}

pub fn apply_transactions(ledger: &Ledger, set: &TransactionSet, curves: &CurveTable) -> Result<Ledger> {
    ledger.apply_transactions(set, curves)
}

pub fn limit_balance(curve: &YieldCurve) -> Result<f64> {
    curve.limit_balance()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::model::GoodId;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn e(s: &str) -> EntityId {
        EntityId::new(s).unwrap()
    }

    fn t(p: &str, good: &str, q: &str) -> Transaction {
        Transaction::new(&e(p), &GoodId::new(good).unwrap(), &e(q)).unwrap()
    }

    fn curve(a: f64, b: f64) -> YieldCurve {
        YieldCurve::new(a, b).unwrap()
    }

    #[test]
    fn curve_construction_validates_range() {
        assert!(YieldCurve::new(0.0, 0.0).is_ok());
        assert_eq!(YieldCurve::new(1.0, 1.0), Err(Error::CoefficientOutOfRange(1.0)));
        assert_eq!(YieldCurve::new(1.2, 1.0), Err(Error::CoefficientOutOfRange(1.2)));
        assert!(YieldCurve::new(-0.1, 1.0).is_err());
        assert_eq!(YieldCurve::new(0.5, -1.0), Err(Error::NegativeNominal(-1.0)));
        assert!(YieldCurve::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn eval_examples() {
        let c = curve(0.5, 1.0);
        assert_eq!(eval_yield(&c, 0.0), 1.0);
        assert_eq!(eval_yield(&c, 2.0), 0.0);
        assert_eq!(eval_yield(&c, 3.0), 0.0);
        // Hand evaluation: -0.5 * 1 + 1.
        assert_eq!(eval_yield(&c, 1.0), 0.5);
    }

    #[test]
    fn limit_balance_examples() {
        assert_eq!(limit_balance(&curve(0.5, 1.0)), Ok(2.0));
        assert_eq!(limit_balance(&curve(0.25, 1.0)), Ok(4.0));
        assert_eq!(limit_balance(&curve(0.5, 0.0)), Ok(0.0));
        assert_eq!(limit_balance(&curve(0.0, 1.0)), Err(Error::NoFiniteLimit));
    }

    #[test]
    fn limit_balance_is_approached_by_repetition() {
        // Oracle: 50 plain-f64 steps of x <- x + y(x).
        for (a, b, limit) in [(0.5, 1.0, 2.0), (0.25, 1.0, 4.0)] {
            let c = curve(a, b);
            let mut x = 0.0;
            for _ in 0..50 {
                x += c.eval(x);
            }
            assert!((x - limit).abs() < 1e-5);
            assert_eq!(c.limit_balance().unwrap(), limit);
        }
    }

    #[test]
    fn viewpoint_signs() {
        let tx = t("P", "a", "Q");
        let curves: CurveTable = [(tx.clone(), curve(0.5, 1.0))].into_iter().collect();
        let ledger = Ledger::new();
        let y = |v: &str| transaction_yield(&tx, &ledger, &curves, &e(v)).unwrap().to_f64();
        assert_eq!(y("P"), 1.0);
        assert_eq!(y("Q"), -1.0);
        assert_eq!(y("R"), 0.0);
        assert_eq!(
            transaction_yield(&t("Q", "a", "P"), &ledger, &curves, &e("P")),
            Err(Error::MissingCurve(t("Q", "a", "P")))
        );
    }

    #[test]
    fn apply_examples() {
        let pq = t("P", "a", "Q");
        let qp = t("Q", "b", "P");
        let curves: CurveTable = [(pq.clone(), curve(0.5, 1.0)), (qp.clone(), curve(0.5, 2.0))]
            .into_iter()
            .collect();
        let zero = Ledger::new();

        let one = apply_transactions(&zero, &[pq.clone()].into_iter().collect(), &curves).unwrap();
        assert_eq!(one.get(&e("P"), &e("Q")), 1.0);
        assert_eq!(one.get(&e("Q"), &e("P")), -1.0);

        let same = apply_transactions(&zero, &TransactionSet::default(), &curves).unwrap();
        assert_eq!(same, zero);

        // Both yields valued on the opening ledger: +1 for P's gift, -2 for Q's.
        let both = apply_transactions(&zero, &[pq, qp].into_iter().collect(), &curves).unwrap();
        assert_eq!(both.get(&e("P"), &e("Q")), -1.0);
    }

    #[test]
    fn geometric_decay_of_repeated_gift() {
        let tx = t("P", "a", "Q");
        for (a, b, x0) in [(0.5, 1.0, 0.0), (0.3, 2.0, -1.0), (0.05, 7.0, 3.0)] {
            let c = curve(a, b);
            let curves: CurveTable = [(tx.clone(), c)].into_iter().collect();
            let mut ledger = Ledger::new();
            ledger.set(&e("P"), &e("Q"), x0).unwrap();
            let set: TransactionSet = [tx.clone()].into_iter().collect();
            let y1 = c.eval(x0);
            let mut prev: Option<f64> = None;
            for k in 1..=50 {
                let y = ledger.transaction_yield(&tx, &curves, &e("P")).unwrap().to_f64();
                let closed = (1.0 - a).powi(k - 1) * y1;
                assert!(((y - closed) / closed).abs() < 1e-9, "k={k} y={y} closed={closed}");
                if let Some(p) = prev {
                    assert!((y - (1.0 - a) * p).abs() <= 1e-9 * y);
                }
                prev = Some(y);
                ledger = apply_transactions(&ledger, &set, &curves).unwrap();
            }
        }
    }

    #[test]
    fn anchored_balance_keeps_decaying_far_past_f64() {
        let tx = t("P", "a", "Q");
        let c = curve(0.3, 1.0);
        let curves: CurveTable = [(tx.clone(), c)].into_iter().collect();
        let set: TransactionSet = [tx.clone()].into_iter().collect();
        let mut ledger = Ledger::new();
        let first = ledger.supplier_yield(&tx, &c);
        for _ in 0..5000 {
            ledger = apply_transactions(&ledger, &set, &curves).unwrap();
        }
        let y = ledger.supplier_yield(&tx, &c);
        assert!(y.is_positive());
        let expected = first.ln() + 5000.0 * (0.7f64).ln();
        assert!((y.ln() - expected).abs() < 1e-9 * expected.abs());
        assert!((ledger.get(&e("P"), &e("Q")) - 1.0 / 0.3).abs() < 1e-12);
    }

    #[test]
    fn antisymmetry_under_fuzzed_transactions() {
        let names = ["P", "Q", "R", "S"];
        let goods = ["a", "b"];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut curves = CurveTable::new();
        for p in names {
            for q in names {
                for g in goods {
                    if p != q {
                        let c = curve(rng.gen_range(0.0..0.95), rng.gen_range(0.0..5.0));
                        curves.insert(t(p, g, q), c);
                    }
                }
            }
        }
        let mut ledger = Ledger::new();
        for _ in 0..10_000 {
            let p = rng.gen_range(0..4);
            let q = (p + rng.gen_range(1..4)) % 4;
            let tx = t(names[p], goods[rng.gen_range(0..2)], names[q]);
            ledger = apply_transactions(&ledger, &[tx].into_iter().collect(), &curves).unwrap();
            for x in names {
                for y in names {
                    let (ex, ey) = (e(x), e(y));
                    assert_eq!(ledger.get(&ex, &ey) + ledger.get(&ey, &ex), 0.0);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn yield_is_non_increasing(a in 0.0f64..0.999, b in 0.0f64..10.0, x in -50.0f64..50.0, dx in 0.0f64..50.0) {
            let c = curve(a, b);
            prop_assert!(c.eval(x + dx) <= c.eval(x));
            prop_assert!(c.eval(x) >= 0.0);
        }

        #[test]
        fn competibility_sums_to_zero(a in 0.0f64..0.999, b in 0.0f64..10.0, x in -50.0f64..50.0) {
            let tx = t("P", "a", "Q");
            let curves: CurveTable = [(tx.clone(), curve(a, b))].into_iter().collect();
            let mut ledger = Ledger::new();
            ledger.set(&e("Q"), &e("P"), x).unwrap();
            let sp = ledger.transaction_yield(&tx, &curves, &e("P")).unwrap();
            let sq = ledger.transaction_yield(&tx, &curves, &e("Q")).unwrap();
            prop_assert!((sp + sq).is_zero());
            prop_assert_eq!(sp.to_f64(), curve(a, b).eval(-x));
        }
    }
}
