//! Closed-form predictions and trace diagnostics.
//!
//! Ultimate credit ratios predict how often the Highest Yield Rule picks each
//! recipient in the long run. For two alternating traders the canonical
//! equilibrium gives the two-point cycle the balance settles into, and the
//! contraction factor `(1-a)(1-c)` gives how fast it gets there.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::choice::Candidate;
use crate::credit::{Ledger, YieldCurve};
use crate::engine::Trace;
use crate::model::{EntityId, Transaction};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("yield coefficient {0} outside (0, 1)")]
    CoefficientOutOfRange(f64),

    #[error("at least one coefficient is required")]
    NoCoefficients,

    #[error("curves are parallel and horizontal (a + c = 0), so they do not intersect")]
    ParallelCurves,

    #[error("target transaction {0} listed twice")]
    DuplicateTarget(Transaction),

    #[error("none of the target transactions was ever selected")]
    NoTargetSelected,

    #[error("trace has no steps")]
    EmptyTrace,

    #[error("trace does not trade between exactly two entities")]
    NotBilateral,

    #[error("need at least {needed} steps, trace has {got}")]
    InsufficientSteps { needed: usize, got: usize },

    #[error("step {0} selected a zero-yield transaction; the trace left the linear region")]
    ClampedStep(usize),

    #[error("balance differences are already below 1e-12; the trace has converged")]
    AlreadyConverged,

    #[error("no cycle within tolerance {0} by the end of the trace")]
    NoCycle(f64),
}

pub type Result<T, E = AnalysisError> = std::result::Result<T, E>;

fn open_unit(a: f64) -> Result<f64> {
    if a > 0.0 && a < 1.0 {
        Ok(a)
    } else {
        Err(AnalysisError::CoefficientOutOfRange(a))
    }
}

/// Ultimate credit ratio `-1 / ln(1 - a)`.
///
/// The natural logarithm is used. Any other base scales every ratio by the
/// same constant, so shares built from ratios do not depend on it.
pub fn ucr(a: f64) -> Result<f64> {
    open_unit(a)?;
    Ok(-1.0 / (-a).ln_1p())
}

/// Long-run selection shares `C_k / sum(C)` for recipients with the given
/// yield coefficients.
pub fn ultimate_distribution(coefficients: &[f64]) -> Result<Vec<f64>> {
    if coefficients.is_empty() {
        return Err(AnalysisError::NoCoefficients);
    }
    let ratios = coefficients.iter().map(|&a| ucr(a)).collect::<Result<Vec<_>>>()?;
    let total: f64 = ratios.iter().sum();
    Ok(ratios.into_iter().map(|c| c / total).collect())
}

/// Fraction of target selections that went to each target, counting each
/// step whose selected set contains the target once.
pub fn empirical_distribution(trace: &Trace, targets: &[Transaction]) -> Result<Vec<f64>> {
    if trace.steps.is_empty() {
        return Err(AnalysisError::EmptyTrace);
    }
    let mut seen = BTreeSet::new();
    for t in targets {
        if !seen.insert(t) {
            return Err(AnalysisError::DuplicateTarget(t.clone()));
        }
    }
    let mut counts = vec![0usize; targets.len()];
    for step in &trace.steps {
        for (i, t) in targets.iter().enumerate() {
            if step.selected.iter().any(|c| &c.transaction == t) {
                counts[i] += 1;
            }
        }
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(AnalysisError::NoTargetSelected);
    }
    Ok(counts.into_iter().map(|n| n as f64 / total as f64).collect())
}

/// Predicted and observed shares side by side.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionReport {
    pub predicted: Vec<f64>,
    pub empirical: Vec<f64>,
    pub max_abs_error: f64,
}

impl DistributionReport {
    pub fn new(predicted: Vec<f64>, empirical: Vec<f64>) -> Self {
        assert_eq!(predicted.len(), empirical.len());
        let max_abs_error = predicted
            .iter()
            .zip(&empirical)
            .map(|(p, e)| (p - e).abs())
            .fold(0.0, f64::max);
        Self {
            predicted,
            empirical,
            max_abs_error,
        }
    }
}

/// Compares a trace against the prediction for `targets`, taking each
/// target's coefficient from the scenario's curve table.
pub fn distribution_report(trace: &Trace, targets: &[Transaction]) -> Result<DistributionReport> {
    let coefficients = targets
        .iter()
        .map(|t| {
            trace
                .scenario
                .curves()
                .get(t)
                .map(|c| c.coefficient())
                .map_err(|_| AnalysisError::NoTargetSelected)
        })
        .collect::<Result<Vec<_>>>()?;
    let predicted = ultimate_distribution(&coefficients)?;
    let empirical = empirical_distribution(trace, targets)?;
    Ok(DistributionReport::new(predicted, empirical))
}

/// Where `P`'s line `y = -a x + b` meets `Q`'s line `z = c x + d`, both drawn
/// against `x = A(P, Q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntersectionPoint {
    pub x_s: f64,
    pub y_s: f64,
}

pub fn intersection_point(p: &YieldCurve, q: &YieldCurve) -> Result<IntersectionPoint> {
    let (a, b, c, d) = coefficients(p, q);
    if a + c == 0.0 {
        return Err(AnalysisError::ParallelCurves);
    }
    Ok(IntersectionPoint {
        x_s: (b - d) / (a + c),
        y_s: (a * d + b * c) / (a + c),
    })
}

/// The two-point cycle of 1:1 alternating trade.
///
/// `P` gives at `x_low` and lands on `x_high`; `Q` gives at `x_high` and
/// lands back on `x_low`. Both gifts are worth `side`, so the two valuation
/// points and the corners below them form a square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub x_low: f64,
    pub x_high: f64,
    pub side: f64,
}

pub fn canonical_equilibrium(p: &YieldCurve, q: &YieldCurve) -> Result<Equilibrium> {
    let (a, b, c, d) = coefficients(p, q);
    open_unit(a)?;
    open_unit(c)?;
    let den = a + c - a * c;
    Ok(Equilibrium {
        x_low: ((1.0 - c) * b - d) / den,
        x_high: (b - (1.0 - a) * d) / den,
        side: (a * d + b * c) / den,
    })
}

/// Factor `(1-a)(1-c)` by which `x_i - x_{i+2}` shrinks each round.
pub fn theoretical_contraction(p: &YieldCurve, q: &YieldCurve) -> Result<f64> {
    let (a, _, c, _) = coefficients(p, q);
    open_unit(a)?;
    open_unit(c)?;
    Ok((1.0 - a) * (1.0 - c))
}

/// One round of alternating trade on the unclamped lines, starting just
/// before `P` gives: `x -> (1-a)x + b -> (1-c)x' - d`.
pub fn two_step_map(p: &YieldCurve, q: &YieldCurve, x: f64) -> f64 {
    let (a, b, c, d) = coefficients(p, q);
    let after_p = (1.0 - a) * x + b;
    (1.0 - c) * after_p - d
}

fn coefficients(p: &YieldCurve, q: &YieldCurve) -> (f64, f64, f64, f64) {
    (p.coefficient(), p.nominal(), q.coefficient(), q.nominal())
}

/// The two entities a trace trades between, in ascending order.
fn bilateral_pair(trace: &Trace) -> Result<(EntityId, EntityId)> {
    let mut entities = BTreeSet::new();
    for step in &trace.steps {
        for c in &step.selected {
            entities.insert(c.transaction.supplier().clone());
            entities.insert(c.transaction.recipient().clone());
        }
    }
    let mut it = entities.into_iter();
    match (it.next(), it.next(), it.next()) {
        (Some(p), Some(q), None) => Ok((p, q)),
        _ => Err(AnalysisError::NotBilateral),
    }
}

const MIN_CONTRACTION_STEPS: usize = 6;
const CONVERGED: f64 = 1e-12;

/// Least-squares estimate of `(x_{i+2} - x_{i+4}) / (x_i - x_{i+2})` over a
/// bilateral alternating trace, with `x_0` the opening balance.
pub fn measured_contraction(trace: &Trace) -> Result<f64> {
    let (even, odd) = contraction_sums(trace)?;
    let (num, den) = (even.0 + odd.0, even.1 + odd.1);
    if den == 0.0 {
        return Err(AnalysisError::AlreadyConverged);
    }
    Ok(num / den)
}

/// The same estimate restricted to even and to odd `i`.
pub fn measured_contraction_by_parity(trace: &Trace) -> Result<(f64, f64)> {
    let (even, odd) = contraction_sums(trace)?;
    if even.1 == 0.0 || odd.1 == 0.0 {
        return Err(AnalysisError::AlreadyConverged);
    }
    Ok((even.0 / even.1, odd.0 / odd.1))
}

type Sums = (f64, f64);

fn contraction_sums(trace: &Trace) -> Result<(Sums, Sums)> {
    let n = trace.steps.len();
    if n < MIN_CONTRACTION_STEPS {
        return Err(AnalysisError::InsufficientSteps {
            needed: MIN_CONTRACTION_STEPS,
            got: n,
        });
    }
    let (p, q) = bilateral_pair(trace)?;
    for step in &trace.steps {
        if step.selected.iter().any(|c| !c.supplier_yield.is_positive()) {
            return Err(AnalysisError::ClampedStep(step.index));
        }
    }
    let xs: Vec<f64> = std::iter::once(trace.scenario.initial_balances().get(&p, &q))
        .chain(trace.steps.iter().map(|s| s.balances.get(&p, &q)))
        .collect();
    let ds: Vec<f64> = xs.windows(3).map(|w| w[0] - w[2]).collect();
    let mut sums = [(0.0, 0.0), (0.0, 0.0)];
    for i in 0..ds.len().saturating_sub(2) {
        if ds[i].abs() <= CONVERGED {
            continue;
        }
        let s = &mut sums[i % 2];
        s.0 += ds[i] * ds[i + 2];
        s.1 += ds[i] * ds[i];
    }
    Ok((sums[0], sums[1]))
}

/// A point the process visits once per detected cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct ValuationPoint {
    /// Step (within the last detected period) at which the point is visited.
    pub step: usize,
    /// Balances when the step opens.
    pub opening: Ledger,
    /// What the step selected, with yields on `opening`.
    pub selections: Vec<Candidate>,
}

impl ValuationPoint {
    pub fn balance(&self, p: &EntityId, q: &EntityId) -> f64 {
        self.opening.get(p, q)
    }

    pub fn total_yield(&self) -> f64 {
        self.selections.iter().map(|c| c.supplier_yield.to_f64()).sum()
    }
}

fn ledgers_close(x: &Ledger, y: &Ledger, tolerance: f64) -> bool {
    let keys: BTreeSet<(EntityId, EntityId)> = x
        .pairs()
        .chain(y.pairs())
        .map(|(p, q, _)| (p.clone(), q.clone()))
        .collect();
    keys.iter()
        .all(|(p, q)| (x.get(p, q) - y.get(p, q)).abs() <= tolerance)
}

/// Finds the terminal cycle of a trace.
///
/// The period is the smallest `k` such that, over the last `2k` steps, each
/// step selected the same transactions as the step `k` before it and ended
/// with balances within `tolerance` of it. Returns the `k` points of the last
/// period in visiting order.
pub fn detect_cycle(trace: &Trace, tolerance: f64) -> Result<Vec<ValuationPoint>> {
    let steps = &trace.steps;
    let n = steps.len();
    if n == 0 {
        return Err(AnalysisError::EmptyTrace);
    }
    let period = (1..=n / 3).find(|&k| {
        (n - 2 * k..n).all(|j| {
            let (now, before) = (&steps[j], &steps[j - k]);
            now.selected_set() == before.selected_set()
                && ledgers_close(&now.balances, &before.balances, tolerance)
        })
    });
    let k = period.ok_or(AnalysisError::NoCycle(tolerance))?;
    Ok(steps[n - k..]
        .iter()
        .map(|s| ValuationPoint {
            step: s.index,
            opening: trace.opening_ledger(s.index).clone(),
            selections: s.selected.clone(),
        })
        .collect())
}
