//! Running the standard model: a sequence of states, one transaction
//! multiset chosen per state, and the ledger updated after every step.

use std::collections::BTreeSet;

use crate::choice::{self, Candidate};
use crate::credit::{CurveTable, Ledger, YieldCurve};
use crate::error::{Error, Result};
use crate::model::{EntityId, GoodId, Offer, State, Transaction, TransactionSet};

/// An eventually periodic state sequence: `prefix` once, then `cycle` forever.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSequence {
    prefix: Vec<State>,
    cycle: Vec<State>,
}

impl StateSequence {
    pub fn new(prefix: Vec<State>, cycle: Vec<State>) -> Result<Self> {
        if cycle.is_empty() {
            return Err(Error::EmptyCycle);
        }
        Ok(Self { prefix, cycle })
    }

    pub fn constant(state: State) -> Self {
        Self {
            prefix: Vec::new(),
            cycle: vec![state],
        }
    }

    pub fn prefix(&self) -> &[State] {
        &self.prefix
    }

    pub fn cycle(&self) -> &[State] {
        &self.cycle
    }

    /// State at 1-based step `index`.
    pub fn state_at(&self, index: usize) -> &State {
        assert!(index >= 1, "steps are numbered from 1");
        if index <= self.prefix.len() {
            &self.prefix[index - 1]
        } else {
            &self.cycle[(index - self.prefix.len() - 1) % self.cycle.len()]
        }
    }

    /// Smallest period of the cycle part.
    pub fn dimension(&self) -> usize {
        let n = self.cycle.len();
        (1..=n)
            .find(|&k| n % k == 0 && (0..n).all(|i| self.cycle[i] == self.cycle[(i + k) % n]))
            .unwrap_or(n)
    }

    fn states(&self) -> impl Iterator<Item = &State> {
        self.prefix.iter().chain(self.cycle.iter())
    }
}

/// How each step's transactions are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SelectionMode {
    /// Highest Yield Rule over admissible multisets.
    Hyr,
    /// Highest Yield Rule restricted to one transaction per step.
    HyrSingle,
    /// Every state has one maximal admissible multiset, and it is taken.
    ForceAll,
}

/// A complete, validated model configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    entities: Vec<EntityId>,
    goods: Vec<GoodId>,
    curves: CurveTable,
    initial_balances: Ledger,
    states: StateSequence,
    max_steps: usize,
    mode: SelectionMode,
}

pub const DEFAULT_MAX_STEPS: usize = 100;

impl Scenario {
    /// Validates that every offer and curve refers to declared entities and
    /// goods and that every constructible pairing has a yield curve.
    pub fn new(
        entities: Vec<EntityId>,
        goods: Vec<GoodId>,
        curves: CurveTable,
        states: StateSequence,
        mode: SelectionMode,
    ) -> Result<Self> {
        let entities: Vec<EntityId> = entities.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let goods: Vec<GoodId> = goods.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let scenario = Self {
            entities,
            goods,
            curves,
            initial_balances: Ledger::new(),
            states,
            max_steps: DEFAULT_MAX_STEPS,
            mode,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    fn check_entity(&self, e: &EntityId) -> Result<()> {
        if self.entities.binary_search(e).is_err() {
            return Err(Error::UndeclaredEntity(e.clone()));
        }
        Ok(())
    }

    fn check_good(&self, g: &GoodId) -> Result<()> {
        if self.goods.binary_search(g).is_err() {
            return Err(Error::UndeclaredGood(g.clone()));
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        for (t, _) in self.curves.iter() {
            self.check_entity(t.supplier())?;
            self.check_entity(t.recipient())?;
            self.check_good(t.good())?;
        }
        for state in self.states.states() {
            for (offer, _) in state.offers().iter() {
                self.check_entity(offer.entity())?;
                self.check_good(offer.good())?;
            }
            choice::enumerate_candidates(state, &Ledger::new(), &self.curves)?;
        }
        for (p, q, _) in self.initial_balances.pairs() {
            self.check_entity(p)?;
            self.check_entity(q)?;
        }
        Ok(())
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Result<Self> {
        if max_steps == 0 {
            return Err(Error::ZeroSteps);
        }
        self.max_steps = max_steps;
        Ok(self)
    }

    /// Sets the opening balance `A(p, q)`.
    pub fn with_initial_balance(mut self, p: &EntityId, q: &EntityId, value: f64) -> Result<Self> {
        self.check_entity(p)?;
        self.check_entity(q)?;
        self.initial_balances.set(p, q, value)?;
        Ok(self)
    }

    pub fn with_mode(mut self, mode: SelectionMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn entities(&self) -> &[EntityId] {
        &self.entities
    }

    pub fn goods(&self) -> &[GoodId] {
        &self.goods
    }

    pub fn curves(&self) -> &CurveTable {
        &self.curves
    }

    pub fn initial_balances(&self) -> &Ledger {
        &self.initial_balances
    }

    pub fn states(&self) -> &StateSequence {
        &self.states
    }

    pub fn max_steps(&self) -> usize {
        self.max_steps
    }

    pub fn mode(&self) -> SelectionMode {
        self.mode
    }
}

/// One step of a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    /// 1-based step number.
    pub index: usize,
    /// Selected transactions (one entry per occurrence, in transaction
    /// order) with their supplier yields on the opening ledger.
    pub selected: Vec<Candidate>,
    /// Ledger after the step.
    pub balances: Ledger,
}

impl TraceStep {
    pub fn selected_set(&self) -> TransactionSet {
        self.selected.iter().map(|c| c.transaction.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HaltReason {
    MaxSteps,
    /// A whole cycle of states passed without any positive-yield transaction.
    NoPositiveYield,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub scenario: Scenario,
    pub steps: Vec<TraceStep>,
    pub halt_reason: HaltReason,
}

impl Trace {
    /// Ledger in force when step `index` (1-based) began.
    pub fn opening_ledger(&self, index: usize) -> &Ledger {
        if index <= 1 {
            self.scenario.initial_balances()
        } else {
            &self.steps[index - 2].balances
        }
    }

    pub fn final_ledger(&self) -> &Ledger {
        self.steps
            .last()
            .map_or(self.scenario.initial_balances(), |s| &s.balances)
    }
}

/// Runs step number `index` on `state`.
pub fn step(
    index: usize,
    state: &State,
    ledger: &Ledger,
    curves: &CurveTable,
    mode: SelectionMode,
) -> Result<(TransactionSet, Ledger, TraceStep)> {
    let chosen = match mode {
        SelectionMode::Hyr => choice::hyr_select(state, ledger, curves)?,
        SelectionMode::HyrSingle => choice::hyr_single_select(state, ledger, curves)?,
        SelectionMode::ForceAll => match choice::force_all_select(state)? {
            Ok(set) => set,
            Err(count) => return Err(Error::AmbiguousForceAll { step: index, count }),
        },
    };
    let mut selected = Vec::with_capacity(chosen.len());
    for t in chosen.transactions().iter_occurrences() {
        let curve = curves.get(t)?;
        selected.push(Candidate {
            transaction: t.clone(),
            supplier_yield: ledger.supplier_yield(t, curve),
        });
    }
    let next = ledger.apply_transactions(&chosen, curves)?;
    let record = TraceStep {
        index,
        selected,
        balances: next.clone(),
    };
    Ok((chosen, next, record))
}

/// Runs a scenario until `max_steps`, or (in the yield-driven modes) until a
/// full cycle of states selects nothing, after which balances are frozen and
/// nothing can ever be selected again.
pub fn run(scenario: &Scenario) -> Result<Trace> {
    let mut ledger = scenario.initial_balances.clone();
    let mut steps = Vec::with_capacity(scenario.max_steps.min(1 << 20));
    let prefix_len = scenario.states.prefix.len();
    let cycle_len = scenario.states.cycle.len();
    let mut idle_in_cycle = 0;
    let mut halt_reason = HaltReason::MaxSteps;
    for index in 1..=scenario.max_steps {
        let state = scenario.states.state_at(index);
        let (chosen, next, record) = step(index, state, &ledger, &scenario.curves, scenario.mode)?;
        steps.push(record);
        ledger = next;
        if scenario.mode == SelectionMode::ForceAll || index <= prefix_len {
            continue;
        }
        if chosen.is_empty() {
            idle_in_cycle += 1;
            if idle_in_cycle >= cycle_len {
                halt_reason = HaltReason::NoPositiveYield;
                break;
            }
        } else {
            idle_in_cycle = 0;
        }
    }
    Ok(Trace {
        scenario: scenario.clone(),
        steps,
        halt_reason,
    })
}

fn curve_table(entries: impl IntoIterator<Item = (Transaction, YieldCurve)>) -> CurveTable {
    entries.into_iter().collect()
}

/// `p` offers `good` to `q` at every step, forever.
pub fn make_repeated_gift(p: &EntityId, q: &EntityId, good: &GoodId, curve: YieldCurve) -> Result<Scenario> {
    let t = Transaction::new(p, good, q)?;
    let state: State = [Offer::supply(p, good), Offer::demand(q, good)].into_iter().collect();
    Scenario::new(
        vec![p.clone(), q.clone()],
        vec![good.clone()],
        curve_table([(t, curve)]),
        StateSequence::constant(state),
        SelectionMode::ForceAll,
    )
}

/// One supplier `p` of `good` facing several always-accepting recipients.
pub fn make_multi_recipient(p: &EntityId, good: &GoodId, recipients: &[(EntityId, YieldCurve)]) -> Result<Scenario> {
    let mut offers = vec![Offer::supply(p, good)];
    let mut entries = Vec::new();
    let mut entities = vec![p.clone()];
    for (q, curve) in recipients {
        offers.push(Offer::demand(q, good));
        entries.push((Transaction::new(p, good, q)?, *curve));
        entities.push(q.clone());
    }
    Scenario::new(
        entities,
        vec![good.clone()],
        curve_table(entries),
        StateSequence::constant(offers.into_iter().collect()),
        SelectionMode::Hyr,
    )
}

/// Two traders: `p` gives `goods.0` to `q` (under `p_curve`) and `q` gives
/// `goods.1` to `p` (under `q_curve`).
#[derive(Debug, Clone)]
pub struct TradePair {
    pub p: EntityId,
    pub q: EntityId,
    pub goods: (GoodId, GoodId),
    pub p_curve: YieldCurve,
    pub q_curve: YieldCurve,
}

impl TradePair {
    pub fn p_gift(&self) -> Result<Transaction> {
        Transaction::new(&self.p, &self.goods.0, &self.q)
    }

    pub fn q_gift(&self) -> Result<Transaction> {
        Transaction::new(&self.q, &self.goods.1, &self.p)
    }

    fn curves(&self) -> Result<CurveTable> {
        Ok(curve_table([
            (self.p_gift()?, self.p_curve),
            (self.q_gift()?, self.q_curve),
        ]))
    }

    fn both_demands(&self) -> [Offer; 2] {
        [
            Offer::demand(&self.q, &self.goods.0),
            Offer::demand(&self.p, &self.goods.1),
        ]
    }
}

/// Alternating availability: each cycle has `n` states in which only `q`
/// supplies, followed by `m` states in which only `p` supplies. Both
/// entities always accept.
pub fn make_alternating_trade(pair: &TradePair, m: usize, n: usize) -> Result<Scenario> {
    assert!(m >= 1 && n >= 1, "both goods must be offered at least once per cycle");
    let q_state: State = std::iter::once(Offer::supply(&pair.q, &pair.goods.1))
        .chain(pair.both_demands())
        .collect();
    let p_state: State = std::iter::once(Offer::supply(&pair.p, &pair.goods.0))
        .chain(pair.both_demands())
        .collect();
    let cycle: Vec<State> = std::iter::repeat_n(q_state, n)
        .chain(std::iter::repeat_n(p_state, m))
        .collect();
    Scenario::new(
        vec![pair.p.clone(), pair.q.clone()],
        vec![pair.goods.0.clone(), pair.goods.1.clone()],
        pair.curves()?,
        StateSequence::new(Vec::new(), cycle)?,
        SelectionMode::ForceAll,
    )
}

/// Simultaneous availability: both supplies and both demands in one
/// recurring state. In `ForceAll` mode both gifts happen at every step; in
/// `HyrSingle` mode the higher-yield gift is picked each step.
pub fn make_simultaneous_trade(pair: &TradePair, mode: SelectionMode) -> Result<Scenario> {
    let state: State = [
        Offer::supply(&pair.p, &pair.goods.0),
        Offer::supply(&pair.q, &pair.goods.1),
    ]
    .into_iter()
    .chain(pair.both_demands())
    .collect();
    Scenario::new(
        vec![pair.p.clone(), pair.q.clone()],
        vec![pair.goods.0.clone(), pair.goods.1.clone()],
        pair.curves()?,
        StateSequence::constant(state),
        mode,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(s: &str) -> EntityId {
        EntityId::new(s).unwrap()
    }

    fn g(s: &str) -> GoodId {
        GoodId::new(s).unwrap()
    }

    fn curve(a: f64, b: f64) -> YieldCurve {
        YieldCurve::new(a, b).unwrap()
    }

    fn pair(pa: f64, pb: f64, qa: f64, qb: f64) -> TradePair {
        TradePair {
            p: e("P"),
            q: e("Q"),
            goods: (g("a"), g("b")),
            p_curve: curve(pa, pb),
            q_curve: curve(qa, qb),
        }
    }

    #[test]
    fn state_sequence_indexing_and_dimension() {
        let s = |x: &str| -> State { [Offer::supply(&e(x), &g("a"))].into_iter().collect() };
        let seq = StateSequence::new(vec![s("A")], vec![s("B"), s("C"), s("B"), s("C")]).unwrap();
        assert_eq!(seq.state_at(1), &s("A"));
        assert_eq!(seq.state_at(2), &s("B"));
        assert_eq!(seq.state_at(3), &s("C"));
        assert_eq!(seq.state_at(6), &s("B"));
        assert_eq!(seq.dimension(), 2);
        assert_eq!(StateSequence::new(vec![], vec![]), Err(Error::EmptyCycle));
    }

    #[test]
    fn repeated_gift_first_step() {
        let sc = make_repeated_gift(&e("P"), &e("Q"), &g("a"), curve(0.5, 1.0)).unwrap();
        let (set, ledger, rec) = step(1, sc.states().state_at(1), &Ledger::new(), sc.curves(), sc.mode()).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(rec.selected[0].supplier_yield.to_f64(), 1.0);
        assert_eq!(ledger.get(&e("P"), &e("Q")), 1.0);
    }

    #[test]
    fn repeated_gift_four_steps() {
        let sc = make_repeated_gift(&e("P"), &e("Q"), &g("a"), curve(0.5, 1.0))
            .unwrap()
            .with_max_steps(4)
            .unwrap();
        let trace = run(&sc).unwrap();
        let yields: Vec<f64> = trace.steps.iter().map(|s| s.selected[0].supplier_yield.to_f64()).collect();
        let balances: Vec<f64> = trace.steps.iter().map(|s| s.balances.get(&e("P"), &e("Q"))).collect();
        assert_eq!(yields, vec![1.0, 0.5, 0.25, 0.125]);
        // Closed form 2 - 2^(1-k).
        let closed: Vec<f64> = (1..=4).map(|k| 2.0 - 2f64.powi(1 - k)).collect();
        assert_eq!(balances, closed);
        assert_eq!(trace.halt_reason, HaltReason::MaxSteps);
    }

    #[test]
    fn simultaneous_step_moves_by_yield_difference() {
        let sc = make_simultaneous_trade(&pair(0.5, 1.0, 0.5, 2.0), SelectionMode::ForceAll).unwrap();
        let (_, ledger, rec) = step(1, sc.states().state_at(1), &Ledger::new(), sc.curves(), sc.mode()).unwrap();
        assert_eq!(rec.selected.len(), 2);
        assert_eq!(ledger.get(&e("P"), &e("Q")), -1.0);
    }

    #[test]
    fn saturated_relationship_halts() {
        let sc = make_multi_recipient(&e("P"), &g("a"), &[(e("Q"), curve(0.5, 1.0))])
            .unwrap()
            .with_initial_balance(&e("P"), &e("Q"), 2.0)
            .unwrap();
        let trace = run(&sc).unwrap();
        assert_eq!(trace.steps.len(), 1);
        assert!(trace.steps[0].selected.is_empty());
        assert_eq!(trace.halt_reason, HaltReason::NoPositiveYield);
    }

    #[test]
    fn halting_waits_for_a_full_idle_cycle() {
        // Q can still give in the second state, so an idle first state alone does not halt.
        let p = pair(0.5, 1.0, 0.5, 1.0);
        let sc = make_alternating_trade(&p, 1, 1)
            .unwrap()
            .with_mode(SelectionMode::Hyr)
            .with_initial_balance(&e("P"), &e("Q"), -2.0)
            .unwrap()
            .with_max_steps(6)
            .unwrap();
        let trace = run(&sc).unwrap();
        assert!(trace.steps[0].selected.is_empty());
        assert_eq!(trace.steps[1].selected.len(), 1);
        assert_eq!(trace.halt_reason, HaltReason::MaxSteps);
    }

    #[test]
    fn equal_recipients_alternate() {
        let sc = make_multi_recipient(&e("P"), &g("a"), &[(e("Q"), curve(0.5, 1.0)), (e("R"), curve(0.5, 1.0))])
            .unwrap()
            .with_max_steps(10)
            .unwrap();
        let trace = run(&sc).unwrap();
        let picks: Vec<String> = trace
            .steps
            .iter()
            .map(|s| s.selected[0].transaction.recipient().to_string())
            .collect();
        // Brute-force oracle: plain evaluation of both curves each step.
        let (mut xq, mut xr) = (0.0f64, 0.0f64);
        let mut expected = Vec::new();
        for _ in 0..10 {
            let (yq, yr) = (curve(0.5, 1.0).eval(xq), curve(0.5, 1.0).eval(xr));
            if yq >= yr {
                xq += yq;
                expected.push("Q".to_string());
            } else {
                xr += yr;
                expected.push("R".to_string());
            }
        }
        assert_eq!(picks, expected);
        assert_eq!(picks[..4], ["Q", "R", "Q", "R"]);
    }

    #[test]
    fn alternating_trade_oscillates_with_shrinking_amplitude() {
        let sc = make_alternating_trade(&pair(0.5, 1.0, 0.5, 1.0), 1, 1)
            .unwrap()
            .with_max_steps(20)
            .unwrap();
        let trace = run(&sc).unwrap();
        let xs: Vec<f64> = std::iter::once(0.0)
            .chain(trace.steps.iter().map(|s| s.balances.get(&e("P"), &e("Q"))))
            .collect();
        for w in xs.windows(3) {
            assert!((w[1] - w[0]).signum() != (w[2] - w[1]).signum());
        }
        // Distance from the limit cycle: same-parity balances draw together.
        let drift: Vec<f64> = xs.windows(3).map(|w| (w[2] - w[0]).abs()).collect();
        for w in drift.windows(3) {
            assert!(w[2] < w[0]);
        }
    }

    #[test]
    fn two_to_one_layout() {
        let sc = make_alternating_trade(&pair(0.5, 1.0, 0.5, 1.0), 2, 1).unwrap();
        assert_eq!(sc.states().cycle().len(), 3);
        assert_eq!(sc.states().dimension(), 3);
        let trace = run(&sc.with_max_steps(6).unwrap()).unwrap();
        let suppliers: Vec<&str> = trace
            .steps
            .iter()
            .map(|s| s.selected[0].transaction.supplier().as_str())
            .collect();
        assert_eq!(suppliers, ["Q", "P", "P", "Q", "P", "P"]);
    }

    #[test]
    fn ambiguous_force_all_is_an_error() {
        let sc = make_multi_recipient(&e("P"), &g("a"), &[(e("Q"), curve(0.5, 1.0)), (e("R"), curve(0.5, 1.0))])
            .unwrap()
            .with_mode(SelectionMode::ForceAll);
        assert_eq!(run(&sc), Err(Error::AmbiguousForceAll { step: 1, count: 2 }));
    }

    #[test]
    fn validation_rejects_undeclared_and_uncovered() {
        let state: State = [Offer::supply(&e("P"), &g("a")), Offer::demand(&e("Q"), &g("a"))]
            .into_iter()
            .collect();
        let res = Scenario::new(
            vec![e("P")],
            vec![g("a")],
            CurveTable::new(),
            StateSequence::constant(state.clone()),
            SelectionMode::Hyr,
        );
        assert_eq!(res, Err(Error::UndeclaredEntity(e("Q"))));
        let res = Scenario::new(
            vec![e("P"), e("Q")],
            vec![g("a")],
            CurveTable::new(),
            StateSequence::constant(state),
            SelectionMode::Hyr,
        );
        assert!(matches!(res, Err(Error::MissingCurve(_))));
    }

    #[test]
    fn pairwise_independence_in_multi_recipient_runs() {
        let sc = make_multi_recipient(&e("P"), &g("a"), &[(e("Q"), curve(0.3, 1.0)), (e("R"), curve(0.6, 2.0))])
            .unwrap()
            .with_max_steps(60)
            .unwrap();
        let trace = run(&sc).unwrap();
        for s in &trace.steps {
            let opening = trace.opening_ledger(s.index);
            let other = if s.selected[0].transaction.recipient() == &e("Q") { e("R") } else { e("Q") };
            assert_eq!(opening.get(&e("P"), &other), s.balances.get(&e("P"), &other));
        }
    }

    #[test]
    fn single_pick_simultaneous_trade_settles_into_alternation() {
        for (pa, pb, qa, qb, x0) in [
            (0.5, 1.0, 0.5, 1.0, 0.0),
            (0.5, 1.0, 0.5, 2.0, 0.0),
            (0.25, 1.0, 0.5, 1.0, -1.5),
            (0.1, 3.0, 0.3, 1.0, 4.0),
            (0.7, 2.0, 0.2, 0.5, -0.5),
        ] {
            let sc = make_simultaneous_trade(&pair(pa, pb, qa, qb), SelectionMode::HyrSingle)
                .unwrap()
                .with_initial_balance(&e("P"), &e("Q"), x0)
                .unwrap()
                .with_max_steps(200)
                .unwrap();
            let trace = run(&sc).unwrap();
            let suppliers: Vec<EntityId> = trace
                .steps
                .iter()
                .map(|s| s.selected[0].transaction.supplier().clone())
                .collect();
            let tail = &suppliers[100..];
            for w in tail.windows(2) {
                assert_ne!(w[0], w[1], "not alternating for {pa} {pb} {qa} {qb}");
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn repeated_gift_reaches_its_limit_on_schedule(a in 0.05f64..0.95, b in 0.1f64..5.0, below in 0.01f64..10.0) {
            let c = curve(a, b);
            let limit = c.limit_balance().unwrap();
            let x0 = limit - below;
            let steps = (1e-6f64.ln() / (1.0 - a).ln()).ceil() as usize;
            let sc = make_repeated_gift(&e("P"), &e("Q"), &g("a"), c)
                .unwrap()
                .with_initial_balance(&e("P"), &e("Q"), x0)
                .unwrap()
                .with_max_steps(steps)
                .unwrap();
            let trace = run(&sc).unwrap();
            let yields: Vec<f64> = trace.steps.iter().map(|s| s.selected[0].supplier_yield.to_f64()).collect();
            for w in yields.windows(2) {
                proptest::prop_assert!((w[1] - (1.0 - a) * w[0]).abs() <= 1e-9 * w[1]);
            }
            // The gap to the limit shrinks by (1-a) per step: after `steps` steps it
            // is at most 1e-6 of the opening gap.
            let gap = (trace.final_ledger().get(&e("P"), &e("Q")) - limit).abs();
            proptest::prop_assert!(gap <= 1e-6 * below + 1e-12);
        }
    }
}

