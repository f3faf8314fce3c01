//! Choosing which admissible transactions happen in a state.
//!
//! Under the Highest Yield Rule every supplier prefers the gifts that raise
//! its balances the most. Each candidate contributes its supplier's yield,
//! valued once on the step's opening ledger, and the rule picks the
//! admissible multiset with the largest total.
//!
//! Goods never compete for each other's offers, so selection splits per
//! good into a small transportation problem (supply offers against demand
//! offers). [`hyr_select`] solves it exactly with successive shortest
//! augmenting paths. With a single supplying entity per good the first path
//! is always the best remaining candidate, so the result is the familiar
//! top-down pick of the highest yields.

use std::collections::{BTreeMap, BTreeSet};

use crate::credit::{Credit, CurveTable, Ledger};
use crate::error::Result;
use crate::model::{EntityId, GoodId, Offer, State, Transaction, TransactionSet};

/// A constructible transaction and its supplier's yield on the current ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub transaction: Transaction,
    pub supplier_yield: Credit,
}

/// Supply and demand counts of one good, keyed by entity.
#[derive(Default)]
struct GoodMarket {
    supply: BTreeMap<EntityId, usize>,
    demand: BTreeMap<EntityId, usize>,
}

fn markets(state: &State) -> BTreeMap<GoodId, GoodMarket> {
    let mut out: BTreeMap<GoodId, GoodMarket> = BTreeMap::new();
    for (offer, n) in state.offers().iter() {
        let market = out.entry(offer.good().clone()).or_default();
        let side = match offer {
            Offer::Supply { .. } => &mut market.supply,
            Offer::Demand { .. } => &mut market.demand,
        };
        *side.entry(offer.entity().clone()).or_insert(0) += n;
    }
    out
}

/// Every distinct transaction the state can support, highest supplier yield
/// first; ties go to the smaller (supplier, good, recipient).
pub fn enumerate_candidates(state: &State, ledger: &Ledger, curves: &CurveTable) -> Result<Vec<Candidate>> {
    let mut out = Vec::new();
    for (good, market) in markets(state) {
        for supplier in market.supply.keys() {
            for recipient in market.demand.keys() {
                if supplier == recipient {
                    continue;
                }
                let transaction = Transaction::new(supplier, &good, recipient)?;
                let curve = curves.get(&transaction)?;
                let supplier_yield = ledger.supplier_yield(&transaction, curve);
                out.push(Candidate {
                    transaction,
                    supplier_yield,
                });
            }
        }
    }
    out.sort_by(|a, b| {
        b.supplier_yield
            .cmp(&a.supplier_yield)
            .then_with(|| a.transaction.cmp(&b.transaction))
    });
    Ok(out)
}

/// The admissible multiset with the largest total supplier yield, using
/// only strictly positive-yield candidates.
pub fn hyr_select(state: &State, ledger: &Ledger, curves: &CurveTable) -> Result<TransactionSet> {
    let candidates = enumerate_candidates(state, ledger, curves)?;
    Ok(select_from_candidates(state, &candidates))
}

pub(crate) fn select_from_candidates(state: &State, candidates: &[Candidate]) -> TransactionSet {
    let mut selected = TransactionSet::default();
    for (good, market) in markets(state) {
        let edges: Vec<&Candidate> = candidates
            .iter()
            .filter(|c| c.transaction.good() == &good && c.supplier_yield.is_positive())
            .collect();
        if edges.is_empty() {
            continue;
        }
        selected = selected.union(&max_weight_transport(&market, &edges));
    }
    selected
}

/// The single admissible transaction with the highest positive supplier
/// yield, or nothing. This is the choice rule for states where only one
/// gift may happen per step.
pub fn hyr_single_select(state: &State, ledger: &Ledger, curves: &CurveTable) -> Result<TransactionSet> {
    let candidates = enumerate_candidates(state, ledger, curves)?;
    Ok(candidates
        .into_iter()
        .find(|c| c.supplier_yield.is_positive())
        .map(|c| [c.transaction].into_iter().collect())
        .unwrap_or_default())
}

const UNBOUNDED: usize = usize::MAX / 4;

struct Edge {
    to: usize,
    cap: usize,
    cost: Credit,
}

struct FlowGraph {
    edges: Vec<Edge>,
    adjacency: Vec<Vec<usize>>,
}

impl FlowGraph {
    fn new(nodes: usize) -> Self {
        Self {
            edges: Vec::new(),
            adjacency: vec![Vec::new(); nodes],
        }
    }

    /// Adds an edge and its residual twin; returns the forward edge index.
    fn add_edge(&mut self, from: usize, to: usize, cap: usize, cost: Credit) -> usize {
        let id = self.edges.len();
        self.edges.push(Edge { to, cap, cost });
        self.edges.push(Edge {
            to: from,
            cap: 0,
            cost: -cost,
        });
        self.adjacency[from].push(id);
        self.adjacency[to].push(id + 1);
        id
    }

    /// Whether `node` lies on the current tree path from the source to `u`.
    /// Successive shortest paths never leave a negative cycle behind, so a
    /// relaxation that would close one is rounding noise and is skipped.
    fn is_ancestor(&self, via: &[Option<usize>], node: usize, mut u: usize) -> bool {
        for _ in 0..via.len() {
            if u == node {
                return true;
            }
            match via[u] {
                Some(id) => u = self.edges[id ^ 1].to,
                None => return false,
            }
        }
        true
    }

    /// Cheapest path from `source` to `sink` by Bellman-Ford (edge costs may
    /// be negative). Returns the path cost and the edges used.
    fn shortest_path(&self, source: usize, sink: usize) -> Option<(Credit, Vec<usize>)> {
        let n = self.adjacency.len();
        let mut dist: Vec<Option<Credit>> = vec![None; n];
        let mut via: Vec<Option<usize>> = vec![None; n];
        dist[source] = Some(Credit::ZERO);
        for _ in 0..n {
            let mut changed = false;
            for u in 0..n {
                let Some(du) = dist[u] else { continue };
                for &id in &self.adjacency[u] {
                    let edge = &self.edges[id];
                    if edge.cap == 0 {
                        continue;
                    }
                    let candidate = du + edge.cost;
                    if dist[edge.to].is_none_or(|dv| candidate < dv) && !self.is_ancestor(&via, edge.to, u) {
                        dist[edge.to] = Some(candidate);
                        via[edge.to] = Some(id);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let cost = dist[sink]?;
        let mut path = Vec::new();
        let mut node = sink;
        while node != source {
            let id = via[node]?;
            path.push(id);
            node = self.edges[id ^ 1].to;
            if path.len() > self.edges.len() {
                return None;
            }
        }
        path.reverse();
        Some((cost, path))
    }
}

fn max_weight_transport(market: &GoodMarket, edges: &[&Candidate]) -> TransactionSet {
    let suppliers: Vec<&EntityId> = market.supply.keys().collect();
    let recipients: Vec<&EntityId> = market.demand.keys().collect();
    let source = 0;
    let sink = 1 + suppliers.len() + recipients.len();
    let supplier_node = |e: &EntityId| 1 + suppliers.binary_search(&e).expect("supplier in market");
    let recipient_node =
        |e: &EntityId| 1 + suppliers.len() + recipients.binary_search(&e).expect("recipient in market");

    let mut graph = FlowGraph::new(sink + 1);
    for (e, &n) in &market.supply {
        graph.add_edge(source, supplier_node(e), n, Credit::ZERO);
    }
    // Candidate edges go in after the supply edges and before the demand
    // edges, in (supplier, recipient) order, so exact ties resolve towards
    // the lexicographically smaller transaction.
    let mut ordered: Vec<&Candidate> = edges.to_vec();
    ordered.sort_by(|a, b| a.transaction.cmp(&b.transaction));
    let mut gift_edges = Vec::with_capacity(ordered.len());
    for c in &ordered {
        let t = &c.transaction;
        let id = graph.add_edge(
            supplier_node(t.supplier()),
            recipient_node(t.recipient()),
            UNBOUNDED,
            -c.supplier_yield,
        );
        gift_edges.push((id, t));
    }
    for (e, &n) in &market.demand {
        graph.add_edge(recipient_node(e), sink, n, Credit::ZERO);
    }

    while let Some((cost, path)) = graph.shortest_path(source, sink) {
        if !cost.is_negative() {
            break;
        }
        let push = path.iter().map(|&id| graph.edges[id].cap).min().unwrap_or(0);
        if push == 0 {
            break;
        }
        for &id in &path {
            graph.edges[id].cap -= push;
            graph.edges[id ^ 1].cap += push;
        }
    }

    let mut out = TransactionSet::default();
    for (id, t) in gift_edges {
        let flow = graph.edges[id ^ 1].cap;
        if flow > 0 {
            let mut one = crate::multiset::Multiset::new();
            one.insert_n(t.clone(), flow);
            out = out.union(&TransactionSet::new(one));
        }
    }
    out
}

/// All inclusion-maximal admissible multisets of one good's market, stopping
/// once `limit` distinct ones are found.
fn maximal_sets(good: &GoodId, market: &GoodMarket, limit: usize) -> Result<Vec<Vec<(Transaction, usize)>>> {
    let mut pairs = Vec::new();
    for supplier in market.supply.keys() {
        for recipient in market.demand.keys() {
            if supplier != recipient {
                pairs.push(Transaction::new(supplier, good, recipient)?);
            }
        }
    }
    let mut supply = market.supply.clone();
    let mut demand = market.demand.clone();
    let mut chosen = Vec::new();
    let mut found = BTreeSet::new();
    enumerate_maximal(&pairs, 0, &mut supply, &mut demand, &mut chosen, &mut found, limit);
    Ok(found.into_iter().collect())
}

fn enumerate_maximal(
    pairs: &[Transaction],
    index: usize,
    supply: &mut BTreeMap<EntityId, usize>,
    demand: &mut BTreeMap<EntityId, usize>,
    chosen: &mut Vec<(Transaction, usize)>,
    found: &mut BTreeSet<Vec<(Transaction, usize)>>,
    limit: usize,
) {
    if found.len() >= limit {
        return;
    }
    if index == pairs.len() {
        let extendable = pairs
            .iter()
            .any(|t| supply[t.supplier()] > 0 && demand[t.recipient()] > 0);
        if !extendable {
            found.insert(chosen.clone());
        }
        return;
    }
    let t = &pairs[index];
    let most = supply[t.supplier()].min(demand[t.recipient()]);
    for n in (0..=most).rev() {
        *supply.get_mut(t.supplier()).expect("supplier") -= n;
        *demand.get_mut(t.recipient()).expect("recipient") -= n;
        if n > 0 {
            chosen.push((t.clone(), n));
        }
        enumerate_maximal(pairs, index + 1, supply, demand, chosen, found, limit);
        if n > 0 {
            chosen.pop();
        }
        *supply.get_mut(t.supplier()).expect("supplier") += n;
        *demand.get_mut(t.recipient()).expect("recipient") += n;
    }
}

/// The unique inclusion-maximal admissible multiset of `state`, or the
/// number of distinct maximal multisets found when there is more than one.
pub fn force_all_select(state: &State) -> Result<std::result::Result<TransactionSet, usize>> {
    let mut selected = TransactionSet::default();
    for (good, market) in markets(state) {
        let sets = maximal_sets(&good, &market, 2)?;
        if sets.len() > 1 {
            let all = maximal_sets(&good, &market, usize::MAX)?;
            return Ok(Err(all.len()));
        }
        if let Some(set) = sets.into_iter().next() {
            let mut one = crate::multiset::Multiset::new();
            for (t, n) in set {
                one.insert_n(t, n);
            }
            selected = selected.union(&TransactionSet::new(one));
        }
    }
    Ok(Ok(selected))
}
