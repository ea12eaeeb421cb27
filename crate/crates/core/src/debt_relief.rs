//! Choosing liabilities to forgive.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::clearing::{greatest_clearing, ClearingResult};
use crate::error::{Error, Result};
use crate::network::{Edge, FinancialNetwork};
use crate::par;
use crate::scalar::Scalar;

/// Largest number of candidate edges `optimal_removal` enumerates.
pub const MAX_ENUMERATED_EDGES: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RemovalObjective {
    MaxLiquidity,
    MaxLiquidityAllSolvent,
    MinForgivenAllSolvent,
    MinForgivenTargetSolvent(usize),
}

impl RemovalObjective {
    fn maximizes(&self) -> bool {
        matches!(self, RemovalObjective::MaxLiquidity | RemovalObjective::MaxLiquidityAllSolvent)
    }

    fn admits<S: Scalar>(&self, clearing: &ClearingResult<S>) -> bool {
        match self {
            RemovalObjective::MaxLiquidity => true,
            RemovalObjective::MaxLiquidityAllSolvent | RemovalObjective::MinForgivenAllSolvent => {
                clearing.defaults.is_empty()
            }
            RemovalObjective::MinForgivenTargetSolvent(t) => !clearing.is_defaulting(*t),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemovalOutcome<S> {
    /// Removed edges in ascending order.
    pub removed: Vec<Edge>,
    pub clearing: ClearingResult<S>,
    /// Liquidity for the maximizing objectives, forgiven total otherwise.
    pub value: S,
}

/// Edges in weakly connected components that contain a defaulting bank.
fn troubled_edges<S: Scalar>(net: &FinancialNetwork<S>, defaults: &BTreeSet<usize>) -> Vec<Edge> {
    let n = net.len();
    let mut component: Vec<usize> = (0..n).collect();
    fn root(c: &mut [usize], mut i: usize) -> usize {
        while c[i] != i {
            c[i] = c[c[i]];
            i = c[i];
        }
        i
    }
    for e in net.edges() {
        let (a, b) = (root(&mut component, e.borrower), root(&mut component, e.lender));
        component[a.max(b)] = a.min(b);
    }
    let troubled: BTreeSet<usize> = defaults.iter().map(|&d| root(&mut component, d)).collect();
    net.edges().into_iter().filter(|e| troubled.contains(&root(&mut component, e.borrower))).collect()
}

/// Subsets of `0..m` as bitmasks, ordered by size and then lexicographically.
pub(crate) fn masks_by_size(m: usize) -> Vec<u32> {
    fn extend(start: usize, m: usize, left: usize, mask: u32, out: &mut Vec<u32>) {
        if left == 0 {
            out.push(mask);
            return;
        }
        for i in start..=(m - left) {
            extend(i + 1, m, left - 1, mask | (1 << i), out);
        }
    }
    let mut out = Vec::with_capacity(1 << m);
    for k in 0..=m {
        extend(0, m, k, 0, &mut out);
    }
    out
}

fn forgiven<S: Scalar>(net: &FinancialNetwork<S>, edges: &[Edge]) -> S {
    edges.iter().map(|e| net.liability(e.borrower, e.lender).clone()).sum()
}

fn select(candidates: &[Edge], mask: u32) -> Vec<Edge> {
    candidates.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, e)| *e).collect()
}

/// Exact optimum over all sets of forgiven liabilities. Ties go to the
/// fewest removals, then to the lexicographically smallest edge set.
pub fn optimal_removal<S: Scalar>(net: &FinancialNetwork<S>, objective: RemovalObjective) -> Result<RemovalOutcome<S>> {
    net.ensure_valid()?;
    if let RemovalObjective::MinForgivenTargetSolvent(t) = objective {
        net.ensure_bank(t)?;
    }
    let candidates =
        if net.has_default_costs() { net.edges() } else { troubled_edges(net, &greatest_clearing(net)?.defaults) };
    if candidates.len() > MAX_ENUMERATED_EDGES {
        return Err(Error::GuardExceeded {
            what: "edge subset enumeration",
            limit: MAX_ENUMERATED_EDGES,
            actual: candidates.len(),
        });
    }
    let masks = masks_by_size(candidates.len());
    let scores = par::try_map(masks.len(), |k| {
        let removed = select(&candidates, masks[k]);
        let clearing = greatest_clearing(&net.remove_edges(&removed)?)?;
        Ok(objective.admits(&clearing).then(|| {
            if objective.maximizes() {
                clearing.liquidity
            } else {
                forgiven(net, &removed)
            }
        }))
    })?;
    let mut best: Option<(usize, &S)> = None;
    for (k, score) in scores.iter().enumerate() {
        let Some(v) = score else { continue };
        let better = match best {
            None => true,
            Some((_, b)) if objective.maximizes() => v.tol_gt(b),
            Some((_, b)) => v.tol_lt(b),
        };
        if better {
            best = Some((k, v));
        }
    }
    let (k, value) = best.ok_or_else(|| Error::Infeasible("no removal set meets the objective".into()))?;
    let removed = select(&candidates, masks[k]);
    let clearing = greatest_clearing(&net.remove_edges(&removed)?)?;
    Ok(RemovalOutcome { removed, clearing, value: value.clone() })
}

/// Repeatedly removes the single edge that raises liquidity the most
/// (smallest edge on ties) until no removal helps.
pub fn greedy_removal<S: Scalar>(net: &FinancialNetwork<S>) -> Result<RemovalOutcome<S>> {
    net.ensure_valid()?;
    let mut removed = Vec::new();
    let mut current = net.clone();
    let mut clearing = greatest_clearing(&current)?;
    loop {
        let mut best: Option<(Edge, FinancialNetwork<S>, ClearingResult<S>)> = None;
        for edge in current.edges() {
            let next = current.remove_edges([&edge])?;
            let result = greatest_clearing(&next)?;
            let target = best.as_ref().map_or(&clearing.liquidity, |(_, _, c)| &c.liquidity);
            if result.liquidity.tol_gt(target) {
                best = Some((edge, next, result));
            }
        }
        let Some((edge, next, result)) = best else { break };
        removed.push(edge);
        current = next;
        clearing = result;
    }
    removed.sort();
    let value = clearing.liquidity.clone();
    Ok(RemovalOutcome { removed, clearing, value })
}
