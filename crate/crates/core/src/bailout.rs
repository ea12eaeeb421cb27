//! Cash-injection planning.
//!
//! Without default costs the optimal plan is a single linear program over
//! injections and edge payments. With default costs the problem is solved
//! exactly by enumerating which initially defaulting banks end up solvent;
//! each such configuration fixes the branch of every bank and leaves a
//! linear program.

use std::collections::BTreeSet;

use crate::analytics::{max_threat, threat_index, ThreatVector};
use crate::clearing::{greatest_clearing, ClearingResult};
use crate::error::{Error, Result};
use crate::linalg;
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::network::{FinancialNetwork, InjectionPlan};
use crate::scalar::Scalar;

/// Largest number of initially defaulting banks the exact solvers accept.
pub const MAX_ENUMERATED_DEFAULTS: usize = 20;

const BISECTION_STEPS: usize = 200;

/// Smallest injection that changes the default set, if any.
#[derive(Debug, Clone, PartialEq)]
pub enum ShiftAmount<S> {
    Finite(S),
    Unbounded,
}

impl<S: Scalar> ShiftAmount<S> {
    pub fn finite(&self) -> Option<&S> {
        match self {
            ShiftAmount::Finite(v) => Some(v),
            ShiftAmount::Unbounded => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyRound<S> {
    pub bank: usize,
    pub amount: S,
    /// Threat indices before this round's transfer.
    pub threat: ThreatVector<S>,
}

pub type GreedyTrace<S> = Vec<GreedyRound<S>>;

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyOutcome<S> {
    pub plan: InjectionPlan<S>,
    pub trace: GreedyTrace<S>,
    pub clearing: ClearingResult<S>,
}

fn ensure_budget<S: Scalar>(budget: &S) -> Result<()> {
    if budget.is_negative_tol() {
        return Err(Error::NegativeBudget(budget.to_canonical()));
    }
    Ok(())
}

fn plan_from_vector<S: Scalar>(x: &[S], budget: &S) -> InjectionPlan<S> {
    let transfers = x.iter().cloned().enumerate().filter(|(_, v)| v.is_positive_tol()).collect();
    InjectionPlan { transfers, budget: budget.clone() }
}

/// Liquidity-maximizing injections for a network without default costs.
///
/// Among all optimal plans, the one spending the least is chosen, and among
/// those the plan that gives as much as possible to the lowest-indexed banks.
pub fn optimal_injections_lp<S: Scalar>(
    net: &FinancialNetwork<S>,
    budget: &S,
) -> Result<(InjectionPlan<S>, ClearingResult<S>)> {
    net.ensure_valid()?;
    ensure_budget(budget)?;
    if net.has_default_costs() {
        return Err(Error::DefaultCostsUnsupported { operation: "optimal cash injection" });
    }
    let n = net.len();
    let edges = net.edges();
    let mut lp = LinearProgram::new(n + edges.len());
    let edge_var = |b: usize, l: usize| n + edges.iter().position(|e| e.borrower == b && e.lender == l).unwrap();
    let injections: Vec<(usize, S)> = (0..n).map(|i| (i, S::one())).collect();
    let payments: Vec<(usize, S)> = (0..edges.len()).map(|k| (n + k, S::one())).collect();
    lp.constrain(injections.clone(), Relation::Le, budget.clone());
    for (k, edge) in edges.iter().enumerate() {
        let (i, l_ik) = (edge.borrower, net.liability(edge.borrower, edge.lender).clone());
        lp.constrain(vec![(n + k, S::one())], Relation::Le, l_ik.clone());
        // L_i p_ik <= l_ik (x_i + e_i + inflow_i)
        let mut coeffs = vec![(n + k, net.total_liabilities(i)), (i, -l_ik.clone())];
        for j in net.incoming(i) {
            coeffs.push((edge_var(j, i), -l_ik.clone()));
        }
        lp.constrain(coeffs, Relation::Le, l_ik * net.external(i).clone());
    }
    let best = lp.maximize(&payments).optimal().ok_or_else(|| Error::Infeasible("injection program".into()))?.1;
    lp.constrain(payments, Relation::Ge, best);
    let spend = lp.minimize(&injections).optimal().ok_or_else(|| Error::Infeasible("injection program".into()))?.1;
    lp.constrain(injections, Relation::Le, spend);
    let mut x = Vec::with_capacity(n);
    for i in 0..n {
        let top =
            lp.maximize(&[(i, S::one())]).optimal().ok_or_else(|| Error::Infeasible("injection program".into()))?.1;
        lp.constrain(vec![(i, S::one())], Relation::Eq, top.clone());
        x.push(top);
    }
    let plan = plan_from_vector(&x, budget);
    let clearing = greatest_clearing(&net.inject_externals(&plan)?)?;
    Ok((plan, clearing))
}

/// Smallest amount that, injected at `bank`, makes some defaulting bank solvent.
pub fn min_shift_amount<S: Scalar>(net: &FinancialNetwork<S>, bank: usize) -> Result<ShiftAmount<S>> {
    net.ensure_bank(bank)?;
    let clearing = greatest_clearing(net)?;
    if !clearing.is_defaulting(bank) {
        return Ok(ShiftAmount::Unbounded);
    }
    match shift_by_sensitivity(net, &clearing, bank) {
        Err(Error::Singular { .. }) if !S::EXACT => shift_by_bisection(net, &clearing, bank),
        other => other,
    }
}

fn shift_by_sensitivity<S: Scalar>(
    net: &FinancialNetwork<S>,
    clearing: &ClearingResult<S>,
    bank: usize,
) -> Result<ShiftAmount<S>> {
    let pi = net.relative_liabilities();
    let members: Vec<usize> = clearing.defaults.iter().copied().collect();
    // Inside a fixed default set, d(p_D) solves (I - beta Pi_DD^T) dp = alpha 1_bank.
    let matrix: Vec<Vec<S>> = members
        .iter()
        .map(|&i| {
            members
                .iter()
                .map(|&j| {
                    let identity = if i == j { S::one() } else { S::zero() };
                    identity - net.beta().clone() * pi[j][i].clone()
                })
                .collect()
        })
        .collect();
    let rhs: Vec<S> = members.iter().map(|&i| if i == bank { net.alpha().clone() } else { S::zero() }).collect();
    let dp = linalg::solve(&matrix, &rhs, "injection sensitivity system")?;
    let mut best: Option<S> = None;
    for &j in &members {
        let direct = if j == bank { S::one() } else { S::zero() };
        let slope: S = direct + members.iter().enumerate().map(|(k, &i)| pi[i][j].clone() * dp[k].clone()).sum::<S>();
        if !slope.is_positive_tol() {
            continue;
        }
        let gap = net.total_liabilities(j) - clearing.assets[j].clone();
        let t = gap / slope;
        best = Some(match best {
            Some(b) => b.min_of(t),
            None => t,
        });
    }
    Ok(best.map_or(ShiftAmount::Unbounded, ShiftAmount::Finite))
}

fn shift_by_bisection<S: Scalar>(
    net: &FinancialNetwork<S>,
    clearing: &ClearingResult<S>,
    bank: usize,
) -> Result<ShiftAmount<S>> {
    let changes = |t: &S| -> Result<bool> {
        let after = greatest_clearing(&net.with_external(bank, net.external(bank).clone() + t.clone()))?;
        Ok(after.defaults != clearing.defaults)
    };
    let mut hi: S = net.total_liabilities_all().into_iter().sum();
    if !changes(&hi)? {
        return Ok(ShiftAmount::Unbounded);
    }
    let mut lo = S::zero();
    let two = S::from_int(2);
    for _ in 0..BISECTION_STEPS {
        let mid = (lo.clone() + hi.clone()) / two.clone();
        if changes(&mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ShiftAmount::Finite(hi))
}

/// Repeatedly funds the bank with the highest threat index (smallest index
/// on ties) with just enough to change the default set, until the budget
/// runs out or no bank defaults.
pub fn greedy_injections<S: Scalar>(net: &FinancialNetwork<S>, budget: &S) -> Result<GreedyOutcome<S>> {
    net.ensure_valid()?;
    ensure_budget(budget)?;
    let mut plan = InjectionPlan::empty(budget.clone());
    let mut trace = Vec::new();
    let mut remaining = budget.clone();
    let mut current = net.clone();
    // Injections never add defaults, so every non-final round removes one.
    for _ in 0..=net.len() + 1 {
        let clearing = greatest_clearing(&current)?;
        if clearing.defaults.is_empty() || !remaining.is_positive_tol() {
            return Ok(GreedyOutcome { plan, trace, clearing });
        }
        let threat = threat_index(&current, &clearing)?;
        let (bank, _) = max_threat(&threat).expect("a defaulting bank has a positive threat index");
        let amount = match min_shift_amount(&current, bank)? {
            ShiftAmount::Finite(t) => t.min_of(remaining.clone()),
            ShiftAmount::Unbounded => remaining.clone(),
        };
        remaining = remaining - amount.clone();
        current = current.with_external(bank, current.external(bank).clone() + amount.clone());
        plan.transfers.push((bank, amount.clone()));
        trace.push(GreedyRound { bank, amount, threat });
    }
    Err(Error::NonConvergence { iterations: net.len() + 2 })
}

/// Variables: injections `x` at `0..n`, outgoing totals `p` at `n..2n`.
struct Configuration<'a, S> {
    net: &'a FinancialNetwork<S>,
    pi: Vec<Vec<S>>,
}

impl<'a, S: Scalar> Configuration<'a, S> {
    fn new(net: &'a FinancialNetwork<S>) -> Self {
        Self { net, pi: net.relative_liabilities() }
    }

    fn inflow_terms(&self, i: usize, scale: S) -> Vec<(usize, S)> {
        let n = self.net.len();
        (0..n)
            .filter(|&j| !self.pi[j][i].is_zero_tol())
            .map(|j| (n + j, scale.clone() * self.pi[j][i].clone()))
            .collect()
    }

    /// Every bank in `solvent` pays in full; every other bank follows the
    /// defaulting branch and ends with assets at most its liabilities.
    fn exact(&self, solvent: &BTreeSet<usize>) -> LinearProgram<S> {
        let net = self.net;
        let n = net.len();
        let mut lp = LinearProgram::new(2 * n);
        for i in 0..n {
            let total = net.total_liabilities(i);
            let headroom = total.clone() - net.external(i).clone();
            let mut assets = vec![(i, S::one())];
            assets.extend(self.inflow_terms(i, S::one()));
            if solvent.contains(&i) {
                lp.constrain(vec![(n + i, S::one())], Relation::Eq, total);
                lp.constrain(assets, Relation::Ge, headroom);
            } else {
                let mut pays = vec![(n + i, S::one()), (i, -net.alpha().clone())];
                pays.extend(self.inflow_terms(i, -net.beta().clone()));
                lp.constrain(pays, Relation::Eq, net.alpha().clone() * net.external(i).clone());
                lp.constrain(assets, Relation::Le, headroom);
            }
        }
        lp
    }

    /// Payments may be anything up to the cost-free clearing map; a lower
    /// bound on the budget needed for `solvent`, monotone in `solvent`.
    fn relaxed(&self, solvent: &BTreeSet<usize>) -> LinearProgram<S> {
        let net = self.net;
        let n = net.len();
        let mut lp = LinearProgram::new(2 * n);
        for i in 0..n {
            let total = net.total_liabilities(i);
            let mut assets = vec![(i, S::one())];
            assets.extend(self.inflow_terms(i, S::one()));
            lp.constrain(vec![(n + i, S::one())], Relation::Le, total.clone());
            let mut covered = vec![(n + i, S::one()), (i, -S::one())];
            covered.extend(self.inflow_terms(i, -S::one()));
            lp.constrain(covered, Relation::Le, net.external(i).clone());
            if solvent.contains(&i) {
                lp.constrain(assets, Relation::Ge, total - net.external(i).clone());
            }
        }
        lp
    }

    fn spend(&self) -> Vec<(usize, S)> {
        (0..self.net.len()).map(|i| (i, S::one())).collect()
    }

    fn liquidity(&self) -> Vec<(usize, S)> {
        let n = self.net.len();
        (0..n).map(|i| (n + i, S::one())).collect()
    }

    fn min_spend(&self, lp: &LinearProgram<S>) -> Option<S> {
        lp.minimize(&self.spend()).optimal().map(|(_, v)| v)
    }
}

fn initial_defaults<S: Scalar>(net: &FinancialNetwork<S>) -> Result<Vec<usize>> {
    let defaults: Vec<usize> = greatest_clearing(net)?.defaults.into_iter().collect();
    if defaults.len() > MAX_ENUMERATED_DEFAULTS {
        return Err(Error::GuardExceeded {
            what: "solvency configuration enumeration",
            limit: MAX_ENUMERATED_DEFAULTS,
            actual: defaults.len(),
        });
    }
    Ok(defaults)
}

/// Visits every set of rescued banks (subsets of `candidates`, excluded
/// branch first) whose relaxed budget bound passes `keep`.
fn visit_rescues<S: Scalar>(
    config: &Configuration<'_, S>,
    base: &BTreeSet<usize>,
    candidates: &[usize],
    keep: &mut dyn FnMut(&S) -> bool,
    visit: &mut dyn FnMut(&BTreeSet<usize>) -> Result<()>,
) -> Result<()> {
    fn walk<S: Scalar>(
        config: &Configuration<'_, S>,
        solvent: &mut BTreeSet<usize>,
        rest: &[usize],
        keep: &mut dyn FnMut(&S) -> bool,
        visit: &mut dyn FnMut(&BTreeSet<usize>) -> Result<()>,
    ) -> Result<()> {
        let Some((&head, tail)) = rest.split_first() else {
            return visit(solvent);
        };
        walk(config, solvent, tail, keep, visit)?;
        solvent.insert(head);
        let bound = config.min_spend(&config.relaxed(solvent));
        if bound.as_ref().is_some_and(&mut *keep) {
            walk(config, solvent, tail, keep, visit)?;
        }
        solvent.remove(&head);
        Ok(())
    }
    let mut solvent = base.clone();
    walk(config, &mut solvent, candidates, keep, visit)
}

/// Exact liquidity-maximizing injections for any default costs.
pub fn optimal_injections_enumerative<S: Scalar>(
    net: &FinancialNetwork<S>,
    budget: &S,
) -> Result<(InjectionPlan<S>, ClearingResult<S>)> {
    net.ensure_valid()?;
    ensure_budget(budget)?;
    let defaults = initial_defaults(net)?;
    let base: BTreeSet<usize> = (0..net.len()).filter(|i| !defaults.contains(i)).collect();
    let config = Configuration::new(net);
    let mut best: Option<(S, Vec<S>)> = None;
    visit_rescues(&config, &base, &defaults, &mut |bound| bound.tol_le(budget), &mut |solvent| {
        let mut lp = config.exact(solvent);
        lp.constrain(config.spend(), Relation::Le, budget.clone());
        if let LpOutcome::Optimal { x, value } = lp.maximize(&config.liquidity()) {
            if best.as_ref().is_none_or(|(b, _)| value.tol_gt(b)) {
                best = Some((value, x[..net.len()].to_vec()));
            }
        }
        Ok(())
    })?;
    let (_, x) = best.ok_or_else(|| Error::Infeasible("no solvency configuration fits the budget".into()))?;
    let plan = plan_from_vector(&x, budget);
    let clearing = greatest_clearing(&net.inject_externals(&plan)?)?;
    Ok((plan, clearing))
}

/// Least total injection after which `target` is solvent.
pub fn min_budget_solvency<S: Scalar>(net: &FinancialNetwork<S>, target: usize) -> Result<S> {
    net.ensure_valid()?;
    net.ensure_bank(target)?;
    let defaults = initial_defaults(net)?;
    if !defaults.contains(&target) {
        return Ok(S::zero());
    }
    let mut base: BTreeSet<usize> = (0..net.len()).filter(|i| !defaults.contains(i)).collect();
    base.insert(target);
    let others: Vec<usize> = defaults.iter().copied().filter(|&i| i != target).collect();
    let config = Configuration::new(net);
    if config.min_spend(&config.relaxed(&base)).is_none() {
        return Err(Error::Infeasible(format!("bank {target} cannot be made solvent")));
    }
    let best = std::cell::RefCell::new(None::<S>);
    visit_rescues(
        &config,
        &base,
        &others,
        &mut |bound| best.borrow().as_ref().is_none_or(|b| bound.tol_lt(b)),
        &mut |solvent| {
            if let Some(v) = config.min_spend(&config.exact(solvent)) {
                let mut slot = best.borrow_mut();
                if slot.as_ref().is_none_or(|b| v.tol_lt(b)) {
                    *slot = Some(v);
                }
            }
            Ok(())
        },
    )?;
    best.into_inner().ok_or_else(|| Error::Infeasible(format!("bank {target} cannot be made solvent")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio, Rational};

    fn chain(costs: (Rational, Rational)) -> FinancialNetwork<Rational> {
        // 2 -> 1 -> 0 with liabilities 2 and 1; bank 2 holds 1.
        FinancialNetwork::from_edges(vec![int(0), int(0), int(1)], [(2, 1, int(2)), (1, 0, int(1))], costs.0, costs.1)
            .unwrap()
    }

    #[test]
    fn shift_on_chain() {
        let net = chain((int(1), int(1)));
        // Bank 2 pays 1; bank 1 then pays 1 in full, so only bank 2 defaults.
        assert_eq!(min_shift_amount(&net, 2).unwrap(), ShiftAmount::Finite(int(1)));
        assert_eq!(min_shift_amount(&net, 1).unwrap(), ShiftAmount::Unbounded);
    }

    #[test]
    fn greedy_spends_until_solvent() {
        let net = chain((int(1), int(1)));
        let out = greedy_injections(&net, &int(3)).unwrap();
        assert_eq!(out.plan.transfers, vec![(2, int(1))]);
        assert!(out.clearing.defaults.is_empty());
        assert_eq!(out.trace[0].threat, vec![int(0), int(0), int(1)]);
    }

    #[test]
    fn lp_zero_budget_is_plain_clearing() {
        let net = chain((int(1), int(1)));
        let (plan, clearing) = optimal_injections_lp(&net, &int(0)).unwrap();
        assert!(plan.transfers.is_empty());
        assert_eq!(clearing, greatest_clearing(&net).unwrap());
    }

    #[test]
    fn lp_rejects_default_costs_and_negative_budget() {
        let net = chain((ratio(1, 2), int(1)));
        assert!(matches!(optimal_injections_lp(&net, &int(1)), Err(Error::DefaultCostsUnsupported { .. })));
        let free = chain((int(1), int(1)));
        assert!(matches!(optimal_injections_lp(&free, &int(-1)), Err(Error::NegativeBudget(_))));
    }

    #[test]
    fn enumerative_matches_lp_without_costs() {
        let net = chain((int(1), int(1)));
        for m in [ratio(1, 2), int(1), int(2)] {
            let (_, a) = optimal_injections_lp(&net, &m).unwrap();
            let (_, b) = optimal_injections_enumerative(&net, &m).unwrap();
            assert_eq!(a.liquidity, b.liquidity);
        }
    }

    #[test]
    fn enumerative_with_costs_beats_naive_plans() {
        let net = chain((ratio(1, 2), ratio(1, 2)));
        let m = int(1);
        let (plan, best) = optimal_injections_enumerative(&net, &m).unwrap();
        assert!(plan.total() <= m);
        for bank in 0..3 {
            let other = greatest_clearing(&net.with_external(bank, net.external(bank).clone() + m.clone())).unwrap();
            assert!(other.liquidity <= best.liquidity);
        }
    }

    #[test]
    fn isolated_gap() {
        let net: FinancialNetwork<Rational> =
            FinancialNetwork::without_costs(vec![int(1), int(0)], [(0, 1, int(3))]).unwrap();
        assert_eq!(min_budget_solvency(&net, 0).unwrap(), int(2));
        assert_eq!(min_budget_solvency(&net, 1).unwrap(), int(0));
    }

    #[test]
    fn min_budget_with_costs() {
        // alpha = 1/2: bank 0 must reach 3 on its own, the lost half does not matter once solvent.
        let net: FinancialNetwork<Rational> =
            FinancialNetwork::from_edges(vec![int(1), int(0)], [(0, 1, int(3))], ratio(1, 2), int(1)).unwrap();
        assert_eq!(min_budget_solvency(&net, 0).unwrap(), int(2));
    }
}
