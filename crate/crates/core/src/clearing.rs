//! Clearing payments under proportional repayment with default costs.
//!
//! [`greatest_clearing`] runs the fictitious-default scheme: start from the
//! all-solvent hypothesis, and in each round fix the default set implied by
//! the current payments and solve the resulting linear system for the
//! defaulting banks. The default set only grows, so at most `n` rounds run.
//! Each round computes the greatest fixed point of the linear map restricted
//! to the current default set (below the previous iterate), which is what
//! makes the final vector the pointwise-greatest clearing vector.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::network::FinancialNetwork;
use crate::scalar::Scalar;

/// Picard fallback settings (float mode).
pub const PICARD_TOLERANCE: f64 = 1e-12;
pub const PICARD_MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ClearingResult<S> {
    pub payments: Vec<Vec<S>>,
    pub assets: Vec<S>,
    pub defaults: BTreeSet<usize>,
    pub liquidity: S,
}

impl<S: Scalar> ClearingResult<S> {
    /// Builds the full result from per-bank outgoing totals.
    pub fn from_outflows(net: &FinancialNetwork<S>, outflows: &[S]) -> Self {
        let pi = net.relative_liabilities();
        let n = net.len();
        let payments: Vec<Vec<S>> =
            (0..n).map(|i| (0..n).map(|j| outflows[i].clone() * pi[i][j].clone()).collect()).collect();
        Self::from_payments(net, payments)
    }

    pub fn from_payments(net: &FinancialNetwork<S>, payments: Vec<Vec<S>>) -> Self {
        let n = net.len();
        let assets: Vec<S> =
            (0..n).map(|i| net.external(i).clone() + (0..n).map(|j| payments[j][i].clone()).sum::<S>()).collect();
        let defaults = (0..n).filter(|&i| assets[i].tol_lt(&net.total_liabilities(i))).collect();
        let liquidity = payments.iter().flatten().cloned().sum();
        Self { payments, assets, defaults, liquidity }
    }

    pub fn len(&self) -> usize {
        self.assets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assets.is_empty()
    }

    pub fn outflows(&self) -> Vec<S> {
        self.payments.iter().map(|row| row.iter().cloned().sum()).collect()
    }

    pub fn payment(&self, borrower: usize, lender: usize) -> &S {
        &self.payments[borrower][lender]
    }

    pub fn is_defaulting(&self, bank: usize) -> bool {
        self.defaults.contains(&bank)
    }
}

/// Incoming amounts implied by outgoing totals `p` split along `pi`.
fn inflows<S: Scalar>(pi: &[Vec<S>], p: &[S]) -> Vec<S> {
    let n = p.len();
    (0..n).map(|i| (0..n).map(|j| pi[j][i].clone() * p[j].clone()).sum()).collect()
}

fn default_set<S: Scalar>(net: &FinancialNetwork<S>, pi: &[Vec<S>], totals: &[S], p: &[S]) -> BTreeSet<usize> {
    let inflow = inflows(pi, p);
    (0..net.len()).filter(|&i| (net.external(i).clone() + inflow[i].clone()).tol_lt(&totals[i])).collect()
}

/// One application of the clearing map to a vector of outgoing totals.
pub fn phi<S: Scalar>(net: &FinancialNetwork<S>, p: &[S]) -> Result<Vec<S>> {
    net.ensure_valid()?;
    if p.len() != net.len() {
        return Err(Error::DimensionMismatch { expected: net.len(), found: p.len() });
    }
    let totals = net.total_liabilities_all();
    for (i, v) in p.iter().enumerate() {
        if v.is_negative_tol() || v.tol_gt(&totals[i]) {
            return Err(Error::InvalidInput(format!("payment {v} of bank {i} outside [0, L_i]")));
        }
    }
    let pi = net.relative_liabilities();
    Ok(phi_inner(net, &pi, &totals, p))
}

fn phi_inner<S: Scalar>(net: &FinancialNetwork<S>, pi: &[Vec<S>], totals: &[S], p: &[S]) -> Vec<S> {
    let inflow = inflows(pi, p);
    (0..net.len())
        .map(|i| {
            let e = net.external(i).clone();
            if totals[i].tol_le(&(e.clone() + inflow[i].clone())) {
                totals[i].clone()
            } else {
                net.alpha().clone() * e + net.beta().clone() * inflow[i].clone()
            }
        })
        .collect()
}

/// The pointwise-greatest clearing payments.
pub fn greatest_clearing<S: Scalar>(net: &FinancialNetwork<S>) -> Result<ClearingResult<S>> {
    net.ensure_valid()?;
    let outflows = greatest_outflows(net)?;
    Ok(ClearingResult::from_outflows(net, &outflows))
}

fn greatest_outflows<S: Scalar>(net: &FinancialNetwork<S>) -> Result<Vec<S>> {
    let n = net.len();
    let pi = net.relative_liabilities();
    let totals = net.total_liabilities_all();
    let mut p = totals.clone();
    let mut defaults = BTreeSet::new();
    for _ in 0..=n {
        let next = default_set(net, &pi, &totals, &p);
        if next == defaults {
            return Ok(p);
        }
        defaults = next;
        match restricted_greatest(net, &pi, &totals, &defaults, &p) {
            Ok(q) => p = q,
            Err(Error::Singular { .. }) if !S::EXACT => return picard(net, &pi, &totals, totals.clone()),
            Err(e) => return Err(e),
        }
    }
    // The default set is monotone, so it stabilizes within n + 1 rounds.
    Err(Error::NonConvergence { iterations: n + 1 })
}

/// Greatest fixed point, below `upper`, of the map where banks outside
/// `defaults` pay in full and defaulting banks pay `alpha e + beta inflow`.
fn restricted_greatest<S: Scalar>(
    net: &FinancialNetwork<S>,
    pi: &[Vec<S>],
    totals: &[S],
    defaults: &BTreeSet<usize>,
    upper: &[S],
) -> Result<Vec<S>> {
    let members: Vec<usize> = defaults.iter().copied().collect();
    let (matrix, rhs) = restricted_system(net, pi, totals, &members);
    let solved = match linalg::solve(&matrix, &rhs, "default-set payment system") {
        Ok(x) => x,
        Err(Error::Singular { context }) if S::EXACT => {
            // A closed defaulting class with beta = 1: take the greatest
            // solution of the inequality system instead.
            let mut lp = LinearProgram::new(members.len());
            for (k, row) in matrix.iter().enumerate() {
                let coeffs = row.iter().cloned().enumerate().filter(|(_, c)| !c.is_zero_tol()).collect();
                lp.constrain(coeffs, Relation::Le, rhs[k].clone());
                lp.constrain(vec![(k, S::one())], Relation::Le, upper[members[k]].clone());
            }
            let objective: Vec<(usize, S)> = (0..members.len()).map(|k| (k, S::one())).collect();
            match lp.maximize(&objective) {
                LpOutcome::Optimal { x, .. } => x,
                _ => return Err(Error::Singular { context }),
            }
        }
        Err(e) => return Err(e),
    };
    let mut p = totals.to_vec();
    for (k, &i) in members.iter().enumerate() {
        p[i] = solved[k].clone();
    }
    Ok(p)
}

/// `(I - beta * Pi_DD^T) x = alpha e_D + beta * inflow from banks paying in full`.
fn restricted_system<S: Scalar>(
    net: &FinancialNetwork<S>,
    pi: &[Vec<S>],
    totals: &[S],
    members: &[usize],
) -> (Vec<Vec<S>>, Vec<S>) {
    let beta = net.beta().clone();
    let in_set: BTreeSet<usize> = members.iter().copied().collect();
    let matrix = members
        .iter()
        .map(|&i| {
            members
                .iter()
                .map(|&j| {
                    let identity = if i == j { S::one() } else { S::zero() };
                    identity - beta.clone() * pi[j][i].clone()
                })
                .collect()
        })
        .collect();
    let rhs = members
        .iter()
        .map(|&i| {
            let fixed: S =
                (0..net.len()).filter(|j| !in_set.contains(j)).map(|j| pi[j][i].clone() * totals[j].clone()).sum();
            net.alpha().clone() * net.external(i).clone() + beta.clone() * fixed
        })
        .collect();
    (matrix, rhs)
}

fn picard<S: Scalar>(net: &FinancialNetwork<S>, pi: &[Vec<S>], totals: &[S], start: Vec<S>) -> Result<Vec<S>> {
    let mut p = start;
    for _ in 0..PICARD_MAX_ITERATIONS {
        let next = phi_inner(net, pi, totals, &p);
        let delta = next.iter().zip(&p).map(|(a, b)| (a.to_f64() - b.to_f64()).abs()).fold(0.0, f64::max);
        p = next;
        if delta <= PICARD_TOLERANCE {
            return Ok(p);
        }
    }
    Err(Error::NonConvergence { iterations: PICARD_MAX_ITERATIONS })
}

/// The pointwise-least clearing payments (monotone iteration from zero,
/// accelerated by solving for the limit whenever the solvent set is fixed).
pub fn least_clearing<S: Scalar>(net: &FinancialNetwork<S>) -> Result<ClearingResult<S>> {
    net.ensure_valid()?;
    let n = net.len();
    let pi = net.relative_liabilities();
    let totals = net.total_liabilities_all();
    let mut p = vec![S::zero(); n];
    let mut steps = 0usize;
    loop {
        let defaulting = default_set(net, &pi, &totals, &p);
        let members: Vec<usize> = defaulting.iter().copied().collect();
        if let Some(limit) = restricted_least(net, &pi, &totals, &members, &p) {
            let inflow = inflows(&pi, &limit);
            let stays_below = members.iter().all(|&i| (net.external(i).clone() + inflow[i].clone()).tol_le(&totals[i]));
            if stays_below {
                let next = phi_inner(net, &pi, &totals, &limit);
                if next.iter().zip(&limit).all(|(a, b)| a.tol_eq(b)) {
                    return Ok(ClearingResult::from_outflows(net, &limit));
                }
                p = next;
                continue;
            }
        }
        // Some defaulting bank crosses its threshold after finitely many steps.
        loop {
            p = phi_inner(net, &pi, &totals, &p);
            steps += 1;
            if steps > PICARD_MAX_ITERATIONS {
                return Err(Error::NonConvergence { iterations: steps });
            }
            if default_set(net, &pi, &totals, &p) != defaulting {
                break;
            }
        }
    }
}

/// Least fixed point, above `lower`, of the map where the banks outside
/// `members` pay in full; `None` when no such fixed point exists.
fn restricted_least<S: Scalar>(
    net: &FinancialNetwork<S>,
    pi: &[Vec<S>],
    totals: &[S],
    members: &[usize],
    lower: &[S],
) -> Option<Vec<S>> {
    let (matrix, rhs) = restricted_system(net, pi, totals, members);
    let solved = match linalg::solve(&matrix, &rhs, "solvent-set payment system") {
        Ok(x) => x,
        Err(_) => {
            let mut lp = LinearProgram::new(members.len());
            for (k, row) in matrix.iter().enumerate() {
                let coeffs = row.iter().cloned().enumerate().filter(|(_, c)| !c.is_zero_tol()).collect();
                lp.constrain(coeffs, Relation::Ge, rhs[k].clone());
                lp.constrain(vec![(k, S::one())], Relation::Ge, lower[members[k]].clone());
            }
            let objective: Vec<(usize, S)> = (0..members.len()).map(|k| (k, S::one())).collect();
            lp.minimize(&objective).optimal()?.0
        }
    };
    let mut p = totals.to_vec();
    for (k, &i) in members.iter().enumerate() {
        p[i] = solved[k].clone();
    }
    Some(p)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ClearingViolation {
    Dimension,
    NegativePayment {
        borrower: usize,
        lender: usize,
    },
    ExceedsLiability {
        borrower: usize,
        lender: usize,
    },
    /// A defaulting bank pays more than its usable assets.
    LimitedLiability {
        bank: usize,
        available: String,
        paid: String,
    },
    /// A bank withholds money it owes: a solvent bank not paying in full, or
    /// a defaulting bank paying less than its usable assets.
    AbsolutePriority {
        bank: usize,
    },
    Proportionality {
        borrower: usize,
        lender: usize,
    },
}

impl fmt::Display for ClearingViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClearingViolation::Dimension => write!(f, "payment matrix has the wrong shape"),
            ClearingViolation::NegativePayment { borrower, lender } => {
                write!(f, "negative payment {borrower} -> {lender}")
            }
            ClearingViolation::ExceedsLiability { borrower, lender } => {
                write!(f, "payment {borrower} -> {lender} exceeds the liability")
            }
            ClearingViolation::LimitedLiability { bank, available, paid } => {
                write!(f, "bank {bank} pays {paid} but only {available} is available")
            }
            ClearingViolation::AbsolutePriority { bank } => write!(f, "bank {bank} withholds payable funds"),
            ClearingViolation::Proportionality { borrower, lender } => {
                write!(f, "payment {borrower} -> {lender} is not proportional")
            }
        }
    }
}

/// Checks limited liability, absolute priority and proportionality.
/// Returns every violation found; an empty list means `payments` clears.
pub fn check_clearing<S: Scalar>(net: &FinancialNetwork<S>, payments: &[Vec<S>]) -> Vec<ClearingViolation> {
    let n = net.len();
    if payments.len() != n || payments.iter().any(|row| row.len() != n) {
        return vec![ClearingViolation::Dimension];
    }
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let p = &payments[i][j];
            if p.is_negative_tol() {
                out.push(ClearingViolation::NegativePayment { borrower: i, lender: j });
            } else if p.tol_gt(net.liability(i, j)) {
                out.push(ClearingViolation::ExceedsLiability { borrower: i, lender: j });
            }
        }
    }
    let pi = net.relative_liabilities();
    for i in 0..n {
        let inflow: S = (0..n).map(|j| payments[j][i].clone()).sum();
        let paid: S = payments[i].iter().cloned().sum();
        let total = net.total_liabilities(i);
        let assets = net.external(i).clone() + inflow.clone();
        if total.tol_le(&assets) {
            if (0..n).any(|j| payments[i][j].tol_lt(net.liability(i, j))) {
                out.push(ClearingViolation::AbsolutePriority { bank: i });
            }
            continue;
        }
        let available = net.alpha().clone() * net.external(i).clone() + net.beta().clone() * inflow;
        if paid.tol_gt(&available) {
            out.push(ClearingViolation::LimitedLiability {
                bank: i,
                available: available.to_canonical(),
                paid: paid.to_canonical(),
            });
        } else if paid.tol_lt(&available) {
            out.push(ClearingViolation::AbsolutePriority { bank: i });
        }
        for j in 0..n {
            if !payments[i][j].tol_eq(&(paid.clone() * pi[i][j].clone())) {
                out.push(ClearingViolation::Proportionality { borrower: i, lender: j });
            }
        }
    }
    out
}

/// `true` iff `payments` is a clearing matrix of `net`.
pub fn is_clearing<S: Scalar>(net: &FinancialNetwork<S>, payments: &[Vec<S>]) -> (bool, Vec<ClearingViolation>) {
    let violations = check_clearing(net, payments);
    (violations.is_empty(), violations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio, Rational};

    fn chain3(e0: i64) -> FinancialNetwork<Rational> {
        FinancialNetwork::from_edges(
            vec![int(e0), int(0), int(0)],
            [(0, 1, int(3)), (1, 2, int(2))],
            ratio(1, 2),
            ratio(3, 4),
        )
        .unwrap()
    }

    #[test]
    fn solvent_fixed_point() {
        let net = FinancialNetwork::without_costs(vec![int(5), int(0)], [(0, 1, int(3)), (1, 0, int(1))]).unwrap();
        let totals = net.total_liabilities_all();
        assert_eq!(phi(&net, &totals).unwrap(), totals);
        let res = greatest_clearing(&net).unwrap();
        assert!(res.defaults.is_empty());
        assert_eq!(res.liquidity, int(4));
    }

    #[test]
    fn zero_everything_maps_to_zero() {
        let net = FinancialNetwork::without_costs(vec![int(0), int(0)], [(0, 1, int(3))]).unwrap();
        assert_eq!(phi(&net, &[int(0), int(0)]).unwrap(), vec![int(0), int(0)]);
    }

    #[test]
    fn phi_rejects_out_of_range_input() {
        let net = FinancialNetwork::without_costs(vec![int(0), int(0)], [(0, 1, int(3))]).unwrap();
        assert!(phi(&net, &[int(4), int(0)]).is_err());
    }

    #[test]
    fn empty_liabilities() {
        let net = FinancialNetwork::without_costs(vec![int(1), int(2)], []).unwrap();
        let g = greatest_clearing(&net).unwrap();
        assert_eq!(g.liquidity, int(0));
        assert_eq!(least_clearing(&net).unwrap(), g);
    }

    #[test]
    fn two_cycle_greatest_and_least_differ() {
        let net = FinancialNetwork::without_costs(vec![int(0), int(0)], [(0, 1, int(1)), (1, 0, int(1))]).unwrap();
        let g = greatest_clearing(&net).unwrap();
        assert_eq!(g.payments, vec![vec![int(0), int(1)], vec![int(1), int(0)]]);
        let l = least_clearing(&net).unwrap();
        assert_eq!(l.liquidity, int(0));
        assert!(is_clearing(&net, &l.payments).0);
        assert!(is_clearing(&net, &g.payments).0);
    }

    #[test]
    fn chain_with_default_costs() {
        // Bank 0 has 2 but owes 3: pays alpha*2 = 1. Bank 1 receives 1 < 2: pays beta*1 = 3/4.
        let net = chain3(2);
        let g = greatest_clearing(&net).unwrap();
        assert_eq!(g.payments[0][1], int(1));
        assert_eq!(g.payments[1][2], ratio(3, 4));
        assert_eq!(g.defaults, BTreeSet::from([0, 1]));
        assert_eq!(least_clearing(&net).unwrap(), g);
    }

    #[test]
    fn bank_exactly_meeting_liabilities_is_solvent() {
        let net = chain3(3);
        let g = greatest_clearing(&net).unwrap();
        assert!(!g.is_defaulting(0));
        assert_eq!(g.payments[0][1], int(3));
        assert_eq!(g.payments[1][2], int(2));
    }

    #[test]
    fn closed_default_cycle_uses_lp_fallback() {
        // Bank 0 owes 2 to bank 1, bank 1 owes 1 to bank 0 and 1 to bank 2,
        // bank 2 owes 4 to bank 0; alpha = 0 leaves only circulating money.
        let net = FinancialNetwork::from_edges(
            vec![int(0), int(0), int(1)],
            [(0, 1, int(2)), (1, 0, int(1)), (1, 2, int(1)), (2, 0, int(4))],
            int(0),
            int(1),
        )
        .unwrap();
        let g = greatest_clearing(&net).unwrap();
        assert!(is_clearing(&net, &g.payments).0, "{:?}", check_clearing(&net, &g.payments));
        let l = least_clearing(&net).unwrap();
        assert!(is_clearing(&net, &l.payments).0);
        for i in 0..3 {
            for j in 0..3 {
                assert!(g.payments[i][j] >= l.payments[i][j]);
            }
        }
    }

    #[test]
    fn perturbed_payment_violates_limited_liability() {
        let net = chain3(2);
        let mut p = greatest_clearing(&net).unwrap().payments;
        p[1][2] = int(1);
        let v = check_clearing(&net, &p);
        assert!(v.iter().any(|x| matches!(x, ClearingViolation::LimitedLiability { bank: 1, .. })));
    }

    #[test]
    fn float_mode_matches_exact() {
        let net = chain3(2);
        let exact = greatest_clearing(&net).unwrap();
        let float = greatest_clearing(&net.convert::<f64>()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((exact.payments[i][j].to_f64() - float.payments[i][j]).abs() < 1e-9);
            }
        }
    }
}
