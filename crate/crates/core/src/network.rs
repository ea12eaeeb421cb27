//! Financial network data model and transformations.
//!
//! Banks are identified by zero-based index. `liabilities[i][j]` is the debt
//! of borrower `i` towards lender `j`; a defaulting bank can use an `alpha`
//! fraction of its external assets and a `beta` fraction of its incoming
//! payments.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{convert, Scalar};

/// A directed debt contract: `borrower` owes `lender`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub borrower: usize,
    pub lender: usize,
}

impl Edge {
    pub fn new(borrower: usize, lender: usize) -> Self {
        Self { borrower, lender }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.borrower, self.lender)
    }
}

pub type EdgeSet = BTreeSet<Edge>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    ShapeMismatch { externals: usize, rows: usize },
    NegativeExternal { bank: usize },
    NegativeLiability { borrower: usize, lender: usize },
    NonFinite { what: String },
    SelfLiability { bank: usize },
    AlphaOutOfRange,
    BetaOutOfRange,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ShapeMismatch { externals, rows } => {
                write!(f, "{externals} externals but a {rows}-row liability matrix")
            }
            Violation::NegativeExternal { bank } => write!(f, "negative external assets at bank {bank}"),
            Violation::NegativeLiability { borrower, lender } => {
                write!(f, "negative liability from {borrower} to {lender}")
            }
            Violation::NonFinite { what } => write!(f, "non-finite value in {what}"),
            Violation::SelfLiability { bank } => write!(f, "nonzero diagonal liability at bank {bank}"),
            Violation::AlphaOutOfRange => write!(f, "alpha out of range [0, 1]"),
            Violation::BetaOutOfRange => write!(f, "beta out of range [0, 1]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinancialNetwork<S> {
    externals: Vec<S>,
    liabilities: Vec<Vec<S>>,
    alpha: S,
    beta: S,
}

impl<S: Scalar> FinancialNetwork<S> {
    /// Builds a network and rejects it unless every invariant holds.
    pub fn new(externals: Vec<S>, liabilities: Vec<Vec<S>>, alpha: S, beta: S) -> Result<Self> {
        let net = Self::new_unchecked(externals, liabilities, alpha, beta);
        net.ensure_valid()?;
        Ok(net)
    }

    pub fn new_unchecked(externals: Vec<S>, liabilities: Vec<Vec<S>>, alpha: S, beta: S) -> Self {
        Self { externals, liabilities, alpha, beta }
    }

    /// Builds a network from an edge list. Repeated pairs are summed.
    pub fn from_edges<I>(externals: Vec<S>, edges: I, alpha: S, beta: S) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, S)>,
    {
        let n = externals.len();
        let mut liabilities = vec![vec![S::zero(); n]; n];
        for (borrower, lender, amount) in edges {
            if borrower >= n {
                return Err(Error::BankOutOfRange(borrower));
            }
            if lender >= n {
                return Err(Error::BankOutOfRange(lender));
            }
            liabilities[borrower][lender] = liabilities[borrower][lender].clone() + amount;
        }
        Self::new(externals, liabilities, alpha, beta)
    }

    /// A network without default costs.
    pub fn without_costs<I>(externals: Vec<S>, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, S)>,
    {
        Self::from_edges(externals, edges, S::one(), S::one())
    }

    pub fn len(&self) -> usize {
        self.externals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.externals.is_empty()
    }

    pub fn externals(&self) -> &[S] {
        &self.externals
    }

    pub fn external(&self, bank: usize) -> &S {
        &self.externals[bank]
    }

    pub fn liabilities(&self) -> &[Vec<S>] {
        &self.liabilities
    }

    pub fn liability(&self, borrower: usize, lender: usize) -> &S {
        &self.liabilities[borrower][lender]
    }

    pub fn alpha(&self) -> &S {
        &self.alpha
    }

    pub fn beta(&self) -> &S {
        &self.beta
    }

    pub fn has_default_costs(&self) -> bool {
        !(self.alpha.tol_eq(&S::one()) && self.beta.tol_eq(&S::one()))
    }

    pub fn with_default_costs(&self, alpha: S, beta: S) -> Self {
        Self { alpha, beta, ..self.clone() }
    }

    pub fn total_liabilities(&self, bank: usize) -> S {
        self.liabilities[bank].iter().cloned().sum()
    }

    pub fn total_liabilities_all(&self) -> Vec<S> {
        (0..self.len()).map(|i| self.total_liabilities(i)).collect()
    }

    pub fn has_edge(&self, borrower: usize, lender: usize) -> bool {
        borrower < self.len() && lender < self.len() && self.liabilities[borrower][lender].is_positive_tol()
    }

    /// Every positive liability, in (borrower, lender) order.
    pub fn edges(&self) -> Vec<Edge> {
        let n = self.len();
        (0..n)
            .flat_map(|i| (0..n).map(move |j| Edge::new(i, j)))
            .filter(|e| self.has_edge(e.borrower, e.lender))
            .collect()
    }

    /// Borrowers owing `lender`, ascending.
    pub fn incoming(&self, lender: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.has_edge(i, lender)).collect()
    }

    pub fn outgoing(&self, borrower: usize) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.has_edge(borrower, j)).collect()
    }

    /// One descriptor per violated invariant; empty for a well-formed network.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.externals.len();
        if self.liabilities.len() != n || self.liabilities.iter().any(|row| row.len() != n) {
            out.push(Violation::ShapeMismatch { externals: n, rows: self.liabilities.len() });
            return out;
        }
        for (bank, e) in self.externals.iter().enumerate() {
            if !e.is_finite_value() {
                out.push(Violation::NonFinite { what: format!("external assets of bank {bank}") });
            } else if e.is_negative_tol() {
                out.push(Violation::NegativeExternal { bank });
            }
        }
        for (i, row) in self.liabilities.iter().enumerate() {
            for (j, l) in row.iter().enumerate() {
                if !l.is_finite_value() {
                    out.push(Violation::NonFinite { what: format!("liability ({i}, {j})") });
                } else if l.is_negative_tol() {
                    out.push(Violation::NegativeLiability { borrower: i, lender: j });
                } else if i == j && !l.is_zero_tol() {
                    out.push(Violation::SelfLiability { bank: i });
                }
            }
        }
        let unit = |x: &S| x.is_finite_value() && !x.is_negative_tol() && x.tol_le(&S::one());
        if !unit(&self.alpha) {
            out.push(Violation::AlphaOutOfRange);
        }
        if !unit(&self.beta) {
            out.push(Violation::BetaOutOfRange);
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidNetwork(violations))
        }
    }

    pub fn ensure_bank(&self, bank: usize) -> Result<()> {
        if bank < self.len() {
            Ok(())
        } else {
            Err(Error::BankOutOfRange(bank))
        }
    }

    /// Relative liability matrix: `l_ij / L_i`, or a zero row when `L_i = 0`.
    pub fn relative_liabilities(&self) -> Vec<Vec<S>> {
        (0..self.len())
            .map(|i| {
                let total = self.total_liabilities(i);
                if total.is_positive_tol() {
                    self.liabilities[i].iter().map(|l| l.clone() / total.clone()).collect()
                } else {
                    vec![S::zero(); self.len()]
                }
            })
            .collect()
    }

    /// The network with every edge removed by `profile` set to zero.
    /// Edges that are already zero stay zero.
    pub fn apply_removals(&self, profile: &StrategyProfile) -> Result<Self> {
        if profile.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: profile.len() });
        }
        let mut out = self.clone();
        for edge in profile.removed_edges() {
            out.liabilities[edge.borrower][edge.lender] = S::zero();
        }
        Ok(out)
    }

    pub fn remove_edges<'a, I>(&self, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Edge>,
    {
        let mut out = self.clone();
        for edge in edges {
            if !self.has_edge(edge.borrower, edge.lender) {
                return Err(Error::NotAnEdge { borrower: edge.borrower, lender: edge.lender });
            }
            out.liabilities[edge.borrower][edge.lender] = S::zero();
        }
        Ok(out)
    }

    /// Adds each transfer of `plan` to the recipient's external assets.
    pub fn inject_externals(&self, plan: &InjectionPlan<S>) -> Result<Self> {
        let mut out = self.clone();
        for (bank, amount) in &plan.transfers {
            self.ensure_bank(*bank)?;
            if amount.is_negative_tol() {
                return Err(Error::NegativeAmount { bank: *bank, amount: amount.to_canonical() });
            }
            out.externals[*bank] = out.externals[*bank].clone() + amount.clone();
        }
        Ok(out)
    }

    pub fn inject_vector(&self, amounts: &[S]) -> Result<Self> {
        if amounts.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: amounts.len() });
        }
        let transfers = amounts.iter().cloned().enumerate().collect();
        self.inject_externals(&InjectionPlan { transfers, budget: amounts.iter().cloned().sum() })
    }

    /// Multiplies every external asset and liability by `factor`.
    pub fn scaled(&self, factor: &S) -> Self {
        Self {
            externals: self.externals.iter().map(|e| e.clone() * factor.clone()).collect(),
            liabilities: self
                .liabilities
                .iter()
                .map(|row| row.iter().map(|l| l.clone() * factor.clone()).collect())
                .collect(),
            alpha: self.alpha.clone(),
            beta: self.beta.clone(),
        }
    }

    pub fn with_external(&self, bank: usize, value: S) -> Self {
        let mut out = self.clone();
        out.externals[bank] = value;
        out
    }

    /// Same network in another numeric backend.
    pub fn convert<T: Scalar>(&self) -> FinancialNetwork<T> {
        FinancialNetwork {
            externals: self.externals.iter().map(convert).collect(),
            liabilities: self.liabilities.iter().map(|row| row.iter().map(convert).collect()).collect(),
            alpha: convert(&self.alpha),
            beta: convert(&self.beta),
        }
    }
}

/// Per lender, the borrowers whose debt it forgives.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StrategyProfile {
    removed: Vec<BTreeSet<usize>>,
}

impl StrategyProfile {
    pub fn keep_all(n: usize) -> Self {
        Self { removed: vec![BTreeSet::new(); n] }
    }

    pub fn from_edges<'a, I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Edge>,
    {
        let mut profile = Self::keep_all(n);
        for edge in edges {
            if edge.borrower >= n || edge.lender >= n {
                return Err(Error::BankOutOfRange(edge.borrower.max(edge.lender)));
            }
            profile.removed[edge.lender].insert(edge.borrower);
        }
        Ok(profile)
    }

    pub fn len(&self) -> usize {
        self.removed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.removed.is_empty()
    }

    pub fn strategy(&self, bank: usize) -> &BTreeSet<usize> {
        &self.removed[bank]
    }

    pub fn with_strategy(&self, bank: usize, removed: BTreeSet<usize>) -> Self {
        let mut out = self.clone();
        out.removed[bank] = removed;
        out
    }

    pub fn removed_edges(&self) -> Vec<Edge> {
        let mut edges: Vec<Edge> = self
            .removed
            .iter()
            .enumerate()
            .flat_map(|(lender, set)| set.iter().map(move |&b| Edge::new(b, lender)))
            .collect();
        edges.sort();
        edges
    }

    pub fn removal_count(&self) -> usize {
        self.removed.iter().map(BTreeSet::len).sum()
    }

    /// Checks that every removal is one of the lender's own incoming edges.
    pub fn validate_for<S: Scalar>(&self, net: &FinancialNetwork<S>) -> Result<()> {
        if self.len() != net.len() {
            return Err(Error::DimensionMismatch { expected: net.len(), found: self.len() });
        }
        for edge in self.removed_edges() {
            if !net.has_edge(edge.borrower, edge.lender) {
                return Err(Error::NotAnEdge { borrower: edge.borrower, lender: edge.lender });
            }
        }
        Ok(())
    }
}

impl fmt::Display for StrategyProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edges = self.removed_edges();
        if edges.is_empty() {
            return write!(f, "keep-all");
        }
        let parts: Vec<String> = edges.iter().map(|e| format!("{}>{}", e.borrower, e.lender)).collect();
        write!(f, "remove[{}]", parts.join(","))
    }
}

/// Ordered cash transfers from the regulator, limited by `budget`.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectionPlan<S> {
    pub transfers: Vec<(usize, S)>,
    pub budget: S,
}

impl<S: Scalar> InjectionPlan<S> {
    pub fn empty(budget: S) -> Self {
        Self { transfers: Vec::new(), budget }
    }

    pub fn total(&self) -> S {
        self.transfers.iter().map(|(_, a)| a.clone()).sum()
    }

    /// Per-bank totals.
    pub fn per_bank(&self, n: usize) -> Vec<S> {
        let mut out = vec![S::zero(); n];
        for (bank, amount) in &self.transfers {
            out[*bank] = out[*bank].clone() + amount.clone();
        }
        out
    }
}
