//! Dense two-phase primal simplex with Bland's rule.
//!
//! Works over any [`Scalar`]; with the exact backend every pivot is exact and
//! Bland's rule guarantees termination. Variables are implicitly `>= 0`.

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
struct Constraint<S> {
    coeffs: Vec<(usize, S)>,
    relation: Relation,
    rhs: S,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<S> {
    Optimal { x: Vec<S>, value: S },
    Infeasible,
    Unbounded,
}

impl<S> LpOutcome<S> {
    pub fn optimal(self) -> Option<(Vec<S>, S)> {
        match self {
            LpOutcome::Optimal { x, value } => Some((x, value)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LinearProgram<S> {
    num_vars: usize,
    constraints: Vec<Constraint<S>>,
}

impl<S: Scalar> LinearProgram<S> {
    pub fn new(num_vars: usize) -> Self {
        Self { num_vars, constraints: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn add_var(&mut self) -> usize {
        self.num_vars += 1;
        self.num_vars - 1
    }

    /// Adds `sum(coeff * x[var]) relation rhs`. Repeated variables are summed.
    pub fn constrain(&mut self, coeffs: Vec<(usize, S)>, relation: Relation, rhs: S) -> &mut Self {
        debug_assert!(coeffs.iter().all(|(v, _)| *v < self.num_vars));
        self.constraints.push(Constraint { coeffs, relation, rhs });
        self
    }

    pub fn maximize(&self, objective: &[(usize, S)]) -> LpOutcome<S> {
        let mut cost = vec![S::zero(); self.num_vars];
        for (v, c) in objective {
            cost[*v] = cost[*v].clone() + c.clone();
        }
        Tableau::build(self).solve(cost)
    }

    pub fn minimize(&self, objective: &[(usize, S)]) -> LpOutcome<S> {
        let negated: Vec<(usize, S)> = objective.iter().map(|(v, c)| (*v, -c.clone())).collect();
        match self.maximize(&negated) {
            LpOutcome::Optimal { x, value } => LpOutcome::Optimal { x, value: -value },
            other => other,
        }
    }
}

struct Tableau<S> {
    rows: Vec<Vec<S>>,
    rhs: Vec<S>,
    basis: Vec<usize>,
    num_original: usize,
    first_artificial: usize,
    num_cols: usize,
}

impl<S: Scalar> Tableau<S> {
    fn build(lp: &LinearProgram<S>) -> Self {
        let n = lp.num_vars;
        let normalized: Vec<(Vec<S>, Relation, S)> = lp
            .constraints
            .iter()
            .map(|c| {
                let mut dense = vec![S::zero(); n];
                for (v, a) in &c.coeffs {
                    dense[*v] = dense[*v].clone() + a.clone();
                }
                if c.rhs.is_negative_tol() {
                    let flipped = match c.relation {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (dense.into_iter().map(|a| -a).collect(), flipped, -c.rhs.clone())
                } else {
                    (dense, c.relation, c.rhs.clone())
                }
            })
            .collect();

        let num_slack = normalized.iter().filter(|(_, r, _)| *r != Relation::Eq).count();
        let num_artificial = normalized.iter().filter(|(_, r, _)| *r != Relation::Le).count();
        let first_artificial = n + num_slack;
        let num_cols = first_artificial + num_artificial;

        let mut rows = Vec::with_capacity(normalized.len());
        let mut rhs = Vec::with_capacity(normalized.len());
        let mut basis = Vec::with_capacity(normalized.len());
        let (mut next_slack, mut next_art) = (n, first_artificial);
        for (dense, relation, b) in normalized {
            let mut row = dense;
            row.resize(num_cols, S::zero());
            match relation {
                Relation::Le => {
                    row[next_slack] = S::one();
                    basis.push(next_slack);
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -S::one();
                    next_slack += 1;
                    row[next_art] = S::one();
                    basis.push(next_art);
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = S::one();
                    basis.push(next_art);
                    next_art += 1;
                }
            }
            rows.push(row);
            rhs.push(b);
        }
        Self { rows, rhs, basis, num_original: n, first_artificial, num_cols }
    }

    fn solve(mut self, cost: Vec<S>) -> LpOutcome<S> {
        if self.first_artificial < self.num_cols {
            let mut phase1 = vec![S::zero(); self.num_cols];
            for c in phase1.iter_mut().skip(self.first_artificial) {
                *c = -S::one();
            }
            match self.optimize(&phase1, self.num_cols) {
                Some(value) if value.is_negative_tol() => return LpOutcome::Infeasible,
                Some(_) => {}
                None => unreachable!("phase one is bounded"),
            }
            self.evict_artificials();
        }
        let mut full_cost = cost;
        full_cost.resize(self.num_cols, S::zero());
        match self.optimize(&full_cost, self.first_artificial) {
            None => LpOutcome::Unbounded,
            Some(value) => {
                let mut x = vec![S::zero(); self.num_original];
                for (row, &var) in self.basis.iter().enumerate() {
                    if var < self.num_original {
                        x[var] = self.rhs[row].clone();
                    }
                }
                LpOutcome::Optimal { x, value }
            }
        }
    }

    /// Maximizes `cost` over columns `< allowed`; `None` when unbounded.
    fn optimize(&mut self, cost: &[S], allowed: usize) -> Option<S> {
        loop {
            let reduced = self.reduced_costs(cost, allowed);
            let Some(entering) = (0..allowed).find(|&j| reduced[j].is_positive_tol()) else {
                let value = self.basis.iter().zip(&self.rhs).map(|(&b, r)| cost[b].clone() * r.clone()).sum();
                return Some(value);
            };
            let mut leaving: Option<(usize, S)> = None;
            for (row, coeffs) in self.rows.iter().enumerate() {
                let a = &coeffs[entering];
                if !a.is_positive_tol() {
                    continue;
                }
                let ratio = self.rhs[row].clone() / a.clone();
                let better = match &leaving {
                    None => true,
                    Some((best_row, best)) => {
                        ratio.tol_lt(best) || (ratio.tol_eq(best) && self.basis[row] < self.basis[*best_row])
                    }
                };
                if better {
                    leaving = Some((row, ratio));
                }
            }
            let (pivot_row, _) = leaving?;
            self.pivot(pivot_row, entering);
        }
    }

    fn reduced_costs(&self, cost: &[S], allowed: usize) -> Vec<S> {
        (0..allowed)
            .map(|j| {
                let mut rc = cost[j].clone();
                for (row, &b) in self.basis.iter().enumerate() {
                    if !cost[b].is_zero_tol() && !self.rows[row][j].is_zero_tol() {
                        rc = rc - cost[b].clone() * self.rows[row][j].clone();
                    }
                }
                rc
            })
            .collect()
    }

    fn pivot(&mut self, pivot_row: usize, entering: usize) {
        let pivot = self.rows[pivot_row][entering].clone();
        for c in 0..self.num_cols {
            self.rows[pivot_row][c] = self.rows[pivot_row][c].clone() / pivot.clone();
        }
        self.rhs[pivot_row] = self.rhs[pivot_row].clone() / pivot;
        for row in 0..self.rows.len() {
            if row == pivot_row {
                continue;
            }
            let factor = self.rows[row][entering].clone();
            if factor.is_zero_tol() {
                if !S::EXACT {
                    self.rows[row][entering] = S::zero();
                }
                continue;
            }
            for c in 0..self.num_cols {
                if self.rows[pivot_row][c].is_zero_tol() {
                    continue;
                }
                let delta = factor.clone() * self.rows[pivot_row][c].clone();
                self.rows[row][c] = self.rows[row][c].clone() - delta;
            }
            let delta = factor * self.rhs[pivot_row].clone();
            self.rhs[row] = self.rhs[row].clone() - delta;
            if !S::EXACT && self.rhs[row].is_zero_tol() {
                self.rhs[row] = S::zero();
            }
        }
        self.basis[pivot_row] = entering;
    }

    /// Pivots zero-level artificials out of the basis; drops redundant rows.
    fn evict_artificials(&mut self) {
        let mut row = 0;
        while row < self.rows.len() {
            if self.basis[row] >= self.first_artificial {
                match (0..self.first_artificial).find(|&j| !self.rows[row][j].is_zero_tol()) {
                    Some(col) => self.pivot(row, col),
                    None => {
                        self.rows.remove(row);
                        self.rhs.remove(row);
                        self.basis.remove(row);
                        continue;
                    }
                }
            }
            row += 1;
        }
    }
}
