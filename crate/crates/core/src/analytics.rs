//! Liquidity and threat indices.

use crate::clearing::ClearingResult;
use crate::error::{Error, Result};
use crate::linalg;
use crate::network::FinancialNetwork;
use crate::scalar::Scalar;

/// Per-bank threat index; zero for solvent banks.
pub type ThreatVector<S> = Vec<S>;

/// Total of all payments.
pub fn liquidity<S: Scalar>(payments: &[Vec<S>]) -> S {
    payments.iter().flatten().cloned().sum()
}

pub fn increased_liquidity<S: Scalar>(before: &ClearingResult<S>, after: &ClearingResult<S>) -> Result<S> {
    if before.len() != after.len() {
        return Err(Error::DimensionMismatch { expected: before.len(), found: after.len() });
    }
    Ok(after.liquidity.clone() - before.liquidity.clone())
}

/// Solves `mu_i = 1 + sum_{j in D} pi_ij mu_j` over the default set `D` of
/// `clearing`, with `mu = 0` outside `D`.
pub fn threat_index<S: Scalar>(net: &FinancialNetwork<S>, clearing: &ClearingResult<S>) -> Result<ThreatVector<S>> {
    net.ensure_valid()?;
    if clearing.len() != net.len() {
        return Err(Error::DimensionMismatch { expected: net.len(), found: clearing.len() });
    }
    let pi = net.relative_liabilities();
    let members: Vec<usize> = clearing.defaults.iter().copied().collect();
    let matrix: Vec<Vec<S>> = members
        .iter()
        .map(|&i| {
            members.iter().map(|&j| if i == j { S::one() - pi[i][j].clone() } else { -pi[i][j].clone() }).collect()
        })
        .collect();
    let ones = vec![S::one(); members.len()];
    let solved = linalg::solve(&matrix, &ones, "threat index system")?;
    let mut mu = vec![S::zero(); net.len()];
    for (k, &i) in members.iter().enumerate() {
        mu[i] = solved[k].clone();
    }
    Ok(mu)
}

/// The bank with the largest positive threat index; ties go to the smallest index.
pub fn max_threat<S: Scalar>(mu: &[S]) -> Option<(usize, S)> {
    let mut best: Option<(usize, S)> = None;
    for (i, value) in mu.iter().enumerate() {
        if !value.is_positive_tol() {
            continue;
        }
        match &best {
            Some((_, top)) if !value.tol_gt(top) => {}
            _ => best = Some((i, value.clone())),
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clearing::greatest_clearing;
    use crate::scalar::{int, ratio, Rational};

    #[test]
    fn chain_threat_telescopes() {
        // 2 -> 1 -> 0, nothing external: every indebted bank defaults.
        let net: FinancialNetwork<Rational> =
            FinancialNetwork::without_costs(vec![int(0); 3], [(2, 1, int(1)), (1, 0, int(1))]).unwrap();
        let c = greatest_clearing(&net).unwrap();
        assert_eq!(threat_index(&net, &c).unwrap(), vec![int(0), int(1), int(2)]);
    }

    #[test]
    fn split_threat() {
        // 0 owes 1 each to 1 and 2; 1 owes 2 to 2.
        let net: FinancialNetwork<Rational> =
            FinancialNetwork::without_costs(vec![int(0); 3], [(0, 1, int(1)), (0, 2, int(1)), (1, 2, int(2))]).unwrap();
        let c = greatest_clearing(&net).unwrap();
        assert_eq!(threat_index(&net, &c).unwrap(), vec![ratio(3, 2), int(1), int(0)]);
    }

    #[test]
    fn closed_defaulting_cycle_is_singular() {
        let net: FinancialNetwork<Rational> = FinancialNetwork::from_edges(
            vec![int(0), int(0)],
            [(0, 1, int(2)), (1, 0, int(1))],
            ratio(1, 2),
            ratio(1, 2),
        )
        .unwrap();
        let c = greatest_clearing(&net).unwrap();
        assert_eq!(c.defaults.len(), 2);
        assert!(matches!(threat_index(&net, &c), Err(Error::Singular { .. })));
    }

    #[test]
    fn max_threat_prefers_smallest_index() {
        assert_eq!(max_threat(&[int(0), int(2), int(2)]), Some((1, int(2))));
        assert_eq!(max_threat::<Rational>(&[int(0), int(0)]), None);
    }

    #[test]
    fn liquidity_sums_payments() {
        assert_eq!(liquidity(&[vec![int(1), int(2)], vec![ratio(1, 2), int(0)]]), ratio(7, 2));
    }
}
