#![allow(dead_code)]

use finnet::scalar::{int, ratio};
use finnet::{FinancialNetwork, Rational};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cost_grid() -> Vec<Rational> {
    vec![int(0), ratio(1, 4), ratio(1, 2), ratio(3, 4), int(1)]
}

pub fn random_cost(rng: &mut ChaCha8Rng) -> Rational {
    cost_grid().choose(rng).unwrap().clone()
}

/// Dense-ish random network with integer data in `0..=max_value`.
pub fn random_network(
    rng: &mut ChaCha8Rng,
    max_banks: usize,
    max_value: i64,
    edge_probability: f64,
    alpha: Rational,
    beta: Rational,
) -> FinancialNetwork<Rational> {
    let n = rng.gen_range(2..=max_banks);
    let externals = (0..n).map(|_| int(rng.gen_range(0..=max_value))).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen_bool(edge_probability) {
                edges.push((i, j, int(rng.gen_range(1..=max_value))));
            }
        }
    }
    FinancialNetwork::from_edges(externals, edges, alpha, beta).unwrap()
}

/// Random orientation of a random spanning tree.
pub fn random_tree(
    rng: &mut ChaCha8Rng,
    max_banks: usize,
    alpha: Rational,
    beta: Rational,
) -> FinancialNetwork<Rational> {
    let n = rng.gen_range(2..=max_banks);
    let externals = (0..n).map(|_| int(rng.gen_range(0..=10))).collect();
    let edges: Vec<_> = (1..n)
        .map(|i| {
            let parent = rng.gen_range(0..i);
            let amount = int(rng.gen_range(1..=10));
            if rng.gen_bool(0.5) {
                (i, parent, amount)
            } else {
                (parent, i, amount)
            }
        })
        .collect();
    FinancialNetwork::from_edges(externals, edges, alpha, beta).unwrap()
}

/// Directed cycle `0 -> 1 -> ... -> n-1 -> 0`.
pub fn random_cycle(
    rng: &mut ChaCha8Rng,
    max_banks: usize,
    alpha: Rational,
    beta: Rational,
) -> FinancialNetwork<Rational> {
    let n = rng.gen_range(2..=max_banks);
    let externals = (0..n).map(|_| int(rng.gen_range(0..=10))).collect();
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, int(rng.gen_range(1..=10)))).collect();
    FinancialNetwork::from_edges(externals, edges, alpha, beta).unwrap()
}

pub fn float_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}
