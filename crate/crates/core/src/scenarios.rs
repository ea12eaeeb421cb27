//! Worked instances and reduction gadgets.
//!
//! Every constructor is generic over the scalar backend. [`describe`] pairs a
//! named instance with the facts it is known to satisfy, and
//! [`ScenarioDescriptor::verify`] recomputes each of them.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::analytics::threat_index;
use crate::bailout::{min_budget_solvency, optimal_injections_enumerative};
use crate::clearing::greatest_clearing;
use crate::debt_relief::{optimal_removal, RemovalObjective};
use crate::error::{Error, Result};
use crate::games::{best_response, enumerate_equilibria, play, PolicySpec};
use crate::network::{Edge, FinancialNetwork, StrategyProfile};
use crate::scalar::Scalar;

/// Names accepted by [`describe`].
pub const SCENARIO_NAMES: [&str; 12] = [
    "fig1",
    "fig5",
    "fig6",
    "fig7",
    "fig8",
    "fig9",
    "greedy-family",
    "rxc3",
    "partition",
    "subset-sum",
    "x3c",
    "ne-hardness",
];

fn q<S: Scalar>(numer: i64, denom: i64) -> S {
    S::from_ratio(numer, denom)
}

fn build<S: Scalar>(externals: Vec<S>, edges: Vec<(usize, usize, S)>, alpha: S, beta: S) -> FinancialNetwork<S> {
    FinancialNetwork::from_edges(externals, edges, alpha, beta).expect("scenario data is well formed")
}

/// Five banks; bank 3 splits its debt between banks 2 and 4.
pub fn fig1<S: Scalar>() -> FinancialNetwork<S> {
    build(
        vec![S::zero(), q(6, 5), q(11, 5), S::from_int(2), S::zero()],
        vec![(1, 0, S::from_int(6)), (2, 1, S::from_int(4)), (3, 2, S::from_int(2)), (3, 4, S::from_int(2))],
        S::one(),
        S::one(),
    )
}

/// Six banks without default costs, played with budget `2 - 3 eps`.
pub fn fig5<S: Scalar>(eps: S) -> Result<FinancialNetwork<S>> {
    if !eps.is_positive_tol() || !eps.tol_lt(&q(1, 3)) {
        return Err(Error::InvalidInput(format!("eps must lie in (0, 1/3), got {eps}")));
    }
    let one = S::one();
    Ok(build(
        vec![eps.clone(), eps.clone(), eps, S::zero(), S::zero(), S::zero()],
        vec![(0, 3, S::from_int(2)), (1, 0, one.clone()), (1, 4, one.clone()), (2, 1, one.clone()), (2, 5, one)],
        S::one(),
        S::one(),
    ))
}

pub fn fig5_budget<S: Scalar>(eps: &S) -> S {
    S::from_int(2) - S::from_int(3) * eps.clone()
}

/// Three banks; bank 0 owes `z` to each of the others and bank 1 owes `z` back.
pub fn fig6<S: Scalar>(z: S) -> Result<FinancialNetwork<S>> {
    if z.tol_lt(&S::from_int(3)) {
        return Err(Error::InvalidInput(format!("z must be at least 3, got {z}")));
    }
    Ok(build(
        vec![S::one(), S::zero(), S::zero()],
        vec![(0, 1, z.clone()), (0, 2, z.clone()), (1, 0, z)],
        S::one(),
        S::one(),
    ))
}

/// Chain `n-1 -> ... -> 0` of unit liabilities without external assets.
pub fn fig7<S: Scalar>(n: usize) -> Result<FinancialNetwork<S>> {
    if n < 3 {
        return Err(Error::InvalidInput(format!("n must be at least 3, got {n}")));
    }
    Ok(build(vec![S::zero(); n], (1..n).map(|i| (i, i - 1, S::one())).collect(), S::one(), S::one()))
}

/// Five banks with `alpha = beta = 1/4` whose game has no pure equilibrium.
pub fn fig8<S: Scalar>() -> FinancialNetwork<S> {
    build(
        vec![S::zero(), S::zero(), S::zero(), S::from_int(8), S::zero()],
        vec![
            (3, 0, S::one()),
            (3, 1, S::one()),
            (3, 2, S::from_int(4)),
            (3, 4, S::from_int(4)),
            (2, 1, S::from_int(4)),
            (4, 0, q(8, 9)),
        ],
        q(1, 4),
        q(1, 4),
    )
}

/// Bank 0 holds 1 and owes 1 to banks 1 and `n-1`; banks 1..n-1 form a unit chain.
pub fn fig9<S: Scalar>(n: usize, eps: S) -> Result<FinancialNetwork<S>> {
    if n < 3 {
        return Err(Error::InvalidInput(format!("n must be at least 3, got {n}")));
    }
    if !eps.is_positive_tol() || !eps.tol_lt(&S::one()) {
        return Err(Error::InvalidInput(format!("eps must lie in (0, 1), got {eps}")));
    }
    let mut edges = vec![(0, 1, S::one()), (0, n - 1, S::one())];
    edges.extend((1..n - 1).map(|i| (i, i + 1, S::one())));
    let mut externals = vec![S::zero(); n];
    externals[0] = S::one();
    Ok(build(externals, edges, eps.clone(), eps))
}

fn floor_of<S: Scalar>(x: &S) -> i64 {
    let mut k = x.to_f64().floor() as i64;
    while S::from_int(k) > *x {
        k -= 1;
    }
    while S::from_int(k + 1) <= *x {
        k += 1;
    }
    k
}

/// Node indices of [`greedy_family`].
pub mod family {
    pub const U: usize = 0;
    pub const V: usize = 1;
    pub const W: usize = 2;
    pub const Z: usize = 3;
    /// Index of the `i`-th path node, `i >= 1`.
    pub fn path(i: usize) -> usize {
        3 + i
    }
}

/// Network on which greedy injection loses a quarter of the optimum: a path
/// from `v` whose threat index is `mu`, and a bank `w` owing to `v` and `z`
/// with the same threat index.
pub fn greedy_family<S: Scalar>(mu: S, t1: S) -> Result<FinancialNetwork<S>> {
    if mu.tol_lt(&S::from_int(2)) {
        return Err(Error::InvalidInput(format!("mu must be at least 2, got {mu}")));
    }
    if !t1.is_positive_tol() {
        return Err(Error::InvalidInput(format!("t1 must be positive, got {t1}")));
    }
    let floor = floor_of(&mu);
    let integral = S::from_int(floor) == mu;
    let ceil = if integral { floor } else { floor + 1 } as usize;
    let (a, b) = if integral {
        (t1.clone(), S::zero())
    } else {
        let a = (mu.clone() - S::from_int(floor)) * t1.clone();
        (a.clone(), t1.clone() - a)
    };
    let mut edges = Vec::new();
    let node = |i: usize| if i == 0 { family::V } else { family::path(i) };
    for i in 0..ceil {
        let amount = if (i as i64) < floor - 1 { t1.clone() } else { a.clone() };
        edges.push((node(i), node(i + 1), amount));
    }
    if b.is_positive_tol() {
        edges.push((node(floor as usize - 1), family::U, b));
    }
    edges.push((family::W, family::V, t1.clone()));
    edges.push((family::W, family::Z, t1 / (mu - S::one())));
    Ok(build(vec![S::zero(); ceil + 4], edges, S::one(), S::one()))
}

/// Budget at which the greedy ratio on [`greedy_family`] is tight.
pub fn greedy_family_budget<S: Scalar>(mu: &S, t1: &S) -> S {
    t1.clone() * mu.clone() / (mu.clone() - S::one())
}

fn check_triples(elements: usize, sets: &[[usize; 3]]) -> Result<()> {
    for set in sets {
        if set.iter().any(|&x| x >= elements) {
            return Err(Error::InvalidInput(format!("set {set:?} names an element outside 0..{elements}")));
        }
        if set[0] == set[1] || set[1] == set[2] || set[0] == set[2] {
            return Err(Error::InvalidInput(format!("set {set:?} repeats an element")));
        }
    }
    Ok(())
}

/// Debt-removal gadget: one bank per set (holding 4, owing 1 to each of its
/// elements and `z` to `S`), one per element (owing 1 to `T`), then `S`, `T`.
/// Every element must occur in exactly three sets.
pub fn gadget_rxc3<S: Scalar>(sets: &[[usize; 3]], z: S) -> Result<FinancialNetwork<S>> {
    let m = sets.len();
    if m == 0 || !m.is_multiple_of(3) {
        return Err(Error::InvalidInput(format!("need 3k sets, got {m}")));
    }
    check_triples(m, sets)?;
    let mut occurrences = vec![0; m];
    for set in sets {
        for &x in set {
            occurrences[x] += 1;
        }
    }
    if let Some(x) = occurrences.iter().position(|&c| c != 3) {
        return Err(Error::InvalidInput(format!("element {x} occurs {} times, not 3", occurrences[x])));
    }
    let (big_s, big_t) = (2 * m, 2 * m + 1);
    let mut externals = vec![S::zero(); 2 * m + 2];
    let mut edges = Vec::new();
    for (i, set) in sets.iter().enumerate() {
        externals[i] = S::from_int(4);
        for &x in set {
            edges.push((i, m + x, S::one()));
        }
        edges.push((i, big_s, z.clone()));
    }
    for x in 0..m {
        edges.push((m + x, big_t, S::one()));
    }
    Ok(build(externals, edges, S::one(), S::one()))
}

/// Injection gadget: banks `v_i` holding `x_i` and owing `4x_i/3` to `S` and
/// `2x_i/3` to `T`; `S` owes `(2 + alpha)/3 * sum x` to `L`. Order `[v.., S, T, L]`.
pub fn gadget_partition<S: Scalar>(x: &[S], alpha: S) -> Result<FinancialNetwork<S>> {
    if x.is_empty() || x.iter().any(|v| !v.is_positive_tol()) {
        return Err(Error::InvalidInput("partition values must be positive".into()));
    }
    let k = x.len();
    let (big_s, big_t, big_l) = (k, k + 1, k + 2);
    let total: S = x.iter().cloned().sum();
    let mut edges = Vec::new();
    for (i, e) in x.iter().enumerate() {
        edges.push((i, big_s, q::<S>(4, 3) * e.clone()));
        edges.push((i, big_t, q::<S>(2, 3) * e.clone()));
    }
    edges.push((big_s, big_l, (S::from_int(2) + alpha.clone()) / S::from_int(3) * total));
    let mut externals = x.to_vec();
    externals.extend([S::zero(), S::zero(), S::zero()]);
    let net = build(externals, edges, alpha, S::one());
    net.ensure_valid()?;
    Ok(net)
}

pub fn partition_budget<S: Scalar>(x: &[S]) -> S {
    x.iter().cloned().sum::<S>() / S::from_int(2)
}

/// Forgiveness gadget: `v_0` holds `t` and owes `x_i` to `v_i`, with
/// `alpha = beta = 1/2`.
pub fn gadget_subset_sum<S: Scalar>(x: &[S], t: S) -> Result<FinancialNetwork<S>> {
    if x.iter().any(|v| !v.is_positive_tol()) || t.is_negative_tol() {
        return Err(Error::InvalidInput("subset-sum values must be positive".into()));
    }
    let mut externals = vec![t];
    externals.extend(x.iter().map(|_| S::zero()));
    let edges = x.iter().enumerate().map(|(i, v)| (0, i + 1, v.clone())).collect();
    Ok(build(externals, edges, q(1, 2), q(1, 2)))
}

/// Integral-injection gadget: one bank per set owing 1 to each of its
/// elements, one bank per element owing 1 to `T`. Order `[u.., t.., T]`.
pub fn gadget_x3c<S: Scalar>(elements: usize, sets: &[[usize; 3]]) -> Result<FinancialNetwork<S>> {
    if elements == 0 || !elements.is_multiple_of(3) {
        return Err(Error::InvalidInput(format!("need 3k elements, got {elements}")));
    }
    check_triples(elements, sets)?;
    let m = sets.len();
    let big_t = m + elements;
    let mut edges = Vec::new();
    for (i, set) in sets.iter().enumerate() {
        edges.extend(set.iter().map(|&x| (i, m + x, S::one())));
    }
    edges.extend((0..elements).map(|x| (m + x, big_t, S::one())));
    Ok(build(vec![S::zero(); m + elements + 1], edges, S::one(), S::one()))
}

/// Equilibrium gadget: `v_i` holds `x_i` and owes `x_i` to each of `S` and
/// `T`; `T` owes `sum x / 2 + 1/4` to `S`; `alpha = beta = 1 / sum x`.
/// Order `[v.., S, T]`.
pub fn gadget_ne_hardness<S: Scalar>(x: &[S]) -> Result<FinancialNetwork<S>> {
    if x.is_empty() || x.iter().any(|v| !v.is_positive_tol()) {
        return Err(Error::InvalidInput("partition values must be positive".into()));
    }
    let k = x.len();
    let (big_s, big_t) = (k, k + 1);
    let total: S = x.iter().cloned().sum();
    let mut edges = Vec::new();
    for (i, e) in x.iter().enumerate() {
        edges.push((i, big_s, e.clone()));
        edges.push((i, big_t, e.clone()));
    }
    edges.push((big_t, big_s, total.clone() / S::from_int(2) + q(1, 4)));
    let mut externals = x.to_vec();
    externals.extend([S::zero(), S::zero()]);
    let cost = S::one() / total;
    let net = build(externals, edges, cost.clone(), cost);
    net.ensure_valid()?;
    Ok(net)
}

/// Where an expected fact comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Origin {
    /// Stated explicitly in the source text.
    Stated,
    /// Follows from the instance by independent calculation.
    Computed,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Fact<S> {
    Payment { borrower: usize, lender: usize, value: S },
    Defaults(BTreeSet<usize>),
    Threat(Vec<S>),
    Liquidity { profile: StrategyProfile, policy: PolicySpec<S>, value: S },
    LiquidityBelow { profile: StrategyProfile, policy: PolicySpec<S>, bound: S },
    Utility { profile: StrategyProfile, policy: PolicySpec<S>, bank: usize, value: S },
    BestResponseUtility { bank: usize, value: S },
    NoEquilibrium(PolicySpec<S>),
    OptimalRemoval { objective: RemovalObjective, value: S },
    OptimalInjection { budget: S, liquidity: S },
    MinBudget { target: usize, value: S },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedFact<S> {
    pub statement: String,
    pub origin: Origin,
    pub fact: Fact<S>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactCheck {
    pub statement: String,
    pub origin: Origin,
    pub holds: bool,
    pub observed: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioDescriptor<S> {
    pub name: String,
    pub parameters: Vec<(String, String)>,
    pub network: FinancialNetwork<S>,
    pub facts: Vec<ExpectedFact<S>>,
}

fn canon<S: Scalar>(values: &[S]) -> String {
    let parts: Vec<String> = values.iter().map(Scalar::to_canonical).collect();
    format!("({})", parts.join(", "))
}

impl<S: Scalar> ScenarioDescriptor<S> {
    fn stated(&mut self, statement: &str, fact: Fact<S>) {
        self.facts.push(ExpectedFact { statement: statement.into(), origin: Origin::Stated, fact });
    }

    fn computed(&mut self, statement: &str, fact: Fact<S>) {
        self.facts.push(ExpectedFact { statement: statement.into(), origin: Origin::Computed, fact });
    }

    /// Recomputes every expected fact, plus network validity.
    pub fn verify(&self) -> Result<Vec<FactCheck>> {
        let net = &self.network;
        let violations = net.validate();
        let mut out = vec![FactCheck {
            statement: "network is well formed".into(),
            origin: Origin::Computed,
            holds: violations.is_empty(),
            observed: format!("{} violations", violations.len()),
        }];
        let base = greatest_clearing(net)?;
        for expected in &self.facts {
            let (holds, observed) = match &expected.fact {
                Fact::Payment { borrower, lender, value } => {
                    let p = base.payment(*borrower, *lender);
                    (p.tol_eq(value), p.to_canonical())
                }
                Fact::Defaults(set) => (base.defaults == *set, format!("{:?}", base.defaults)),
                Fact::Threat(expected_mu) => {
                    let mu = threat_index(net, &base)?;
                    let holds = mu.len() == expected_mu.len() && mu.iter().zip(expected_mu).all(|(a, b)| a.tol_eq(b));
                    (holds, canon(&mu))
                }
                Fact::Liquidity { profile, policy, value } => {
                    let f = play(net, profile, policy)?.liquidity;
                    (f.tol_eq(value), f.to_canonical())
                }
                Fact::LiquidityBelow { profile, policy, bound } => {
                    let f = play(net, profile, policy)?.liquidity;
                    (f.tol_lt(bound), f.to_canonical())
                }
                Fact::Utility { profile, policy, bank, value } => {
                    let a = play(net, profile, policy)?.assets[*bank].clone();
                    (a.tol_eq(value), a.to_canonical())
                }
                Fact::BestResponseUtility { bank, value } => {
                    let keep = StrategyProfile::keep_all(net.len());
                    let (_, u) = best_response(net, &keep, *bank, &PolicySpec::None)?;
                    (u.tol_eq(value), u.to_canonical())
                }
                Fact::NoEquilibrium(policy) => {
                    let eq = enumerate_equilibria(net, policy)?;
                    (eq.is_empty(), format!("{} equilibria", eq.len()))
                }
                Fact::OptimalRemoval { objective, value } => {
                    let v = optimal_removal(net, *objective)?.value;
                    (v.tol_eq(value), v.to_canonical())
                }
                Fact::OptimalInjection { budget, liquidity } => {
                    let f = optimal_injections_enumerative(net, budget)?.1.liquidity;
                    (f.tol_eq(liquidity), f.to_canonical())
                }
                Fact::MinBudget { target, value } => {
                    let m = min_budget_solvency(net, *target)?;
                    (m.tol_eq(value), m.to_canonical())
                }
            };
            out.push(FactCheck { statement: expected.statement.clone(), origin: expected.origin, holds, observed });
        }
        Ok(out)
    }
}

/// Scenario parameters as `key = value` text.
pub type Params = BTreeMap<String, String>;

fn param<S: Scalar>(params: &Params, key: &str, default: &str) -> Result<S> {
    let text = params.get(key).map_or(default, String::as_str);
    Ok(S::parse_amount(text)?)
}

fn param_count(params: &Params, key: &str, default: usize) -> Result<usize> {
    match params.get(key) {
        None => Ok(default),
        Some(text) => text
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("parameter {key} must be a count, got {text:?}"))),
    }
}

fn param_list<S: Scalar>(params: &Params, key: &str, default: &str) -> Result<Vec<S>> {
    let text = params.get(key).map_or(default, String::as_str);
    text.split(',').map(|v| Ok(S::parse_amount(v)?)).collect()
}

/// Parses `"0,1,2;0,1,2"` into triples.
fn param_sets(params: &Params, key: &str, default: &str) -> Result<Vec<[usize; 3]>> {
    let text = params.get(key).map_or(default, String::as_str);
    text.split(';')
        .map(|set| {
            let items: Vec<usize> = set
                .split(',')
                .map(|v| v.trim().parse().map_err(|_| Error::InvalidInput(format!("bad element {v:?} in {key}"))))
                .collect::<Result<_>>()?;
            <[usize; 3]>::try_from(items).map_err(|_| Error::InvalidInput(format!("{key} needs triples, got {set:?}")))
        })
        .collect()
}

fn has_even_split<S: Scalar>(x: &[S]) -> bool {
    let total: S = x.iter().cloned().sum();
    (0u32..(1 << x.len())).any(|mask| {
        let part: S = x.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, v)| v.clone()).sum();
        (part.clone() + part).tol_eq(&total)
    })
}

fn profile_of(n: usize, edges: &[(usize, usize)]) -> StrategyProfile {
    let edges: Vec<Edge> = edges.iter().map(|&(b, l)| Edge::new(b, l)).collect();
    StrategyProfile::from_edges(n, &edges).expect("edges are in range")
}

/// Builds the named scenario with its expected facts. Unknown parameters are
/// rejected; missing ones take the values of the worked examples.
pub fn describe<S: Scalar>(name: &str, params: &Params) -> Result<ScenarioDescriptor<S>> {
    let allowed: &[&str] = match name {
        "fig1" | "fig8" => &[],
        "fig5" => &["eps"],
        "fig6" => &["z"],
        "fig7" => &["n"],
        "fig9" => &["n", "eps"],
        "greedy-family" => &["mu", "t1"],
        "rxc3" => &["sets", "z"],
        "partition" => &["x", "alpha"],
        "subset-sum" => &["x", "t"],
        "x3c" => &["elements", "sets"],
        "ne-hardness" => &["x"],
        _ => return Err(Error::InvalidInput(format!("unknown scenario {name:?}"))),
    };
    if let Some(key) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::InvalidInput(format!("scenario {name} takes no parameter {key:?}")));
    }
    let mut d =
        ScenarioDescriptor { name: name.to_string(), parameters: Vec::new(), network: fig1(), facts: Vec::new() };
    match name {
        "fig1" => fill_fig1(&mut d),
        "fig5" => {
            let eps: S = param(params, "eps", "1/100")?;
            d.network = fig5(eps.clone())?;
            d.parameters.push(("eps".into(), eps.to_canonical()));
            fill_fig5(&mut d, eps);
        }
        "fig6" => {
            let z: S = param(params, "z", "100")?;
            d.network = fig6(z.clone())?;
            d.parameters.push(("z".into(), z.to_canonical()));
            let none = PolicySpec::None;
            d.stated(
                "keep-all liquidity is 3",
                Fact::Liquidity { profile: StrategyProfile::keep_all(3), policy: none.clone(), value: S::from_int(3) },
            );
            d.stated(
                "after bank 2 forgives bank 0, liquidity is 2z",
                Fact::Liquidity { profile: profile_of(3, &[(0, 2)]), policy: none, value: S::from_int(2) * z },
            );
        }
        "fig7" => {
            let n = param_count(params, "n", 6)?;
            d.network = fig7(n)?;
            d.parameters.push(("n".into(), n.to_string()));
            let greedy = PolicySpec::Greedy(S::one());
            let last = S::from_int(n as i64 - 1);
            d.stated(
                "keep-all liquidity with greedy budget 1 is n - 1",
                Fact::Liquidity { profile: StrategyProfile::keep_all(n), policy: greedy.clone(), value: last.clone() },
            );
            let cut: Vec<(usize, usize)> = (2..n).map(|i| (i, i - 1)).collect();
            d.stated(
                "keeping only the last link yields liquidity 1",
                Fact::Liquidity { profile: profile_of(n, &cut), policy: greedy, value: S::one() },
            );
            let mut mu = vec![S::zero()];
            mu.extend((1..n).map(|i| S::from_int(i as i64)));
            d.computed("threat indices telescope along the chain", Fact::Threat(mu));
        }
        "fig8" => fill_fig8(&mut d),
        "fig9" => {
            let n = param_count(params, "n", 6)?;
            let eps: S = param(params, "eps", "1/10")?;
            d.network = fig9(n, eps.clone())?;
            d.parameters.push(("n".into(), n.to_string()));
            d.parameters.push(("eps".into(), eps.to_canonical()));
            d.stated(
                "keep-all liquidity is below eps / (1 - eps)",
                Fact::LiquidityBelow {
                    profile: StrategyProfile::keep_all(n),
                    policy: PolicySpec::None,
                    bound: eps.clone() / (S::one() - eps.clone()),
                },
            );
            d.stated(
                "after the last bank forgives bank 0, liquidity is n - 1",
                Fact::Liquidity {
                    profile: profile_of(n, &[(0, n - 1)]),
                    policy: PolicySpec::None,
                    value: S::from_int(n as i64 - 1),
                },
            );
        }
        "greedy-family" => {
            let mu: S = param(params, "mu", "2")?;
            let t1: S = param(params, "t1", "1")?;
            d.network = greedy_family(mu.clone(), t1.clone())?;
            d.parameters.push(("mu".into(), mu.to_canonical()));
            d.parameters.push(("t1".into(), t1.to_canonical()));
            let mut expected = vec![S::zero(); d.network.len()];
            expected[family::V] = mu.clone();
            expected[family::W] = mu.clone();
            fill_path_threats(&d.network, &mut expected);
            d.stated("banks v and w share the top threat index mu", Fact::Threat(expected));
        }
        "rxc3" => {
            let sets = param_sets(params, "sets", "0,1,2;0,1,2;0,1,2")?;
            let z: S = param(params, "z", "1000")?;
            d.network = gadget_rxc3(&sets, z.clone())?;
            d.parameters.push(("sets".into(), format!("{sets:?}")));
            d.parameters.push(("z".into(), z.to_canonical()));
            if sets.len() == 3 {
                d.stated(
                    "an exact cover allows liquidity 14k",
                    Fact::OptimalRemoval { objective: RemovalObjective::MaxLiquidity, value: S::from_int(14) },
                );
            }
        }
        "partition" => {
            let x: Vec<S> = param_list(params, "x", "1,2,3,4")?;
            let alpha: S = param(params, "alpha", "1/2")?;
            d.network = gadget_partition(&x, alpha.clone())?;
            d.parameters.push(("x".into(), canon(&x)));
            d.parameters.push(("alpha".into(), alpha.to_canonical()));
            if has_even_split(&x) && alpha.tol_lt(&S::one()) {
                let total: S = x.iter().cloned().sum();
                let formula = (S::from_int(5) * alpha + S::from_int(10)) / S::from_int(6) * total.clone();
                d.stated(
                    "an even split reaches liquidity (5 alpha + 10) / 6 * sum x",
                    Fact::OptimalInjection { budget: partition_budget(&x), liquidity: formula },
                );
                d.stated(
                    "half the external assets make S solvent",
                    Fact::MinBudget { target: x.len(), value: total / S::from_int(2) },
                );
            }
        }
        "subset-sum" => {
            let x: Vec<S> = param_list(params, "x", "2,3,5")?;
            let t: S = param(params, "t", "5")?;
            d.network = gadget_subset_sum(&x, t.clone())?;
            d.parameters.push(("x".into(), canon(&x)));
            d.parameters.push(("t".into(), t.to_canonical()));
            if x.len() <= 16 {
                let total: S = x.iter().cloned().sum();
                let best_kept = (0u32..(1 << x.len()))
                    .map(|mask| {
                        x.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, v)| v.clone()).sum::<S>()
                    })
                    .filter(|s| s.tol_le(&t))
                    .reduce(S::max_of)
                    .unwrap_or_else(S::zero);
                d.computed(
                    "least forgiveness leaving v_0 solvent keeps the largest subset sum up to t",
                    Fact::OptimalRemoval {
                        objective: RemovalObjective::MinForgivenTargetSolvent(0),
                        value: total - best_kept,
                    },
                );
            }
        }
        "x3c" => {
            let elements = param_count(params, "elements", 3)?;
            let sets = param_sets(params, "sets", "0,1,2")?;
            d.network = gadget_x3c(elements, &sets)?;
            d.parameters.push(("elements".into(), elements.to_string()));
            d.parameters.push(("sets".into(), format!("{sets:?}")));
        }
        "ne-hardness" => {
            let x: Vec<S> = param_list(params, "x", "1,2")?;
            d.network = gadget_ne_hardness(&x)?;
            d.parameters.push(("x".into(), canon(&x)));
            if has_even_split(&x) {
                let total: S = x.iter().cloned().sum();
                d.stated(
                    "with an even split, S reaches sum x / 2 + 1/2",
                    Fact::BestResponseUtility { bank: x.len(), value: total / S::from_int(2) + q(1, 2) },
                );
            }
        }
        _ => unreachable!("checked above"),
    }
    Ok(d)
}

/// Threat indices along the path from `v`, walking back from its end.
fn fill_path_threats<S: Scalar>(net: &FinancialNetwork<S>, mu: &mut [S]) {
    let pi = net.relative_liabilities();
    for i in (family::path(1)..net.len()).rev() {
        if net.total_liabilities(i).is_positive_tol() {
            mu[i] = S::one() + (0..net.len()).map(|j| pi[i][j].clone() * mu[j].clone()).sum::<S>();
        }
    }
}

fn fill_fig1<S: Scalar>(d: &mut ScenarioDescriptor<S>) {
    d.network = fig1();
    for (b, l, v, text) in [
        (1, 0, q(22, 5), "p_21 = 4.4"),
        (2, 1, q(16, 5), "p_32 = 3.2"),
        (3, 2, S::one(), "p_43 = 1"),
        (3, 4, S::one(), "p_45 = 1"),
    ] {
        d.stated(text, Fact::Payment { borrower: b, lender: l, value: v });
    }
    d.stated("banks v_2, v_3, v_4 default", Fact::Defaults(BTreeSet::from([1, 2, 3])));
    let mu = [0, 1, 2, 2, 0].map(S::from_int).to_vec();
    d.stated("threat indices (0, 1, 2, 2, 0)", Fact::Threat(mu));
    d.computed(
        "liquidity is 9.6",
        Fact::Liquidity { profile: StrategyProfile::keep_all(5), policy: PolicySpec::None, value: q(48, 5) },
    );
}

fn fill_fig5<S: Scalar>(d: &mut ScenarioDescriptor<S>, eps: S) {
    let policy = PolicySpec::Greedy(fig5_budget(&eps));
    let two = S::from_int(2);
    let cases = [
        ("A", profile_of(6, &[]), q::<S>(1, 2) + eps.clone(), S::one()),
        ("B", profile_of(6, &[(2, 1)]), S::one(), two.clone() - two.clone() * eps.clone()),
        ("C", profile_of(6, &[(2, 1), (1, 0)]), two.clone() - two * eps.clone(), eps.clone()),
        ("D", profile_of(6, &[(1, 0)]), eps, S::one()),
    ];
    for (case, profile, a1, a2) in cases {
        for (bank, value) in [(0, a1), (1, a2)] {
            d.stated(
                &format!("case {case}: a_{} = {}", bank + 1, value.to_canonical()),
                Fact::Utility { profile: profile.clone(), policy: policy.clone(), bank, value },
            );
        }
    }
    let mut mu = vec![S::one(), q(3, 2), q(7, 4)];
    mu.extend([S::zero(), S::zero(), S::zero()]);
    d.stated("v_3 has the top threat index 7/4", Fact::Threat(mu));
    d.stated("no pure equilibrium exists", Fact::NoEquilibrium(policy));
}

fn fill_fig8<S: Scalar>(d: &mut ScenarioDescriptor<S>) {
    d.network = fig8();
    for (l, v) in [(0, q::<S>(1, 5)), (1, q(1, 5)), (2, q(4, 5)), (4, q(4, 5))] {
        d.stated(&format!("p_4{} = {}", l + 1, v.to_canonical()), Fact::Payment { borrower: 3, lender: l, value: v });
    }
    let cases = [
        ("A", profile_of(5, &[]), q::<S>(2, 5), q::<S>(2, 5)),
        ("B", profile_of(5, &[(3, 0)]), q(8, 9), q(4, 9)),
        ("C", profile_of(5, &[(3, 0), (3, 1)]), q(8, 9), S::from_int(4)),
        ("D", profile_of(5, &[(3, 1)]), q(10, 9), q(2, 9)),
    ];
    for (case, profile, a1, a2) in cases {
        for (bank, value) in [(0, a1), (1, a2)] {
            d.stated(
                &format!("case {case}: a_{} = {}", bank + 1, value.to_canonical()),
                Fact::Utility { profile: profile.clone(), policy: PolicySpec::None, bank, value },
            );
        }
    }
    d.stated("no pure equilibrium exists", Fact::NoEquilibrium(PolicySpec::None));
}
