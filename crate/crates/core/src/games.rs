//! The edge-removal game: every bank may forgive any subset of the debts
//! owed to it, and wants to maximize its own total assets under the greatest
//! clearing, possibly after a regulator's cash injections.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::bailout::{greedy_injections, optimal_injections_lp};
use crate::clearing::{greatest_clearing, ClearingResult};
use crate::debt_relief::masks_by_size;
use crate::error::{Error, Result};
use crate::network::{FinancialNetwork, StrategyProfile};
use crate::par;
use crate::scalar::Scalar;

/// Largest in-degree whose strategy space is enumerated.
pub const MAX_INDEGREE: usize = 20;
/// Largest total number of edges for full profile enumeration.
pub const MAX_PROFILE_BITS: usize = 20;
/// Step budget for the dynamics run inside [`quality_report`].
pub const REPORT_DYNAMICS_STEPS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec<S> {
    None,
    Greedy(S),
    Optimal(S),
}

impl<S: Scalar> PolicySpec<S> {
    /// Parses `none`, `greedy:M` or `optimal:M`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text == "none" {
            return Ok(PolicySpec::None);
        }
        let (kind, amount) =
            text.split_once(':').ok_or_else(|| Error::InvalidInput(format!("unknown policy {text:?}")))?;
        let budget = S::parse_amount(amount)?;
        if budget.is_negative_tol() {
            return Err(Error::NegativeBudget(budget.to_canonical()));
        }
        match kind {
            "greedy" => Ok(PolicySpec::Greedy(budget)),
            "optimal" => Ok(PolicySpec::Optimal(budget)),
            _ => Err(Error::InvalidInput(format!("unknown policy {text:?}"))),
        }
    }
}

impl<S: Scalar> fmt::Display for PolicySpec<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::None => write!(f, "none"),
            PolicySpec::Greedy(m) => write!(f, "greedy:{}", m.to_canonical()),
            PolicySpec::Optimal(m) => write!(f, "optimal:{}", m.to_canonical()),
        }
    }
}

/// Clearing after `profile`'s removals and the policy's injections.
pub fn play<S: Scalar>(
    net: &FinancialNetwork<S>,
    profile: &StrategyProfile,
    policy: &PolicySpec<S>,
) -> Result<ClearingResult<S>> {
    profile.validate_for(net)?;
    let reduced = net.apply_removals(profile)?;
    match policy {
        PolicySpec::None => greatest_clearing(&reduced),
        PolicySpec::Greedy(m) => Ok(greedy_injections(&reduced, m)?.clearing),
        PolicySpec::Optimal(m) => {
            if net.has_default_costs() {
                return Err(Error::DefaultCostsUnsupported { operation: "optimal injection policy" });
            }
            Ok(optimal_injections_lp(&reduced, m)?.1)
        }
    }
}

/// Total assets of every bank, counting injected cash.
pub fn utilities<S: Scalar>(
    net: &FinancialNetwork<S>,
    profile: &StrategyProfile,
    policy: &PolicySpec<S>,
) -> Result<Vec<S>> {
    Ok(play(net, profile, policy)?.assets)
}

fn strategy_from_mask(incoming: &[usize], mask: u32) -> BTreeSet<usize> {
    incoming.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, &b)| b).collect()
}

fn checked_incoming<S: Scalar>(net: &FinancialNetwork<S>, bank: usize) -> Result<Vec<usize>> {
    net.ensure_bank(bank)?;
    let incoming = net.incoming(bank);
    if incoming.len() > MAX_INDEGREE {
        return Err(Error::GuardExceeded { what: "strategy enumeration", limit: MAX_INDEGREE, actual: incoming.len() });
    }
    Ok(incoming)
}

/// The best strategy of `bank` against the rest of `profile`; ties go to the
/// fewest removals, then to the lexicographically smallest set.
pub fn best_response<S: Scalar>(
    net: &FinancialNetwork<S>,
    profile: &StrategyProfile,
    bank: usize,
    policy: &PolicySpec<S>,
) -> Result<(BTreeSet<usize>, S)> {
    let incoming = checked_incoming(net, bank)?;
    let mut best: Option<(BTreeSet<usize>, S)> = None;
    for mask in masks_by_size(incoming.len()) {
        let strategy = strategy_from_mask(&incoming, mask);
        let utility = utilities(net, &profile.with_strategy(bank, strategy.clone()), policy)?[bank].clone();
        if best.as_ref().is_none_or(|(_, b)| utility.tol_gt(b)) {
            best = Some((strategy, utility));
        }
    }
    Ok(best.expect("the empty strategy is always available"))
}

/// A strictly improving unilateral change of strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct Deviation<S> {
    pub bank: usize,
    pub strategy: BTreeSet<usize>,
    pub utility: S,
    pub current: S,
}

/// Whether no bank can strictly gain by changing its own strategy; if one
/// can, the lowest such bank and its best response are returned.
pub fn is_equilibrium<S: Scalar>(
    net: &FinancialNetwork<S>,
    profile: &StrategyProfile,
    policy: &PolicySpec<S>,
) -> Result<(bool, Option<Deviation<S>>)> {
    let current = utilities(net, profile, policy)?;
    for bank in 0..net.len() {
        let (strategy, utility) = best_response(net, profile, bank, policy)?;
        if utility.tol_gt(&current[bank]) {
            let current = current[bank].clone();
            return Ok((false, Some(Deviation { bank, strategy, utility, current })));
        }
    }
    Ok((true, None))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Dynamics {
    Equilibrium(StrategyProfile),
    /// Distinct profiles of the cycle in visit order.
    Cycle(Vec<StrategyProfile>),
    Truncated(StrategyProfile),
}

/// Round-robin best-response dynamics: banks take turns by index and switch
/// to their best response only on strict improvement.
pub fn br_dynamics<S: Scalar>(
    net: &FinancialNetwork<S>,
    start: &StrategyProfile,
    policy: &PolicySpec<S>,
    max_steps: usize,
) -> Result<Dynamics> {
    start.validate_for(net)?;
    let n = net.len();
    let mut profile = start.clone();
    let mut seen: HashMap<(StrategyProfile, usize), usize> = HashMap::new();
    let mut history: Vec<StrategyProfile> = Vec::new();
    let mut quiet = 0;
    for step in 0..max_steps {
        if quiet >= n {
            return Ok(Dynamics::Equilibrium(profile));
        }
        let bank = step % n;
        if let Some(&first) = seen.get(&(profile.clone(), bank)) {
            return Ok(Dynamics::Cycle(cycle_profiles(&history[first..])));
        }
        seen.insert((profile.clone(), bank), history.len());
        history.push(profile.clone());
        let current = utilities(net, &profile, policy)?[bank].clone();
        let (strategy, utility) = best_response(net, &profile, bank, policy)?;
        if utility.tol_gt(&current) {
            profile = profile.with_strategy(bank, strategy);
            quiet = 0;
        } else {
            quiet += 1;
        }
    }
    if quiet >= n {
        return Ok(Dynamics::Equilibrium(profile));
    }
    Ok(Dynamics::Truncated(profile))
}

fn cycle_profiles(states: &[StrategyProfile]) -> Vec<StrategyProfile> {
    let mut out: Vec<StrategyProfile> = Vec::new();
    for p in states {
        if out.last() != Some(p) {
            out.push(p.clone());
        }
    }
    while out.len() > 1 && out.last() == out.first() {
        out.pop();
    }
    out
}

/// Every strategy profile, indexed in mixed radix with bank 0 least significant.
struct ProfileSpace {
    incoming: Vec<Vec<usize>>,
    total_bits: usize,
}

impl ProfileSpace {
    fn new<S: Scalar>(net: &FinancialNetwork<S>) -> Result<Self> {
        let incoming: Vec<Vec<usize>> = (0..net.len()).map(|j| net.incoming(j)).collect();
        let total_bits = incoming.iter().map(Vec::len).sum();
        if total_bits > MAX_PROFILE_BITS {
            return Err(Error::GuardExceeded {
                what: "strategy profile enumeration",
                limit: MAX_PROFILE_BITS,
                actual: total_bits,
            });
        }
        Ok(Self { incoming, total_bits })
    }

    fn size(&self) -> usize {
        1 << self.total_bits
    }

    fn profile(&self, mut index: usize) -> StrategyProfile {
        let mut profile = StrategyProfile::keep_all(self.incoming.len());
        for (j, inc) in self.incoming.iter().enumerate() {
            let mask = (index & ((1 << inc.len()) - 1)) as u32;
            index >>= inc.len();
            profile = profile.with_strategy(j, strategy_from_mask(inc, mask));
        }
        profile
    }

    /// Indices of every profile that differs from `index` only in bank `j`.
    fn alternatives(&self, index: usize, j: usize) -> impl Iterator<Item = usize> {
        let shift: usize = self.incoming[..j].iter().map(Vec::len).sum();
        let width = self.incoming[j].len();
        let cleared = index & !(((1 << width) - 1) << shift);
        (0..(1usize << width)).map(move |m| cleared | (m << shift))
    }
}

struct Outcome<S> {
    utilities: Vec<S>,
    liquidity: S,
}

fn tabulate<S: Scalar>(
    net: &FinancialNetwork<S>,
    policy: &PolicySpec<S>,
    space: &ProfileSpace,
) -> Result<Vec<Outcome<S>>> {
    net.ensure_valid()?;
    par::try_map(space.size(), |k| {
        let result = play(net, &space.profile(k), policy)?;
        Ok(Outcome { utilities: result.assets, liquidity: result.liquidity })
    })
}

fn equilibria_indices<S: Scalar>(space: &ProfileSpace, table: &[Outcome<S>]) -> Vec<usize> {
    (0..space.size())
        .filter(|&k| {
            (0..space.incoming.len()).all(|j| {
                let own = &table[k].utilities[j];
                space.alternatives(k, j).all(|alt| !table[alt].utilities[j].tol_gt(own))
            })
        })
        .collect()
}

/// All pure Nash equilibria, by exhaustive search over profiles.
pub fn enumerate_equilibria<S: Scalar>(
    net: &FinancialNetwork<S>,
    policy: &PolicySpec<S>,
) -> Result<Vec<StrategyProfile>> {
    let space = ProfileSpace::new(net)?;
    let table = tabulate(net, policy, &space)?;
    Ok(equilibria_indices(&space, &table).into_iter().map(|k| space.profile(k)).collect())
}

/// A quality ratio; the denominator may vanish.
#[derive(Debug, Clone, PartialEq)]
pub enum Ratio<S> {
    Value(S),
    Infinity,
    Undefined,
}

impl<S: Scalar> Ratio<S> {
    pub fn of(numerator: &S, denominator: &S) -> Self {
        if !denominator.is_zero_tol() {
            Ratio::Value(numerator.clone() / denominator.clone())
        } else if numerator.is_zero_tol() {
            Ratio::Undefined
        } else {
            Ratio::Infinity
        }
    }

    pub fn value(&self) -> Option<&S> {
        match self {
            Ratio::Value(v) => Some(v),
            _ => None,
        }
    }
}

impl<S: Scalar> fmt::Display for Ratio<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ratio::Value(v) => write!(f, "{}", v.to_canonical()),
            Ratio::Infinity => write!(f, "infinity"),
            Ratio::Undefined => write!(f, "undefined"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameReport<S> {
    pub equilibria: Vec<StrategyProfile>,
    /// Best-response cycle from keep-all, reported when no equilibrium exists.
    pub cycle: Option<Vec<StrategyProfile>>,
    pub f_original: S,
    pub f_optimal: S,
    pub f_worst_eq: Option<S>,
    pub f_best_eq: Option<S>,
    pub poa: Ratio<S>,
    pub pos: Ratio<S>,
    pub eoa: Ratio<S>,
    pub eos: Ratio<S>,
}

/// Equilibria, liquidity extremes and the four quality ratios.
pub fn quality_report<S: Scalar>(net: &FinancialNetwork<S>, policy: &PolicySpec<S>) -> Result<GameReport<S>> {
    let space = ProfileSpace::new(net)?;
    let table = tabulate(net, policy, &space)?;
    let eq = equilibria_indices(&space, &table);
    let f_original = table[0].liquidity.clone();
    let f_optimal = table.iter().map(|o| o.liquidity.clone()).reduce(S::max_of).expect("keep-all is always a profile");
    let liquidities = eq.iter().map(|&k| table[k].liquidity.clone());
    let f_worst_eq = liquidities.clone().reduce(S::min_of);
    let f_best_eq = liquidities.reduce(S::max_of);
    let ratio = |num: &S, den: &Option<S>| den.as_ref().map_or(Ratio::Undefined, |d| Ratio::of(num, d));
    let cycle = if eq.is_empty() {
        match br_dynamics(net, &StrategyProfile::keep_all(net.len()), policy, REPORT_DYNAMICS_STEPS)? {
            Dynamics::Cycle(c) => Some(c),
            _ => None,
        }
    } else {
        None
    };
    Ok(GameReport {
        equilibria: eq.iter().map(|&k| space.profile(k)).collect(),
        cycle,
        poa: ratio(&f_optimal, &f_worst_eq),
        pos: ratio(&f_optimal, &f_best_eq),
        eoa: ratio(&f_original, &f_worst_eq),
        eos: ratio(&f_original, &f_best_eq),
        f_original,
        f_optimal,
        f_worst_eq,
        f_best_eq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Edge;
    use crate::scalar::{int, ratio, Rational};

    fn two_cycle() -> FinancialNetwork<Rational> {
        FinancialNetwork::without_costs(vec![int(0), int(0)], [(0, 1, int(1)), (1, 0, int(1))]).unwrap()
    }

    #[test]
    fn policy_parsing() {
        assert_eq!(PolicySpec::<Rational>::parse("none").unwrap(), PolicySpec::None);
        assert_eq!(PolicySpec::<Rational>::parse("greedy:1.5").unwrap(), PolicySpec::Greedy(ratio(3, 2)));
        assert_eq!(PolicySpec::<Rational>::parse("optimal:2").unwrap().to_string(), "optimal:2");
        assert!(PolicySpec::<Rational>::parse("greedy:-1").is_err());
        assert!(PolicySpec::<Rational>::parse("magic:1").is_err());
    }

    #[test]
    fn two_cycle_has_two_equilibria() {
        let net = two_cycle();
        let eq = enumerate_equilibria(&net, &PolicySpec::None).unwrap();
        let both = StrategyProfile::from_edges(2, &[Edge::new(0, 1), Edge::new(1, 0)]).unwrap();
        assert_eq!(eq, vec![StrategyProfile::keep_all(2), both]);
    }

    #[test]
    fn two_cycle_report() {
        let report = quality_report(&two_cycle(), &PolicySpec::None).unwrap();
        assert_eq!(report.f_original, int(2));
        assert_eq!(report.f_worst_eq, Some(int(0)));
        assert_eq!(report.eoa, Ratio::Infinity);
        assert_eq!(report.pos, Ratio::Value(int(1)));
        assert!(report.cycle.is_none());
    }

    #[test]
    fn no_incoming_edges_means_empty_strategy() {
        let net = two_cycle();
        let lonely: FinancialNetwork<Rational> =
            FinancialNetwork::without_costs(vec![int(1), int(0)], [(0, 1, int(1))]).unwrap();
        let (s, u) = best_response(&lonely, &StrategyProfile::keep_all(2), 0, &PolicySpec::None).unwrap();
        assert!(s.is_empty());
        assert_eq!(u, int(1));
        let dyn_out = br_dynamics(&net, &StrategyProfile::keep_all(2), &PolicySpec::None, 100).unwrap();
        assert_eq!(dyn_out, Dynamics::Equilibrium(StrategyProfile::keep_all(2)));
    }

    #[test]
    fn ratio_sentinels() {
        assert_eq!(Ratio::of(&int(0), &int(0)), Ratio::<Rational>::Undefined);
        assert_eq!(Ratio::of(&int(1), &int(0)).to_string(), "infinity");
        assert_eq!(Ratio::of(&int(1), &int(4)).to_string(), "1/4");
    }

    #[test]
    fn optimal_policy_needs_cost_free_network() {
        let net = two_cycle().with_default_costs(ratio(1, 2), int(1));
        let r = utilities(&net, &StrategyProfile::keep_all(2), &PolicySpec::Optimal(int(1)));
        assert!(matches!(r, Err(Error::DefaultCostsUnsupported { .. })));
    }

    #[test]
    fn cycle_profiles_drop_repeats() {
        let a = StrategyProfile::keep_all(2);
        let b = a.with_strategy(0, BTreeSet::from([1]));
        assert_eq!(cycle_profiles(&[a.clone(), a.clone(), b.clone(), b.clone(), a.clone()]), vec![a, b]);
    }
}
