//! One line per acceptance criterion; the test fails if any criterion fails.

mod common;

use std::collections::BTreeSet;

use finnet::analytics::{increased_liquidity, threat_index};
use finnet::bailout::{greedy_injections, optimal_injections_enumerative, optimal_injections_lp};
use finnet::clearing::{greatest_clearing, is_clearing, least_clearing};
use finnet::debt_relief::{optimal_removal, RemovalObjective};
use finnet::games::{br_dynamics, enumerate_equilibria, is_equilibrium, quality_report, utilities, Dynamics, Ratio};
use finnet::scalar::{int, ratio};
use finnet::scenarios::{
    fig1, fig5, fig5_budget, fig6, fig7, fig8, fig9, gadget_rxc3, gadget_subset_sum, greedy_family,
    greedy_family_budget,
};
use finnet::{Edge, FinancialNetwork, PolicySpec, Rational, Scalar, StrategyProfile};
use rand::seq::SliceRandom;
use rand::Rng;

use common::*;

type Outcome = Result<(), Box<dyn std::error::Error>>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, message: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(message().into())
    }
}

fn profile(n: usize, edges: &[(usize, usize)]) -> StrategyProfile {
    let edges: Vec<Edge> = edges.iter().map(|&(b, l)| Edge::new(b, l)).collect();
    StrategyProfile::from_edges(n, &edges).unwrap()
}

fn c01_fig1_clearing() -> Outcome {
    let net = fig1::<Rational>();
    let c = greatest_clearing(&net)?;
    let expected = [(1, 0, ratio(22, 5)), (2, 1, ratio(16, 5)), (3, 2, int(1)), (3, 4, int(1))];
    for (b, l, v) in &expected {
        ensure(c.payments[*b][*l] == *v, || format!("p[{b}][{l}] = {}", c.payments[*b][*l]))?;
    }
    ensure(c.defaults == BTreeSet::from([1, 2, 3]), || format!("defaults {:?}", c.defaults))?;
    let f = greatest_clearing(&fig1::<f64>())?;
    for (b, l, v) in &expected {
        ensure(float_close(f.payments[*b][*l], v.to_f64()), || format!("float p[{b}][{l}] = {}", f.payments[*b][*l]))?;
    }
    ensure(f.defaults == BTreeSet::from([1, 2, 3]), || format!("float defaults {:?}", f.defaults))
}

fn c02_fig1_threat() -> Outcome {
    let net = fig1::<Rational>();
    let mu = threat_index(&net, &greatest_clearing(&net)?)?;
    ensure(mu == [0, 1, 2, 2, 0].map(int).to_vec(), || format!("mu = {mu:?}"))
}

fn c03_fig1_greedy_vs_optimal() -> Outcome {
    let net = fig1::<Rational>();
    let m = ratio(8, 5);
    let before = greatest_clearing(&net)?;
    let greedy = greedy_injections(&net, &m)?;
    let expected_plan = vec![(2, ratio(4, 5)), (1, ratio(4, 5))];
    ensure(greedy.plan.transfers == expected_plan, || format!("greedy plan {:?}", greedy.plan.transfers))?;
    let dg = increased_liquidity(&before, &greedy.clearing)?;
    ensure(dg == ratio(12, 5), || format!("greedy gain {dg}"))?;
    let (plan, opt) = optimal_injections_lp(&net, &m)?;
    ensure(plan.transfers == vec![(3, m.clone())], || format!("optimal plan {:?}", plan.transfers))?;
    let dopt = increased_liquidity(&before, &opt)?;
    ensure(dopt == ratio(16, 5), || format!("optimal gain {dopt}"))?;
    ensure(dg / dopt == ratio(3, 4), || "ratio is not 3/4".into())
}

fn c04_greedy_family() -> Outcome {
    for mu in [int(2), ratio(18, 5)] {
        let t1 = int(1);
        let net = greedy_family(mu.clone(), t1.clone())?;
        let m = greedy_family_budget(&mu, &t1);
        let before = greatest_clearing(&net)?;
        let dg = increased_liquidity(&before, &greedy_injections(&net, &m)?.clearing)?;
        let dopt = increased_liquidity(&before, &optimal_injections_lp(&net, &m)?.1)?;
        let r = (dg / dopt).to_f64();
        ensure(r >= 0.75 - 1e-9, || format!("mu = {mu}: ratio {r}"))?;
        if mu == int(2) {
            ensure((r - 0.75).abs() <= 1e-9, || format!("mu = 2: ratio {r} is not 3/4"))?;
        }
    }
    Ok(())
}

fn c05_fig8_game() -> Outcome {
    let net = fig8::<Rational>();
    let none = PolicySpec::None;
    let cases = [
        (profile(5, &[]), ratio(2, 5), ratio(2, 5)),
        (profile(5, &[(3, 0)]), ratio(8, 9), ratio(4, 9)),
        (profile(5, &[(3, 0), (3, 1)]), ratio(8, 9), int(4)),
        (profile(5, &[(3, 1)]), ratio(10, 9), ratio(2, 9)),
    ];
    for (p, a1, a2) in &cases {
        let u = utilities(&net, p, &none)?;
        ensure(u[0] == *a1 && u[1] == *a2, || format!("{p}: a_1 = {}, a_2 = {}", u[0], u[1]))?;
    }
    let dynamics = br_dynamics(&net, &StrategyProfile::keep_all(5), &none, 1000)?;
    let expected: Vec<StrategyProfile> = cases.iter().map(|c| c.0.clone()).collect();
    ensure(dynamics == Dynamics::Cycle(expected), || format!("dynamics {dynamics:?}"))?;
    let eq = enumerate_equilibria(&net, &none)?;
    ensure(eq.is_empty(), || format!("{} equilibria", eq.len()))
}

fn c06_fig5_game() -> Outcome {
    let eps = ratio(1, 100);
    let net = fig5(eps.clone())?;
    let policy = PolicySpec::Greedy(fig5_budget(&eps));
    let two = int(2);
    let cases = [
        (profile(6, &[]), ratio(1, 2) + eps.clone(), int(1)),
        (profile(6, &[(2, 1)]), int(1), two.clone() - two.clone() * eps.clone()),
        (profile(6, &[(2, 1), (1, 0)]), two.clone() - two * eps.clone(), eps.clone()),
        (profile(6, &[(1, 0)]), eps.clone(), int(1)),
    ];
    for (p, a1, a2) in &cases {
        let u = utilities(&net, p, &policy)?;
        ensure(u[0] == *a1 && u[1] == *a2, || format!("{p}: a_1 = {}, a_2 = {}", u[0], u[1]))?;
    }
    let eq = enumerate_equilibria(&net, &policy)?;
    ensure(eq.is_empty(), || format!("{} equilibria", eq.len()))
}

fn c07_existence() -> Outcome {
    let mut r = rng(7);
    for k in 0..200 {
        let net = random_network(&mut r, 6, 10, 0.35, int(1), int(1));
        let (ok, dev) = is_equilibrium(&net, &StrategyProfile::keep_all(net.len()), &PolicySpec::None)?;
        ensure(ok, || format!("network {k}: deviation {dev:?}"))?;
    }
    Ok(())
}

fn c08_trees_and_cycles() -> Outcome {
    let mut r = rng(8);
    for k in 0..200 {
        let (alpha, beta) = (random_cost(&mut r), random_cost(&mut r));
        let net = if k < 100 { random_tree(&mut r, 7, alpha, beta) } else { random_cycle(&mut r, 7, alpha, beta) };
        let (ok, dev) = is_equilibrium(&net, &StrategyProfile::keep_all(net.len()), &PolicySpec::None)?;
        ensure(ok, || format!("network {k}: deviation {dev:?}"))?;
    }
    Ok(())
}

fn c09_removal_monotonicity() -> Outcome {
    let mut r = rng(9);
    let mut checked = 0;
    for k in 0..200 {
        let (alpha, beta) = (random_cost(&mut r), random_cost(&mut r));
        let net = random_network(&mut r, 6, 10, 0.4, alpha, beta);
        let edges = net.edges();
        if edges.is_empty() {
            continue;
        }
        let start: Vec<Edge> = edges.iter().copied().filter(|_| r.gen_bool(0.25)).collect();
        let base = StrategyProfile::from_edges(net.len(), &start)?;
        let kept: Vec<Edge> = edges.iter().copied().filter(|e| !start.contains(e)).collect();
        let Some(first) = kept.choose(&mut r) else { continue };
        let remover = first.lender;
        let mut more = base.strategy(remover).clone();
        for e in kept.iter().filter(|e| e.lender == remover) {
            if e == first || r.gen_bool(0.3) {
                more.insert(e.borrower);
            }
        }
        let after_profile = base.with_strategy(remover, more);
        let before = finnet::games::play(&net, &base, &PolicySpec::None)?;
        let after = finnet::games::play(&net, &after_profile, &PolicySpec::None)?;
        if after.assets[remover] < before.assets[remover] {
            continue;
        }
        checked += 1;
        for i in 0..net.len() {
            ensure(after.assets[i] >= before.assets[i], || format!("network {k}: bank {i} loses"))?;
        }
        ensure(after.liquidity >= before.liquidity, || format!("network {k}: liquidity drops"))?;
    }
    ensure(checked > 0, || "no weakly improving removal sampled".into())
}

fn c10_fixed_points() -> Outcome {
    let mut r = rng(10);
    for k in 0..500 {
        let (alpha, beta) = (random_cost(&mut r), random_cost(&mut r));
        let net = random_network(&mut r, 6, 10, 0.4, alpha, beta);
        let g = greatest_clearing(&net)?;
        let l = least_clearing(&net)?;
        let n = net.len();
        for i in 0..n {
            for j in 0..n {
                ensure(g.payments[i][j] >= l.payments[i][j], || format!("network {k}: least exceeds greatest"))?;
            }
        }
        ensure(is_clearing(&net, &g.payments).0, || format!("network {k}: greatest does not clear"))?;
        ensure(is_clearing(&net, &l.payments).0, || format!("network {k}: least does not clear"))?;
        let bank = r.gen_range(0..n);
        let bumped = net.with_external(bank, net.external(bank).clone() + int(r.gen_range(1..=5)));
        let h = greatest_clearing(&bumped)?;
        for i in 0..n {
            for j in 0..n {
                ensure(h.payments[i][j] >= g.payments[i][j], || format!("network {k}: not monotone"))?;
            }
        }
    }
    Ok(())
}

fn c11_threat_bound() -> Outcome {
    let mut r = rng(11);
    for k in 0..200 {
        let net = random_network(&mut r, 6, 10, 0.35, int(1), int(1));
        let before = greatest_clearing(&net)?;
        let mu_max = threat_index(&net, &before)?.into_iter().fold(int(0), Rational::max_of);
        for m in [ratio(1, 2), int(1), int(2)] {
            let bound = m.clone() * mu_max.clone();
            let dg = increased_liquidity(&before, &greedy_injections(&net, &m)?.clearing)?;
            let dopt = increased_liquidity(&before, &optimal_injections_lp(&net, &m)?.1)?;
            ensure(dg <= bound && dopt <= bound, || format!("network {k}, M = {m}: {dg}, {dopt} > {bound}"))?;
        }
    }
    Ok(())
}

fn c12_quality_metrics() -> Outcome {
    let cycle = FinancialNetwork::without_costs(vec![int(0), int(0)], [(0, 1, int(1)), (1, 0, int(1))])?;
    let rep = quality_report(&cycle, &PolicySpec::None)?;
    ensure(rep.eoa == Ratio::Infinity, || format!("two-bank cycle EoA {}", rep.eoa))?;

    let rep = quality_report(&fig6(int(100))?, &PolicySpec::None)?;
    ensure(rep.pos == Ratio::Value(ratio(200, 3)), || format!("fig6 PoS {}", rep.pos))?;

    let n = 6;
    let net = fig7::<Rational>(n)?;
    let greedy = PolicySpec::Greedy(int(1));
    let keep = finnet::games::play(&net, &StrategyProfile::keep_all(n), &greedy)?;
    ensure(keep.liquidity == int(5), || format!("fig7 keep-all liquidity {}", keep.liquidity))?;
    let cut: Vec<(usize, usize)> = (2..n).map(|i| (i, i - 1)).collect();
    let ne = profile(n, &cut);
    ensure(is_equilibrium(&net, &ne, &greedy)?.0, || "fig7 profile is not an equilibrium".into())?;
    let f = finnet::games::play(&net, &ne, &greedy)?.liquidity;
    ensure(f == int(1), || format!("fig7 equilibrium liquidity {f}"))?;
    let rep = quality_report(&net, &greedy)?;
    ensure(rep.eoa.value().is_some_and(|v| *v >= int(5)), || format!("fig7 EoA {}", rep.eoa))?;

    let rep = quality_report(&fig9(6, ratio(1, 10))?, &PolicySpec::None)?;
    ensure(rep.f_original < ratio(1, 9), || format!("fig9 original liquidity {}", rep.f_original))?;
    ensure(rep.f_best_eq == Some(int(5)), || format!("fig9 best equilibrium {:?}", rep.f_best_eq))
}

fn c13_solver_cross_checks() -> Outcome {
    let mut r = rng(13);
    for k in 0..50 {
        let net = random_network(&mut r, 5, 10, 0.4, int(1), int(1));
        let m = int(r.gen_range(0..=6));
        let a = optimal_injections_lp(&net, &m)?.1.liquidity;
        let b = optimal_injections_enumerative(&net, &m)?.1.liquidity;
        ensure(a == b, || format!("network {k}: lp {a} vs enumerative {b}"))?;
    }
    let sets = [[0, 1, 2]; 3];
    let v = optimal_removal(&gadget_rxc3(&sets, int(1000))?, RemovalObjective::MaxLiquidity)?.value;
    ensure(v == int(14), || format!("rxc3 value {v}"))?;

    let x = [int(2), int(3), int(5)];
    let net = gadget_subset_sum(&x, int(5))?;
    let out = optimal_removal(&net, RemovalObjective::MinForgivenTargetSolvent(0))?;
    let mut brute: Option<Rational> = None;
    for mask in 0u32..8 {
        let removed: Vec<Edge> = (0..3).filter(|i| mask & (1 << i) != 0).map(|i| Edge::new(0, i + 1)).collect();
        let c = greatest_clearing(&net.remove_edges(&removed)?)?;
        if !c.is_defaulting(0) {
            let forgiven: Rational = removed.iter().map(|e| x[e.lender - 1].clone()).sum();
            brute = Some(brute.map_or(forgiven.clone(), |b| b.min_of(forgiven)));
        }
    }
    ensure(out.value == int(5) && brute == Some(int(5)), || format!("subset-sum {} vs {brute:?}", out.value))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 13] = [
        ("fig1 clearing, exact and float", c01_fig1_clearing),
        ("fig1 threat indices", c02_fig1_threat),
        ("fig1 greedy versus optimal injection", c03_fig1_greedy_vs_optimal),
        ("greedy family ratio", c04_greedy_family),
        ("fig8 game without equilibrium", c05_fig8_game),
        ("fig5 game with greedy injections", c06_fig5_game),
        ("keep-all equilibrium without default costs", c07_existence),
        ("keep-all equilibrium on trees and cycles", c08_trees_and_cycles),
        ("removal monotonicity", c09_removal_monotonicity),
        ("greatest and least fixed points", c10_fixed_points),
        ("liquidity gain bounded by budget times top threat", c11_threat_bound),
        ("anarchy and stability ratios", c12_quality_metrics),
        ("solver cross-checks", c13_solver_cross_checks),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(()) => println!("PASS {:02} {name}", k + 1),
            Err(reason) => {
                failures += 1;
                println!("FAIL {:02} {name}: {reason}", k + 1);
            }
        }
    }
    assert_eq!(failures, 0, "{failures} acceptance criteria failed");
}
