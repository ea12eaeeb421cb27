mod common;

use finnet::analytics::{increased_liquidity, threat_index};
use finnet::bailout::{greedy_injections, optimal_injections_lp};
use finnet::clearing::{greatest_clearing, is_clearing, least_clearing};
use finnet::debt_relief::{greedy_removal, optimal_removal, RemovalObjective};
use finnet::games::quality_report;
use finnet::scalar::{int, ratio};
use finnet::{FinancialNetwork, InjectionPlan, PolicySpec, Rational, Scalar, StrategyProfile};
use proptest::prelude::*;

use common::{cost_grid, float_close};

fn network(max_banks: usize, costs: bool) -> impl Strategy<Value = FinancialNetwork<Rational>> {
    (2..=max_banks).prop_flat_map(move |n| {
        let externals = prop::collection::vec(0i64..=10, n);
        let liabilities = prop::collection::vec(prop::option::weighted(0.4, 1i64..=10), n * n);
        let cost = if costs { 0usize..5 } else { 4usize..5 };
        (externals, liabilities, cost.clone(), cost).prop_map(move |(e, l, a, b)| {
            let edges = (0..n * n)
                .filter(|k| k / n != k % n)
                .filter_map(|k| l[k].map(|v| (k / n, k % n, int(v))))
                .collect::<Vec<_>>();
            let grid = cost_grid();
            FinancialNetwork::from_edges(e.into_iter().map(int).collect(), edges, grid[a].clone(), grid[b].clone())
                .unwrap()
        })
    })
}

fn profile_for(net: &FinancialNetwork<Rational>, bits: u32) -> StrategyProfile {
    let edges: Vec<_> =
        net.edges().into_iter().enumerate().filter(|(k, _)| bits & (1 << k) != 0).map(|(_, e)| e).collect();
    StrategyProfile::from_edges(net.len(), &edges).unwrap()
}

fn plan(transfers: Vec<(usize, i64)>, n: usize) -> InjectionPlan<Rational> {
    let transfers: Vec<(usize, Rational)> = transfers.into_iter().map(|(b, a)| (b % n, int(a))).collect();
    let budget = transfers.iter().map(|(_, a)| a.clone()).sum();
    InjectionPlan { transfers, budget }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn greatest_dominates_least_and_both_clear(net in network(6, true)) {
        let g = greatest_clearing(&net).unwrap();
        let l = least_clearing(&net).unwrap();
        for (gr, lr) in g.payments.iter().zip(&l.payments) {
            for (a, b) in gr.iter().zip(lr) {
                prop_assert!(a >= b);
            }
        }
        prop_assert!(is_clearing(&net, &g.payments).0);
        prop_assert!(is_clearing(&net, &l.payments).0);
    }

    #[test]
    fn payments_scale_with_the_data(net in network(5, true), c in 1i64..=7) {
        let c = ratio(c, 3);
        let g = greatest_clearing(&net).unwrap();
        let h = greatest_clearing(&net.scaled(&c)).unwrap();
        for (gr, hr) in g.payments.iter().zip(&h.payments) {
            for (a, b) in gr.iter().zip(hr) {
                prop_assert_eq!(a.clone() * c.clone(), b.clone());
            }
        }
        prop_assert_eq!(g.defaults, h.defaults);
    }

    #[test]
    fn rich_banks_pay_in_full(net in network(5, false)) {
        let rich: Vec<Rational> = (0..net.len()).map(|i| net.total_liabilities(i)).collect();
        let net = net.inject_vector(&rich).unwrap();
        let g = greatest_clearing(&net).unwrap();
        prop_assert!(g.defaults.is_empty());
        prop_assert_eq!(&g.payments, &net.liabilities().to_vec());
    }

    #[test]
    fn removals_are_idempotent_and_commute(net in network(5, true), a in any::<u32>(), b in any::<u32>()) {
        let pa = profile_for(&net, a & !b);
        let pb = profile_for(&net, b & !a);
        let once = net.apply_removals(&pa).unwrap();
        prop_assert_eq!(&once.apply_removals(&pa).unwrap(), &once);
        let ab = once.apply_removals(&pb).unwrap();
        let ba = net.apply_removals(&pb).unwrap().apply_removals(&pa).unwrap();
        prop_assert_eq!(&ab, &ba);
        prop_assert!(ab.validate().is_empty());
    }

    #[test]
    fn injections_compose(
        net in network(5, true),
        p1 in prop::collection::vec((0usize..8, 0i64..=5), 0..4),
        p2 in prop::collection::vec((0usize..8, 0i64..=5), 0..4),
    ) {
        let n = net.len();
        let joined = plan(p1.iter().chain(&p2).cloned().collect(), n);
        let stepwise = net.inject_externals(&plan(p1, n)).unwrap().inject_externals(&plan(p2, n)).unwrap();
        prop_assert_eq!(net.inject_externals(&joined).unwrap(), stepwise);
    }

    #[test]
    fn threat_is_scale_invariant(net in network(5, false), c in 1i64..=9) {
        let c = ratio(c, 4);
        let mu = threat_index(&net, &greatest_clearing(&net).unwrap()).unwrap();
        let scaled = net.scaled(&c);
        let nu = threat_index(&scaled, &greatest_clearing(&scaled).unwrap()).unwrap();
        prop_assert_eq!(&mu, &nu);
        let defaults = greatest_clearing(&net).unwrap().defaults;
        for (i, m) in mu.iter().enumerate() {
            if defaults.contains(&i) {
                prop_assert!(*m >= int(1));
            } else {
                prop_assert_eq!(m, &int(0));
            }
        }
    }

    #[test]
    fn lp_beats_greedy_and_greedy_spends_everything(net in network(5, false), m in 0i64..=8) {
        let m = ratio(m, 2);
        let greedy = greedy_injections(&net, &m).unwrap();
        let (plan, opt) = optimal_injections_lp(&net, &m).unwrap();
        prop_assert!(opt.liquidity >= greedy.clearing.liquidity);
        prop_assert!(plan.total() <= m);
        prop_assert!(is_clearing(&net.inject_externals(&plan).unwrap(), &opt.payments).0);
        if !greedy.clearing.defaults.is_empty() {
            prop_assert_eq!(greedy.plan.total(), m);
        }
    }

    #[test]
    fn optimal_removal_dominates(net in network(4, true)) {
        let keep = greatest_clearing(&net).unwrap().liquidity;
        let best = optimal_removal(&net, RemovalObjective::MaxLiquidity).unwrap().value;
        let greedy = greedy_removal(&net).unwrap().value;
        prop_assert!(best >= greedy);
        prop_assert!(greedy >= keep);
        let solvent = optimal_removal(&net, RemovalObjective::MinForgivenAllSolvent).unwrap();
        prop_assert!(solvent.clearing.defaults.is_empty());
    }

    #[test]
    fn float_mode_tracks_exact_mode(net in network(6, true)) {
        let exact = greatest_clearing(&net).unwrap();
        let float = greatest_clearing(&net.convert::<f64>()).unwrap();
        prop_assert_eq!(&exact.defaults, &float.defaults);
        for (er, fr) in exact.payments.iter().zip(&float.payments) {
            for (e, f) in er.iter().zip(fr) {
                prop_assert!(float_close(e.to_f64(), *f));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn quality_ratios_are_scale_invariant(net in network(3, true), c in 1i64..=5) {
        let c = ratio(c, 2);
        let a = quality_report(&net, &PolicySpec::None).unwrap();
        let b = quality_report(&net.scaled(&c), &PolicySpec::None).unwrap();
        prop_assert_eq!(a.poa, b.poa);
        prop_assert_eq!(a.pos, b.pos);
        prop_assert_eq!(a.eoa, b.eoa);
        prop_assert_eq!(a.eos, b.eos);
    }
}

#[test]
fn increased_liquidity_is_bounded_by_budget_times_threat() {
    let net = finnet::scenarios::fig1::<Rational>();
    let before = greatest_clearing(&net).unwrap();
    let top = threat_index(&net, &before).unwrap().into_iter().fold(int(0), Rational::max_of);
    for bank in 0..net.len() {
        let after = greatest_clearing(&net.inject_vector(&one_hot(net.len(), bank)).unwrap()).unwrap();
        assert!(increased_liquidity(&before, &after).unwrap() <= top);
    }
}

fn one_hot(n: usize, bank: usize) -> Vec<Rational> {
    (0..n).map(|i| if i == bank { int(1) } else { int(0) }).collect()
}
