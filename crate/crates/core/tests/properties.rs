use proptest::prelude::*;
use proptest::sample::subsequence;

use wdistill::bounds::{pairs_comparison, upper_bound};
use wdistill::evroutine::{
    ev_distribution_ordered, ev_tree, full_set_probability, satisfies_support_condition, EvStep,
    EvTree, PartyOrder,
};
use wdistill::graph::graph_from_indices;
use wdistill::lpo::poly::{chebyshev_nodes, eval_monomial, lagrange_eval};
use wdistill::lpo::{build_protocol_tree, p_fl, LpoOptions, LpoSolver, NodeRule, ProtocolTree};
use wdistill::mc::{random_measurement, simulate, statevector_oracle, stream_rng, SimConfig};
use wdistill::state::default_labels;
use wdistill::{apply_measurement, graph_catalog, standard_w, ConfigGraph, Terminal, WState};

fn weights(n: usize, vacuum: bool) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, n + usize::from(vacuum)).prop_map(move |w| {
        let s: f64 = w.iter().sum();
        let v: Vec<f64> = w.iter().map(|x| x / s).collect();
        if vacuum {
            v[1..].to_vec()
        } else {
            v
        }
    })
}

fn state(n: usize, vacuum: bool) -> impl Strategy<Value = WState> {
    weights(n, vacuum).prop_map(move |c| WState::new(c, default_labels(n)).unwrap())
}

fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect()
}

fn graph(n: usize) -> impl Strategy<Value = ConfigGraph> {
    let pairs = all_pairs(n);
    let m = pairs.len();
    subsequence(pairs, 0..=m).prop_map(move |e| graph_from_indices(n, &e).unwrap())
}

fn connected(g: &ConfigGraph) -> bool {
    let mut seen = vec![false; g.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in g.neighbors(i) {
            if !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn sized<T: std::fmt::Debug>(
    lo: usize,
    hi: usize,
    f: impl Fn(usize) -> BoxedStrategy<T> + 'static,
) -> impl Strategy<Value = T> {
    (lo..=hi).prop_flat_map(f)
}

fn state_and_graph(
    lo: usize,
    hi: usize,
    vacuum: bool,
) -> impl Strategy<Value = (WState, ConfigGraph)> {
    sized(lo, hi, move |n| (state(n, vacuum), graph(n)).boxed())
}

fn depth(t: &EvTree) -> usize {
    match &t.step {
        EvStep::Leaf(_) => 0,
        EvStep::Split { children, .. } => {
            1 + children
                .iter()
                .map(|c| depth(&c.subtree))
                .max()
                .unwrap_or(0)
        }
    }
}

fn permuted_graph(g: &ConfigGraph, perm: &[usize]) -> ConfigGraph {
    let edges: Vec<(usize, usize)> = g.edges().map(|(i, j)| (perm[i], perm[j])).collect();
    graph_from_indices(g.len(), &edges).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn measurement_is_complete_and_kt_monotone(s in sized(2, 8, |n| state(n, true).boxed()), seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0);
        let party = s.labels()[seed as usize % s.len()].clone();
        let m = random_measurement(&mut rng, &party, 0.5, false);
        let out = apply_measurement(&s, &m).unwrap();
        let total: f64 = out.iter().map(|b| b.probability).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        let mut avg = vec![0.0; s.len()];
        let mut avg0 = 0.0;
        for b in &out {
            let Some(post) = &b.state else { continue };
            let sum: f64 = post.components().iter().sum();
            prop_assert!(sum <= 1.0 + 1e-12 && post.x0() >= 0.0);
            for (a, x) in avg.iter_mut().zip(post.components()) {
                *a += b.probability * x;
            }
            avg0 += b.probability * post.x0();
        }
        for (a, x) in avg.iter().zip(s.components()) {
            prop_assert!(*a <= x + 1e-12);
        }
        prop_assert!(avg0 >= s.x0() - 1e-12);
    }

    #[test]
    fn oracle_matches_component_rule(s in sized(2, 8, |n| state(n, true).boxed()), seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 1);
        let party = s.labels()[(seed >> 7) as usize % s.len()].clone();
        let m = random_measurement(&mut rng, &party, 0.5, false);
        let core = apply_measurement(&s, &m).unwrap();
        let oracle = statevector_oracle(&s, &m).unwrap();
        for (b, (p, post)) in core.iter().zip(&oracle) {
            prop_assert!((b.probability - p).abs() <= 1e-10);
            match (&b.state, post) {
                (Some(x), Some(y)) => {
                    for (u, v) in x.components().iter().zip(y.components()) {
                        prop_assert!((u - v).abs() <= 1e-10);
                    }
                }
                (None, None) => {}
                _ => prop_assert!(false, "null outcome on one side only"),
            }
        }
    }

    #[test]
    fn remove_nodes_commutes(g in graph(6), a in subsequence(default_labels(6), 0..3), b in subsequence(default_labels(6), 0..3)) {
        let ab = g.remove_nodes(&a).unwrap().remove_nodes(&b);
        let ba = g.remove_nodes(&b).and_then(|h| h.remove_nodes(&a));
        match (ab, ba) {
            (Ok(x), Ok(y)) => prop_assert_eq!(x, y),
            (x, y) => prop_assert_eq!(x.is_ok(), y.is_ok()),
        }
        let mut both = a.clone();
        both.extend(b.iter().filter(|l| !a.contains(l)).cloned());
        let disjoint = b.iter().all(|l| !a.contains(l));
        if disjoint {
            prop_assert_eq!(g.remove_nodes(&both).unwrap(), g.remove_nodes(&a).unwrap().remove_nodes(&b).unwrap());
        }
        let empty: [&str; 0] = [];
        prop_assert_eq!(g.remove_nodes(&empty).unwrap(), g.clone());
    }

    #[test]
    fn ev_tree_is_total_and_shallow((s, g) in state_and_graph(2, 6, false)) {
        let t = ev_tree(&s, &g).unwrap();
        prop_assert!(depth(&t) <= 2 * s.len());
        let d = t.distribution();
        prop_assert!((d.total() - 1.0).abs() <= 1e-9);
        for (t, _) in d.entries() {
            if let Terminal::StandardW { parties } = t {
                prop_assert!(satisfies_support_condition(&s, &g, parties));
            }
        }
    }

    #[test]
    fn full_set_closed_form((s, g) in state_and_graph(3, 6, false)) {
        prop_assume!(connected(&g));
        let top = s.max_value();
        prop_assume!(s.components().iter().filter(|&&x| (x - top).abs() <= 1e-9).count() == 1);
        let d = ev_tree(&s, &g).unwrap().distribution();
        let all = Terminal::StandardW { parties: s.labels().to_vec() };
        prop_assert!((d.probability_of(&all) - full_set_probability(&s)).abs() <= 1e-10);
    }

    // Lowest-index least-party selection makes the optimum label dependent
    // once tied least-connected parties are not equivalent (first at N = 5).
    // Where every tie is immaterial the value is a graph invariant.
    #[test]
    fn optimum_is_relabeling_invariant(g in sized(2, 6, |n| graph(n).boxed()), perm in any::<u64>()) {
        let n = g.len();
        let mut order: Vec<usize> = (0..n).collect();
        let mut r = stream_rng(perm, 0);
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut r);
        let h = permuted_graph(&g, &order);
        let opts = LpoOptions { diagnose_ties: true, ..LpoOptions::default() };
        let immaterial = |g: &ConfigGraph| {
            let mut s = LpoSolver::with_options(g.clone(), opts).unwrap();
            s.p3().unwrap();
            s.reports().iter().filter(|r| r.rule != NodeRule::Symmetric).all(|r| {
                let v: Vec<f64> = r.tie_values.iter().map(|t| t.1).collect();
                v.iter().all(|x| (x - r.value).abs() <= 1e-9)
            })
        };
        prop_assume!(immaterial(&g) && immaterial(&h));
        let a = LpoSolver::new(g).unwrap().p3().unwrap().value;
        let b = LpoSolver::new(h).unwrap().p3().unwrap().value;
        prop_assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
    }

    #[test]
    fn lpo_between_baseline_and_one(g in sized(2, 6, |n| graph(n).boxed())) {
        let w = standard_w(g.labels().to_vec()).unwrap();
        let lpo = LpoSolver::new(g.clone()).unwrap().p_lpo(&w).unwrap();
        prop_assert!(lpo <= 1.0 + 1e-12);
        prop_assert!(lpo >= p_fl(&g).unwrap() - 1e-9);
    }

    #[test]
    fn bounds_dominate_lpo(s in state(4, true), idx in 0usize..11) {
        let names = ["I", "I'", "I''", "II", "III-a", "III-b", "III-c", "IV", "V", "wedge", "triangle"];
        let g = graph_catalog(names[idx], None).unwrap();
        let s = if g.len() == 3 {
            let c = s.components();
            WState::new(c[..3].to_vec(), g.labels().to_vec()).unwrap()
        } else {
            s
        };
        let lpo = LpoSolver::new(g.clone()).unwrap().p_lpo(&s).unwrap();
        let b = upper_bound(&s, &g).unwrap().expect("preset has a bound");
        prop_assert!(lpo <= b.value + 1e-8, "{}: {lpo} > {}", b.bound_name, b.value);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ev_probabilities_are_rational_in_alpha(g in sized(3, 6, |n| graph(n).boxed()), k in 0usize..6) {
        let n = g.len();
        let k = k % n;
        prop_assume!(!g.is_isolated(k));
        let y = |a: f64| {
            let p = 1.0 + (n - 1) as f64 * a;
            let c: Vec<f64> = (0..n).map(|i| if i == k { 1.0 / p } else { a / p }).collect();
            WState::new(c, g.labels().to_vec()).unwrap()
        };
        let scaled = |a: f64| -> Vec<(Terminal, f64)> {
            let p = (1.0 + (n - 1) as f64 * a) / n as f64;
            ev_tree(&y(a), &g).unwrap().distribution().into_entries().into_iter().map(|(t, l)| (t, l * p)).collect()
        };
        let nodes = chebyshev_nodes(4 * n);
        let samples: Vec<Vec<(Terminal, f64)>> = nodes.iter().map(|&a| scaled(a)).collect();
        let mut terminals: Vec<Terminal> = Vec::new();
        for (t, _) in samples.iter().flatten() {
            if !terminals.contains(t) {
                terminals.push(t.clone());
            }
        }
        for i in 0..20 {
            let a = 0.013 + 0.97 * i as f64 / 20.0;
            let fresh = scaled(a);
            for t in &terminals {
                let at = |v: &[(Terminal, f64)]| v.iter().find(|(u, _)| u == t).map_or(0.0, |e| e.1);
                let values: Vec<f64> = samples.iter().map(|v| at(v)).collect();
                let interp = lagrange_eval(&nodes, &values, a);
                prop_assert!((interp - at(&fresh)).abs() <= 1e-10, "{t} at {a}: {interp} vs {}", at(&fresh));
            }
        }
    }

    #[test]
    fn recovered_numerator_matches_direct_evaluation(g in sized(3, 6, |n| graph(n).boxed())) {
        let mut solver = LpoSolver::new(g.clone()).unwrap();
        let r = solver.p3().unwrap();
        prop_assume!(r.rule == NodeRule::LeastParty && !r.f_polynomial.is_empty());
        let k = g.index_of(r.least_party.as_deref().unwrap()).unwrap();
        let full = solver.full_mask();
        for i in 0..100 {
            let a = 0.004 + 0.99 * i as f64 / 100.0;
            let direct = solver.sample(full, k, a).unwrap();
            let f = eval_monomial(&r.f_polynomial, a);
            prop_assert!((f - direct.f).abs() <= 1e-10 * (1.0 + direct.f.abs()), "{f} vs {}", direct.f);
        }
    }

    #[test]
    fn reversed_party_order_is_recorded((s, g) in state_and_graph(3, 6, false)) {
        // Both orders yield valid distributions; differing values are a
        // property of the tie rule, not an error.
        let a = ev_distribution_ordered(&s, &g, PartyOrder::Ascending).unwrap();
        let b = ev_distribution_ordered(&s, &g, PartyOrder::Descending).unwrap();
        prop_assert!((a.total() - 1.0).abs() <= 1e-9 && (b.total() - 1.0).abs() <= 1e-9);
        let w = |d: &wdistill::OutcomeDistribution| d.entries().iter().filter(|(t, _)| matches!(t, Terminal::StandardW { .. })).map(|e| e.1).sum::<f64>();
        if (w(&a) - w(&b)).abs() > 1e-9 {
            eprintln!("order-dependent W mass {} vs {} on {:?}", w(&a), w(&b), g.labeled_edges());
        }
    }


    #[test]
    fn tree_converges_monotonically_in_cap(idx in 0usize..4, eps in 0.01f64..0.2) {
        let g = graph_catalog(["wedge", "triangle", "VI", "IV"][idx], None).unwrap();
        let w = standard_w(g.labels().to_vec()).unwrap();
        let mut last = 0.0;
        let mut last_trunc = 1.0;
        for cap in [1, 2, 4, 8, 16] {
            let t = build_protocol_tree(&w, &g, eps, cap).unwrap();
            let p = t.success_probability();
            prop_assert!(p >= last - 1e-12);
            prop_assert!(t.truncated_mass() <= last_trunc + 1e-12);
            last = p;
            last_trunc = t.truncated_mass();
        }
    }

    #[test]
    fn simulation_is_reproducible(seed in any::<u64>(), idx in 0usize..3) {
        let g = graph_catalog(["wedge", "VI", "II"][idx], None).unwrap();
        let t = build_protocol_tree(&standard_w(g.labels().to_vec()).unwrap(), &g, 0.05, 10).unwrap();
        let mut c = SimConfig::new(5000, seed);
        c.batch_size = 1024;
        prop_assert_eq!(simulate(&t, &c).unwrap().to_json(), simulate(&t, &c).unwrap().to_json());
    }

    #[test]
    fn json_round_trips((s, g) in state_and_graph(2, 5, true)) {
        let s2: WState = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        prop_assert_eq!(&s, &s2);
        let g2: ConfigGraph = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        prop_assert_eq!(&g, &g2);
        let t = build_protocol_tree(&s, &g, 0.05, 5).unwrap();
        let t2: ProtocolTree = serde_json::from_str(&t.to_json()).unwrap();
        prop_assert_eq!(t.to_json(), t2.to_json());
        prop_assert!((t.success_probability() - t2.success_probability()).abs() == 0.0);
    }
}

#[test]
fn separable_dominates_locc_on_pairs() {
    for n in 2..=200 {
        let (locc, sep) = pairs_comparison(n).unwrap();
        assert!(sep > locc, "N={n}");
    }
}

#[test]
fn simulated_z_scores_are_sound() {
    let g = graph_catalog("VI", None).unwrap();
    let t = build_protocol_tree(&standard_w(g.labels().to_vec()).unwrap(), &g, 0.05, 20).unwrap();
    let (mut total, mut outliers) = (0, 0);
    for seed in 0..40 {
        let r = simulate(&t, &SimConfig::new(20_000, seed)).unwrap();
        for s in &r.terminals {
            total += 1;
            if !s.within(3.0) {
                outliers += 1;
            }
        }
    }
    assert!(total >= 200);
    assert!(
        outliers as f64 <= 0.01 * total as f64,
        "{outliers} of {total}"
    );
}

#[test]
fn least_party_ties_can_matter() {
    // Hub A with leaves D, E and the path A-B-C: C, D and E tie as least
    // connected but are not equivalent.
    let g = graph_from_indices(5, &[(0, 1), (0, 3), (0, 4), (1, 2)]).unwrap();
    let opts = LpoOptions {
        diagnose_ties: true,
        ..LpoOptions::default()
    };
    let mut s = LpoSolver::with_options(g, opts).unwrap();
    let top = s.p3().unwrap();
    let values: Vec<f64> = top.tie_values.iter().map(|t| t.1).collect();
    assert_eq!(top.least_party.as_deref(), Some("C"));
    assert!((top.value - 17.0 / 30.0).abs() < 1e-9);
    let best = top.best_of_ties().unwrap();
    assert!(best > top.value + 0.01, "{values:?}");
}
