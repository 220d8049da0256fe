use proptest::prelude::*;

use tdma_apx_core::cnf::{self, emit_dimacs, eval, max_sat_brute, parse_dimacs, random_formula};
use tdma_apx_core::gadget::{self, assignment_to_path, compile, path_to_assignment, traversable_clauses, Subset};
use tdma_apx_core::model::{check_feasible, interference_set, path_load, plan_load};
use tdma_apx_core::solver::{enum_paths, solve_exact, solve_greedy, unlimited_budget, SolveOptions};
use tdma_apx_core::{Assignment, Clause, Copies, FlowRequest, Formula, NcInstance, Network, NodeId, Path, RoutePlan};

fn network(n: usize, edges: &[bool], caps: &[u32]) -> Network {
    let mut net = Network::new();
    for (i, &c) in caps.iter().enumerate().take(n) {
        net.add_node(&format!("v{i}"), c).unwrap();
    }
    let mut k = 0;
    for a in 0..n {
        for b in a + 1..n {
            if edges[k] {
                net.add_edge(NodeId(a as u32), NodeId(b as u32)).unwrap();
            }
            k += 1;
        }
    }
    net
}

fn arb_network() -> impl Strategy<Value = Network> {
    (2usize..8).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec(prop::bool::weighted(0.45), n * (n - 1) / 2),
            prop::collection::vec(0u32..8, n),
        )
            .prop_map(|(n, e, c)| network(n, &e, &c))
    })
}

/// Random walk without revisits, starting at `start`.
fn walk(net: &Network, start: usize, choices: &[usize]) -> Path {
    let start = NodeId((start % net.node_count()) as u32);
    let mut nodes = vec![start];
    for &c in choices {
        let here = *nodes.last().unwrap();
        let next: Vec<NodeId> =
            net.neighbors(here).unwrap().iter().copied().filter(|v| !nodes.contains(v)).collect();
        if next.is_empty() {
            break;
        }
        nodes.push(next[c % next.len()]);
    }
    Path(nodes)
}

fn arb_net_and_paths() -> impl Strategy<Value = (Network, Vec<Path>)> {
    arb_network().prop_flat_map(|net| {
        let paths = prop::collection::vec((0usize..16, prop::collection::vec(0usize..16, 0..7)), 1..4);
        (Just(net), paths).prop_map(|(net, raw)| {
            let paths = raw.iter().map(|(s, c)| walk(&net, *s, c)).collect();
            (net, paths)
        })
    })
}

fn plan_of(paths: &[Path]) -> RoutePlan {
    let mut plan = RoutePlan::new();
    for (i, p) in paths.iter().enumerate() {
        plan.push(i, 0, p.clone());
    }
    plan
}

fn flows_of(net: &Network, paths: &[Path]) -> Vec<FlowRequest> {
    paths
        .iter()
        .map(|p| {
            let (s, d) = (p.first().unwrap(), p.last().unwrap());
            if s == d {
                // Single-node walks get a placeholder flow; they never route.
                let other = NodeId(((s.0 as usize + 1) % net.node_count()) as u32);
                FlowRequest::new(net, s, other, Copies::Finite(1), "x").unwrap()
            } else {
                FlowRequest::new(net, s, d, Copies::Finite(1), "x").unwrap()
            }
        })
        .collect()
}

proptest! {
    #[test]
    fn plan_load_is_additive((net, paths) in arb_net_and_paths(), split in 0usize..4) {
        let split = split.min(paths.len());
        let whole = plan_load(&net, &plan_of(&paths)).unwrap();
        let mut parts = plan_load(&net, &plan_of(&paths[..split])).unwrap();
        parts.add(&plan_load(&net, &plan_of(&paths[split..])).unwrap());
        prop_assert_eq!(whole, parts);
    }

    #[test]
    fn load_bounded_by_hops((net, paths) in arb_net_and_paths()) {
        for p in &paths {
            let load = path_load(&net, p).unwrap();
            prop_assert!(load.as_slice().iter().all(|&l| l as usize <= p.hop_count()));
        }
    }

    #[test]
    fn total_load_matches_interference_sets((net, paths) in arb_net_and_paths()) {
        for p in &paths {
            for q in [p.clone(), p.reversed()] {
                let expected: usize = q.hops().map(|(u, x)| interference_set(&net, u, x).unwrap().len()).sum();
                prop_assert_eq!(path_load(&net, &q).unwrap().total(), expected as u64);
            }
        }
    }

    #[test]
    fn feasibility_is_monotone((net, paths) in arb_net_and_paths(), drop in 0usize..4) {
        let flows = flows_of(&net, &paths);
        let routable: Vec<Path> = paths.iter().filter(|p| p.len() > 1).cloned().collect();
        let flows: Vec<FlowRequest> = paths.iter().zip(flows).filter(|(p, _)| p.len() > 1).map(|(_, f)| f).collect();
        let plan = plan_of(&routable);
        if check_feasible(&net, &flows, &plan).is_feasible() && !routable.is_empty() {
            let mut smaller = plan.clone();
            smaller.routes.remove(drop % routable.len());
            prop_assert!(check_feasible(&net, &flows, &smaller).is_feasible());
        }
    }
}

fn arb_formula(max_vars: u32, max_clauses: usize, max_width: usize) -> impl Strategy<Value = Formula> {
    (1..=max_vars).prop_flat_map(move |n| {
        let lit = (1..=n, any::<bool>()).prop_map(|(v, p)| if p { v as i64 } else { -(v as i64) });
        let clause = prop::collection::vec(lit, 1..=max_width);
        prop::collection::vec(clause, 0..=max_clauses).prop_map(move |cs| {
            Formula::new(n, cs.iter().map(|c| Clause::from_dimacs(c)).collect()).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn sat_oracles_agree(f in arb_formula(5, 8, 3)) {
        let (best, witness) = max_sat_brute(&f).unwrap();
        prop_assert!(best <= f.clause_count());
        prop_assert_eq!(eval(&f, &witness).unwrap(), best);
        prop_assert_eq!(cnf::brute_sat(&f).unwrap().is_some(), best == f.clause_count());
        for rank in 0..1u64 << f.var_count() {
            prop_assert!(eval(&f, &Assignment::from_rank(f.var_count(), rank)).unwrap() <= best);
        }
    }

    #[test]
    fn dimacs_round_trip(n in 2u32..7, m in 0usize..10, k in 2u32..4, seed in any::<u64>()) {
        let f = random_formula(n, m, k.min(n), seed).unwrap();
        prop_assert_eq!(parse_dimacs(&emit_dimacs(&f)).unwrap(), f);
    }

    #[test]
    fn max_sat_ignores_ordering(f in arb_formula(4, 6, 3), rot in 0usize..6) {
        let mut clauses: Vec<Clause> = f.clauses().to_vec();
        if !clauses.is_empty() {
            let r = rot % clauses.len();
            clauses.rotate_left(r);
        }
        for c in &mut clauses {
            c.literals.reverse();
        }
        let g = Formula::new(f.var_count(), clauses).unwrap();
        prop_assert_eq!(max_sat_brute(&f).unwrap().0, max_sat_brute(&g).unwrap().0);
    }
}

/// Subset sizes counted directly from literal occurrences.
fn counting_oracle(f: &Formula) -> [usize; 5] {
    let m = f.clause_count();
    let lits: usize = f.clauses().iter().map(Clause::width).sum();
    let mut v5 = 0;
    for var in 1..=f.var_count() {
        let occurrences: Vec<bool> =
            f.clauses().iter().flat_map(|c| &c.literals).filter(|l| l.var == var).map(|l| l.positive).collect();
        let pos = occurrences.iter().filter(|&&p| p).count();
        v5 += pos * (occurrences.len() - pos);
    }
    [2 * m, lits, 2 * lits, m, v5]
}

fn preloaded_plan(inst: &NcInstance, main: Option<Path>) -> RoutePlan {
    let mut plan = RoutePlan::new();
    for (i, p) in inst.preload_paths().unwrap().into_iter().enumerate() {
        plan.push(i, 0, p);
    }
    if let Some(p) = main {
        plan.push(inst.main_flow().unwrap(), 0, p);
    }
    plan
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn subset_sizes_match_counting_oracle(f in arb_formula(6, 6, 4)) {
        prop_assume!(f.clause_count() > 0);
        let inst = compile(&f).unwrap();
        let counts = inst.subset_counts();
        let got = [counts[&Subset::V1], counts[&Subset::V2], counts[&Subset::V3], counts[&Subset::V4], counts[&Subset::V5]];
        prop_assert_eq!(got, counting_oracle(&f));
        prop_assert_eq!(counts[&Subset::Aux], f.clause_count() + 1);
    }

    #[test]
    fn gadget_degree_facts(f in arb_formula(6, 6, 4)) {
        prop_assume!(f.clause_count() > 0);
        let inst = compile(&f).unwrap();
        let layout = inst.layout().unwrap();
        for k in &layout.conflicts {
            prop_assert_eq!(inst.network.neighbors(k.node).unwrap().len(), 2);
        }
        for c in &layout.clauses {
            let mut around = inst.network.neighbors(c.bypass).unwrap().to_vec();
            around.sort();
            let mut expect = vec![c.entry, c.exit, c.preload_src];
            expect.sort();
            prop_assert_eq!(around, expect);
            for (a, &x) in c.lit.iter().enumerate() {
                for &y in &c.lit[a + 1..] {
                    prop_assert!(inst.network.has_edge(x, y));
                }
            }
        }
    }

    /// Widths up to four keep every canonical route within literal capacity.
    #[test]
    fn canonical_routes_sound_and_complete(f in arb_formula(4, 4, 4)) {
        prop_assume!(f.clause_count() > 0);
        let inst = compile(&f).unwrap();
        let m = f.clause_count();
        for rank in 0..1u64 << f.var_count() {
            let a = Assignment::from_rank(f.var_count(), rank);
            let satisfied = eval(&f, &a).unwrap();
            match assignment_to_path(&inst, &a) {
                Ok(p) => {
                    prop_assert_eq!(satisfied, m);
                    let plan = preloaded_plan(&inst, Some(p.clone()));
                    prop_assert!(check_feasible(&inst.network, &inst.flows, &plan).is_feasible());
                    let partial = path_to_assignment(&inst, &p).unwrap();
                    prop_assert!(partial.agrees_with(&a));
                }
                Err(gadget::GadgetError::ClauseFalsified { .. }) => prop_assert!(satisfied < m),
                Err(e) => prop_assert!(false, "unexpected {e}"),
            }
            prop_assert_eq!(traversable_clauses(&inst, &a).unwrap(), satisfied);
        }
    }

    #[test]
    fn audit_passes_up_to_width_four(f in arb_formula(5, 4, 4)) {
        prop_assume!(f.clause_count() > 0);
        let report = gadget::audit(&compile(&f).unwrap()).unwrap();
        prop_assert!(report.is_ok(), "{:?}", report.failures());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Optimum is m + 1 exactly when the formula is satisfiable, m otherwise.
    #[test]
    fn exact_optimum_tracks_satisfiability(n in 2u32..4, m in 1usize..4, k in 2u32..3, seed in any::<u64>()) {
        let f = random_formula(n, m, k.min(n), seed).unwrap();
        let inst = compile(&f).unwrap();
        let result = solve_exact(&inst, &SolveOptions::default());
        prop_assert!(result.optimal);
        let sat = cnf::brute_sat(&f).unwrap().is_some();
        prop_assert_eq!(result.accepted_count, if sat { m + 1 } else { m });
    }
}

#[test]
fn unsatisfiable_gadgets_reject_the_main_flow() {
    // Every sign pattern over two variables: unsatisfiable.
    let f = Formula::from_dimacs_clauses(2, &[&[1, 2], &[1, -2], &[-1, 2], &[-1, -2]]).unwrap();
    let inst = compile(&f).unwrap();
    let r = solve_exact(&inst, &SolveOptions::default());
    assert!(r.optimal);
    assert_eq!(r.accepted_count, 4);
    assert_eq!(r.plan.copies_of(inst.main_flow().unwrap()), 0);

    let pair = compile(&Formula::from_dimacs_clauses(1, &[&[1], &[-1]]).unwrap()).unwrap();
    assert_eq!(solve_exact(&pair, &SolveOptions::default()).accepted_count, 2);

    let single = compile(&Formula::from_dimacs_clauses(2, &[&[1, -2]]).unwrap()).unwrap();
    let r = solve_exact(&single, &SolveOptions::default());
    assert!(r.optimal);
    assert_eq!(r.accepted_count, 2);
}

/// Every elementary path, no pruning.
fn naive_paths(net: &Network, s: NodeId, t: NodeId) -> Vec<Path> {
    fn go(net: &Network, t: NodeId, cur: &mut Vec<NodeId>, out: &mut Vec<Path>) {
        let u = *cur.last().unwrap();
        if u == t {
            out.push(Path(cur.clone()));
            return;
        }
        for v in net.nodes() {
            if net.has_edge(u, v) && !cur.contains(&v) {
                cur.push(v);
                go(net, t, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(net, t, &mut vec![s], &mut out);
    out
}

proptest! {
    #[test]
    fn enumeration_matches_naive(net in arb_network(), s in 0u32..8, t in 0u32..8) {
        let n = net.node_count() as u32;
        let (s, t) = (NodeId(s % n), NodeId(t % n));
        prop_assume!(s != t);
        let got = enum_paths(&net, s, t, &unlimited_budget(&net), 1_000_000);
        let mut want = naive_paths(&net, s, t);
        let mut have = got.paths.clone();
        want.sort();
        have.sort();
        prop_assert_eq!(have, want);

        let budgeted = enum_paths(&net, s, t, net.capacities(), 1_000_000);
        let fitting: Vec<Path> = got.paths.iter().filter(|p| path_load(&net, p).unwrap().fits(&net)).cloned().collect();
        prop_assert_eq!(budgeted.paths, fitting);
    }

    #[test]
    fn exact_dominates_greedy(net in arb_network(), demands in prop::collection::vec((0u32..8, 0u32..8, 1u32..3), 1..4)) {
        let n = net.node_count() as u32;
        let flows: Vec<FlowRequest> = demands
            .iter()
            .filter(|(s, t, _)| s % n != t % n)
            .map(|&(s, t, c)| FlowRequest::new(&net, NodeId(s % n), NodeId(t % n), Copies::Finite(c), "f").unwrap())
            .collect();
        let supply: u32 = flows.iter().map(|f| f.copies.supply(0)).sum();
        let inst = NcInstance::generic(net, flows);
        let exact = solve_exact(&inst, &SolveOptions::default());
        let greedy = solve_greedy(&inst, &SolveOptions::default());
        prop_assert!(exact.optimal);
        prop_assert!(exact.accepted_count >= greedy.accepted_count);
        prop_assert!(exact.accepted_count as u32 <= supply);
        prop_assert!(check_feasible(&inst.network, &inst.flows, &exact.plan).is_feasible());
        prop_assert!(check_feasible(&inst.network, &inst.flows, &greedy.plan).is_feasible());
        prop_assert_eq!(&exact, &solve_exact(&inst, &SolveOptions::default()));
    }
}
