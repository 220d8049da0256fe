//! MAX-NC solvers: path enumeration, exact branch-and-bound, a greedy
//! baseline, and the inapproximability constant.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use thiserror::Error;

use crate::gadget::NcInstance;
use crate::model::{FlowRequest, Network, NodeId, Path, RoutePlan};

pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;
pub const DEFAULT_PATH_LIMIT: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("k = {0} is outside the supported range 2..=63")]
    InvalidK(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathEnumeration {
    pub paths: Vec<Path>,
    /// More paths existed beyond the limit.
    pub truncated: bool,
}

/// Budget that never prunes.
pub fn unlimited_budget(net: &Network) -> Vec<u32> {
    alloc::vec![u32::MAX; net.node_count()]
}

/// Elementary `s -> t` paths whose own load fits `budget` (remaining
/// capacity per node), in depth-first order with ascending neighbour ids.
/// A prefix is abandoned as soon as its load exceeds the budget anywhere.
pub fn enum_paths(net: &Network, s: NodeId, t: NodeId, budget: &[u32], limit: usize) -> PathEnumeration {
    let mut walk = Walk {
        net,
        target: t,
        budget,
        limit,
        load: alloc::vec![0; net.node_count()],
        on_path: alloc::vec![false; net.node_count()],
        path: Vec::new(),
        out: Vec::new(),
        truncated: false,
    };
    if s != t && net.contains(s) && net.contains(t) && limit > 0 {
        walk.on_path[s.index()] = true;
        walk.path.push(s);
        walk.extend();
    }
    PathEnumeration { paths: walk.out, truncated: walk.truncated }
}

struct Walk<'a> {
    net: &'a Network,
    target: NodeId,
    budget: &'a [u32],
    limit: usize,
    load: Vec<u32>,
    on_path: Vec<bool>,
    path: Vec<NodeId>,
    out: Vec<Path>,
    truncated: bool,
}

impl Walk<'_> {
    fn extend(&mut self) {
        let u = *self.path.last().expect("walk starts at the source");
        if u == self.target {
            if self.out.len() == self.limit {
                self.truncated = true;
            } else {
                self.out.push(Path(self.path.clone()));
            }
            return;
        }
        // Every continuation makes `u` transmit, charging its closed neighbourhood.
        let neighbors = self.net.adj(u);
        let fits = core::iter::once(u)
            .chain(neighbors.iter().copied())
            .all(|v| self.load[v.index()] < self.budget[v.index()]);
        if !fits {
            return;
        }
        for v in core::iter::once(u).chain(neighbors.iter().copied()) {
            self.load[v.index()] += 1;
        }
        for &x in neighbors {
            if self.truncated {
                break;
            }
            if self.on_path[x.index()] {
                continue;
            }
            self.on_path[x.index()] = true;
            self.path.push(x);
            self.extend();
            self.path.pop();
            self.on_path[x.index()] = false;
        }
        for v in core::iter::once(u).chain(neighbors.iter().copied()) {
            self.load[v.index()] -= 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    /// Search-tree nodes before the exact solver gives up.
    pub node_budget: u64,
    /// Candidate paths kept per flow.
    pub path_limit: usize,
    /// Supply for unbounded demands; `None` uses the instance default.
    pub copy_cap: Option<u32>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { node_budget: DEFAULT_NODE_BUDGET, path_limit: DEFAULT_PATH_LIMIT, copy_cap: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveResult {
    pub accepted_count: usize,
    pub plan: RoutePlan,
    /// The search was exhaustive: no budget cut and no truncated path list.
    pub optimal: bool,
    pub nodes_explored: u64,
    pub budget_hit: bool,
    pub paths_truncated: bool,
}

/// Candidate route with its load as sorted `(node, load)` pairs.
struct Candidate {
    path: Path,
    load: Vec<(usize, u32)>,
}

struct FlowCandidates {
    supply: u32,
    candidates: Vec<Candidate>,
    /// Per node, the least load any candidate puts on it (non-zero entries only).
    mandatory: Vec<(usize, u32)>,
}

fn sparse_load(net: &Network, p: &Path) -> Vec<(usize, u32)> {
    let mut load: Vec<(usize, u32)> = Vec::new();
    for (u, _) in p.hops() {
        for v in core::iter::once(u).chain(net.adj(u).iter().copied()) {
            load.push((v.index(), 1));
        }
    }
    load.sort_unstable();
    let mut merged: Vec<(usize, u32)> = Vec::with_capacity(load.len());
    for (v, l) in load {
        match merged.last_mut() {
            Some(last) if last.0 == v => last.1 += l,
            _ => merged.push((v, l)),
        }
    }
    merged
}

fn candidates_for(net: &Network, flow: &FlowRequest, cap: u32, limit: usize) -> (FlowCandidates, bool) {
    let found = enum_paths(net, flow.source, flow.destination, net.capacities(), limit);
    let candidates: Vec<Candidate> = found
        .paths
        .into_iter()
        .map(|path| Candidate { load: sparse_load(net, &path), path })
        .collect();
    let mut mandatory = Vec::new();
    if let Some(first) = candidates.first() {
        let mut min = alloc::vec![0u32; net.node_count()];
        for &(v, l) in &first.load {
            min[v] = l;
        }
        for c in &candidates[1..] {
            let mut dense = alloc::vec![0u32; net.node_count()];
            for &(v, l) in &c.load {
                dense[v] = l;
            }
            for (m, d) in min.iter_mut().zip(dense) {
                *m = (*m).min(d);
            }
        }
        mandatory = min.into_iter().enumerate().filter(|&(_, l)| l > 0).collect();
    }
    (FlowCandidates { supply: flow.copies.supply(cap), candidates, mandatory }, found.truncated)
}

struct Search<'a> {
    caps: &'a [u32],
    flows: Vec<FlowCandidates>,
    load: Vec<u32>,
    chosen: Vec<(usize, usize)>,
    best: usize,
    best_chosen: Vec<(usize, usize)>,
    nodes: u64,
    node_budget: u64,
    budget_hit: bool,
}

impl Search<'_> {
    fn flow_bound(&self, f: usize, supply_left: u32) -> usize {
        let flow = &self.flows[f];
        if flow.candidates.is_empty() {
            return 0;
        }
        let mut bound = supply_left;
        for &(v, m) in &flow.mandatory {
            bound = bound.min(self.caps[v].saturating_sub(self.load[v]) / m);
        }
        bound as usize
    }

    fn upper_bound(&self, f: usize, used: u32, accepted: usize) -> usize {
        let here = self.flow_bound(f, self.flows[f].supply - used);
        let later: usize = (f + 1..self.flows.len()).map(|g| self.flow_bound(g, self.flows[g].supply)).sum();
        accepted + here + later
    }

    fn fits(&self, c: &Candidate) -> bool {
        c.load.iter().all(|&(v, l)| self.load[v] + l <= self.caps[v])
    }

    fn apply(&mut self, f: usize, idx: usize, sign: bool) {
        for &(v, l) in &self.flows[f].candidates[idx].load {
            if sign {
                self.load[v] += l;
            } else {
                self.load[v] -= l;
            }
        }
    }

    /// Explores every multiset of candidate indices per flow, flows in order.
    fn go(&mut self, f: usize, from: usize, used: u32, accepted: usize) {
        if self.budget_hit {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.node_budget {
            self.budget_hit = true;
            return;
        }
        if accepted > self.best {
            self.best = accepted;
            self.best_chosen = self.chosen.clone();
        }
        if f == self.flows.len() || self.upper_bound(f, used, accepted) <= self.best {
            return;
        }
        if used < self.flows[f].supply {
            for idx in from..self.flows[f].candidates.len() {
                if !self.fits(&self.flows[f].candidates[idx]) {
                    continue;
                }
                self.apply(f, idx, true);
                self.chosen.push((f, idx));
                self.go(f, idx, used + 1, accepted + 1);
                self.chosen.pop();
                self.apply(f, idx, false);
                if self.budget_hit || self.upper_bound(f, used, accepted) <= self.best {
                    return;
                }
            }
        }
        self.go(f + 1, 0, 0, accepted);
    }
}

/// Exact MAX-NC by branch-and-bound over copy counts and path choices.
/// Candidate paths per flow are enumerated once against full capacity.
/// Copies of a flow take non-decreasing candidate indices, so each plan is
/// visited once; ties keep the first plan found in that order.
pub fn solve_exact(inst: &NcInstance, opts: &SolveOptions) -> SolveResult {
    let cap = opts.copy_cap.unwrap_or_else(|| inst.default_copy_cap());
    solve_exact_flows(&inst.network, &inst.flows, cap, opts)
}

pub fn solve_exact_flows(net: &Network, flows: &[FlowRequest], copy_cap: u32, opts: &SolveOptions) -> SolveResult {
    let mut truncated = false;
    let prepared: Vec<FlowCandidates> = flows
        .iter()
        .map(|f| {
            let (c, t) = candidates_for(net, f, copy_cap, opts.path_limit);
            truncated |= t;
            c
        })
        .collect();
    let mut search = Search {
        caps: net.capacities(),
        flows: prepared,
        load: alloc::vec![0; net.node_count()],
        chosen: Vec::new(),
        best: 0,
        best_chosen: Vec::new(),
        nodes: 0,
        node_budget: opts.node_budget,
        budget_hit: false,
    };
    search.go(0, 0, 0, 0);

    let mut plan = RoutePlan::new();
    let mut copies = alloc::vec![0u32; flows.len()];
    for &(f, idx) in &search.best_chosen {
        plan.push(f, copies[f], search.flows[f].candidates[idx].path.clone());
        copies[f] += 1;
    }
    SolveResult {
        accepted_count: plan.len(),
        plan,
        optimal: !search.budget_hit && !truncated,
        nodes_explored: search.nodes,
        budget_hit: search.budget_hit,
        paths_truncated: truncated,
    }
}

/// Shortest-first greedy admission: demands in order, each copy takes the
/// feasible path with the fewest hops (ties: smallest node-id sequence);
/// a demand stops at its first rejected copy.
pub fn solve_greedy(inst: &NcInstance, opts: &SolveOptions) -> SolveResult {
    let cap = opts.copy_cap.unwrap_or_else(|| inst.default_copy_cap());
    solve_greedy_flows(&inst.network, &inst.flows, cap, opts)
}

pub fn solve_greedy_flows(net: &Network, flows: &[FlowRequest], copy_cap: u32, opts: &SolveOptions) -> SolveResult {
    let mut load = alloc::vec![0u32; net.node_count()];
    let mut plan = RoutePlan::new();
    let mut explored = 0u64;
    let mut truncated = false;
    for (f, flow) in flows.iter().enumerate() {
        for copy in 0..flow.copies.supply(copy_cap) {
            let remaining: Vec<u32> = net.capacities().iter().zip(&load).map(|(&c, &l)| c.saturating_sub(l)).collect();
            let found = enum_paths(net, flow.source, flow.destination, &remaining, opts.path_limit);
            explored += found.paths.len() as u64;
            truncated |= found.truncated;
            let Some(best) = found.paths.into_iter().min_by(|a, b| {
                a.hop_count().cmp(&b.hop_count()).then_with(|| a.nodes().cmp(b.nodes()))
            }) else {
                break;
            };
            for (v, l) in sparse_load(net, &best) {
                load[v] += l;
            }
            plan.push(f, copy, best);
        }
    }
    SolveResult {
        accepted_count: plan.len(),
        plan,
        optimal: false,
        nodes_explored: explored,
        budget_hit: false,
        paths_truncated: truncated,
    }
}

/// Non-negative rational in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ratio {
    numer: u64,
    denom: u64,
}

impl Ratio {
    pub fn new(numer: u64, denom: u64) -> Self {
        assert!(denom != 0, "zero denominator");
        let g = gcd(numer, denom);
        Ratio { numer: numer / g, denom: denom / g }
    }

    pub fn numer(self) -> u64 {
        self.numer
    }

    pub fn denom(self) -> u64 {
        self.denom
    }

    pub fn to_f64(self) -> f64 {
        self.numer as f64 / self.denom as f64
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> Ordering {
        (u128::from(self.numer) * u128::from(other.denom)).cmp(&(u128::from(other.numer) * u128::from(self.denom)))
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer, self.denom)
    }
}

/// `1 / (1 - 2^-k) = 2^k / (2^k - 1)`, the MAX-k-SAT inapproximability
/// constant carried over to MAX-NC (the epsilon slack is not represented).
pub fn inapprox_bound(k: u32) -> Result<Ratio, SolverError> {
    if !(2..=63).contains(&k) {
        return Err(SolverError::InvalidK(k));
    }
    let p = 1u64 << k;
    Ok(Ratio::new(p, p - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{check_feasible, Copies};
    use alloc::string::ToString;
    use alloc::vec;

    fn chain(caps: &[u32]) -> Network {
        let mut net = Network::new();
        let names = ["A", "B", "C", "D", "E", "F"];
        let ids: Vec<NodeId> = caps.iter().zip(names).map(|(&c, n)| net.add_node(n, c).unwrap()).collect();
        for w in ids.windows(2) {
            net.add_edge(w[0], w[1]).unwrap();
        }
        net
    }

    #[test]
    fn enumerates_unique_path() {
        let net = chain(&[9, 9, 9]);
        let e = enum_paths(&net, NodeId(0), NodeId(2), &unlimited_budget(&net), 10);
        assert_eq!(e.paths, vec![Path(vec![NodeId(0), NodeId(1), NodeId(2)])]);
        assert!(!e.truncated);
    }

    #[test]
    fn enumerates_cycle_in_id_order() {
        let mut net = chain(&[9, 9, 9]);
        net.add_edge(NodeId(2), NodeId(0)).unwrap();
        let e = enum_paths(&net, NodeId(0), NodeId(2), &unlimited_budget(&net), 10);
        assert_eq!(e.paths, vec![Path(vec![NodeId(0), NodeId(1), NodeId(2)]), Path(vec![NodeId(0), NodeId(2)])]);
        let cut = enum_paths(&net, NodeId(0), NodeId(2), &unlimited_budget(&net), 1);
        assert_eq!(cut.paths.len(), 1);
        assert!(cut.truncated);
    }

    #[test]
    fn budget_prunes_paths() {
        let net = chain(&[9, 1, 9]);
        let e = enum_paths(&net, NodeId(0), NodeId(2), net.capacities(), 10);
        assert!(e.paths.is_empty());
    }

    fn instance(caps: &[u32], copies: Copies) -> NcInstance {
        let net = chain(caps);
        let flow = FlowRequest::new(&net, NodeId(0), NodeId(caps.len() as u32 - 1), copies, "main").unwrap();
        NcInstance::generic(net, vec![flow])
    }

    #[test]
    fn exact_on_chain() {
        let r = solve_exact(&instance(&[2, 2, 2], Copies::Unbounded), &SolveOptions::default());
        assert_eq!(r.accepted_count, 1);
        assert!(r.optimal);
        let r = solve_exact(&instance(&[4, 4, 4], Copies::Unbounded), &SolveOptions::default());
        assert_eq!(r.accepted_count, 2);
        let inst = instance(&[4, 4, 4], Copies::Unbounded);
        assert!(check_feasible(&inst.network, &inst.flows, &r.plan).is_feasible());
    }

    #[test]
    fn greedy_on_chain_and_empty_demands() {
        let r = solve_greedy(&instance(&[2, 2, 2], Copies::Unbounded), &SolveOptions::default());
        assert_eq!(r.accepted_count, 1);
        assert!(!r.optimal);
        let empty = NcInstance::generic(chain(&[1, 1]), vec![]);
        assert_eq!(solve_greedy(&empty, &SolveOptions::default()).accepted_count, 0);
        assert_eq!(solve_exact(&empty, &SolveOptions::default()).accepted_count, 0);
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let opts = SolveOptions { node_budget: 1, ..SolveOptions::default() };
        let r = solve_exact(&instance(&[4, 4, 4], Copies::Unbounded), &opts);
        assert!(r.budget_hit);
        assert!(!r.optimal);
    }

    #[test]
    fn bound_values() {
        assert_eq!(inapprox_bound(3).unwrap(), Ratio::new(8, 7));
        assert_eq!(inapprox_bound(2).unwrap(), Ratio::new(4, 3));
        assert_eq!(inapprox_bound(3).unwrap().to_string(), "8/7");
        assert_eq!(inapprox_bound(1), Err(SolverError::InvalidK(1)));
        assert_eq!(inapprox_bound(64), Err(SolverError::InvalidK(64)));
        for k in 2..63 {
            let (a, b) = (inapprox_bound(k).unwrap(), inapprox_bound(k + 1).unwrap());
            assert!(a > b);
            assert!(b > Ratio::new(1, 1));
        }
    }

    #[test]
    fn ratio_reduces() {
        assert_eq!(Ratio::new(6, 4), Ratio::new(3, 2));
        assert_eq!(Ratio::new(0, 5).to_string(), "0/1");
    }
}
