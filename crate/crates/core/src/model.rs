//! Interference and capacity model.
//!
//! A network is an undirected graph where every node owns an integer slot
//! budget per TDMA frame. A hop `u -> x` occupies one slot on the
//! transmitter `u` and on every neighbour of `u` (the receiver included),
//! since all of them hear the emission. Hops are additive: a node near
//! several hops of the same route pays for each of them.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

/// Dense node index into a [`Network`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("duplicate node name {0:?}")]
    DuplicateNode(String),
    #[error("self-loop on node {0:?}")]
    SelfLoop(String),
    #[error("nodes {0:?} and {1:?} are not adjacent")]
    NotAdjacent(String, String),
    #[error("invalid path: {0}")]
    InvalidPath(PathDefect),
    #[error("flow source and destination are both {0:?}")]
    SameEndpoints(String),
    #[error("a flow must request at least one copy")]
    ZeroCopies,
}

/// Undirected graph with per-node capacity (slots per frame).
///
/// Edge weights are implicitly 1 and the slot duration is 1.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Network {
    names: Vec<String>,
    capacity: Vec<u32>,
    adjacency: Vec<Vec<NodeId>>,
    index: BTreeMap<String, NodeId>,
}

impl Network {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, name: &str, capacity: u32) -> Result<NodeId, ModelError> {
        if self.index.contains_key(name) {
            return Err(ModelError::DuplicateNode(name.to_string()));
        }
        let id = NodeId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.capacity.push(capacity);
        self.adjacency.push(Vec::new());
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    /// Adds the undirected edge `a -- b`. Re-adding an existing edge is a no-op.
    pub fn add_edge(&mut self, a: NodeId, b: NodeId) -> Result<(), ModelError> {
        self.check(a)?;
        self.check(b)?;
        if a == b {
            return Err(ModelError::SelfLoop(self.names[a.index()].clone()));
        }
        for (from, to) in [(a, b), (b, a)] {
            let list = &mut self.adjacency[from.index()];
            if let Err(pos) = list.binary_search(&to) {
                list.insert(pos, to);
            }
        }
        Ok(())
    }

    pub fn add_edge_by_name(&mut self, a: &str, b: &str) -> Result<(), ModelError> {
        let a = self.lookup(a)?;
        let b = self.lookup(b)?;
        self.add_edge(a, b)
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.names.len() as u32).map(NodeId)
    }

    /// Every undirected edge once, as `(low, high)` by index.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, list)| {
            let a = NodeId(i as u32);
            list.iter().filter(move |&&b| a < b).map(move |&b| (a, b))
        })
    }

    pub fn contains(&self, v: NodeId) -> bool {
        v.index() < self.names.len()
    }

    pub fn node(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    pub fn lookup(&self, name: &str) -> Result<NodeId, ModelError> {
        self.node(name).ok_or_else(|| ModelError::UnknownNode(name.to_string()))
    }

    /// Name of `v`. Panics if `v` is not a node of this network.
    pub fn name(&self, v: NodeId) -> &str {
        &self.names[v.index()]
    }

    pub fn capacity(&self, v: NodeId) -> u32 {
        self.capacity[v.index()]
    }

    pub fn capacities(&self) -> &[u32] {
        &self.capacity
    }

    pub fn set_capacity(&mut self, v: NodeId, capacity: u32) -> Result<(), ModelError> {
        self.check(v)?;
        self.capacity[v.index()] = capacity;
        Ok(())
    }

    pub fn neighbors(&self, v: NodeId) -> Result<&[NodeId], ModelError> {
        self.check(v)?;
        Ok(&self.adjacency[v.index()])
    }

    /// Neighbours of a node known to be valid.
    pub(crate) fn adj(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v.index()]
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.contains(a) && self.contains(b) && self.adjacency[a.index()].binary_search(&b).is_ok()
    }

    fn check(&self, v: NodeId) -> Result<(), ModelError> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(ModelError::UnknownNode(v.to_string()))
        }
    }

    fn describe(&self, v: NodeId) -> String {
        if self.contains(v) {
            self.names[v.index()].clone()
        } else {
            v.to_string()
        }
    }
}

/// Nodes whose slot budget the hop `transmitter -> receiver` consumes:
/// the transmitter, its whole neighbourhood, and the receiver. Sorted.
pub fn interference_set(
    net: &Network,
    transmitter: NodeId,
    receiver: NodeId,
) -> Result<Vec<NodeId>, ModelError> {
    let neighbors = net.neighbors(transmitter)?;
    net.neighbors(receiver)?;
    if !net.has_edge(transmitter, receiver) {
        return Err(ModelError::NotAdjacent(
            net.describe(transmitter),
            net.describe(receiver),
        ));
    }
    let mut set = Vec::with_capacity(neighbors.len() + 1);
    set.push(transmitter);
    set.extend_from_slice(neighbors);
    set.sort_unstable();
    Ok(set)
}

/// Requested multiplicity of a flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Copies {
    Finite(u32),
    Unbounded,
}

impl Copies {
    /// Effective number of copies when unbounded supply is capped at `cap`.
    pub fn supply(self, cap: u32) -> u32 {
        match self {
            Copies::Finite(n) => n,
            Copies::Unbounded => cap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowRequest {
    pub source: NodeId,
    pub destination: NodeId,
    pub copies: Copies,
    pub label: String,
}

impl FlowRequest {
    pub fn new(
        net: &Network,
        source: NodeId,
        destination: NodeId,
        copies: Copies,
        label: &str,
    ) -> Result<Self, ModelError> {
        net.check(source)?;
        net.check(destination)?;
        if source == destination {
            return Err(ModelError::SameEndpoints(net.describe(source)));
        }
        if copies == Copies::Finite(0) {
            return Err(ModelError::ZeroCopies);
        }
        Ok(FlowRequest { source, destination, copies, label: label.to_string() })
    }
}

/// Why a node sequence is not a usable route.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathDefect {
    #[error("node {node} at position {position} is not in the network")]
    UnknownNode { position: usize, node: NodeId },
    #[error("node {node} repeats at position {position}")]
    Repeated { position: usize, node: NodeId },
    #[error("hop {hop} ({from} -> {to}) has no edge")]
    NotAdjacent { hop: usize, from: NodeId, to: NodeId },
    #[error("route runs {got_source} -> {got_destination} but the flow needs {want_source} -> {want_destination}")]
    WrongEndpoints {
        want_source: NodeId,
        want_destination: NodeId,
        got_source: NodeId,
        got_destination: NodeId,
    },
    #[error("route names flow {0}, which does not exist")]
    UnknownFlow(usize),
    #[error("copy {copy} of flow {flow} is routed more than once")]
    DuplicateCopy { flow: usize, copy: u32 },
    #[error("empty route")]
    Empty,
}

/// Ordered node sequence.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path(pub Vec<NodeId>);

impl Path {
    pub fn new(nodes: Vec<NodeId>) -> Self {
        Path(nodes)
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn hop_count(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    /// Consecutive `(transmitter, receiver)` pairs.
    pub fn hops(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.0.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn first(&self) -> Option<NodeId> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<NodeId> {
        self.0.last().copied()
    }

    pub fn reversed(&self) -> Path {
        Path(self.0.iter().rev().copied().collect())
    }

    pub fn is_elementary(&self) -> bool {
        is_elementary(self)
    }

    /// Checks node membership, edge consistency and elementarity, reporting
    /// the first defect in path order.
    pub fn validate(&self, net: &Network) -> Result<(), PathDefect> {
        for (position, &node) in self.0.iter().enumerate() {
            if !net.contains(node) {
                return Err(PathDefect::UnknownNode { position, node });
            }
        }
        let mut seen = alloc::vec![false; net.node_count()];
        for (position, &node) in self.0.iter().enumerate() {
            if core::mem::replace(&mut seen[node.index()], true) {
                return Err(PathDefect::Repeated { position, node });
            }
            if position > 0 {
                let from = self.0[position - 1];
                if !net.has_edge(from, node) {
                    return Err(PathDefect::NotAdjacent { hop: position - 1, from, to: node });
                }
            }
        }
        Ok(())
    }
}

impl From<Vec<NodeId>> for Path {
    fn from(nodes: Vec<NodeId>) -> Self {
        Path(nodes)
    }
}

pub fn is_elementary(p: &Path) -> bool {
    let mut sorted = p.0.clone();
    sorted.sort_unstable();
    sorted.windows(2).all(|w| w[0] != w[1])
}

/// One routed copy of a flow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    /// Index into the flow list the plan was built for.
    pub flow: usize,
    pub copy: u32,
    pub path: Path,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RoutePlan {
    pub routes: Vec<Route>,
}

impl RoutePlan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, flow: usize, copy: u32, path: Path) {
        self.routes.push(Route { flow, copy, path });
    }

    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Route> {
        self.routes.iter()
    }

    pub fn copies_of(&self, flow: usize) -> usize {
        self.routes.iter().filter(|r| r.flow == flow).count()
    }

    /// Plan containing the routes of `self` followed by those of `other`.
    pub fn union(&self, other: &RoutePlan) -> RoutePlan {
        let mut routes = self.routes.clone();
        routes.extend(other.routes.iter().cloned());
        RoutePlan { routes }
    }
}

/// Accumulated interference load per node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadMap(Vec<u32>);

impl LoadMap {
    pub fn zeros(net: &Network) -> Self {
        LoadMap(alloc::vec![0; net.node_count()])
    }

    pub fn from_vec(load: Vec<u32>) -> Self {
        LoadMap(load)
    }

    pub fn get(&self, v: NodeId) -> u32 {
        self.0[v.index()]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&l| u64::from(l)).sum()
    }

    /// Charges one transmission by `transmitter` (itself plus its neighbours).
    pub(crate) fn charge_transmitter(&mut self, net: &Network, transmitter: NodeId) {
        self.0[transmitter.index()] += 1;
        for &n in net.adj(transmitter) {
            self.0[n.index()] += 1;
        }
    }

    /// Adds the load of an already validated path.
    pub(crate) fn charge_path(&mut self, net: &Network, p: &Path) {
        for (u, _) in p.hops() {
            self.charge_transmitter(net, u);
        }
    }

    pub fn add(&mut self, other: &LoadMap) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += *b;
        }
    }

    /// Remaining capacity per node; negative means overloaded.
    pub fn remaining(&self, net: &Network) -> Vec<i64> {
        net.capacities()
            .iter()
            .zip(&self.0)
            .map(|(&c, &l)| i64::from(c) - i64::from(l))
            .collect()
    }

    pub fn overloads(&self, net: &Network) -> Vec<Overload> {
        net.nodes()
            .filter(|&v| self.get(v) > net.capacity(v))
            .map(|v| Overload { node: v, load: self.get(v), capacity: net.capacity(v) })
            .collect()
    }

    pub fn fits(&self, net: &Network) -> bool {
        net.nodes().all(|v| self.get(v) <= net.capacity(v))
    }
}

pub fn path_load(net: &Network, p: &Path) -> Result<LoadMap, ModelError> {
    p.validate(net).map_err(ModelError::InvalidPath)?;
    let mut load = LoadMap::zeros(net);
    load.charge_path(net, p);
    Ok(load)
}

/// Node-wise sum of the loads of every routed copy.
pub fn plan_load(net: &Network, plan: &RoutePlan) -> Result<LoadMap, ModelError> {
    let mut load = LoadMap::zeros(net);
    for route in plan.iter() {
        route.path.validate(net).map_err(ModelError::InvalidPath)?;
        load.charge_path(net, &route.path);
    }
    Ok(load)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Overload {
    pub node: NodeId,
    pub load: u32,
    pub capacity: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MalformedRoute {
    /// Position of the route inside the plan.
    pub route: usize,
    pub defect: PathDefect,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ViolationReport {
    pub overloads: Vec<Overload>,
    pub malformed: Vec<MalformedRoute>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Feasible,
    Violations(ViolationReport),
}

impl Verdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Verdict::Feasible)
    }
}

/// Classifies a plan. Malformed routes are reported and left out of the
/// load sum; every node with load above capacity is reported.
pub fn check_feasible(net: &Network, flows: &[FlowRequest], plan: &RoutePlan) -> Verdict {
    let mut report = ViolationReport::default();
    let mut load = LoadMap::zeros(net);
    let mut seen: BTreeMap<(usize, u32), ()> = BTreeMap::new();
    for (i, route) in plan.iter().enumerate() {
        let defect = match flows.get(route.flow) {
            None => Some(PathDefect::UnknownFlow(route.flow)),
            Some(flow) => {
                if seen.insert((route.flow, route.copy), ()).is_some() {
                    Some(PathDefect::DuplicateCopy { flow: route.flow, copy: route.copy })
                } else if route.path.is_empty() {
                    Some(PathDefect::Empty)
                } else if let Err(d) = route.path.validate(net) {
                    Some(d)
                } else if route.path.first() != Some(flow.source)
                    || route.path.last() != Some(flow.destination)
                {
                    Some(PathDefect::WrongEndpoints {
                        want_source: flow.source,
                        want_destination: flow.destination,
                        got_source: route.path.0[0],
                        got_destination: route.path.0[route.path.len() - 1],
                    })
                } else {
                    None
                }
            }
        };
        match defect {
            Some(defect) => report.malformed.push(MalformedRoute { route: i, defect }),
            None => load.charge_path(net, &route.path),
        }
    }
    report.overloads = load.overloads(net);
    if report.overloads.is_empty() && report.malformed.is_empty() {
        Verdict::Feasible
    } else {
        Verdict::Violations(report)
    }
}
