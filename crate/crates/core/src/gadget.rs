//! K-SAT to flow-admission gadget compiler.
//!
//! Every clause `c_i` becomes a gadget between an entry node `E_i` and an
//! exit node `X_i`. Each literal position `j` contributes a chain
//! `E_i - P_ij - L_ij - Q_ij - X_i`, the literal nodes `L_i*` of a clause
//! form a clique, and a bypass `E_i - B_i - X_i` offers a shortcut. Exit
//! `X_i` links to entry `E_{i+1}`. For every pair of complementary literal
//! occurrences a capacity-1 conflict node `K_p` hangs off both literal
//! nodes, so a route visiting both overloads it.
//!
//! Flow demands: one single-copy preload `A_i -> B_i` per clause (a
//! degree-1 source next to the bypass) and an unbounded main demand
//! `E_1 -> T`, where `T` is a terminal hanging off `X_m`. With all
//! preloads admitted, a main route exists iff the formula is satisfiable.
//!
//! Clause numbers, literal positions and conflict numbers inside
//! [`NodeRole`], node names and reports are 1-based.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::cnf::{self, Assignment, CnfError, Formula, Literal, PartialAssignment};
use crate::model::{Copies, FlowRequest, LoadMap, ModelError, Network, NodeId, Path};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GadgetError {
    #[error("formula has no clauses; there is no gadget to build")]
    EmptyFormula,
    #[error("instance carries no gadget layout")]
    NotAGadget,
    #[error("inconsistent gadget layout: {0}")]
    Layout(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Cnf(#[from] CnfError),
    #[error("clause {clause} has no true literal")]
    ClauseFalsified { clause: usize },
    #[error("route visits both polarities of variable {var}")]
    Contradiction { var: u32 },
}

/// Node subset of the construction; auxiliary nodes are `Aux`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Subset {
    V1,
    V2,
    V3,
    V4,
    V5,
    Aux,
}

impl Subset {
    pub const ALL: [Subset; 6] = [Subset::V1, Subset::V2, Subset::V3, Subset::V4, Subset::V5, Subset::Aux];

    pub fn as_str(self) -> &'static str {
        match self {
            Subset::V1 => "V1",
            Subset::V2 => "V2",
            Subset::V3 => "V3",
            Subset::V4 => "V4",
            Subset::V5 => "V5",
            Subset::Aux => "aux",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Subset::ALL.into_iter().find(|x| x.as_str() == s)
    }

}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Structural role of a gadget node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeRole {
    Entry(usize),
    Exit(usize),
    PreLit(usize, usize),
    Lit(usize, usize),
    PostLit(usize, usize),
    Bypass(usize),
    PreloadSrc(usize),
    Conflict(usize),
    Terminal,
}

impl NodeRole {
    /// Canonical id: `E1`, `X1`, `P1.2`, `L1.2`, `Q1.2`, `B1`, `A1`, `K3`, `T`.
    pub fn name(self) -> String {
        match self {
            NodeRole::Entry(i) => format!("E{i}"),
            NodeRole::Exit(i) => format!("X{i}"),
            NodeRole::PreLit(i, j) => format!("P{i}.{j}"),
            NodeRole::Lit(i, j) => format!("L{i}.{j}"),
            NodeRole::PostLit(i, j) => format!("Q{i}.{j}"),
            NodeRole::Bypass(i) => format!("B{i}"),
            NodeRole::PreloadSrc(i) => format!("A{i}"),
            NodeRole::Conflict(p) => format!("K{p}"),
            NodeRole::Terminal => "T".to_string(),
        }
    }

    pub fn parse(name: &str) -> Option<NodeRole> {
        if name == "T" {
            return Some(NodeRole::Terminal);
        }
        let mut chars = name.chars();
        let tag = chars.next()?;
        let rest = chars.as_str();
        let index = |s: &str| -> Option<usize> {
            if s.is_empty() || s.starts_with('0') || !s.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            s.parse().ok()
        };
        let pair = |s: &str| -> Option<(usize, usize)> {
            let (i, j) = s.split_once('.')?;
            Some((index(i)?, index(j)?))
        };
        Some(match tag {
            'E' => NodeRole::Entry(index(rest)?),
            'X' => NodeRole::Exit(index(rest)?),
            'B' => NodeRole::Bypass(index(rest)?),
            'A' => NodeRole::PreloadSrc(index(rest)?),
            'K' => NodeRole::Conflict(index(rest)?),
            'P' => {
                let (i, j) = pair(rest)?;
                NodeRole::PreLit(i, j)
            }
            'L' => {
                let (i, j) = pair(rest)?;
                NodeRole::Lit(i, j)
            }
            'Q' => {
                let (i, j) = pair(rest)?;
                NodeRole::PostLit(i, j)
            }
            _ => return None,
        })
    }

    pub fn subset(self) -> Subset {
        match self {
            NodeRole::Entry(_) | NodeRole::Exit(_) => Subset::V1,
            NodeRole::Lit(..) => Subset::V2,
            NodeRole::PreLit(..) | NodeRole::PostLit(..) => Subset::V3,
            NodeRole::Bypass(_) => Subset::V4,
            NodeRole::Conflict(_) => Subset::V5,
            NodeRole::PreloadSrc(_) | NodeRole::Terminal => Subset::Aux,
        }
    }

    /// Name in the construction's raw indexing, given the width of the
    /// node's clause. Clause nodes are `n_k^i` with entry `k = 1`, exit
    /// `k = 4`, literal chain `k = 3j+2, 3j+3, 3j+4` and bypass
    /// `k = 3|c_i|+5`; conflict nodes are `n_p`; preload sources `A_i`.
    pub fn paper_index(self, clause_width: usize) -> Option<String> {
        Some(match self {
            NodeRole::Entry(i) => format!("n_1^{i}"),
            NodeRole::Exit(i) => format!("n_4^{i}"),
            NodeRole::PreLit(i, j) => format!("n_{}^{i}", 3 * j + 2),
            NodeRole::Lit(i, j) => format!("n_{}^{i}", 3 * j + 3),
            NodeRole::PostLit(i, j) => format!("n_{}^{i}", 3 * j + 4),
            NodeRole::Bypass(i) => format!("n_{}^{i}", 3 * clause_width + 5),
            NodeRole::PreloadSrc(i) => format!("A_{i}"),
            NodeRole::Conflict(p) => format!("n_{p}"),
            NodeRole::Terminal => return None,
        })
    }
}

/// Per-node provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeMeta {
    pub role: Option<NodeRole>,
    pub paper_index: Option<String>,
    pub subset: Subset,
}

impl NodeMeta {
    pub fn plain() -> Self {
        NodeMeta { role: None, paper_index: None, subset: Subset::Aux }
    }
}

/// Node capacities per class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CapacityPreset {
    pub entry_exit: u32,
    pub literal: u32,
    pub pre_post: u32,
    pub bypass: u32,
    pub conflict: u32,
    pub preload_src: u32,
    pub terminal: u32,
}

impl CapacityPreset {
    pub const STANDARD: CapacityPreset = CapacityPreset {
        entry_exit: 3,
        literal: 5,
        pre_post: 3,
        bypass: 3,
        conflict: 1,
        preload_src: 1,
        terminal: 2,
    };

    pub fn for_role(&self, role: NodeRole) -> u32 {
        match role {
            NodeRole::Entry(_) | NodeRole::Exit(_) => self.entry_exit,
            NodeRole::Lit(..) => self.literal,
            NodeRole::PreLit(..) | NodeRole::PostLit(..) => self.pre_post,
            NodeRole::Bypass(_) => self.bypass,
            NodeRole::Conflict(_) => self.conflict,
            NodeRole::PreloadSrc(_) => self.preload_src,
            NodeRole::Terminal => self.terminal,
        }
    }
}

impl Default for CapacityPreset {
    fn default() -> Self {
        Self::STANDARD
    }
}

/// Node ids of one clause gadget. Vectors are indexed by 0-based literal position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClauseNodes {
    pub entry: NodeId,
    pub exit: NodeId,
    pub pre: Vec<NodeId>,
    pub lit: Vec<NodeId>,
    pub post: Vec<NodeId>,
    pub bypass: NodeId,
    pub preload_src: NodeId,
}

/// A conflict node and the two complementary occurrences it watches, as
/// 0-based `(clause, position)` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictNodes {
    pub node: NodeId,
    pub var: u32,
    pub positive: (usize, usize),
    pub negative: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GadgetLayout {
    pub clauses: Vec<ClauseNodes>,
    pub conflicts: Vec<ConflictNodes>,
    pub terminal: NodeId,
}

/// Flow-admission instance: network, ordered demands, node provenance and,
/// for compiled instances, the source formula.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NcInstance {
    pub network: Network,
    pub flows: Vec<FlowRequest>,
    pub meta: Vec<NodeMeta>,
    pub formula: Option<Formula>,
    layout: Option<GadgetLayout>,
}

impl NcInstance {
    /// Instance without gadget structure.
    pub fn generic(network: Network, flows: Vec<FlowRequest>) -> Self {
        let meta = (0..network.node_count()).map(|_| NodeMeta::plain()).collect();
        NcInstance { network, flows, meta, formula: None, layout: None }
    }

    /// Reassembles an instance. When a formula is given, the gadget layout
    /// is rebuilt from the node roles and checked against the formula.
    pub fn from_parts(
        network: Network,
        flows: Vec<FlowRequest>,
        meta: Vec<NodeMeta>,
        formula: Option<Formula>,
    ) -> Result<Self, GadgetError> {
        if meta.len() != network.node_count() {
            return Err(GadgetError::Layout(format!(
                "{} metadata entries for {} nodes",
                meta.len(),
                network.node_count()
            )));
        }
        let layout = match &formula {
            Some(f) => Some(layout_from_roles(f, &meta)?),
            None => None,
        };
        Ok(NcInstance { network, flows, meta, formula, layout })
    }

    pub fn layout(&self) -> Option<&GadgetLayout> {
        self.layout.as_ref()
    }

    fn gadget(&self) -> Result<(&Formula, &GadgetLayout), GadgetError> {
        match (&self.formula, &self.layout) {
            (Some(f), Some(l)) => Ok((f, l)),
            _ => Err(GadgetError::NotAGadget),
        }
    }

    /// Supply used for unbounded demands unless a solver overrides it.
    pub fn default_copy_cap(&self) -> u32 {
        self.flows.len() as u32 + 1
    }

    /// Resolves a canonical id or a raw index such as `n_17^1` / `n_{17}^{1}`.
    pub fn resolve(&self, name: &str) -> Option<NodeId> {
        let name = name.trim();
        if let Some(v) = self.network.node(name) {
            return Some(v);
        }
        let wanted = normalize_index(name);
        self.meta
            .iter()
            .position(|m| m.paper_index.as_deref().map(normalize_index).as_deref() == Some(wanted.as_str()))
            .map(|i| NodeId(i as u32))
    }

    pub fn paper_index(&self, v: NodeId) -> Option<&str> {
        self.meta.get(v.index()).and_then(|m| m.paper_index.as_deref())
    }

    pub fn subset_counts(&self) -> BTreeMap<Subset, usize> {
        let mut counts: BTreeMap<Subset, usize> = Subset::ALL.iter().map(|&s| (s, 0)).collect();
        for m in &self.meta {
            *counts.entry(m.subset).or_default() += 1;
        }
        counts
    }

    /// Index of the unbounded main demand of a compiled instance.
    pub fn main_flow(&self) -> Option<usize> {
        self.flows.iter().position(|f| f.label == "main")
    }

    /// Single-hop preload routes `A_i -> B_i`, one per clause.
    pub fn preload_paths(&self) -> Result<Vec<Path>, GadgetError> {
        let (_, layout) = self.gadget()?;
        Ok(layout.clauses.iter().map(|c| Path(alloc::vec![c.preload_src, c.bypass])).collect())
    }

    fn preload_load(&self) -> LoadMap {
        let mut load = LoadMap::zeros(&self.network);
        if let Some(layout) = &self.layout {
            for c in &layout.clauses {
                let p = Path(alloc::vec![c.preload_src, c.bypass]);
                if p.validate(&self.network).is_ok() {
                    load.charge_path(&self.network, &p);
                }
            }
        }
        load
    }

    /// Sets the capacity of every node whose role satisfies `pick`.
    pub fn set_capacity_where(&mut self, cap: u32, pick: impl Fn(NodeRole) -> bool) {
        for (i, m) in self.meta.iter().enumerate() {
            if m.role.is_some_and(&pick) {
                self.network.set_capacity(NodeId(i as u32), cap).expect("metadata indexes live nodes");
            }
        }
    }
}

fn normalize_index(s: &str) -> String {
    s.chars().filter(|c| !matches!(c, '{' | '}' | ' ' | '$')).collect()
}

/// Complementary occurrence pairs in variable-major order: for each
/// variable, every positive occurrence (formula order) paired with every
/// negated occurrence (formula order). Positions are 0-based.
pub fn conflict_pairs(f: &Formula) -> Vec<ConflictPair> {
    let mut pos: Vec<Vec<(usize, usize)>> = alloc::vec![Vec::new(); f.var_count() as usize + 1];
    let mut neg = pos.clone();
    for (i, c) in f.clauses().iter().enumerate() {
        for (j, l) in c.literals.iter().enumerate() {
            let bucket = if l.positive { &mut pos } else { &mut neg };
            bucket[l.var as usize].push((i, j));
        }
    }
    let mut out = Vec::new();
    for var in 1..=f.var_count() as usize {
        for &p in &pos[var] {
            for &n in &neg[var] {
                out.push(ConflictPair { var: var as u32, positive: p, negative: n });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConflictPair {
    pub var: u32,
    pub positive: (usize, usize),
    pub negative: (usize, usize),
}

pub fn compile(f: &Formula) -> Result<NcInstance, GadgetError> {
    compile_with(f, &CapacityPreset::STANDARD)
}

/// Builds the gadget network. Node order: per clause `E, (P, L, Q)*, B, A, X`,
/// then conflict nodes, then `T`.
pub fn compile_with(f: &Formula, caps: &CapacityPreset) -> Result<NcInstance, GadgetError> {
    if f.clause_count() == 0 {
        return Err(GadgetError::EmptyFormula);
    }
    let mut net = Network::new();
    let mut meta = Vec::new();
    let mut add = |net: &mut Network, role: NodeRole, width: usize| -> Result<NodeId, GadgetError> {
        let id = net.add_node(&role.name(), caps.for_role(role))?;
        meta.push(NodeMeta { role: Some(role), paper_index: role.paper_index(width), subset: role.subset() });
        Ok(id)
    };

    let mut clauses = Vec::with_capacity(f.clause_count());
    for (i0, clause) in f.clauses().iter().enumerate() {
        let (i, w) = (i0 + 1, clause.width());
        let entry = add(&mut net, NodeRole::Entry(i), w)?;
        let (mut pre, mut lit, mut post) = (Vec::new(), Vec::new(), Vec::new());
        for j in 1..=w {
            pre.push(add(&mut net, NodeRole::PreLit(i, j), w)?);
            lit.push(add(&mut net, NodeRole::Lit(i, j), w)?);
            post.push(add(&mut net, NodeRole::PostLit(i, j), w)?);
        }
        let bypass = add(&mut net, NodeRole::Bypass(i), w)?;
        let preload_src = add(&mut net, NodeRole::PreloadSrc(i), w)?;
        let exit = add(&mut net, NodeRole::Exit(i), w)?;
        clauses.push(ClauseNodes { entry, exit, pre, lit, post, bypass, preload_src });
    }
    let mut conflicts = Vec::new();
    for (p, pair) in conflict_pairs(f).into_iter().enumerate() {
        let node = add(&mut net, NodeRole::Conflict(p + 1), 0)?;
        conflicts.push(ConflictNodes { node, var: pair.var, positive: pair.positive, negative: pair.negative });
    }
    let terminal = add(&mut net, NodeRole::Terminal, 0)?;

    for (i, c) in clauses.iter().enumerate() {
        for j in 0..c.lit.len() {
            net.add_edge(c.entry, c.pre[j])?;
            net.add_edge(c.pre[j], c.lit[j])?;
            net.add_edge(c.lit[j], c.post[j])?;
            net.add_edge(c.post[j], c.exit)?;
        }
        net.add_edge(c.entry, c.bypass)?;
        net.add_edge(c.bypass, c.exit)?;
        for j in 0..c.lit.len() {
            for k in j + 1..c.lit.len() {
                net.add_edge(c.lit[j], c.lit[k])?;
            }
        }
        net.add_edge(c.preload_src, c.bypass)?;
        if let Some(next) = clauses.get(i + 1) {
            net.add_edge(c.exit, next.entry)?;
        }
    }
    for k in &conflicts {
        net.add_edge(k.node, clauses[k.positive.0].lit[k.positive.1])?;
        net.add_edge(k.node, clauses[k.negative.0].lit[k.negative.1])?;
    }
    net.add_edge(clauses[clauses.len() - 1].exit, terminal)?;

    let mut flows = Vec::with_capacity(clauses.len() + 1);
    for (i, c) in clauses.iter().enumerate() {
        flows.push(FlowRequest::new(&net, c.preload_src, c.bypass, Copies::Finite(1), &format!("preload-{}", i + 1))?);
    }
    flows.push(FlowRequest::new(&net, clauses[0].entry, terminal, Copies::Unbounded, "main")?);

    Ok(NcInstance {
        network: net,
        flows,
        meta,
        formula: Some(f.clone()),
        layout: Some(GadgetLayout { clauses, conflicts, terminal }),
    })
}

fn layout_from_roles(f: &Formula, meta: &[NodeMeta]) -> Result<GadgetLayout, GadgetError> {
    let roles: BTreeMap<NodeRole, NodeId> = meta
        .iter()
        .enumerate()
        .filter_map(|(i, m)| m.role.map(|r| (r, NodeId(i as u32))))
        .collect();
    let get = |r: NodeRole| {
        roles.get(&r).copied().ok_or_else(|| GadgetError::Layout(format!("missing node {}", r.name())))
    };
    let mut clauses = Vec::new();
    for (i0, clause) in f.clauses().iter().enumerate() {
        let i = i0 + 1;
        let positions = 1..=clause.width();
        clauses.push(ClauseNodes {
            entry: get(NodeRole::Entry(i))?,
            exit: get(NodeRole::Exit(i))?,
            pre: positions.clone().map(|j| get(NodeRole::PreLit(i, j))).collect::<Result<_, _>>()?,
            lit: positions.clone().map(|j| get(NodeRole::Lit(i, j))).collect::<Result<_, _>>()?,
            post: positions.map(|j| get(NodeRole::PostLit(i, j))).collect::<Result<_, _>>()?,
            bypass: get(NodeRole::Bypass(i))?,
            preload_src: get(NodeRole::PreloadSrc(i))?,
        });
    }
    let pairs = conflict_pairs(f);
    let mut conflicts = Vec::with_capacity(pairs.len());
    for (p, pair) in pairs.into_iter().enumerate() {
        conflicts.push(ConflictNodes {
            node: get(NodeRole::Conflict(p + 1))?,
            var: pair.var,
            positive: pair.positive,
            negative: pair.negative,
        });
    }
    let expected = clauses.iter().map(|c| 4 + 3 * c.lit.len()).sum::<usize>() + conflicts.len() + 1;
    if roles.len() != expected {
        return Err(GadgetError::Layout(format!(
            "{} role-tagged nodes, formula implies {expected}",
            roles.len()
        )));
    }
    Ok(GadgetLayout { clauses, conflicts, terminal: get(NodeRole::Terminal)? })
}

/// Literal at a 0-based `(clause, position)`.
fn literal_at(f: &Formula, (i, j): (usize, usize)) -> Literal {
    f.clauses()[i].literals[j]
}

/// Canonical clause segment `E_i, P_i,min, L_i,t (t ascending), Q_i,max, X_i`
/// through the 0-based positions `through` (sorted, non-empty).
fn segment_through(c: &ClauseNodes, through: &[usize]) -> Vec<NodeId> {
    let mut seg = Vec::with_capacity(through.len() + 4);
    seg.push(c.entry);
    seg.push(c.pre[through[0]]);
    seg.extend(through.iter().map(|&j| c.lit[j]));
    seg.push(c.post[through[through.len() - 1]]);
    seg.push(c.exit);
    seg
}

fn true_positions(f: &Formula, i: usize, a: &Assignment) -> Vec<usize> {
    f.clauses()[i]
        .literals
        .iter()
        .enumerate()
        .filter(|(_, l)| l.is_true_under(a))
        .map(|(j, _)| j)
        .collect()
}

fn check_total(f: &Formula, a: &Assignment) -> Result<(), GadgetError> {
    cnf::eval(f, a).map(|_| ()).map_err(GadgetError::from)
}

/// Segment of clause `clause` (1-based) induced by `a`: all true literals
/// of the clause in ascending position. `None` when the clause is false.
pub fn clause_segment(inst: &NcInstance, a: &Assignment, clause: usize) -> Result<Option<Path>, GadgetError> {
    let (f, layout) = inst.gadget()?;
    check_total(f, a)?;
    let i = clause
        .checked_sub(1)
        .filter(|&i| i < layout.clauses.len())
        .ok_or_else(|| GadgetError::Layout(format!("no clause {clause}")))?;
    let t = true_positions(f, i, a);
    Ok((!t.is_empty()).then(|| Path(segment_through(&layout.clauses[i], &t))))
}

/// Main-flow route induced by a total assignment, or the first falsified clause.
pub fn assignment_to_path(inst: &NcInstance, a: &Assignment) -> Result<Path, GadgetError> {
    let (f, layout) = inst.gadget()?;
    check_total(f, a)?;
    let mut nodes = Vec::new();
    for (i, c) in layout.clauses.iter().enumerate() {
        let t = true_positions(f, i, a);
        if t.is_empty() {
            return Err(GadgetError::ClauseFalsified { clause: i + 1 });
        }
        nodes.extend(segment_through(c, &t));
    }
    nodes.push(layout.terminal);
    Ok(Path(nodes))
}

/// Reads the literals a route visits back as a partial assignment.
pub fn path_to_assignment(inst: &NcInstance, p: &Path) -> Result<PartialAssignment, GadgetError> {
    let (f, _) = inst.gadget()?;
    let mut out = PartialAssignment::unassigned(f.var_count());
    for &v in p.nodes() {
        let Some(NodeRole::Lit(i, j)) = inst.meta.get(v.index()).and_then(|m| m.role) else {
            continue;
        };
        let lit = literal_at(f, (i - 1, j - 1));
        match out.get(lit.var) {
            Some(value) if value != lit.positive => return Err(GadgetError::Contradiction { var: lit.var }),
            _ => out.set(lit.var, lit.positive),
        }
    }
    Ok(out)
}

/// Main-route fragment for clause `i` (0-based) carrying the hops that
/// charge the clause's own nodes: the incoming hop from `X_{i-1}`, the
/// segment, and the outgoing hops through `E_{i+1}` (or into `T`).
fn with_context(layout: &GadgetLayout, i: usize, segment: &[NodeId]) -> Path {
    let mut nodes = Vec::with_capacity(segment.len() + 3);
    if i > 0 {
        nodes.push(layout.clauses[i - 1].exit);
    }
    nodes.extend_from_slice(segment);
    match layout.clauses.get(i + 1) {
        Some(next) => {
            nodes.push(next.entry);
            nodes.push(next.pre[0]);
        }
        None => nodes.push(layout.terminal),
    }
    Path(nodes)
}

/// A named gadget property checked by [`audit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AuditCheck {
    /// A main route through the bypass overloads it.
    BypassBlocked,
    /// Every consistent literal subset can be traversed without overload.
    IntendedPathsFit,
    /// Visiting both literals of a complementary pair overloads their conflict node.
    ConflictBlocksPair,
    /// Routing through a conflict node overloads it.
    ConflictBlocksThrough,
}

impl AuditCheck {
    pub fn as_str(self) -> &'static str {
        match self {
            AuditCheck::BypassBlocked => "bypass-blocked",
            AuditCheck::IntendedPathsFit => "intended-paths-fit",
            AuditCheck::ConflictBlocksPair => "conflict-blocks-pair",
            AuditCheck::ConflictBlocksThrough => "conflict-blocks-through",
        }
    }
}

impl fmt::Display for AuditCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Smallest `capacity - load` seen per node class over all intended
/// segments of a clause, counting only nodes the clause owns. `None` when
/// the clause owns no node of that class.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClassMargins(pub BTreeMap<Subset, i64>);

impl ClassMargins {
    fn observe(&mut self, subset: Subset, margin: i64) {
        let slot = self.0.entry(subset).or_insert(margin);
        *slot = (*slot).min(margin);
    }

    pub fn get(&self, subset: Subset) -> Option<i64> {
        self.0.get(&subset).copied()
    }

    pub fn min(&self) -> Option<i64> {
        self.0.values().copied().min()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClauseAudit {
    /// 1-based.
    pub clause: usize,
    pub margins: ClassMargins,
    pub bypass_blocked: bool,
    pub conflict_blocked: bool,
    pub through_route_blocked: bool,
}

impl ClauseAudit {
    pub fn failed_checks(&self) -> Vec<AuditCheck> {
        let mut out = Vec::new();
        if !self.bypass_blocked {
            out.push(AuditCheck::BypassBlocked);
        }
        if self.margins.min().is_some_and(|m| m < 0) {
            out.push(AuditCheck::IntendedPathsFit);
        }
        if !self.conflict_blocked {
            out.push(AuditCheck::ConflictBlocksPair);
        }
        if !self.through_route_blocked {
            out.push(AuditCheck::ConflictBlocksThrough);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditReport {
    pub clauses: Vec<ClauseAudit>,
}

impl AuditReport {
    pub fn is_ok(&self) -> bool {
        self.clauses.iter().all(|c| c.failed_checks().is_empty())
    }

    /// `(clause, check)` for every failed check.
    pub fn failures(&self) -> Vec<(usize, AuditCheck)> {
        self.clauses
            .iter()
            .flat_map(|c| c.failed_checks().into_iter().map(move |k| (c.clause, k)))
            .collect()
    }

    pub fn bypasses_blocked(&self) -> usize {
        self.clauses.iter().filter(|c| c.bypass_blocked).count()
    }
}

/// Exact load arithmetic for the four gadget properties, per clause, with
/// all preload flows routed. Intended segments are enumerated over every
/// non-empty subset of literal positions free of complementary pairs, so
/// the cost is exponential in clause width.
pub fn audit(inst: &NcInstance) -> Result<AuditReport, GadgetError> {
    let (f, layout) = inst.gadget()?;
    let net = &inst.network;
    let base = inst.preload_load();
    let load_of = |paths: &[Path]| {
        let mut load = base.clone();
        for p in paths {
            load.charge_path(net, p);
        }
        load
    };
    let over = |load: &LoadMap, v: NodeId| load.get(v) > net.capacity(v);

    let mut report = AuditReport { clauses: Vec::with_capacity(layout.clauses.len()) };
    for (i, c) in layout.clauses.iter().enumerate() {
        let width = c.lit.len();
        let touching: Vec<&ConflictNodes> = layout
            .conflicts
            .iter()
            .filter(|k| k.positive.0 == i || k.negative.0 == i)
            .collect();

        let bypass_route = with_context(layout, i, &[c.entry, c.bypass, c.exit]);
        let bypass_blocked = over(&load_of(&[bypass_route]), c.bypass);

        let mut owned: Vec<NodeId> = Vec::new();
        owned.extend([c.entry, c.exit, c.bypass, c.preload_src]);
        owned.extend(c.pre.iter().chain(&c.lit).chain(&c.post).copied());
        owned.extend(touching.iter().map(|k| k.node));
        if i + 1 == layout.clauses.len() {
            owned.push(layout.terminal);
        }
        let lits: Vec<Literal> = f.clauses()[i].literals.clone();
        let mut margins = ClassMargins::default();
        for mask in 1u64..(1u64 << width) {
            let through: Vec<usize> = (0..width).filter(|j| mask >> j & 1 == 1).collect();
            let consistent = through
                .iter()
                .all(|&a| through.iter().all(|&b| lits[a] != lits[b].negated()));
            if !consistent {
                continue;
            }
            let load = load_of(&[with_context(layout, i, &segment_through(c, &through))]);
            for &v in &owned {
                let margin = i64::from(net.capacity(v)) - i64::from(load.get(v));
                margins.observe(inst.meta[v.index()].subset, margin);
            }
        }

        let mut through_route_blocked = true;
        let mut conflict_blocked = true;
        for k in &touching {
            let (here, there) = if k.positive.0 == i { (k.positive, k.negative) } else { (k.negative, k.positive) };
            let lit_here = layout.clauses[here.0].lit[here.1];
            let lit_there = layout.clauses[there.0].lit[there.1];
            let through_k = Path(alloc::vec![lit_here, k.node, lit_there]);
            if !over(&load_of(&[through_k]), k.node) {
                through_route_blocked = false;
            }

            let routes: Vec<Path> = if here.0 == there.0 {
                let mut both = [here.1, there.1];
                both.sort_unstable();
                alloc::vec![with_context(layout, i, &segment_through(c, &both))]
            } else {
                [here, there]
                    .iter()
                    .map(|&(ci, pj)| with_context(layout, ci, &segment_through(&layout.clauses[ci], &[pj])))
                    .collect()
            };
            if !over(&load_of(&routes), k.node) {
                conflict_blocked = false;
            }
        }

        report.clauses.push(ClauseAudit {
            clause: i + 1,
            margins,
            bypass_blocked,
            conflict_blocked,
            through_route_blocked,
        });
    }
    Ok(report)
}

/// Clauses whose assignment-induced segment exists and stays within
/// capacity, with preloads and every other clause's segment routed. A
/// clause counts as blocked when any node of its segment, or a conflict
/// node next to one of its literals, is overloaded.
pub fn traversable_clauses(inst: &NcInstance, a: &Assignment) -> Result<usize, GadgetError> {
    let (f, layout) = inst.gadget()?;
    check_total(f, a)?;
    let net = &inst.network;
    let segments: Vec<Option<Vec<NodeId>>> = (0..layout.clauses.len())
        .map(|i| {
            let t = true_positions(f, i, a);
            (!t.is_empty()).then(|| segment_through(&layout.clauses[i], &t))
        })
        .collect();

    let mut load = inst.preload_load();
    for (i, seg) in segments.iter().enumerate() {
        if let Some(seg) = seg {
            let mut piece = seg.clone();
            piece.push(layout.clauses.get(i + 1).map_or(layout.terminal, |n| n.entry));
            load.charge_path(net, &Path(piece));
        }
    }

    let over = |v: NodeId| load.get(v) > net.capacity(v);
    let count = segments
        .iter()
        .flatten()
        .filter(|seg| {
            seg.iter().all(|&v| {
                !over(v) && net.adj(v).iter().all(|&n| {
                    inst.meta[n.index()].subset != Subset::V5 || !over(n)
                })
            })
        })
        .count();
    Ok(count)
}

/// Maximum of [`traversable_clauses`] over every assignment.
pub fn max_traversable(inst: &NcInstance) -> Result<usize, GadgetError> {
    let (f, _) = inst.gadget()?;
    if f.var_count() > cnf::DEFAULT_EXHAUSTIVE_BOUND {
        return Err(CnfError::TooManyVariables { vars: f.var_count(), bound: cnf::DEFAULT_EXHAUSTIVE_BOUND }.into());
    }
    let mut best = 0;
    for rank in 0..1u64 << f.var_count() {
        best = best.max(traversable_clauses(inst, &Assignment::from_rank(f.var_count(), rank))?);
    }
    Ok(best)
}
