//! Subcommand bodies. Each returns the text to print and an exit code;
//! errors are input errors and map to exit code 2 in the binary.

use std::fmt::Write as _;
use std::path::Path as FsPath;

use anyhow::{anyhow, bail, Context};
use serde::Serialize;
use tdma_apx_core::cnf::parse_dimacs;
use tdma_apx_core::gadget::{self, assignment_to_path, clause_segment, compile};
use tdma_apx_core::model::{check_feasible, plan_load, PathDefect, Verdict};
use tdma_apx_core::solver::{inapprox_bound, solve_exact, solve_greedy};
use tdma_apx_core::{Assignment, GadgetError, NcInstance, NodeId, Path, RoutePlan, SolveOptions, SolveResult};

use crate::format::{instance_from_json, instance_to_dot, instance_to_json};
use crate::verify::{run_verification, write_witnesses, VerifyParams};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: u8,
    pub stdout: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome { code: 0, stdout }
    }
}

fn read(path: &FsPath) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &FsPath, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn load_instance(path: &FsPath) -> anyhow::Result<NcInstance> {
    instance_from_json(&read(path)?).with_context(|| format!("loading {}", path.display()))
}

pub fn compile_cmd(cnf: &FsPath, out: &FsPath, dot: Option<&FsPath>) -> anyhow::Result<Outcome> {
    let f = parse_dimacs(&read(cnf)?).with_context(|| format!("parsing {}", cnf.display()))?;
    let inst = compile(&f)?;
    write(out, &instance_to_json(&inst))?;
    if let Some(dot) = dot {
        write(dot, &instance_to_dot(&inst))?;
    }
    let mut text = String::new();
    let _ = writeln!(
        text,
        "compiled {} clauses over {} variables: {} nodes, {} edges, {} flows",
        f.clause_count(),
        f.var_count(),
        inst.network.node_count(),
        inst.network.edge_count(),
        inst.flows.len()
    );
    let counts = inst.subset_counts();
    let sizes: Vec<String> = counts.iter().map(|(s, n)| format!("{}={n}", s.as_str())).collect();
    let _ = writeln!(text, "subsets: {}", sizes.join(" "));
    Ok(Outcome::ok(text))
}

/// Signed DIMACS literals separated by commas and/or whitespace.
pub fn parse_literal_list(list: &str, var_count: u32) -> anyhow::Result<Assignment> {
    let mut lits = Vec::new();
    for tok in list.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
        let lit: i64 = tok.parse().map_err(|_| anyhow!("bad literal {tok:?}"))?;
        if lit == 0 || lit.unsigned_abs() > u64::from(var_count) {
            bail!("literal {lit} is outside 1..={var_count}");
        }
        lits.push(lit);
    }
    for var in 1..=i64::from(var_count) {
        let pos = lits.contains(&var);
        let neg = lits.contains(&-var);
        if pos && neg {
            bail!("variable {var} is given both polarities");
        }
        if !pos && !neg {
            bail!("variable {var} is unassigned; the assignment must be total");
        }
    }
    Ok(Assignment::from_literals(var_count, &lits))
}

pub fn parse_node_list(inst: &NcInstance, list: &str) -> anyhow::Result<Path> {
    let nodes = list
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|tok| inst.resolve(tok).ok_or_else(|| anyhow!("unknown node {tok:?}")))
        .collect::<anyhow::Result<Vec<NodeId>>>()?;
    if nodes.is_empty() {
        bail!("empty node list");
    }
    Ok(Path(nodes))
}

/// Canonical id, followed by the raw index when there is one.
fn label(inst: &NcInstance, v: NodeId) -> String {
    match inst.paper_index(v) {
        Some(raw) => format!("{}({raw})", inst.network.name(v)),
        None => inst.network.name(v).to_string(),
    }
}

fn join(inst: &NcInstance, nodes: &[NodeId]) -> String {
    nodes.iter().map(|&v| label(inst, v)).collect::<Vec<_>>().join(" ")
}

fn preload_plan(inst: &NcInstance) -> RoutePlan {
    let mut plan = RoutePlan::new();
    if let Ok(paths) = inst.preload_paths() {
        for (i, p) in paths.into_iter().enumerate() {
            plan.push(i, 0, p);
        }
    }
    plan
}

fn describe_defect(inst: &NcInstance, d: &PathDefect) -> String {
    let name = |v: NodeId| label(inst, v);
    match d {
        PathDefect::NotAdjacent { hop, from, to } => {
            format!("malformed at hop {}: {} -> {} has no edge", hop + 1, name(*from), name(*to))
        }
        PathDefect::Repeated { position, node } => format!("malformed: {} repeats at position {position}", name(*node)),
        PathDefect::WrongEndpoints { want_source, want_destination, got_source, got_destination } => format!(
            "malformed: route runs {} -> {} but the flow needs {} -> {}",
            name(*got_source),
            name(*got_destination),
            name(*want_source),
            name(*want_destination)
        ),
        other => format!("malformed: {other}"),
    }
}

fn describe_verdict(inst: &NcInstance, verdict: &Verdict) -> (bool, String) {
    match verdict {
        Verdict::Feasible => (true, "feasible, 0 overloads".to_string()),
        Verdict::Violations(report) => {
            if let Some(m) = report.malformed.first() {
                return (false, describe_defect(inst, &m.defect));
            }
            let list: Vec<String> = report
                .overloads
                .iter()
                .map(|o| format!("{} load {} > {}", label(inst, o.node), o.load, o.capacity))
                .collect();
            (false, format!("overloaded: {}", list.join(", ")))
        }
    }
}

pub fn check_assignment_cmd(inst: &NcInstance, list: &str) -> anyhow::Result<Outcome> {
    let f = inst.formula.as_ref().ok_or(GadgetError::NotAGadget)?;
    let a = parse_literal_list(list, f.var_count())?;
    let mut text = String::new();
    let _ = writeln!(text, "assignment: {a}");
    let mut falsified = Vec::new();
    for i in 1..=f.clause_count() {
        match clause_segment(inst, &a, i)? {
            Some(seg) => {
                let _ = writeln!(text, "clause {i}: {}", join(inst, seg.nodes()));
            }
            None => {
                let _ = writeln!(text, "clause {i}: no true literal");
                falsified.push(i);
            }
        }
    }
    if !falsified.is_empty() {
        let list: Vec<String> = falsified.iter().map(ToString::to_string).collect();
        let _ = writeln!(text, "verdict: failure at clause {}", list.join(", "));
        return Ok(Outcome { code: 1, stdout: text });
    }
    let path = assignment_to_path(inst, &a)?;
    let main = inst.main_flow().ok_or(GadgetError::NotAGadget)?;
    let mut plan = preload_plan(inst);
    plan.push(main, 0, path);
    let verdict = check_feasible(&inst.network, &inst.flows, &plan);
    if let Verdict::Violations(report) = &verdict {
        let layout = inst.layout().ok_or(GadgetError::NotAGadget)?;
        for o in &report.overloads {
            let owner = layout.clauses.iter().position(|c| {
                [c.entry, c.exit, c.bypass, c.preload_src]
                    .iter()
                    .chain(&c.pre)
                    .chain(&c.lit)
                    .chain(&c.post)
                    .any(|&v| v == o.node)
            });
            if let Some(i) = owner {
                let _ = writeln!(text, "clause {}: {} load {} > {}", i + 1, label(inst, o.node), o.load, o.capacity);
            }
        }
    }
    let (ok, line) = describe_verdict(inst, &verdict);
    let _ = writeln!(text, "verdict: {line}");
    Ok(Outcome { code: if ok { 0 } else { 1 }, stdout: text })
}

pub fn check_path_cmd(inst: &NcInstance, list: &str) -> anyhow::Result<Outcome> {
    let mut path = parse_node_list(inst, list)?;
    let mut text = String::new();
    // A route ending at the last exit is completed with the final hop.
    if let Some(layout) = inst.layout() {
        if path.last() == layout.clauses.last().map(|c| c.exit) {
            path.0.push(layout.terminal);
            let _ = writeln!(text, "note: appended final hop to {}", label(inst, layout.terminal));
        }
    }
    let (first, last) = (path.first(), path.last());
    let flow = inst
        .flows
        .iter()
        .position(|f| Some(f.source) == first && Some(f.destination) == last)
        .or_else(|| inst.main_flow())
        .ok_or_else(|| anyhow!("the instance has no flow to route"))?;
    let _ = writeln!(text, "flow: {}", inst.flows[flow].label);
    let _ = writeln!(text, "path: {}", join(inst, path.nodes()));
    let mut plan = preload_plan(inst);
    plan.routes.retain(|r| r.flow != flow);
    plan.push(flow, 0, path);
    let verdict = check_feasible(&inst.network, &inst.flows, &plan);
    let (ok, line) = describe_verdict(inst, &verdict);
    let _ = writeln!(text, "verdict: {line}");
    Ok(Outcome { code: if ok { 0 } else { 1 }, stdout: text })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Exact,
    Greedy,
}

#[derive(Serialize)]
struct SolveJson<'a> {
    mode: &'a str,
    accepted: usize,
    optimal: bool,
    nodes_explored: u64,
    budget_hit: bool,
    paths_truncated: bool,
    routes: Vec<RouteJson>,
    load: Vec<LoadJson>,
}

#[derive(Serialize)]
struct RouteJson {
    flow: String,
    copy: u32,
    path: Vec<String>,
}

#[derive(Serialize)]
struct LoadJson {
    node: String,
    load: u32,
    capacity: u32,
}

pub fn solve_instance(inst: &NcInstance, mode: Mode, budget: Option<u64>) -> SolveResult {
    let mut opts = SolveOptions::default();
    if let Some(b) = budget {
        opts.node_budget = b;
    }
    match mode {
        Mode::Exact => solve_exact(inst, &opts),
        Mode::Greedy => solve_greedy(inst, &opts),
    }
}

pub fn solve_cmd(inst: &NcInstance, mode: Mode, budget: Option<u64>, json: bool) -> anyhow::Result<Outcome> {
    let r = solve_instance(inst, mode, budget);
    let net = &inst.network;
    let load = plan_load(net, &r.plan)?;
    let mode_name = match mode {
        Mode::Exact => "exact",
        Mode::Greedy => "greedy",
    };
    if json {
        let report = SolveJson {
            mode: mode_name,
            accepted: r.accepted_count,
            optimal: r.optimal,
            nodes_explored: r.nodes_explored,
            budget_hit: r.budget_hit,
            paths_truncated: r.paths_truncated,
            routes: r
                .plan
                .iter()
                .map(|route| RouteJson {
                    flow: inst.flows[route.flow].label.clone(),
                    copy: route.copy,
                    path: route.path.nodes().iter().map(|&v| net.name(v).to_string()).collect(),
                })
                .collect(),
            load: net
                .nodes()
                .map(|v| LoadJson { node: net.name(v).to_string(), load: load.get(v), capacity: net.capacity(v) })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        return Ok(Outcome::ok(text));
    }
    let mut text = String::new();
    let _ = writeln!(text, "mode: {mode_name}");
    let _ = writeln!(text, "accepted: {}", r.accepted_count);
    let _ = writeln!(text, "optimal: {}", r.optimal);
    if mode == Mode::Exact {
        let _ = writeln!(text, "search nodes: {}", r.nodes_explored);
    }
    if r.budget_hit {
        let _ = writeln!(text, "warning: node budget exhausted");
    }
    if r.paths_truncated {
        let _ = writeln!(text, "warning: candidate path list truncated");
    }
    for route in r.plan.iter() {
        let _ = writeln!(
            text,
            "route {} #{}: {}",
            inst.flows[route.flow].label,
            route.copy,
            join(inst, route.path.nodes())
        );
    }
    let width = net.nodes().map(|v| net.name(v).len()).max().unwrap_or(4).max(4);
    let _ = writeln!(text, "{:<width$}  load  capacity", "node");
    for v in net.nodes() {
        let _ = writeln!(text, "{:<width$}  {:>4}  {:>8}", net.name(v), load.get(v), net.capacity(v));
    }
    Ok(Outcome::ok(text))
}

pub fn verify_cmd(params: &VerifyParams, witness_dir: &FsPath, json: bool) -> anyhow::Result<Outcome> {
    let report = run_verification(params)?;
    write_witnesses(&report, witness_dir)?;
    let stdout = if json {
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        text
    } else {
        report.to_text()
    };
    Ok(Outcome { code: report.exit_code(), stdout })
}

pub fn bound_cmd(k: u32) -> anyhow::Result<Outcome> {
    let r = inapprox_bound(k)?;
    Ok(Outcome::ok(format!("{r} ≈ {:.6}\n", r.to_f64())))
}

/// Per-clause audit margins and failed checks.
pub fn audit_cmd(inst: &NcInstance) -> anyhow::Result<Outcome> {
    let report = gadget::audit(inst)?;
    let mut text = String::new();
    for c in &report.clauses {
        let margins: Vec<String> =
            c.margins.0.iter().map(|(s, m)| format!("{}={m}", s.as_str())).collect();
        let failed: Vec<&str> = c.failed_checks().iter().map(|k| k.as_str()).collect();
        let _ = writeln!(
            text,
            "clause {}: margins {} {}",
            c.clause,
            margins.join(" "),
            if failed.is_empty() { "ok".to_string() } else { format!("FAIL {}", failed.join(",")) }
        );
    }
    let _ = writeln!(text, "audit: {}", if report.is_ok() { "ok" } else { "FAIL" });
    Ok(Outcome { code: if report.is_ok() { 0 } else { 1 }, stdout: text })
}
