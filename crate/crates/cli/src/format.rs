//! Instance files: the JSON schema and DOT export.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use tdma_apx_core::cnf::{emit_dimacs, parse_dimacs};
use tdma_apx_core::gadget::NodeMeta;
use tdma_apx_core::{Copies, FlowRequest, NcInstance, Network, NodeRole, Subset};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("invalid instance JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema_version {0}, expected {SCHEMA_VERSION}")]
    Version(u32),
    #[error("node {id}: unknown subset {subset:?}")]
    Subset { id: String, subset: String },
    #[error("node {0}: id is not a gadget role, but the instance embeds a formula")]
    Role(String),
    #[error("flow {label:?}: copies must be a positive integer or \"unbounded\"")]
    Copies { label: String },
    #[error(transparent)]
    Model(#[from] tdma_apx_core::ModelError),
    #[error("embedded formula: {0}")]
    Formula(#[from] tdma_apx_core::CnfError),
    #[error(transparent)]
    Gadget(#[from] tdma_apx_core::GadgetError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub schema_version: u32,
    pub nodes: Vec<NodeEntry>,
    pub edges: Vec<[String; 2]>,
    pub flows: Vec<FlowEntry>,
    pub formula: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeEntry {
    pub id: String,
    pub paper_index: Option<String>,
    pub subset: String,
    pub capacity: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowEntry {
    pub src: String,
    pub dst: String,
    pub copies: CopiesEntry,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CopiesEntry {
    Count(u32),
    Word(String),
}

impl InstanceFile {
    pub fn from_instance(inst: &NcInstance) -> Self {
        let net = &inst.network;
        let nodes = net
            .nodes()
            .map(|v| {
                let meta = &inst.meta[v.index()];
                NodeEntry {
                    id: net.name(v).to_string(),
                    paper_index: meta.paper_index.clone(),
                    subset: meta.subset.as_str().to_string(),
                    capacity: net.capacity(v),
                }
            })
            .collect();
        let mut edges: Vec<[String; 2]> = net
            .edges()
            .map(|(a, b)| {
                let (a, b) = (net.name(a).to_string(), net.name(b).to_string());
                if a <= b { [a, b] } else { [b, a] }
            })
            .collect();
        edges.sort();
        let flows = inst
            .flows
            .iter()
            .map(|f| FlowEntry {
                src: net.name(f.source).to_string(),
                dst: net.name(f.destination).to_string(),
                copies: match f.copies {
                    Copies::Finite(n) => CopiesEntry::Count(n),
                    Copies::Unbounded => CopiesEntry::Word("unbounded".into()),
                },
                label: f.label.clone(),
            })
            .collect();
        InstanceFile {
            schema_version: SCHEMA_VERSION,
            nodes,
            edges,
            flows,
            formula: inst.formula.as_ref().map(emit_dimacs),
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("plain data serializes");
        text.push('\n');
        text
    }

    pub fn into_instance(self) -> Result<NcInstance, FormatError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(FormatError::Version(self.schema_version));
        }
        let formula = self.formula.as_deref().map(parse_dimacs).transpose()?;
        let mut net = Network::new();
        let mut meta = Vec::with_capacity(self.nodes.len());
        for n in &self.nodes {
            net.add_node(&n.id, n.capacity)?;
            let subset = Subset::parse(&n.subset)
                .ok_or_else(|| FormatError::Subset { id: n.id.clone(), subset: n.subset.clone() })?;
            let role = match formula {
                Some(_) => Some(NodeRole::parse(&n.id).ok_or_else(|| FormatError::Role(n.id.clone()))?),
                None => None,
            };
            meta.push(NodeMeta { role, paper_index: n.paper_index.clone(), subset });
        }
        for [a, b] in &self.edges {
            net.add_edge_by_name(a, b)?;
        }
        let mut flows = Vec::with_capacity(self.flows.len());
        for f in &self.flows {
            let copies = match &f.copies {
                CopiesEntry::Count(0) => return Err(FormatError::Copies { label: f.label.clone() }),
                CopiesEntry::Count(n) => Copies::Finite(*n),
                CopiesEntry::Word(w) if w == "unbounded" => Copies::Unbounded,
                CopiesEntry::Word(_) => return Err(FormatError::Copies { label: f.label.clone() }),
            };
            let (s, d) = (net.lookup(&f.src)?, net.lookup(&f.dst)?);
            flows.push(FlowRequest::new(&net, s, d, copies, &f.label)?);
        }
        Ok(NcInstance::from_parts(net, flows, meta, formula)?)
    }
}

/// Pretty JSON with a trailing newline.
pub fn instance_to_json(inst: &NcInstance) -> String {
    InstanceFile::from_instance(inst).to_json()
}

pub fn instance_from_json(text: &str) -> Result<NcInstance, FormatError> {
    serde_json::from_str::<InstanceFile>(text)?.into_instance()
}

fn shape(subset: Subset) -> &'static str {
    match subset {
        Subset::V1 => "box",
        Subset::V2 => "ellipse",
        Subset::V3 => "circle",
        Subset::V4 => "diamond",
        Subset::V5 => "octagon",
        Subset::Aux => "plaintext",
    }
}

/// Undirected DOT graph. One line per node, then one line per edge.
pub fn instance_to_dot(inst: &NcInstance) -> String {
    let net = &inst.network;
    let mut out = String::from("graph nc {\n");
    for v in net.nodes() {
        let meta = &inst.meta[v.index()];
        let mut label = net.name(v).to_string();
        if let Some(raw) = &meta.paper_index {
            let _ = write!(label, "\\n{raw}");
        }
        let _ = writeln!(
            out,
            "  \"{}\" [shape={}, label=\"{}\\ncap {}\"];",
            net.name(v),
            shape(meta.subset),
            label,
            net.capacity(v)
        );
    }
    for (a, b) in net.edges() {
        let _ = writeln!(out, "  \"{}\" -- \"{}\";", net.name(a), net.name(b));
    }
    out.push_str("}\n");
    out
}
