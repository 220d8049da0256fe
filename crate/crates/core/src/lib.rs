//! Pure algorithmic core for studying flow admission in TDMA wireless
//! networks and its reduction from K-SAT.
//!
//! * [`model`] holds the interference/capacity model: networks, paths,
//!   route plans and per-node load accounting.
//! * [`cnf`] holds CNF formulas, DIMACS text, and exhaustive SAT/MAX-SAT
//!   oracles.
//! * [`gadget`] compiles a formula into a flow-admission instance and
//!   audits the blocking arithmetic of the construction.
//! * [`solver`] holds exact and greedy MAX-NC solvers and the
//!   inapproximability constant.
//!
//! Everything here is `no_std` + `alloc`; IO, file formats and the CLI
//! live in the companion `tdma-apx` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod cnf;
pub mod gadget;
pub mod model;
pub mod solver;

pub use cnf::{Assignment, Clause, CnfError, Formula, Literal, PartialAssignment};
pub use gadget::{AuditReport, CapacityPreset, GadgetError, NcInstance, NodeRole, Subset};
pub use model::{
    Copies, FlowRequest, LoadMap, ModelError, Network, NodeId, Path, Route, RoutePlan, Verdict,
};
pub use solver::{Ratio, SolveOptions, SolveResult};
