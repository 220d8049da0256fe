//! Randomized end-to-end check of the reduction: both oracles, the gadget
//! audit and the MAX correspondence on seeded random formulas.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use tdma_apx_core::cnf::{self, emit_dimacs, random_formula};
use tdma_apx_core::gadget::{self, compile_with};
use tdma_apx_core::solver::solve_exact;
use tdma_apx_core::{CapacityPreset, SolveOptions};

use crate::format::InstanceFile;

/// Capacity presets; everything but `Standard` breaks one gadget property.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Standard,
    /// Bypass capacity 5: the bypass admits the main flow.
    LooseBypass,
    /// Conflict capacity 2: complementary literals can both be visited.
    LooseConflict,
    /// Literal capacity 3: wide true-literal sets no longer fit.
    TightLiteral,
}

impl Preset {
    pub fn capacities(self) -> CapacityPreset {
        let base = CapacityPreset::STANDARD;
        match self {
            Preset::Standard => base,
            Preset::LooseBypass => CapacityPreset { bypass: 5, ..base },
            Preset::LooseConflict => CapacityPreset { conflict: 2, ..base },
            Preset::TightLiteral => CapacityPreset { literal: 3, ..base },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Standard => "standard",
            Preset::LooseBypass => "loose-bypass",
            Preset::LooseConflict => "loose-conflict",
            Preset::TightLiteral => "tight-literal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyParams {
    pub vars: u32,
    pub clauses: usize,
    pub k: u32,
    pub trials: usize,
    pub seed: u64,
    pub preset: Preset,
    pub solve: SolveOptions,
}

impl VerifyParams {
    pub fn new(vars: u32, clauses: usize, k: u32, trials: usize, seed: u64) -> Self {
        VerifyParams { vars, clauses, k, trials, seed, preset: Preset::Standard, solve: SolveOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub formula: String,
    pub satisfiable: bool,
    pub optimum: usize,
    pub expected: usize,
    pub optimal: bool,
    pub audit_failures: Vec<String>,
    pub max_sat: usize,
    pub max_traversable: usize,
    pub agree: bool,
    pub max_agree: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl TrialRecord {
    pub fn audit_ok(&self) -> bool {
        self.audit_failures.is_empty()
    }

    pub fn passed(&self) -> bool {
        self.agree && self.max_agree && self.audit_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    /// File name inside the witness directory.
    pub file: String,
    pub instance: InstanceFile,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub agree: usize,
    pub audits_passed: usize,
    pub max_agree: usize,
    pub satisfiable: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub vars: u32,
    pub clauses: usize,
    pub k: u32,
    pub seed: u64,
    pub preset: Preset,
    pub trials: usize,
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.records.iter().all(TrialRecord::passed)
    }

    pub fn exit_code(&self) -> u8 {
        if self.passed() { 0 } else { 1 }
    }

    pub fn failing(&self) -> impl Iterator<Item = &TrialRecord> {
        self.records.iter().filter(|r| !r.passed())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "verify vars={} clauses={} k={} trials={} seed={} preset={}",
            self.vars,
            self.clauses,
            self.k,
            self.trials,
            self.seed,
            self.preset.name()
        );
        for r in &self.records {
            let _ = write!(
                out,
                "trial {:>4} seed={:<20} sat={:<3} optimum={} expected={} audit={} max-sat={} traversable={} {}",
                r.trial,
                r.seed,
                if r.satisfiable { "yes" } else { "no" },
                r.optimum,
                r.expected,
                if r.audit_ok() { "ok" } else { "FAIL" },
                r.max_sat,
                r.max_traversable,
                if r.passed() { "agree" } else { "DISAGREE" },
            );
            if !r.optimal {
                out.push_str(" (search incomplete)");
            }
            out.push('\n');
            for failure in &r.audit_failures {
                let _ = writeln!(out, "  audit: {failure}");
            }
            if let Some(w) = &r.witness {
                let _ = writeln!(out, "  witness: {}", w.file);
            }
        }
        let s = &self.summary;
        let _ = writeln!(
            out,
            "summary: {}/{} agree, {}/{} audits pass, {}/{} max correspondence, {} satisfiable",
            s.agree, self.trials, s.audits_passed, self.trials, s.max_agree, self.trials, s.satisfiable
        );
        let _ = writeln!(out, "result: {}", if self.passed() { "PASS" } else { "FAIL" });
        out
    }
}

/// Per-trial formula seeds, drawn from a generator seeded with `seed`.
pub fn trial_seeds(seed: u64, trials: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials).map(|_| rng.next_u64()).collect()
}

fn run_trial(p: &VerifyParams, trial: usize, seed: u64) -> anyhow::Result<TrialRecord> {
    let f = random_formula(p.vars, p.clauses, p.k, seed)?;
    let inst = compile_with(&f, &p.preset.capacities())?;
    let audit = gadget::audit(&inst)?;
    let satisfiable = cnf::brute_sat(&f)?.is_some();
    let (max_sat, _) = cnf::max_sat_brute(&f)?;
    let max_traversable = gadget::max_traversable(&inst)?;
    let solved = solve_exact(&inst, &p.solve);
    let m = f.clause_count();
    let expected = if satisfiable { m + 1 } else { m };
    let agree = solved.optimal && solved.accepted_count == expected;
    let mut record = TrialRecord {
        trial,
        seed,
        formula: emit_dimacs(&f),
        satisfiable,
        optimum: solved.accepted_count,
        expected,
        optimal: solved.optimal,
        audit_failures: audit.failures().iter().map(|(c, check)| format!("clause {c}: {check}")).collect(),
        max_sat,
        max_traversable,
        agree,
        max_agree: max_sat == max_traversable,
        witness: None,
    };
    if !record.passed() {
        record.witness =
            Some(Witness { file: format!("trial-{trial:04}.json"), instance: InstanceFile::from_instance(&inst) });
    }
    Ok(record)
}

/// Runs every trial; trials run in parallel and are reported in index order.
pub fn run_verification(p: &VerifyParams) -> anyhow::Result<VerificationReport> {
    if p.vars > cnf::DEFAULT_EXHAUSTIVE_BOUND {
        bail!("{} variables exceed the exhaustive bound of {}", p.vars, cnf::DEFAULT_EXHAUSTIVE_BOUND);
    }
    if p.trials > 0 {
        if p.clauses == 0 {
            bail!("clause count must be positive");
        }
        // Reject bad shapes once instead of once per trial.
        random_formula(p.vars, p.clauses, p.k, 0)?;
    }
    let seeds = trial_seeds(p.seed, p.trials);
    let records = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &s)| run_trial(p, i, s))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let summary = Summary {
        agree: records.iter().filter(|r| r.agree).count(),
        audits_passed: records.iter().filter(|r| r.audit_ok()).count(),
        max_agree: records.iter().filter(|r| r.max_agree).count(),
        satisfiable: records.iter().filter(|r| r.satisfiable).count(),
    };
    Ok(VerificationReport {
        vars: p.vars,
        clauses: p.clauses,
        k: p.k,
        seed: p.seed,
        preset: p.preset,
        trials: p.trials,
        records,
        summary,
    })
}

/// Writes each failing trial's instance and formula into `dir`.
pub fn write_witnesses(report: &VerificationReport, dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for r in report.failing() {
        let Some(w) = &r.witness else { continue };
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let json = dir.join(&w.file);
        std::fs::write(&json, w.instance.to_json()).with_context(|| format!("writing {}", json.display()))?;
        let cnf = json.with_extension("cnf");
        std::fs::write(&cnf, &r.formula).with_context(|| format!("writing {}", cnf.display()))?;
        written.push(json);
        written.push(cnf);
    }
    Ok(written)
}
