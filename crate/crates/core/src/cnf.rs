//! CNF formulas, DIMACS text, and exhaustive SAT / MAX-SAT oracles.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::{self, Write as _};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Largest variable count the exhaustive oracles accept by default.
pub const DEFAULT_EXHAUSTIVE_BOUND: u32 = 24;

/// Hard ceiling: assignments are enumerated as `u64` bitmasks.
const MAX_EXHAUSTIVE_BOUND: u32 = 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    /// 1-based variable index.
    pub var: u32,
    pub positive: bool,
}

impl Literal {
    pub fn new(var: u32, positive: bool) -> Self {
        Literal { var, positive }
    }

    /// From a non-zero DIMACS integer.
    pub fn from_dimacs(lit: i64) -> Self {
        Literal { var: lit.unsigned_abs() as u32, positive: lit > 0 }
    }

    pub fn to_dimacs(self) -> i64 {
        if self.positive {
            i64::from(self.var)
        } else {
            -i64::from(self.var)
        }
    }

    pub fn is_true_under(self, a: &Assignment) -> bool {
        a.value(self.var) == self.positive
    }

    pub fn negated(self) -> Self {
        Literal { var: self.var, positive: !self.positive }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub literals: Vec<Literal>,
}

impl Clause {
    pub fn new(literals: Vec<Literal>) -> Self {
        Clause { literals }
    }

    pub fn from_dimacs(lits: &[i64]) -> Self {
        Clause { literals: lits.iter().map(|&l| Literal::from_dimacs(l)).collect() }
    }

    pub fn width(&self) -> usize {
        self.literals.len()
    }

    pub fn is_satisfied_by(&self, a: &Assignment) -> bool {
        self.literals.iter().any(|l| l.is_true_under(a))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DimacsErrorKind {
    #[error("malformed header")]
    MalformedHeader,
    #[error("duplicate header")]
    DuplicateHeader,
    #[error("clause before header")]
    ClauseBeforeHeader,
    #[error("malformed literal {0:?}")]
    MalformedLiteral(String),
    #[error("literal out of range")]
    LiteralOutOfRange,
    #[error("empty clause")]
    EmptyClause,
    #[error("missing terminator")]
    MissingTerminator,
    #[error("clause count mismatch: header declares {declared}, found {found}")]
    ClauseCountMismatch { declared: usize, found: usize },
    #[error("missing header")]
    MissingHeader,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CnfError {
    #[error("{kind} at line {line}")]
    Dimacs { line: usize, kind: DimacsErrorKind },
    #[error("formula needs at least one variable")]
    NoVariables,
    #[error("clause {clause} is empty")]
    EmptyClause { clause: usize },
    #[error("clause {clause} mentions variable {var}, outside 1..={var_count}")]
    VariableOutOfRange { clause: usize, var: u32, var_count: u32 },
    #[error("assignment covers {found} variables, formula has {expected}")]
    PartialAssignment { expected: u32, found: usize },
    #[error("{vars} variables exceed the exhaustive bound of {bound}")]
    TooManyVariables { vars: u32, bound: u32 },
    #[error("invalid generator parameters: {0}")]
    InvalidParameters(String),
}

/// CNF formula over variables `1..=var_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Formula {
    var_count: u32,
    clauses: Vec<Clause>,
    k_bound: u32,
}

impl Formula {
    /// Validates variable ranges and clause non-emptiness. `k_bound` is the
    /// widest clause, but never below 2.
    pub fn new(var_count: u32, clauses: Vec<Clause>) -> Result<Self, CnfError> {
        if var_count == 0 {
            return Err(CnfError::NoVariables);
        }
        for (i, c) in clauses.iter().enumerate() {
            if c.literals.is_empty() {
                return Err(CnfError::EmptyClause { clause: i + 1 });
            }
            if let Some(l) = c.literals.iter().find(|l| l.var == 0 || l.var > var_count) {
                return Err(CnfError::VariableOutOfRange { clause: i + 1, var: l.var, var_count });
            }
        }
        let widest = clauses.iter().map(Clause::width).max().unwrap_or(0) as u32;
        Ok(Formula { var_count, clauses, k_bound: widest.max(2) })
    }

    pub fn from_dimacs_clauses(var_count: u32, clauses: &[&[i64]]) -> Result<Self, CnfError> {
        Self::new(var_count, clauses.iter().map(|c| Clause::from_dimacs(c)).collect())
    }

    pub fn var_count(&self) -> u32 {
        self.var_count
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn clause_count(&self) -> usize {
        self.clauses.len()
    }

    pub fn k_bound(&self) -> u32 {
        self.k_bound
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&emit_dimacs(self))
    }
}

/// Total truth assignment; `values[v - 1]` is variable `v`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Assignment {
    values: Vec<bool>,
}

impl Assignment {
    pub fn new(values: Vec<bool>) -> Self {
        Assignment { values }
    }

    pub fn all_false(var_count: u32) -> Self {
        Assignment { values: alloc::vec![false; var_count as usize] }
    }

    /// The `rank`-th assignment in lexicographic order (false < true,
    /// variable 1 most significant).
    pub fn from_rank(var_count: u32, rank: u64) -> Self {
        let values = (1..=var_count).map(|v| (rank >> (var_count - v)) & 1 == 1).collect();
        Assignment { values }
    }

    /// From signed DIMACS literals; variables not mentioned stay false.
    pub fn from_literals(var_count: u32, lits: &[i64]) -> Self {
        let mut a = Self::all_false(var_count);
        for &l in lits {
            let lit = Literal::from_dimacs(l);
            if lit.var >= 1 && lit.var <= var_count {
                a.values[lit.var as usize - 1] = lit.positive;
            }
        }
        a
    }

    pub fn var_count(&self) -> usize {
        self.values.len()
    }

    pub fn value(&self, var: u32) -> bool {
        self.values[var as usize - 1]
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    #[cfg(test)]
    fn rank(&self) -> u64 {
        self.values.iter().fold(0, |acc, &b| (acc << 1) | u64::from(b))
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, &b) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_char(' ')?;
            }
            if !b {
                f.write_char('-')?;
            }
            write!(f, "{}", i + 1)?;
        }
        Ok(())
    }
}

/// Assignment where some variables may be left open.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialAssignment {
    values: Vec<Option<bool>>,
}

impl PartialAssignment {
    pub fn unassigned(var_count: u32) -> Self {
        PartialAssignment { values: alloc::vec![None; var_count as usize] }
    }

    pub fn get(&self, var: u32) -> Option<bool> {
        self.values[var as usize - 1]
    }

    pub(crate) fn set(&mut self, var: u32, value: bool) {
        self.values[var as usize - 1] = Some(value);
    }

    pub fn assigned_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.assigned_count() == 0
    }

    /// True when every assigned variable agrees with `a`.
    pub fn agrees_with(&self, a: &Assignment) -> bool {
        self.values
            .iter()
            .zip(a.values())
            .all(|(p, &v)| p.is_none_or(|p| p == v))
    }
}

fn dimacs_error(line: usize, kind: DimacsErrorKind) -> CnfError {
    CnfError::Dimacs { line, kind }
}

/// Parses DIMACS CNF. Clauses may span lines; a line starting with `%`
/// ends the clause section.
pub fn parse_dimacs(text: &str) -> Result<Formula, CnfError> {
    let mut header: Option<(usize, u32, usize)> = None;
    let mut clauses: Vec<Clause> = Vec::new();
    let mut current: Vec<Literal> = Vec::new();
    let mut last_literal_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(dimacs_error(line_no, DimacsErrorKind::DuplicateHeader));
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let parsed = match tokens.as_slice() {
                ["p", "cnf", vars, count] => vars.parse::<u32>().ok().zip(count.parse::<usize>().ok()),
                _ => None,
            };
            match parsed {
                Some((vars, count)) if vars > 0 => header = Some((line_no, vars, count)),
                _ => return Err(dimacs_error(line_no, DimacsErrorKind::MalformedHeader)),
            }
            continue;
        }
        let Some((_, var_count, _)) = header else {
            return Err(dimacs_error(line_no, DimacsErrorKind::ClauseBeforeHeader));
        };
        for token in line.split_whitespace() {
            let lit: i64 = token
                .parse()
                .map_err(|_| dimacs_error(line_no, DimacsErrorKind::MalformedLiteral(token.into())))?;
            if lit == 0 {
                if current.is_empty() {
                    return Err(dimacs_error(line_no, DimacsErrorKind::EmptyClause));
                }
                clauses.push(Clause::new(core::mem::take(&mut current)));
                continue;
            }
            if lit.unsigned_abs() > u64::from(var_count) {
                return Err(dimacs_error(line_no, DimacsErrorKind::LiteralOutOfRange));
            }
            current.push(Literal::from_dimacs(lit));
            last_literal_line = line_no;
        }
    }

    let Some((header_line, var_count, declared)) = header else {
        return Err(dimacs_error(text.lines().count().max(1), DimacsErrorKind::MissingHeader));
    };
    if !current.is_empty() {
        return Err(dimacs_error(last_literal_line, DimacsErrorKind::MissingTerminator));
    }
    if clauses.len() != declared {
        return Err(dimacs_error(
            header_line,
            DimacsErrorKind::ClauseCountMismatch { declared, found: clauses.len() },
        ));
    }
    Formula::new(var_count, clauses)
}

/// Canonical DIMACS text: header line, then one `0`-terminated clause per line.
pub fn emit_dimacs(f: &Formula) -> String {
    let mut out = format!("p cnf {} {}\n", f.var_count, f.clauses.len());
    for clause in &f.clauses {
        for lit in &clause.literals {
            let _ = write!(out, "{} ", lit.to_dimacs());
        }
        out.push_str("0\n");
    }
    out
}

fn require_total(f: &Formula, a: &Assignment) -> Result<(), CnfError> {
    if a.var_count() != f.var_count as usize {
        return Err(CnfError::PartialAssignment { expected: f.var_count, found: a.var_count() });
    }
    Ok(())
}

/// Number of clauses with at least one true literal.
pub fn eval(f: &Formula, a: &Assignment) -> Result<usize, CnfError> {
    require_total(f, a)?;
    Ok(f.clauses.iter().filter(|c| c.is_satisfied_by(a)).count())
}

/// Clause as two bitmasks over the lexicographic rank encoding.
struct PackedClause {
    pos: u64,
    neg: u64,
}

fn pack(f: &Formula) -> Vec<PackedClause> {
    let n = f.var_count;
    f.clauses
        .iter()
        .map(|c| {
            let mut packed = PackedClause { pos: 0, neg: 0 };
            for l in &c.literals {
                let bit = 1u64 << (n - l.var);
                if l.positive {
                    packed.pos |= bit;
                } else {
                    packed.neg |= bit;
                }
            }
            packed
        })
        .collect()
}

fn satisfied_count(packed: &[PackedClause], rank: u64) -> usize {
    packed.iter().filter(|c| rank & c.pos != 0 || !rank & c.neg != 0).count()
}

fn check_bound(f: &Formula, bound: u32) -> Result<(), CnfError> {
    let bound = bound.min(MAX_EXHAUSTIVE_BOUND);
    if f.var_count > bound {
        return Err(CnfError::TooManyVariables { vars: f.var_count, bound });
    }
    Ok(())
}

pub fn brute_sat(f: &Formula) -> Result<Option<Assignment>, CnfError> {
    brute_sat_bounded(f, DEFAULT_EXHAUSTIVE_BOUND)
}

/// First satisfying assignment in lexicographic order, if any.
pub fn brute_sat_bounded(f: &Formula, bound: u32) -> Result<Option<Assignment>, CnfError> {
    check_bound(f, bound)?;
    let packed = pack(f);
    let m = packed.len();
    Ok((0..1u64 << f.var_count)
        .find(|&rank| satisfied_count(&packed, rank) == m)
        .map(|rank| Assignment::from_rank(f.var_count, rank)))
}

pub fn max_sat_brute(f: &Formula) -> Result<(usize, Assignment), CnfError> {
    max_sat_brute_bounded(f, DEFAULT_EXHAUSTIVE_BOUND)
}

/// Maximum satisfied-clause count with its lexicographically first witness.
pub fn max_sat_brute_bounded(f: &Formula, bound: u32) -> Result<(usize, Assignment), CnfError> {
    check_bound(f, bound)?;
    let packed = pack(f);
    let m = packed.len();
    let mut best = (0usize, 0u64);
    let mut first = true;
    for rank in 0..1u64 << f.var_count {
        let count = satisfied_count(&packed, rank);
        if first || count > best.0 {
            best = (count, rank);
            first = false;
        }
        if count == m {
            break;
        }
    }
    Ok((best.0, Assignment::from_rank(f.var_count, best.1)))
}

/// Uniform random k-CNF: each clause picks `k` distinct variables without
/// replacement and fair-coin polarities. Deterministic in `seed`.
pub fn random_formula(n: u32, m: usize, k: u32, seed: u64) -> Result<Formula, CnfError> {
    if k < 2 {
        return Err(CnfError::InvalidParameters(format!("k = {k} must be at least 2")));
    }
    if n < k {
        return Err(CnfError::InvalidParameters(format!("k = {k} exceeds the {n} available variables")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clauses = (0..m)
        .map(|_| {
            let vars = index::sample(&mut rng, n as usize, k as usize);
            Clause::new(
                vars.iter()
                    .map(|v| Literal::new(v as u32 + 1, rng.gen_bool(0.5)))
                    .collect(),
            )
        })
        .collect();
    Formula::new(n, clauses)
}

/// Formula smells; clause numbers are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Lint {
    /// The same literal occurs twice in one clause.
    DuplicateLiteral { clause: usize, literal: Literal },
    /// A variable occurs in both polarities in one clause.
    Tautology { clause: usize, var: u32 },
    /// Clause narrower than two literals.
    NarrowClause { clause: usize, width: usize },
}

impl fmt::Display for Lint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lint::DuplicateLiteral { clause, literal } => {
                write!(f, "clause {clause}: literal {literal} repeated")
            }
            Lint::Tautology { clause, var } => {
                write!(f, "clause {clause}: variable {var} occurs in both polarities")
            }
            Lint::NarrowClause { clause, width } => {
                write!(f, "clause {clause}: width {width} is below 2")
            }
        }
    }
}

pub fn lint(f: &Formula) -> Vec<Lint> {
    let mut out = Vec::new();
    for (i, c) in (1..).zip(&f.clauses) {
        if c.width() < 2 {
            out.push(Lint::NarrowClause { clause: i, width: c.width() });
        }
        let mut tautologies: Vec<u32> = Vec::new();
        for (j, l) in c.literals.iter().enumerate() {
            let earlier = &c.literals[..j];
            if earlier.contains(l) {
                out.push(Lint::DuplicateLiteral { clause: i, literal: *l });
            } else if earlier.contains(&l.negated()) && !tautologies.contains(&l.var) {
                tautologies.push(l.var);
                out.push(Lint::Tautology { clause: i, var: l.var });
            }
        }
    }
    out
}
