//! CNF instances, partial assignments, and DIMACS interchange.
//!
//! Variables are 1-based at every public boundary, matching DIMACS.

use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{NblError, ParseError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn negate(self) -> Self {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }

    /// The truth value that makes a literal of this polarity true.
    pub fn satisfying_value(self) -> bool {
        self == Polarity::Positive
    }

    pub fn from_value(value: bool) -> Self {
        if value {
            Polarity::Positive
        } else {
            Polarity::Negative
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    variable: usize,
    polarity: Polarity,
}

impl Literal {
    /// # Panics
    /// If `variable` is zero.
    pub fn new(variable: usize, polarity: Polarity) -> Self {
        assert!(variable >= 1, "variables are 1-based");
        Literal { variable, polarity }
    }

    pub fn positive(variable: usize) -> Self {
        Literal::new(variable, Polarity::Positive)
    }

    pub fn negative(variable: usize) -> Self {
        Literal::new(variable, Polarity::Negative)
    }

    /// Builds a literal from a signed DIMACS integer. Returns `None` for 0.
    pub fn from_dimacs(value: i64) -> Option<Self> {
        if value == 0 {
            return None;
        }
        let variable = usize::try_from(value.unsigned_abs()).ok()?;
        let polarity = if value > 0 {
            Polarity::Positive
        } else {
            Polarity::Negative
        };
        Some(Literal { variable, polarity })
    }

    pub fn to_dimacs(self) -> i64 {
        let v = self.variable as i64;
        match self.polarity {
            Polarity::Positive => v,
            Polarity::Negative => -v,
        }
    }

    pub fn variable(self) -> usize {
        self.variable
    }

    pub fn polarity(self) -> Polarity {
        self.polarity
    }

    pub fn negated(self) -> Self {
        Literal {
            variable: self.variable,
            polarity: self.polarity.negate(),
        }
    }

    pub fn is_satisfied_by(self, value: bool) -> bool {
        self.polarity.satisfying_value() == value
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Clause {
    literals: Vec<Literal>,
}

impl Clause {
    pub fn new(literals: Vec<Literal>) -> Self {
        Clause { literals }
    }

    pub fn from_dimacs(values: &[i64]) -> Self {
        Clause {
            literals: values
                .iter()
                .map(|&v| Literal::from_dimacs(v).expect("0 is the clause terminator"))
                .collect(),
        }
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    /// True if the clause contains some literal together with its negation.
    pub fn is_tautology(&self) -> bool {
        self.literals
            .iter()
            .any(|l| self.literals.contains(&l.negated()))
    }
}

impl FromIterator<Literal> for Clause {
    fn from_iter<I: IntoIterator<Item = Literal>>(iter: I) -> Self {
        Clause::new(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CnfFormula {
    num_vars: usize,
    clauses: Vec<Clause>,
}

impl CnfFormula {
    pub fn new(num_vars: usize, clauses: Vec<Clause>) -> Result<Self> {
        for clause in &clauses {
            for lit in clause.literals() {
                if lit.variable() > num_vars {
                    return Err(NblError::VariableOutOfRange {
                        variable: lit.variable(),
                        num_vars,
                    });
                }
            }
        }
        Ok(CnfFormula { num_vars, clauses })
    }

    /// Convenience constructor from signed DIMACS-style clause lists.
    pub fn from_dimacs_clauses(num_vars: usize, clauses: &[&[i64]]) -> Result<Self> {
        CnfFormula::new(
            num_vars,
            clauses.iter().map(|c| Clause::from_dimacs(c)).collect(),
        )
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// n·m, the number of basis noise sources per polarity.
    pub fn noise_width(&self) -> usize {
        self.num_vars * self.clauses.len()
    }

    pub fn has_empty_clause(&self) -> bool {
        self.clauses.iter().any(Clause::is_empty)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Value {
    #[default]
    Unbound,
    True,
    False,
}

impl Value {
    pub fn as_bool(self) -> Option<bool> {
        match self {
            Value::Unbound => None,
            Value::True => Some(true),
            Value::False => Some(false),
        }
    }

    pub fn from_bool(value: bool) -> Self {
        if value {
            Value::True
        } else {
            Value::False
        }
    }
}

/// Per-variable binding state, indexed 1..=n.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartialAssignment {
    values: Vec<Value>,
}

impl PartialAssignment {
    pub fn unbound(num_vars: usize) -> Self {
        PartialAssignment {
            values: vec![Value::Unbound; num_vars],
        }
    }

    pub fn from_bools(values: &[bool]) -> Self {
        PartialAssignment {
            values: values.iter().copied().map(Value::from_bool).collect(),
        }
    }

    /// Builds an assignment from signed DIMACS literals, e.g. `[1, -3]`.
    pub fn from_literals(num_vars: usize, literals: &[i64]) -> Result<Self> {
        let mut a = PartialAssignment::unbound(num_vars);
        for &v in literals {
            let lit = Literal::from_dimacs(v).ok_or(NblError::VariableOutOfRange {
                variable: 0,
                num_vars,
            })?;
            a.bind(lit.variable(), lit.polarity().satisfying_value())?;
        }
        Ok(a)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// # Panics
    /// If `variable` is outside `1..=n`.
    pub fn get(&self, variable: usize) -> Value {
        self.values[variable - 1]
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    /// Binds an unbound variable. A variable may be bound at most once.
    pub fn bind(&mut self, variable: usize, value: bool) -> Result<()> {
        if variable == 0 || variable > self.values.len() {
            return Err(NblError::VariableOutOfRange {
                variable,
                num_vars: self.values.len(),
            });
        }
        let slot = &mut self.values[variable - 1];
        if *slot != Value::Unbound {
            return Err(NblError::AlreadyBound(variable));
        }
        *slot = Value::from_bool(value);
        Ok(())
    }

    /// Returns a copy with one more variable bound.
    pub fn with(&self, variable: usize, value: bool) -> Result<Self> {
        let mut next = self.clone();
        next.bind(variable, value)?;
        Ok(next)
    }

    pub fn is_full(&self) -> bool {
        self.values.iter().all(|v| *v != Value::Unbound)
    }

    pub fn unbound_count(&self) -> usize {
        self.values.iter().filter(|v| **v == Value::Unbound).count()
    }

    pub fn unbound_variables(&self) -> impl Iterator<Item = usize> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v == Value::Unbound)
            .map(|(i, _)| i + 1)
    }

    /// Bound variables as signed DIMACS literals in ascending variable order.
    pub fn to_literals(&self) -> Vec<i64> {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| {
                v.as_bool()
                    .map(|b| if b { (i + 1) as i64 } else { -((i + 1) as i64) })
            })
            .collect()
    }
}

/// Serialized as the signed literals of the bound variables.
impl Serialize for PartialAssignment {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_literals().serialize(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Evaluation {
    True,
    False,
    Undetermined,
}

/// Three-valued evaluation of `formula` under a (possibly partial) assignment.
pub fn evaluate(formula: &CnfFormula, assignment: &PartialAssignment) -> Evaluation {
    let mut undecided = false;
    for clause in formula.clauses() {
        let mut satisfied = false;
        let mut open = false;
        for lit in clause.literals() {
            match assignment.get(lit.variable()).as_bool() {
                Some(v) if lit.is_satisfied_by(v) => {
                    satisfied = true;
                    break;
                }
                Some(_) => {}
                None => open = true,
            }
        }
        if !satisfied {
            if !open {
                return Evaluation::False;
            }
            undecided = true;
        }
    }
    if undecided {
        Evaluation::Undetermined
    } else {
        Evaluation::True
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizationReport {
    pub removed_duplicate_literals: usize,
    /// 0-based clause indices.
    pub tautological_clauses: Vec<usize>,
    pub empty_clause_present: bool,
}

impl NormalizationReport {
    pub fn is_clean(&self) -> bool {
        self.removed_duplicate_literals == 0
            && self.tautological_clauses.is_empty()
            && !self.empty_clause_present
    }
}

/// Removes duplicate literals inside each clause (first occurrence wins) and
/// reports tautological and empty clauses, which are kept as-is.
pub fn normalize(formula: &CnfFormula) -> (CnfFormula, NormalizationReport) {
    let mut report = NormalizationReport::default();
    let mut clauses = Vec::with_capacity(formula.num_clauses());
    for (idx, clause) in formula.clauses().iter().enumerate() {
        let mut kept: Vec<Literal> = Vec::with_capacity(clause.len());
        for &lit in clause.literals() {
            if kept.contains(&lit) {
                report.removed_duplicate_literals += 1;
            } else {
                kept.push(lit);
            }
        }
        let kept = Clause::new(kept);
        if kept.is_tautology() {
            report.tautological_clauses.push(idx);
        }
        if kept.is_empty() {
            report.empty_clause_present = true;
        }
        clauses.push(kept);
    }
    (
        CnfFormula {
            num_vars: formula.num_vars,
            clauses,
        },
        report,
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedDimacs {
    pub formula: CnfFormula,
    /// Clause count from the `p cnf` header.
    pub declared_clauses: usize,
    /// The last clause was not terminated by `0` before end of input.
    pub unterminated_clause: bool,
}

impl ParsedDimacs {
    pub fn clause_count_mismatch(&self) -> bool {
        self.declared_clauses != self.formula.num_clauses()
    }
}

/// Parses DIMACS CNF text. Clauses may span lines; a `%` line ends the data.
pub fn parse_dimacs(text: &str) -> Result<ParsedDimacs, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::EmptyInput);
    }
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut current: Vec<Literal> = Vec::new();
    let mut pending = false;

    for (line_idx, raw) in text.lines().enumerate() {
        let line_no = line_idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(ParseError::DuplicateHeader { line: line_no });
            }
            header = Some(parse_header(line, line_no)?);
            continue;
        }
        let Some((num_vars, _)) = header else {
            return Err(ParseError::MissingHeader { line: line_no });
        };
        let mut column = 0usize;
        for token in raw.split_whitespace() {
            // 1-based column of the token within the raw line
            let offset = raw[column..].find(token).unwrap_or(0) + column;
            column = offset + token.len();
            let value: i64 = token.parse().map_err(|_| ParseError::NotAnInteger {
                line: line_no,
                column: offset + 1,
                token: token.to_string(),
            })?;
            match Literal::from_dimacs(value) {
                None => {
                    clauses.push(Clause::new(std::mem::take(&mut current)));
                    pending = false;
                }
                Some(lit) if lit.variable() > num_vars => {
                    return Err(ParseError::LiteralOutOfRange {
                        line: line_no,
                        column: offset + 1,
                        literal: value,
                        num_vars,
                    });
                }
                Some(lit) => {
                    current.push(lit);
                    pending = true;
                }
            }
        }
    }

    let (num_vars, declared_clauses) = header.ok_or(ParseError::NoHeader)?;
    if pending {
        clauses.push(Clause::new(current));
    }
    Ok(ParsedDimacs {
        formula: CnfFormula { num_vars, clauses },
        declared_clauses,
        unterminated_clause: pending,
    })
}

fn parse_header(line: &str, line_no: usize) -> Result<(usize, usize), ParseError> {
    let malformed = || ParseError::MalformedHeader {
        line: line_no,
        text: line.to_string(),
    };
    let fields: Vec<&str> = line.split_whitespace().collect();
    match fields.as_slice() {
        ["p", "cnf", n, m] => {
            let n = n.parse().map_err(|_| malformed())?;
            let m = m.parse().map_err(|_| malformed())?;
            Ok((n, m))
        }
        _ => Err(malformed()),
    }
}

/// Canonical DIMACS serialization: header line, then one 0-terminated clause per line.
pub fn write_dimacs(formula: &CnfFormula) -> String {
    let mut out = String::new();
    writeln!(out, "p cnf {} {}", formula.num_vars(), formula.num_clauses()).unwrap();
    for clause in formula.clauses() {
        for lit in clause.literals() {
            write!(out, "{} ", lit).unwrap();
        }
        out.push_str("0\n");
    }
    out
}
