use thiserror::Error;

/// Location-tagged failure while reading DIMACS text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty input")]
    EmptyInput,
    #[error("line {line}: missing `p cnf` header before clause data")]
    MissingHeader { line: usize },
    #[error("line {line}: duplicate `p cnf` header")]
    DuplicateHeader { line: usize },
    #[error("line {line}: malformed header `{text}`")]
    MalformedHeader { line: usize, text: String },
    #[error("line {line}, column {column}: `{token}` is not an integer")]
    NotAnInteger {
        line: usize,
        column: usize,
        token: String,
    },
    #[error("line {line}, column {column}: literal {literal} exceeds declared variable count {num_vars}")]
    LiteralOutOfRange {
        line: usize,
        column: usize,
        literal: i64,
        num_vars: usize,
    },
    #[error("no `p cnf` header found")]
    NoHeader,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NblError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("sample counter overflow: {num_vars} variables x {num_clauses} clauses at sample {sample}")]
    CounterOverflow {
        num_vars: usize,
        num_clauses: usize,
        sample: u64,
    },
    #[error("max_samples must be positive")]
    ZeroSamples,
    #[error("block_size must be positive")]
    ZeroBlockSize,
    #[error("enumeration guard exceeded: {unbound} unbound variables (limit {limit})")]
    EnumerationGuard { unbound: usize, limit: usize },
    #[error("snr domain error: {0}")]
    SnrDomain(&'static str),
    #[error("required sample count {required} exceeds cap {cap}")]
    Infeasible { required: f64, cap: u64 },
    #[error("inconclusive at budget: {required} samples needed for the requested confidence, cap is {cap}")]
    InconclusiveAtBudget { required: u64, cap: u64 },
    #[error("check was inconclusive after {samples} samples (z = {z:.3})")]
    Inconclusive { samples: u64, z: f64 },
    #[error("variable {0} is already bound")]
    AlreadyBound(usize),
    #[error("variable {variable} out of range 1..={num_vars}")]
    VariableOutOfRange { variable: usize, num_vars: usize },
    #[error("assignment length {got} does not match variable count {expected}")]
    AssignmentLength { expected: usize, got: usize },
    #[error("instance is unsatisfiable")]
    Unsatisfiable,
    #[error("statistical inconsistency: {0}")]
    StatisticalInconsistency(String),
}

pub type Result<T, E = NblError> = std::result::Result<T, E>;
