//! Boolean satisfiability through noise-based logic.
//!
//! A CNF instance with `n` variables and `m` clauses is mapped onto `2·n·m`
//! independent zero-mean noise sources. Two superpositions are built from the
//! same draws: `τ`, holding every assignment of the (possibly reduced)
//! variable space, and `Σ`, holding per clause every assignment that satisfies
//! that clause. Only satisfying assignments correlate between the two, so the
//! time average of `τ·Σ` is `K·(1/12)^{nm}` for `K` solutions and zero for an
//! unsatisfiable instance.
//!
//! * [`cnf`]: instances, assignments, DIMACS I/O.
//! * [`noise`]: noise tapes, `τ`/`Σ` evaluation, the Monte Carlo correlator.
//! * [`stats`]: mergeable streaming mean/variance.
//! * [`exact`]: model counting, the analytic mean, the SNR model.
//! * [`algorithms`]: check, assignment/cube extraction, branch scoring.
//!
//! With the default `parallel` feature, sample blocks are spread over a rayon
//! pool; without it everything runs on the calling thread. Results are
//! identical either way.

pub mod algorithms;
pub mod cnf;
pub mod error;
pub mod exact;
pub mod noise;
pub mod stats;

pub use algorithms::{
    best_binding, check, is_implicant, score_binding, solve, solve_cube, Backend, BindingScore,
    CheckVerdict, Config, Evidence, Outcome, Round, SolveResult, VariableOrder,
};
pub use cnf::{
    evaluate, normalize, parse_dimacs, write_dimacs, Clause, CnfFormula, Evaluation, Literal,
    NormalizationReport, ParsedDimacs, PartialAssignment, Polarity, Value,
};
pub use error::{NblError, ParseError, Result};
pub use exact::{analytic_mean, count_satisfying, required_samples, snr, ExactResult, SnrEstimate};
pub use noise::{
    draw_tape, eval_sigma, eval_tau, run_correlation, sample_sn, Correlator, Coupling, Execution,
    NoiseTape, RunOutcome, SeedSpec, StoppingRule, TraceRecord,
};
pub use stats::CorrelationEstimate;
