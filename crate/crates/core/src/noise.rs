//! Basis noise sources, the hyperspace and instance superpositions built from
//! them, and the Monte Carlo correlator that averages their product.
//!
//! Every sample `t` owns `2·n·m` uniform draws on `[-0.5, 0.5)`, one per
//! (clause, variable, polarity). Draws come from a ChaCha8 keystream addressed
//! by word position, so any sample can be regenerated in isolation and blocks
//! of samples can be computed in any order on any number of threads.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::cnf::{CnfFormula, PartialAssignment, Polarity, Value};
use crate::error::{NblError, Result};
use crate::stats::CorrelationEstimate;

/// ChaCha's block counter is 64 bits over 16-word blocks.
const WORD_POS_LIMIT: u128 = 1 << 68;
/// Each draw consumes one `u64`, i.e. two keystream words.
const WORDS_PER_DRAW: u128 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64) -> Self {
        SeedSpec { master_seed }
    }

    /// Derives an unrelated seed for a labelled sub-experiment (e.g. one round of a solve).
    pub fn fork(self, label: u64) -> Self {
        SeedSpec::new(splitmix64(self.master_seed ^ splitmix64(label.wrapping_add(1))))
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The `2·n·m` draws of one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTape {
    num_vars: usize,
    num_clauses: usize,
    draws: Vec<f64>,
}

impl NoiseTape {
    pub fn zeros(num_vars: usize, num_clauses: usize) -> Self {
        NoiseTape {
            num_vars,
            num_clauses,
            draws: vec![0.0; 2 * num_vars * num_clauses],
        }
    }

    /// Builds a tape from raw draws laid out clause-major, then variable, then
    /// polarity (positive first).
    ///
    /// # Panics
    /// If `draws.len() != 2·n·m`.
    pub fn from_draws(num_vars: usize, num_clauses: usize, draws: Vec<f64>) -> Self {
        assert_eq!(draws.len(), 2 * num_vars * num_clauses);
        NoiseTape {
            num_vars,
            num_clauses,
            draws,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.num_clauses
    }

    pub fn draws(&self) -> &[f64] {
        &self.draws
    }

    #[inline]
    fn slot(&self, clause0: usize, var0: usize, polarity: Polarity) -> usize {
        (clause0 * self.num_vars + var0) * 2 + (polarity == Polarity::Negative) as usize
    }

    /// Draw for 1-based `clause` and `variable`.
    pub fn get(&self, clause: usize, variable: usize, polarity: Polarity) -> f64 {
        assert!(clause >= 1 && clause <= self.num_clauses);
        assert!(variable >= 1 && variable <= self.num_vars);
        self.draws[self.slot(clause - 1, variable - 1, polarity)]
    }

    #[inline]
    fn at(&self, clause0: usize, var0: usize, polarity: Polarity) -> f64 {
        self.draws[self.slot(clause0, var0, polarity)]
    }
}

fn check_counter(num_vars: usize, num_clauses: usize, samples: u64) -> Result<u128> {
    let overflow = || NblError::CounterOverflow {
        num_vars,
        num_clauses,
        sample: samples,
    };
    let draws = (num_vars as u128)
        .checked_mul(num_clauses as u128)
        .and_then(|nm| nm.checked_mul(2))
        .ok_or_else(overflow)?;
    let words = draws * WORDS_PER_DRAW;
    match words.checked_mul(samples as u128) {
        Some(total) if total <= WORD_POS_LIMIT => Ok(words),
        _ => Err(overflow()),
    }
}

/// Sequential reader over the keystream that regenerates tapes by sample index.
struct TapeSource {
    rng: ChaCha8Rng,
    words_per_sample: u128,
}

impl TapeSource {
    fn new(seed: SeedSpec, stream: u64, words_per_sample: u128) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.master_seed);
        rng.set_stream(stream);
        TapeSource {
            rng,
            words_per_sample,
        }
    }

    fn seek(&mut self, sample: u64) {
        self.rng.set_word_pos(sample as u128 * self.words_per_sample);
    }

    #[inline]
    fn fill(&mut self, tape: &mut NoiseTape) {
        for d in tape.draws.iter_mut() {
            *d = unit_centered(self.rng.next_u64());
        }
    }
}

/// Maps 53 random bits onto `[-0.5, 0.5)`.
#[inline]
fn unit_centered(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64) - 0.5
}

/// Regenerates the tape of sample `t`.
pub fn draw_tape(seed: SeedSpec, t: u64, num_vars: usize, num_clauses: usize) -> Result<NoiseTape> {
    let words = check_counter(num_vars, num_clauses, t.saturating_add(1))?;
    let mut source = TapeSource::new(seed, 0, words);
    source.seek(t);
    let mut tape = NoiseTape::zeros(num_vars, num_clauses);
    source.fill(&mut tape);
    Ok(tape)
}

/// Hyperspace superposition `Π_i (P_i + Q_i)` with binding-dependent branches
/// zeroed: `P_i = Π_j N^j_{x_i}` survives unless `x_i` is bound false, `Q_i =
/// Π_j N^j_{¬x_i}` survives unless `x_i` is bound true.
pub fn eval_tau(tape: &NoiseTape, bindings: &PartialAssignment) -> f64 {
    assert_eq!(bindings.len(), tape.num_vars, "binding length mismatch");
    let mask = BranchMask::new(bindings);
    mask.tau(tape)
}

/// Instance superposition `Π_j Z^j`, where `Z^j` is the superposition (each
/// term once) of all clause-`j` minterms that satisfy clause `j`.
pub fn eval_sigma(tape: &NoiseTape, formula: &CnfFormula) -> f64 {
    CompiledFormula::new(formula).sigma(tape)
}

/// One correlator output `τ·Σ`, both evaluated on the tape of sample `t`.
pub fn sample_sn(
    seed: SeedSpec,
    t: u64,
    formula: &CnfFormula,
    bindings: &PartialAssignment,
) -> Result<f64> {
    let tape = draw_tape(seed, t, formula.num_vars(), formula.num_clauses())?;
    Ok(eval_tau(&tape, bindings) * eval_sigma(&tape, formula))
}

#[derive(Debug, Clone)]
struct BranchMask {
    keep_pos: Vec<bool>,
    keep_neg: Vec<bool>,
}

impl BranchMask {
    fn new(bindings: &PartialAssignment) -> Self {
        let keep_pos = bindings.values().iter().map(|v| *v != Value::False).collect();
        let keep_neg = bindings.values().iter().map(|v| *v != Value::True).collect();
        BranchMask { keep_pos, keep_neg }
    }

    #[inline]
    fn tau(&self, tape: &NoiseTape) -> f64 {
        let mut total = 1.0;
        for var0 in 0..tape.num_vars {
            let mut p = if self.keep_pos[var0] { 1.0 } else { 0.0 };
            let mut q = if self.keep_neg[var0] { 1.0 } else { 0.0 };
            if p != 0.0 {
                for j in 0..tape.num_clauses {
                    p *= tape.at(j, var0, Polarity::Positive);
                }
            }
            if q != 0.0 {
                for j in 0..tape.num_clauses {
                    q *= tape.at(j, var0, Polarity::Negative);
                }
            }
            total *= p + q;
        }
        total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Absent,
    /// Variable occurs in the clause; the draw of this polarity is the one
    /// the clause's unique falsifying minterm uses.
    Falsified(Polarity),
}

#[derive(Debug, Clone)]
struct CompiledClause {
    roles: Vec<Role>,
    tautology: bool,
}

/// Per-clause variable roles used for the factored `Σ` evaluation.
#[derive(Debug, Clone)]
pub(crate) struct CompiledFormula {
    clauses: Vec<CompiledClause>,
}

impl CompiledFormula {
    pub(crate) fn new(formula: &CnfFormula) -> Self {
        let clauses = formula
            .clauses()
            .iter()
            .map(|clause| {
                let mut roles = vec![Role::Absent; formula.num_vars()];
                let mut tautology = false;
                for lit in clause.literals() {
                    let falsifying = lit.polarity().negate();
                    match roles[lit.variable() - 1] {
                        Role::Falsified(p) if p != falsifying => tautology = true,
                        _ => roles[lit.variable() - 1] = Role::Falsified(falsifying),
                    }
                }
                CompiledClause { roles, tautology }
            })
            .collect();
        CompiledFormula { clauses }
    }

    /// `Z^j = H_j − F_j`: the full clause-local hyperspace minus the single
    /// minterm cube that falsifies the clause (absent for tautologies).
    #[inline]
    pub(crate) fn sigma(&self, tape: &NoiseTape) -> f64 {
        let mut total = 1.0;
        for (j, clause) in self.clauses.iter().enumerate() {
            let mut full = 1.0;
            let mut falsified = 1.0;
            for (var0, role) in clause.roles.iter().enumerate() {
                let pair = tape.at(j, var0, Polarity::Positive) + tape.at(j, var0, Polarity::Negative);
                full *= pair;
                falsified *= match *role {
                    Role::Absent => pair,
                    Role::Falsified(p) => tape.at(j, var0, p),
                };
            }
            if clause.tautology {
                falsified = 0.0;
            }
            total *= full - falsified;
        }
        total
    }
}

/// How `τ` and `Σ` obtain their draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coupling {
    /// Both read the same tape. This is the operating mode.
    #[default]
    Shared,
    /// `Σ` reads a tape from an unrelated keystream. Negative control only:
    /// the mean is zero for every instance.
    Independent,
}

/// Where block estimates are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    /// Rayon work-stealing over blocks. Without the `parallel` feature this
    /// runs sequentially.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// When to stop drawing samples.
///
/// Runs stop at `max_samples`, or earlier at a block boundary once at least
/// `min_samples` have been drawn and either the running mean moved by less
/// than `10^-digits` (relative) since the previous block boundary, or
/// `|mean| < eps_abs · stderr`. `digits == 0` disables early stopping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingRule {
    pub max_samples: u64,
    pub min_samples: u64,
    pub block_size: u64,
    pub digits: u32,
    pub eps_abs: f64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        StoppingRule {
            max_samples: 100_000_000,
            min_samples: 1_000_000,
            block_size: 1 << 16,
            digits: 3,
            eps_abs: 1.0,
        }
    }
}

impl StoppingRule {
    /// Exactly `samples` samples, no early stopping.
    pub fn fixed(samples: u64) -> Self {
        StoppingRule {
            max_samples: samples,
            min_samples: samples,
            digits: 0,
            ..StoppingRule::default()
        }
    }

    pub fn with_block_size(mut self, block_size: u64) -> Self {
        self.block_size = block_size;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.max_samples == 0 {
            return Err(NblError::ZeroSamples);
        }
        if self.block_size == 0 {
            return Err(NblError::ZeroBlockSize);
        }
        Ok(())
    }

    fn converged(&self, previous_mean: f64, current: &CorrelationEstimate) -> bool {
        if self.digits == 0 || current.count() < self.min_samples {
            return false;
        }
        let mean = current.mean();
        let tolerance = 10f64.powi(-(self.digits as i32));
        let relative = (mean - previous_mean).abs() / mean.abs();
        relative < tolerance || mean.abs() < self.eps_abs * current.stderr()
    }
}

/// One row of a convergence trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub samples: u64,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub estimate: CorrelationEstimate,
    /// Stopped early by the convergence rule rather than the sample cap.
    pub converged: bool,
}

/// Monte Carlo estimator of `E[τ·Σ]` for one formula and binding set.
#[derive(Debug, Clone)]
pub struct Correlator {
    compiled: CompiledFormula,
    mask: BranchMask,
    num_vars: usize,
    num_clauses: usize,
    seed: SeedSpec,
    coupling: Coupling,
    execution: Execution,
}

impl Correlator {
    pub fn new(formula: &CnfFormula, bindings: &PartialAssignment, seed: SeedSpec) -> Result<Self> {
        if bindings.len() != formula.num_vars() {
            return Err(NblError::AssignmentLength {
                expected: formula.num_vars(),
                got: bindings.len(),
            });
        }
        Ok(Correlator {
            compiled: CompiledFormula::new(formula),
            mask: BranchMask::new(bindings),
            num_vars: formula.num_vars(),
            num_clauses: formula.num_clauses(),
            seed,
            coupling: Coupling::Shared,
            execution: Execution::default(),
        })
    }

    pub fn with_coupling(mut self, coupling: Coupling) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    /// Accumulates samples `start..end` in index order.
    pub fn estimate_range(&self, start: u64, end: u64) -> CorrelationEstimate {
        let words = 4 * (self.num_vars * self.num_clauses) as u128;
        let mut shared = TapeSource::new(self.seed, 0, words);
        shared.seek(start);
        let mut tape = NoiseTape::zeros(self.num_vars, self.num_clauses);
        let mut est = CorrelationEstimate::new();
        match self.coupling {
            Coupling::Shared => {
                for _ in start..end {
                    shared.fill(&mut tape);
                    est.push(self.mask.tau(&tape) * self.compiled.sigma(&tape));
                }
            }
            Coupling::Independent => {
                let mut other = TapeSource::new(self.seed, 1, words);
                other.seek(start);
                let mut other_tape = tape.clone();
                for _ in start..end {
                    shared.fill(&mut tape);
                    other.fill(&mut other_tape);
                    est.push(self.mask.tau(&tape) * self.compiled.sigma(&other_tape));
                }
            }
        }
        est
    }

    fn estimate_segments(&self, segments: &[(u64, u64)]) -> Vec<CorrelationEstimate> {
        match self.execution {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                segments
                    .par_iter()
                    .map(|&(s, e)| self.estimate_range(s, e))
                    .collect()
            }
            _ => segments
                .iter()
                .map(|&(s, e)| self.estimate_range(s, e))
                .collect(),
        }
    }

    fn batch_blocks(&self) -> u64 {
        match self.execution {
            #[cfg(feature = "parallel")]
            Execution::Parallel => 2 * rayon::current_num_threads() as u64,
            _ => 1,
        }
    }

    pub fn run(&self, stop: &StoppingRule) -> Result<RunOutcome> {
        self.run_traced(stop, &[]).map(|(outcome, _)| outcome)
    }

    /// Runs under `stop`, also recording the running estimate after exactly
    /// each sample count in `checkpoints` that is reached.
    ///
    /// Segments are cut at block boundaries and checkpoints, evaluated in
    /// batches (possibly in parallel), and merged strictly in sample order, so
    /// the result does not depend on the thread count.
    pub fn run_traced(
        &self,
        stop: &StoppingRule,
        checkpoints: &[u64],
    ) -> Result<(RunOutcome, Vec<TraceRecord>)> {
        stop.validate()?;
        check_counter(self.num_vars, self.num_clauses, stop.max_samples)?;
        let mut marks: Vec<u64> = checkpoints
            .iter()
            .copied()
            .filter(|&c| c > 0 && c <= stop.max_samples)
            .collect();
        marks.sort_unstable();
        marks.dedup();

        let mut est = CorrelationEstimate::new();
        let mut trace = Vec::with_capacity(marks.len());
        let mut next_mark = 0usize;
        let mut previous_block_mean: Option<f64> = None;
        let mut cursor = 0u64;
        let batch = self.batch_blocks();

        while cursor < stop.max_samples {
            let batch_end = cursor
                .saturating_add(batch.saturating_mul(stop.block_size))
                .min(stop.max_samples);
            let segments = cut_segments(cursor, batch_end, stop.block_size, &marks[next_mark..]);
            let partials = self.estimate_segments(&segments);
            for (&(_, end), part) in segments.iter().zip(&partials) {
                est = est.merge(part);
                while next_mark < marks.len() && marks[next_mark] == end {
                    trace.push(TraceRecord {
                        samples: end,
                        mean: est.mean(),
                        stderr: est.stderr(),
                    });
                    next_mark += 1;
                }
                if end % stop.block_size == 0 || end == stop.max_samples {
                    if let Some(prev) = previous_block_mean {
                        if end < stop.max_samples && stop.converged(prev, &est) {
                            return Ok((
                                RunOutcome {
                                    estimate: est,
                                    converged: true,
                                },
                                trace,
                            ));
                        }
                    }
                    previous_block_mean = Some(est.mean());
                }
            }
            cursor = batch_end;
        }
        Ok((
            RunOutcome {
                estimate: est,
                converged: false,
            },
            trace,
        ))
    }
}

/// Splits `[start, end)` at multiples of `block` and at the given sorted marks.
fn cut_segments(start: u64, end: u64, block: u64, marks: &[u64]) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let mut lo = start;
    let mut marks = marks.iter().copied().filter(|&m| m > start && m < end).peekable();
    while lo < end {
        let mut hi = ((lo / block) + 1).saturating_mul(block).min(end);
        if let Some(&m) = marks.peek() {
            if m < hi {
                hi = m;
            }
            if m <= hi {
                marks.next();
            }
        }
        out.push((lo, hi));
        lo = hi;
    }
    out
}

/// Estimate of `E[τ·Σ]` under `stop`; see [`Correlator::run`].
pub fn run_correlation(
    formula: &CnfFormula,
    bindings: &PartialAssignment,
    seed: SeedSpec,
    stop: &StoppingRule,
) -> Result<CorrelationEstimate> {
    Ok(Correlator::new(formula, bindings, seed)?.run(stop)?.estimate)
}
