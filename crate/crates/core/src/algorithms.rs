//! Satisfiability check, assignment and cube extraction, and branch scoring,
//! each runnable against the Monte Carlo correlator or the exact oracle.

use serde::{Deserialize, Serialize};

use crate::cnf::{evaluate, CnfFormula, Evaluation, PartialAssignment, Polarity};
use crate::error::{NblError, Result};
use crate::exact::{analytic_mean, count_satisfying, required_samples, ExactResult};
use crate::noise::{Correlator, Execution, SeedSpec, StoppingRule};
use crate::stats::CorrelationEstimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Stochastic,
    Exact,
}

/// Order in which assignment extraction visits variables.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum VariableOrder {
    #[default]
    Ascending,
    /// Explicit 1-based order; must be a permutation of `1..=n`.
    Custom(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub seed: SeedSpec,
    /// Hard cap on samples for a single check.
    pub max_samples: u64,
    /// Lower bound on the per-check sample budget.
    pub min_samples: u64,
    pub block_size: u64,
    pub z_threshold: f64,
    pub snr_target: f64,
    pub execution: Execution,
    pub order: VariableOrder,
    /// Value tried first in each extraction round.
    pub first_value: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: SeedSpec::new(0),
            max_samples: 100_000_000,
            min_samples: 10_000,
            block_size: 1 << 16,
            z_threshold: 5.0,
            snr_target: 5.0,
            execution: Execution::default(),
            order: VariableOrder::Ascending,
            first_value: true,
        }
    }
}

impl Config {
    fn with_seed(&self, seed: SeedSpec) -> Config {
        Config {
            seed,
            ..self.clone()
        }
    }

    /// Samples a stochastic check on an instance of this size will draw.
    pub fn sample_budget(&self, num_vars: usize, num_clauses: usize) -> Result<u64> {
        let needed = match required_samples(num_vars, num_clauses, 1, self.snr_target, u64::MAX) {
            Ok(n) => n,
            Err(NblError::Infeasible { .. }) => u64::MAX,
            Err(e) => return Err(e),
        };
        let budget = needed.max(self.min_samples);
        if budget > self.max_samples {
            return Err(NblError::InconclusiveAtBudget {
                required: budget,
                cap: self.max_samples,
            });
        }
        Ok(budget)
    }

    fn visit_order(&self, num_vars: usize) -> Result<Vec<usize>> {
        match &self.order {
            VariableOrder::Ascending => Ok((1..=num_vars).collect()),
            VariableOrder::Custom(order) => {
                let mut sorted = order.clone();
                sorted.sort_unstable();
                if sorted != (1..=num_vars).collect::<Vec<_>>() {
                    return Err(NblError::VariableOutOfRange {
                        variable: order.iter().copied().find(|&v| v == 0 || v > num_vars).unwrap_or(0),
                        num_vars,
                    });
                }
                Ok(order.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Satisfiable,
    Unsatisfiable,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "lowercase")]
pub enum Evidence {
    Stochastic {
        estimate: CorrelationEstimate,
        z_score: f64,
        /// Smallest non-zero expectation (one solution), the UNSAT test's reference.
        single_solution_mean: f64,
    },
    Exact(ExactResult),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckVerdict {
    pub outcome: Outcome,
    pub evidence: Evidence,
}

impl CheckVerdict {
    pub fn satisfiable(&self) -> bool {
        self.outcome == Outcome::Satisfiable
    }

    pub fn backend(&self) -> Backend {
        match self.evidence {
            Evidence::Stochastic { .. } => Backend::Stochastic,
            Evidence::Exact(_) => Backend::Exact,
        }
    }

    pub fn z_score(&self) -> Option<f64> {
        match self.evidence {
            Evidence::Stochastic { z_score, .. } => Some(z_score),
            Evidence::Exact(_) => None,
        }
    }

    fn inconclusive_error(&self) -> NblError {
        match self.evidence {
            Evidence::Stochastic {
                estimate, z_score, ..
            } => NblError::Inconclusive {
                samples: estimate.count(),
                z: z_score,
            },
            Evidence::Exact(_) => unreachable!("exact checks are never inconclusive"),
        }
    }
}

/// Decides satisfiability of `formula` restricted to the cube `bindings`.
///
/// Exact: satisfiable iff the model count is positive. Stochastic: draws the
/// sample budget and declares satisfiable when `mean/stderr > z`, unsatisfiable
/// when `(μ₁ − mean)/stderr > z` with `μ₁ = (1/12)^{nm}`, and inconclusive
/// otherwise.
pub fn check(
    formula: &CnfFormula,
    bindings: &PartialAssignment,
    backend: Backend,
    config: &Config,
) -> Result<CheckVerdict> {
    match backend {
        Backend::Exact => {
            let exact = count_satisfying(formula, bindings)?;
            Ok(CheckVerdict {
                outcome: if exact.satisfiable {
                    Outcome::Satisfiable
                } else {
                    Outcome::Unsatisfiable
                },
                evidence: Evidence::Exact(exact),
            })
        }
        Backend::Stochastic => {
            let budget = config.sample_budget(formula.num_vars(), formula.num_clauses())?;
            let estimate = Correlator::new(formula, bindings, config.seed)?
                .with_execution(config.execution)
                .run(&StoppingRule::fixed(budget).with_block_size(config.block_size))?
                .estimate;
            let z_score = estimate.z_score();
            let single_solution_mean = analytic_mean(1, formula.noise_width());
            let below = CorrelationEstimate::from_parts(
                estimate.count(),
                single_solution_mean - estimate.mean(),
                estimate.m2(),
            )
            .z_score();
            let outcome = if z_score > config.z_threshold && estimate.mean() > 0.0 {
                Outcome::Satisfiable
            } else if below > config.z_threshold {
                Outcome::Unsatisfiable
            } else {
                Outcome::Inconclusive
            };
            Ok(CheckVerdict {
                outcome,
                evidence: Evidence::Stochastic {
                    estimate,
                    z_score,
                    single_solution_mean,
                },
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub variable: usize,
    /// Value the variable was bound to for this test.
    pub tested: bool,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    pub assignment: PartialAssignment,
    pub rounds: Vec<Round>,
    /// Number of check invocations performed.
    pub checks: usize,
    /// Exact only: every full extension of `assignment` satisfies the formula.
    pub implicant: Option<bool>,
}

fn bind_and_check(
    formula: &CnfFormula,
    bindings: &PartialAssignment,
    variable: usize,
    value: bool,
    backend: Backend,
    config: &Config,
) -> Result<(PartialAssignment, CheckVerdict)> {
    let trial = bindings.with(variable, value)?;
    let verdict = check(formula, &trial, backend, config)?;
    if verdict.outcome == Outcome::Inconclusive {
        return Err(verdict.inconclusive_error());
    }
    Ok((trial, verdict))
}

/// Extracts one satisfying assignment with exactly `n` checks: each round
/// binds the next variable to `first_value`, keeps it when the reduced
/// instance is satisfiable, and otherwise binds the opposite value without a
/// second check.
///
/// The caller is expected to have established satisfiability. The result is
/// verified before returning; an unsatisfiable instance yields
/// [`NblError::Unsatisfiable`] on the exact backend and
/// [`NblError::StatisticalInconsistency`] on the stochastic one.
pub fn solve(formula: &CnfFormula, backend: Backend, config: &Config) -> Result<SolveResult> {
    let mut bindings = PartialAssignment::unbound(formula.num_vars());
    let mut rounds = Vec::with_capacity(formula.num_vars());
    for (round, variable) in config.visit_order(formula.num_vars())?.into_iter().enumerate() {
        let cfg = config.with_seed(config.seed.fork(round as u64));
        let (trial, verdict) =
            bind_and_check(formula, &bindings, variable, config.first_value, backend, &cfg)?;
        rounds.push(Round {
            variable,
            tested: config.first_value,
            outcome: verdict.outcome,
        });
        if verdict.satisfiable() {
            bindings = trial;
        } else {
            bindings.bind(variable, !config.first_value)?;
        }
    }
    if evaluate(formula, &bindings) != Evaluation::True {
        return Err(match backend {
            Backend::Exact => NblError::Unsatisfiable,
            Backend::Stochastic => NblError::StatisticalInconsistency(format!(
                "extracted assignment {:?} does not satisfy the formula",
                bindings.to_literals()
            )),
        });
    }
    let checks = rounds.len();
    Ok(SolveResult {
        assignment: bindings,
        rounds,
        checks,
        implicant: (backend == Backend::Exact).then_some(true),
    })
}

/// Cube variant of [`solve`]: each round tests both values of the variable and
/// leaves it free when both reduced instances are satisfiable.
pub fn solve_cube(formula: &CnfFormula, backend: Backend, config: &Config) -> Result<SolveResult> {
    let mut bindings = PartialAssignment::unbound(formula.num_vars());
    let mut rounds = Vec::with_capacity(2 * formula.num_vars());
    for (round, variable) in config.visit_order(formula.num_vars())?.into_iter().enumerate() {
        let mut sat = [false; 2];
        for (slot, value) in [config.first_value, !config.first_value].into_iter().enumerate() {
            let cfg = config.with_seed(config.seed.fork((2 * round + slot) as u64));
            let (_, verdict) = bind_and_check(formula, &bindings, variable, value, backend, &cfg)?;
            rounds.push(Round {
                variable,
                tested: value,
                outcome: verdict.outcome,
            });
            sat[slot] = verdict.satisfiable();
        }
        match sat {
            [true, true] => {}
            [true, false] => bindings.bind(variable, config.first_value)?,
            [false, true] => bindings.bind(variable, !config.first_value)?,
            [false, false] => {
                return Err(if bindings.unbound_count() == formula.num_vars() {
                    NblError::Unsatisfiable
                } else {
                    NblError::StatisticalInconsistency(format!(
                        "both values of x{variable} unsatisfiable under a satisfiable cube"
                    ))
                });
            }
        }
    }
    let implicant = match backend {
        Backend::Exact => Some(is_implicant(formula, &bindings)?),
        Backend::Stochastic => None,
    };
    if backend == Backend::Exact && count_satisfying(formula, &bindings)?.satisfying_count == 0 {
        return Err(NblError::Unsatisfiable);
    }
    let checks = rounds.len();
    Ok(SolveResult {
        assignment: bindings,
        rounds,
        checks,
        implicant,
    })
}

/// True when every full extension of `cube` satisfies `formula`.
pub fn is_implicant(formula: &CnfFormula, cube: &PartialAssignment) -> Result<bool> {
    let exact = count_satisfying(formula, cube)?;
    Ok(exact.satisfying_count == 1u64 << cube.unbound_count())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BindingScore {
    pub variable: usize,
    pub polarity: Polarity,
    pub mean: f64,
    pub stderr: f64,
}

/// Expected correlator output with one extra binding: proportional to the
/// number of solutions in that half of the current subspace.
pub fn score_binding(
    formula: &CnfFormula,
    bindings: &PartialAssignment,
    variable: usize,
    polarity: Polarity,
    backend: Backend,
    config: &Config,
) -> Result<BindingScore> {
    let extended = bindings.with(variable, polarity.satisfying_value())?;
    let (mean, stderr) = match backend {
        Backend::Exact => (count_satisfying(formula, &extended)?.analytic_mean, 0.0),
        Backend::Stochastic => {
            let budget = config.sample_budget(formula.num_vars(), formula.num_clauses())?;
            let est = Correlator::new(formula, &extended, config.seed)?
                .with_execution(config.execution)
                .run(&StoppingRule::fixed(budget).with_block_size(config.block_size))?
                .estimate;
            (est.mean(), est.stderr())
        }
    };
    Ok(BindingScore {
        variable,
        polarity,
        mean,
        stderr,
    })
}

/// Scores both values of `variable` and returns them with the higher-mean
/// polarity first (positive on ties).
pub fn best_binding(
    formula: &CnfFormula,
    bindings: &PartialAssignment,
    variable: usize,
    backend: Backend,
    config: &Config,
) -> Result<(BindingScore, BindingScore)> {
    let pos = score_binding(formula, bindings, variable, Polarity::Positive, backend, &config.with_seed(config.seed.fork(0)))?;
    let neg = score_binding(formula, bindings, variable, Polarity::Negative, backend, &config.with_seed(config.seed.fork(1)))?;
    Ok(if neg.mean > pos.mean { (neg, pos) } else { (pos, neg) })
}
