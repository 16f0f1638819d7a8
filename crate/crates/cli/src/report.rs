//! Text and JSON renderings of command results.
//!
//! JSON output contains no timings or thread counts, so identical inputs and
//! configuration produce byte-identical documents.

use std::io::{self, Write};
use std::path::Path;

use nbl_sat::exact::log10_analytic_mean;
use nbl_sat::{
    required_samples, CheckVerdict, CnfFormula, Evidence, ExactResult, NormalizationReport,
    Outcome, Round, SnrEstimate, SolveResult,
};
use serde::Serialize;

use crate::GlobalOpts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "SAT")]
    Sat,
    #[serde(rename = "UNSAT")]
    Unsat,
    #[serde(rename = "INCONCLUSIVE")]
    Inconclusive,
}

impl Verdict {
    pub fn exit_code(self) -> u8 {
        match self {
            Verdict::Sat => 10,
            Verdict::Unsat => 20,
            Verdict::Inconclusive => 30,
        }
    }

    fn status_line(self) -> &'static str {
        match self {
            Verdict::Sat => "s SATISFIABLE",
            Verdict::Unsat => "s UNSATISFIABLE",
            Verdict::Inconclusive => "s UNKNOWN",
        }
    }
}

impl From<Outcome> for Verdict {
    fn from(o: Outcome) -> Self {
        match o {
            Outcome::Satisfiable => Verdict::Sat,
            Outcome::Unsatisfiable => Verdict::Unsat,
            Outcome::Inconclusive => Verdict::Inconclusive,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub seed: u64,
    pub max_samples: u64,
    pub min_samples: u64,
    pub block_size: u64,
    pub z_threshold: f64,
    pub snr_target: f64,
    pub digits: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceInfo {
    pub file: String,
    pub num_vars: usize,
    pub num_clauses: usize,
    pub normalization: NormalizationReport,
    pub warnings: Vec<String>,
}

impl InstanceInfo {
    fn new(path: &Path, formula: &CnfFormula, normalization: NormalizationReport, warnings: Vec<String>) -> Self {
        InstanceInfo {
            file: path.display().to_string(),
            num_vars: formula.num_vars(),
            num_clauses: formula.num_clauses(),
            normalization,
            warnings,
        }
    }

    fn write_text(&self, out: &mut impl Write) -> io::Result<()> {
        writeln!(out, "c file {}", self.file)?;
        writeln!(out, "c instance n={} m={}", self.num_vars, self.num_clauses)?;
        for w in &self.warnings {
            writeln!(out, "c warning: {w}")?;
        }
        let n = &self.normalization;
        if n.removed_duplicate_literals > 0 {
            writeln!(out, "c normalization: removed {} duplicate literal(s)", n.removed_duplicate_literals)?;
        }
        if !n.tautological_clauses.is_empty() {
            let idx: Vec<String> = n.tautological_clauses.iter().map(|i| (i + 1).to_string()).collect();
            writeln!(out, "c normalization: tautological clause(s) {}", idx.join(" "))?;
        }
        if n.empty_clause_present {
            writeln!(out, "c normalization: empty clause present, instance is unsatisfiable")?;
        }
        Ok(())
    }
}

/// Measured or counted quantities behind a verdict.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Measurements {
    pub samples: Option<u64>,
    pub mean: Option<f64>,
    pub stderr: Option<f64>,
    pub z: Option<f64>,
    pub satisfying_count: Option<u64>,
    pub analytic_mean: Option<f64>,
}

impl Measurements {
    fn from_verdict(v: &CheckVerdict) -> Self {
        match v.evidence {
            Evidence::Stochastic { estimate, z_score, .. } => Measurements {
                samples: Some(estimate.count()),
                mean: Some(estimate.mean()),
                stderr: Some(estimate.stderr()),
                z: Some(z_score),
                ..Measurements::default()
            },
            Evidence::Exact(e) => Measurements {
                satisfying_count: Some(e.satisfying_count),
                analytic_mean: Some(e.analytic_mean),
                ..Measurements::default()
            },
        }
    }

    fn write_text(&self, out: &mut impl Write) -> io::Result<()> {
        if let (Some(n), Some(mean), Some(se), Some(z)) = (self.samples, self.mean, self.stderr, self.z) {
            writeln!(out, "c samples={n} mean={mean:e} stderr={se:e} z={z:.3}")?;
        }
        if let (Some(k), Some(mu)) = (self.satisfying_count, self.analytic_mean) {
            writeln!(out, "c K={k} analytic_mean={mu:e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub command: &'static str,
    pub backend: &'static str,
    pub verdict: Verdict,
    pub exit_code: u8,
    pub instance: InstanceInfo,
    pub measurements: Measurements,
    pub message: Option<String>,
    pub config: ConfigEcho,
}

fn backend_name(opts: &GlobalOpts) -> &'static str {
    match opts.backend {
        crate::BackendArg::Stochastic => "stochastic",
        crate::BackendArg::Exact => "exact",
    }
}

impl CheckReport {
    pub fn new(
        path: &Path,
        formula: &CnfFormula,
        normalization: NormalizationReport,
        warnings: Vec<String>,
        opts: &GlobalOpts,
    ) -> Self {
        CheckReport {
            command: "check",
            backend: backend_name(opts),
            verdict: Verdict::Inconclusive,
            exit_code: Verdict::Inconclusive.exit_code(),
            instance: InstanceInfo::new(path, formula, normalization, warnings),
            measurements: Measurements::default(),
            message: None,
            config: opts.echo(),
        }
    }

    pub fn record(&mut self, v: &CheckVerdict) {
        self.verdict = v.outcome.into();
        self.exit_code = self.verdict.exit_code();
        self.measurements = Measurements::from_verdict(v);
    }

    pub fn fail(&mut self, verdict: Verdict, message: String) {
        self.verdict = verdict;
        self.exit_code = verdict.exit_code();
        self.message = Some(message);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub command: &'static str,
    pub backend: &'static str,
    pub mode: &'static str,
    pub verdict: Verdict,
    pub exit_code: u8,
    pub instance: InstanceInfo,
    /// The satisfiability check run before extraction.
    pub initial_check: Measurements,
    pub rounds: Vec<Round>,
    pub checks: usize,
    /// Signed literals of the v-line, absent when no solution is reported.
    pub solution: Option<Vec<i64>>,
    pub implicant: Option<bool>,
    pub message: Option<String>,
    pub config: ConfigEcho,
}

impl SolveReport {
    pub fn new(
        path: &Path,
        formula: &CnfFormula,
        normalization: NormalizationReport,
        warnings: Vec<String>,
        opts: &GlobalOpts,
        cube: bool,
    ) -> Self {
        SolveReport {
            command: "solve",
            backend: backend_name(opts),
            mode: if cube { "cube" } else { "minterm" },
            verdict: Verdict::Inconclusive,
            exit_code: Verdict::Inconclusive.exit_code(),
            instance: InstanceInfo::new(path, formula, normalization, warnings),
            initial_check: Measurements::default(),
            rounds: Vec::new(),
            checks: 0,
            solution: None,
            implicant: None,
            message: None,
            config: opts.echo(),
        }
    }

    pub fn record(&mut self, result: SolveResult) {
        self.verdict = Verdict::Sat;
        self.exit_code = Verdict::Sat.exit_code();
        self.rounds = result.rounds;
        self.checks = result.checks;
        self.solution = Some(result.assignment.to_literals());
        self.implicant = result.implicant;
    }

    pub fn fail(&mut self, verdict: Verdict, message: String) {
        self.verdict = verdict;
        self.exit_code = verdict.exit_code();
        self.solution = None;
        self.message = Some(message);
    }

    pub fn set_initial(&mut self, v: &CheckVerdict) {
        self.initial_check = Measurements::from_verdict(v);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub command: &'static str,
    pub file: String,
    pub bindings: Vec<i64>,
    pub satisfying_count: u64,
    pub analytic_mean: f64,
    pub log10_analytic_mean: Option<f64>,
    pub satisfiable: bool,
    pub noise_width: usize,
}

impl OracleReport {
    pub fn new(path: &Path, _formula: &CnfFormula, bindings: Vec<i64>, exact: ExactResult) -> Self {
        let log = log10_analytic_mean(exact.satisfying_count, exact.noise_width);
        OracleReport {
            command: "oracle",
            file: path.display().to_string(),
            bindings,
            satisfying_count: exact.satisfying_count,
            analytic_mean: exact.analytic_mean,
            log10_analytic_mean: log.is_finite().then_some(log),
            satisfiable: exact.satisfiable,
            noise_width: exact.noise_width,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RequiredSamples {
    pub target_snr: f64,
    /// `None` when beyond `u64`.
    pub samples: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SnrReport {
    pub command: &'static str,
    /// Closed-form model; the variance term is a heuristic.
    pub model: &'static str,
    #[serde(flatten)]
    pub estimate: SnrEstimate,
    pub required_samples: Vec<RequiredSamples>,
}

impl SnrReport {
    pub fn new(estimate: SnrEstimate) -> Self {
        let required_samples = [1.0, 5.0]
            .into_iter()
            .map(|target_snr| RequiredSamples {
                target_snr,
                samples: required_samples(
                    estimate.num_vars,
                    estimate.num_clauses,
                    estimate.satisfying_count,
                    target_snr,
                    u64::MAX,
                )
                .ok(),
            })
            .collect();
        SnrReport {
            command: "snr",
            model: "model estimate",
            estimate,
            required_samples,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Report {
    Check(CheckReport),
    Solve(SolveReport),
    Oracle(OracleReport),
    Snr(SnrReport),
}

impl Report {
    pub fn write_text(&self, out: &mut impl Write) -> io::Result<()> {
        match self {
            Report::Check(r) => {
                r.instance.write_text(out)?;
                writeln!(out, "c backend {}", r.backend)?;
                r.measurements.write_text(out)?;
                if let Some(m) = &r.message {
                    writeln!(out, "c {m}")?;
                }
                writeln!(out, "{}", r.verdict.status_line())
            }
            Report::Solve(r) => {
                r.instance.write_text(out)?;
                writeln!(out, "c backend {} mode {}", r.backend, r.mode)?;
                r.initial_check.write_text(out)?;
                for round in &r.rounds {
                    writeln!(
                        out,
                        "c round x{}={} -> {}",
                        round.variable,
                        round.tested as u8,
                        match round.outcome {
                            Outcome::Satisfiable => "SAT",
                            Outcome::Unsatisfiable => "UNSAT",
                            Outcome::Inconclusive => "INCONCLUSIVE",
                        }
                    )?;
                }
                if let Some(imp) = r.implicant {
                    writeln!(out, "c implicant {imp}")?;
                }
                if let Some(m) = &r.message {
                    writeln!(out, "c {m}")?;
                }
                writeln!(out, "{}", r.verdict.status_line())?;
                if let Some(sol) = &r.solution {
                    let mut line = String::from("v");
                    for lit in sol {
                        line.push_str(&format!(" {lit}"));
                    }
                    writeln!(out, "{line} 0")?;
                }
                Ok(())
            }
            Report::Oracle(r) => {
                writeln!(out, "c file {}", r.file)?;
                if !r.bindings.is_empty() {
                    let b: Vec<String> = r.bindings.iter().map(i64::to_string).collect();
                    writeln!(out, "c bindings {}", b.join(" "))?;
                }
                writeln!(out, "K {}", r.satisfying_count)?;
                writeln!(out, "analytic_mean {:e}", r.analytic_mean)?;
                if let Some(l) = r.log10_analytic_mean {
                    writeln!(out, "log10_analytic_mean {l:.6}")?;
                }
                writeln!(out, "nm {}", r.noise_width)?;
                writeln!(out, "satisfiable {}", r.satisfiable)
            }
            Report::Snr(r) => {
                let e = &r.estimate;
                writeln!(out, "c {} (n={} m={} N={} K={})", r.model, e.num_vars, e.num_clauses, e.samples, e.satisfying_count)?;
                writeln!(out, "mu1 {:e}", e.mu1)?;
                writeln!(out, "sigma {:e}", e.sigma)?;
                writeln!(out, "snr {:.6}", e.snr)?;
                for req in &r.required_samples {
                    match req.samples {
                        Some(n) => writeln!(out, "required_samples[snr={}] {n}", req.target_snr)?,
                        None => writeln!(out, "required_samples[snr={}] infeasible", req.target_snr)?,
                    }
                }
                Ok(())
            }
        }
    }
}
