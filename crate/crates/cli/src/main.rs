//! `nbl-sat`: check, solve, and inspect CNF instances with a simulated
//! noise-based-logic correlator.
//!
//! Exit codes follow SAT-competition conventions: 10 satisfiable, 20
//! unsatisfiable, 30 inconclusive at the sample budget, 1 usage or input error.

mod report;
mod trace;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nbl_sat::{
    check, count_satisfying, evaluate, normalize, parse_dimacs, snr, solve, solve_cube, Backend,
    CnfFormula, Config, Correlator, Evaluation, Execution, NblError, NormalizationReport,
    PartialAssignment, SeedSpec, StoppingRule,
};

use report::{
    CheckReport, ConfigEcho, OracleReport, Report, SnrReport, SolveReport, Verdict,
};
use trace::Stride;

#[derive(Parser, Debug)]
#[command(name = "nbl-sat", version, about = "Noise-based-logic SAT checker and solver")]
struct Cli {
    #[command(flatten)]
    opts: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct GlobalOpts {
    /// Monte Carlo correlator or exact model counting
    #[arg(long, global = true, value_enum, env = "NBL_SAT_BACKEND", default_value = "stochastic")]
    backend: BackendArg,
    #[arg(long, global = true, env = "NBL_SAT_SEED", default_value_t = 0)]
    seed: u64,
    /// Sample cap per check or trace (accepts `1e8`)
    #[arg(long, global = true, env = "NBL_SAT_MAX_SAMPLES", value_parser = parse_count, default_value = "1e8")]
    max_samples: u64,
    /// Check budget floor; for `trace`, the sample count before early stopping may trigger
    /// [default: 1e4 for checks, 1e6 for traces]
    #[arg(long, global = true, env = "NBL_SAT_MIN_SAMPLES", value_parser = parse_count)]
    min_samples: Option<u64>,
    #[arg(long, global = true, env = "NBL_SAT_BLOCK_SIZE", value_parser = parse_count, default_value = "65536")]
    block_size: u64,
    /// z-score a stochastic verdict must exceed
    #[arg(long = "z", global = true, env = "NBL_SAT_Z", default_value_t = 5.0)]
    z_threshold: f64,
    /// Significant digits for trace convergence; 0 disables early stopping
    #[arg(long, global = true, env = "NBL_SAT_DIGITS", default_value_t = 3)]
    digits: u32,
    /// Model SNR the per-check sample budget is sized for
    #[arg(long, global = true, env = "NBL_SAT_SNR_TARGET", default_value_t = 5.0)]
    snr_target: f64,
    #[arg(long, global = true, value_enum, env = "NBL_SAT_FORMAT", default_value = "text")]
    format: Format,
    /// Worker threads (default: all cores)
    #[arg(long, global = true, env = "NBL_SAT_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide satisfiability
    Check { path: PathBuf },
    /// Extract a satisfying assignment or cube
    Solve {
        path: PathBuf,
        #[arg(long, value_enum, env = "NBL_SAT_MODE", default_value = "minterm")]
        mode: Mode,
    },
    /// Exact model count and expected correlator mean
    #[command(allow_negative_numbers = true)]
    Oracle {
        path: PathBuf,
        /// Signed DIMACS literals to bind, e.g. `-2 3`
        bindings: Vec<i64>,
    },
    /// Closed-form SNR model
    Snr {
        #[arg(long = "vars", short = 'n')]
        num_vars: usize,
        #[arg(long = "clauses", short = 'm')]
        num_clauses: usize,
        #[arg(long, value_parser = parse_count)]
        samples: u64,
        #[arg(long, short = 'k', default_value_t = 1)]
        k: u64,
    },
    /// Running mean/stderr of the correlator output as CSV
    Trace {
        path: PathBuf,
        /// Row spacing: a sample count, or `log[:K]` for K rows per decade
        #[arg(long, env = "NBL_SAT_STRIDE", default_value = "1e5")]
        stride: Stride,
        /// Write to this file instead of stdout
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum BackendArg {
    Stochastic,
    Exact,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Stochastic => Backend::Stochastic,
            BackendArg::Exact => Backend::Exact,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Text,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Minterm,
    Cube,
}

/// Accepts plain integers and integral scientific notation such as `1e8`.
pub(crate) fn parse_count(s: &str) -> Result<u64, String> {
    let s = s.replace('_', "");
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    match s.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64 => Ok(x as u64),
        _ => Err(format!("`{s}` is not a non-negative integer")),
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

struct Instance {
    formula: CnfFormula,
    normalization: NormalizationReport,
    warnings: Vec<String>,
}

fn load(path: &Path) -> Result<Instance, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let parsed = parse_dimacs(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let mut warnings = Vec::new();
    if parsed.clause_count_mismatch() {
        warnings.push(format!(
            "header declares {} clauses, found {}",
            parsed.declared_clauses,
            parsed.formula.num_clauses()
        ));
    }
    if parsed.unterminated_clause {
        warnings.push("last clause is not terminated by 0".to_string());
    }
    let (formula, normalization) = normalize(&parsed.formula);
    Ok(Instance {
        formula,
        normalization,
        warnings,
    })
}

impl GlobalOpts {
    fn config(&self) -> Config {
        Config {
            seed: SeedSpec::new(self.seed),
            max_samples: self.max_samples,
            min_samples: self.min_samples.unwrap_or(10_000),
            block_size: self.block_size,
            z_threshold: self.z_threshold,
            snr_target: self.snr_target,
            execution: Execution::default(),
            ..Config::default()
        }
    }

    fn echo(&self) -> ConfigEcho {
        let config = self.config();
        ConfigEcho {
            seed: self.seed,
            max_samples: config.max_samples,
            min_samples: config.min_samples,
            block_size: config.block_size,
            z_threshold: config.z_threshold,
            snr_target: config.snr_target,
            digits: self.digits,
        }
    }

    fn validate(&self) -> Result<(), Failure> {
        if self.max_samples == 0 || self.block_size == 0 {
            return Err(Failure::usage("--max-samples and --block-size must be positive"));
        }
        if !(self.z_threshold > 0.0 && self.snr_target > 0.0) {
            return Err(Failure::usage("--z and --snr-target must be positive"));
        }
        if self.threads == Some(0) {
            return Err(Failure::usage("--threads must be positive"));
        }
        Ok(())
    }
}

/// Exit code and verdict for a library error raised while deciding an instance.
fn classify(err: &NblError) -> Option<Verdict> {
    match err {
        NblError::Unsatisfiable => Some(Verdict::Unsat),
        NblError::Inconclusive { .. }
        | NblError::InconclusiveAtBudget { .. }
        | NblError::StatisticalInconsistency(_) => Some(Verdict::Inconclusive),
        _ => None,
    }
}

fn cmd_check(opts: &GlobalOpts, path: &Path) -> Result<(Report, u8), Failure> {
    let inst = load(path)?;
    let mut rep = CheckReport::new(path, &inst.formula, inst.normalization, inst.warnings, opts);
    match check(
        &inst.formula,
        &PartialAssignment::unbound(inst.formula.num_vars()),
        opts.backend.into(),
        &opts.config(),
    ) {
        Ok(verdict) => rep.record(&verdict),
        Err(e) => match classify(&e) {
            Some(v) => rep.fail(v, e.to_string()),
            None => return Err(Failure::usage(e.to_string())),
        },
    }
    let code = rep.verdict.exit_code();
    Ok((Report::Check(rep), code))
}

fn cmd_solve(opts: &GlobalOpts, path: &Path, mode: Mode) -> Result<(Report, u8), Failure> {
    let inst = load(path)?;
    let backend: Backend = opts.backend.into();
    let config = opts.config();
    let mut rep = SolveReport::new(path, &inst.formula, inst.normalization, inst.warnings, opts, mode == Mode::Cube);

    let unbound = PartialAssignment::unbound(inst.formula.num_vars());
    let outcome = check(&inst.formula, &unbound, backend, &config).and_then(|initial| {
        rep.set_initial(&initial);
        if !initial.satisfiable() {
            return Ok(Err(initial.outcome));
        }
        match mode {
            Mode::Minterm => solve(&inst.formula, backend, &config),
            Mode::Cube => solve_cube(&inst.formula, backend, &config),
        }
        .map(Ok)
    });
    match outcome {
        Ok(Err(initial)) => rep.fail(initial.into(), "initial check did not find the instance satisfiable".into()),
        Ok(Ok(result)) => {
            // never print a v-line that fails re-evaluation
            let verdict = evaluate(&inst.formula, &result.assignment);
            let ok = match mode {
                Mode::Minterm => verdict == Evaluation::True,
                Mode::Cube => verdict != Evaluation::False,
            };
            rep.record(result);
            if !ok {
                rep.fail(Verdict::Inconclusive, "extracted assignment failed self-check".into());
            }
        }
        Err(e) => match classify(&e) {
            Some(v) => rep.fail(v, e.to_string()),
            None => return Err(Failure::usage(e.to_string())),
        },
    }
    let code = rep.verdict.exit_code();
    Ok((Report::Solve(rep), code))
}

fn cmd_oracle(path: &Path, bindings: &[i64]) -> Result<(Report, u8), Failure> {
    let inst = load(path)?;
    let assignment = PartialAssignment::from_literals(inst.formula.num_vars(), bindings)
        .map_err(|e| Failure::usage(format!("bindings: {e}")))?;
    let exact = count_satisfying(&inst.formula, &assignment).map_err(|e| Failure::usage(e.to_string()))?;
    Ok((
        Report::Oracle(OracleReport::new(path, &inst.formula, bindings.to_vec(), exact)),
        0,
    ))
}

fn cmd_snr(num_vars: usize, num_clauses: usize, samples: u64, k: u64) -> Result<(Report, u8), Failure> {
    let estimate = snr(num_vars, num_clauses, samples, k).map_err(|e| Failure::usage(e.to_string()))?;
    Ok((Report::Snr(SnrReport::new(estimate)), 0))
}

fn cmd_trace(opts: &GlobalOpts, path: &Path, stride: Stride, output: Option<&Path>) -> Result<u8, Failure> {
    let inst = load(path)?;
    let stop = StoppingRule {
        max_samples: opts.max_samples,
        min_samples: opts.min_samples.unwrap_or(1_000_000),
        block_size: opts.block_size,
        digits: opts.digits,
        ..StoppingRule::default()
    };
    let correlator = Correlator::new(
        &inst.formula,
        &PartialAssignment::unbound(inst.formula.num_vars()),
        SeedSpec::new(opts.seed),
    )
    .map_err(|e| Failure::usage(e.to_string()))?;
    let (outcome, mut records) = correlator
        .run_traced(&stop, &stride.checkpoints(stop.max_samples))
        .map_err(|e| Failure::usage(e.to_string()))?;
    let est = outcome.estimate;
    if records.last().map(|r| r.samples) != Some(est.count()) {
        records.push(nbl_sat::TraceRecord {
            samples: est.count(),
            mean: est.mean(),
            stderr: est.stderr(),
        });
    }
    let result = match output {
        Some(p) => fs::File::create(p)
            .map_err(|e| Failure::usage(format!("{}: {e}", p.display())))
            .and_then(|f| trace::write_csv(io::BufWriter::new(f), &records).map_err(|e| Failure::usage(e.to_string()))),
        None => trace::write_csv(io::stdout().lock(), &records).map_err(|e| Failure::usage(e.to_string())),
    };
    result.map(|_| 0)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    cli.opts.validate()?;
    if let Some(threads) = cli.opts.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    let (report, code) = match &cli.command {
        Command::Check { path } => cmd_check(&cli.opts, path)?,
        Command::Solve { path, mode } => cmd_solve(&cli.opts, path, *mode)?,
        Command::Oracle { path, bindings } => cmd_oracle(path, bindings)?,
        Command::Snr {
            num_vars,
            num_clauses,
            samples,
            k,
        } => cmd_snr(*num_vars, *num_clauses, *samples, *k)?,
        Command::Trace { path, stride, output } => {
            return cmd_trace(&cli.opts, path, *stride, output.as_deref());
        }
    };
    let mut out = io::stdout().lock();
    let written = match cli.opts.format {
        Format::Json => serde_json::to_writer_pretty(&mut out, &report)
            .map_err(io::Error::from)
            .and_then(|_| writeln!(out)),
        Format::Text => report.write_text(&mut out),
    };
    written.map_err(|e| Failure::usage(e.to_string()))?;
    Ok(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(parse_count("100"), Ok(100));
        assert_eq!(parse_count("1e8"), Ok(100_000_000));
        assert_eq!(parse_count("65_536"), Ok(65_536));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
