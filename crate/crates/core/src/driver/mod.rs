//! The modular algorithm over Q: Gröbner bases modulo many primes, Chinese
//! remaindering and rational reconstruction, then a certification step.
//!
//! ```no_run
//! use modgb::driver::{modular_gbasis, systems, RunConfig};
//!
//! let ideal = systems::cyclic(4).unwrap();
//! let result = modular_gbasis(&ideal, &RunConfig::default()).unwrap();
//! println!("{}", result.to_text(&ideal.vars, false));
//! ```

pub mod io;
pub mod systems;

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use rustc_hash::FxHashSet;
use thiserror::Error;

use crate::arith::{PrimeClass, PrimeField, PrimeSequence};
use crate::f4gb::{gbasis_modp, GbError, GbOutput, GbStats, LearningTrace, Mode};
use crate::monomial::Monomial;
use crate::poly::{map_mod, primitive_part_rational, Polynomial};
use crate::reconstruct::{absorb, lift_candidate, stabilized, Absorbed, RationalCandidate, ReconstructionBranch};
use crate::verify::{
    check_gb_deterministic_integer, check_gb_deterministic_modular, check_gb_probabilistic,
    check_inclusion, CheckMode, CheckReport, CheckResult, InclusionMode, ModularCheckOptions,
    VerifyError,
};

pub use io::{parse_ideal, print_basis, IdealSpec, ParseError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DriverError {
    #[error("prime supply exhausted after {0} primes")]
    PrimeSupplyExhausted(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("could not start worker pool: {0}")]
    ThreadPool(String),
}

/// Deterministic s-polynomial check used when `epsilon` is zero or the
/// basis is small.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeterministicCheck {
    #[default]
    Integer,
    Modular,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Zero selects a deterministic check.
    pub epsilon: f64,
    pub deterministic: DeterministicCheck,
    /// Class of the reconstruction primes.
    pub prime_class: PrimeClass,
    /// Class of the first (learning) prime.
    pub learning_class: PrimeClass,
    pub workers: usize,
    /// Candidates with at most this many elements always get a
    /// deterministic check.
    pub small_basis_threshold: usize,
    /// Budget of reconstruction primes.
    pub max_primes: usize,
    pub verbosity: u8,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            epsilon: 0.0,
            deterministic: DeterministicCheck::Integer,
            prime_class: PrimeClass::Working29,
            learning_class: PrimeClass::Learning31,
            workers: 1,
            small_basis_threshold: 50,
            max_primes: 10_000,
            verbosity: 0,
        }
    }
}

impl RunConfig {
    fn validate(&self) -> Result<(), DriverError> {
        if !(self.epsilon >= 0.0 && self.epsilon < 1.0) {
            return Err(DriverError::InvalidConfig(format!(
                "epsilon must lie in [0, 1), got {}",
                self.epsilon
            )));
        }
        if self.workers == 0 {
            return Err(DriverError::InvalidConfig("worker count must be at least 1".into()));
        }
        Ok(())
    }

    /// The check applied to a candidate with `len` elements.
    pub fn check_mode(&self, len: usize) -> CheckMode {
        if self.epsilon > 0.0 && len > self.small_basis_threshold {
            CheckMode::Probabilistic {
                epsilon: self.epsilon,
            }
        } else {
            match self.deterministic {
                DeterministicCheck::Integer => CheckMode::DeterministicInteger,
                DeterministicCheck::Modular => CheckMode::DeterministicModular,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Record,
    Replay,
    /// Replay failed; the prime was recomputed from scratch.
    ReplayFallback,
}

/// One modular computation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeRun {
    pub prime: u32,
    pub mode: RunMode,
    pub basis_len: usize,
    pub stats: GbStats,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunStats {
    pub runs: Vec<PrimeRun>,
    /// Primes skipped because they divide a leading coefficient of the input.
    pub unlucky_input_primes: usize,
    pub branches_created: usize,
    /// Candidates that reached the checking step.
    pub checks: Vec<CheckReport>,
}

impl RunStats {
    pub fn reconstruction_primes(&self) -> usize {
        self.runs.len()
    }

    pub fn record_run(&self) -> Option<&PrimeRun> {
        self.runs.iter().find(|r| r.mode == RunMode::Record)
    }

    pub fn replay_runs(&self) -> impl Iterator<Item = &PrimeRun> {
        self.runs.iter().filter(|r| r.mode == RunMode::Replay)
    }

    /// Human-readable summary.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for r in &self.runs {
            let (rows, cols) = r.stats.max_matrix();
            out.push_str(&format!(
                "prime {:>10} {:<14} basis {:>4}  iterations {:>3}  pairs reduced {:>6}  zero {:>6}  largest matrix {}x{}\n",
                r.prime,
                format!("{:?}", r.mode),
                r.basis_len,
                r.stats.iterations.len(),
                r.stats.pairs_reduced(),
                r.stats.zero_reductions(),
                rows,
                cols
            ));
        }
        out.push_str(&format!(
            "primes skipped for the input: {}\nbranches: {}\n",
            self.unlucky_input_primes, self.branches_created
        ));
        for c in &self.checks {
            out.push_str(&format!(
                "check ({}): {:?}, {} pairs, {} coprime skipped, {} primes",
                c.mode,
                c.result,
                c.pairs_checked,
                c.pairs_skipped,
                c.primes_used.len()
            ));
            if c.mode == CheckMode::DeterministicModular {
                out.push_str(&format!(
                    ", identity by bound {} / expanded {}",
                    c.identity.shortcut, c.identity.expanded
                ));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct GbResult {
    /// Reduced monic basis over Q, leading monomials decreasing.
    pub basis: Vec<Polynomial<BigRational>>,
    /// Same basis in primitive integer form with positive leading coefficients.
    pub basis_z: Vec<Polynomial<BigInt>>,
    pub report: CheckReport,
    pub stats: RunStats,
}

impl GbResult {
    pub fn to_text(&self, vars: &[String], primitive: bool) -> String {
        if primitive {
            print_basis(vars, &self.basis_z)
        } else {
            print_basis(vars, &self.basis)
        }
    }
}

/// Primitive integer generators; zero generators are dropped.
pub fn integer_generators(ideal: &IdealSpec) -> Vec<Polynomial<BigInt>> {
    ideal
        .generators
        .iter()
        .filter(|g| !g.is_zero())
        .map(primitive_part_rational)
        .collect()
}

/// Images of the generators modulo `p`, or `None` if `p` divides a
/// leading coefficient.
pub fn generators_mod(gens: &[Polynomial<BigInt>], field: &PrimeField) -> Option<Vec<Polynomial<u32>>> {
    gens.iter()
        .map(|g| {
            let (gp, changed) = map_mod(g, field);
            (!changed).then_some(gp)
        })
        .collect()
}

/// Reduced Gröbner basis of `gens` modulo `p`, without learning.
pub fn gbasis_mod_prime(gens: &[Polynomial<BigInt>], p: u32) -> Option<Vec<Polynomial<u32>>> {
    let field = PrimeField::new(p as u64).ok()?;
    let images = generators_mod(gens, &field)?;
    gbasis_modp(&images, field, Mode::Plain).ok().map(|o| o.basis)
}

struct BranchInfo {
    trace: Option<Arc<LearningTrace>>,
    /// Lifted from every prime absorbed so far.
    candidate: Option<RationalCandidate>,
}

struct Coordinator<'a> {
    config: &'a RunConfig,
    gens: Vec<Polynomial<BigInt>>,
    branches: Vec<ReconstructionBranch>,
    info: HashMap<Vec<Monomial>, BranchInfo>,
    used: FxHashSet<u32>,
    /// Candidates that failed a check; they are not checked again.
    rejected: FxHashSet<Vec<Polynomial<BigRational>>>,
    stats: RunStats,
}

enum Outcome {
    Continue,
    Done(Box<GbResult>),
}

impl Coordinator<'_> {
    fn log(&self, level: u8, msg: impl FnOnce() -> String) {
        if self.config.verbosity >= level {
            eprintln!("{}", msg());
        }
    }

    /// Next prime from `seq` that is unused and keeps every input lead.
    fn draw(&mut self, seq: &mut PrimeSequence) -> Result<(u32, Vec<Polynomial<u32>>), DriverError> {
        loop {
            if self.used.len() >= self.config.max_primes {
                return Err(DriverError::PrimeSupplyExhausted(self.used.len()));
            }
            let p = seq
                .next()
                .ok_or(DriverError::PrimeSupplyExhausted(self.used.len()))?;
            let p32 = p as u32;
            if self.used.contains(&p32) {
                continue;
            }
            let field = PrimeField::new(p).map_err(|_| DriverError::PrimeSupplyExhausted(self.used.len()))?;
            self.used.insert(p32);
            match generators_mod(&self.gens, &field) {
                Some(images) => return Ok((p32, images)),
                None => self.stats.unlucky_input_primes += 1,
            }
        }
    }

    /// Trace of the branch with the most primes, if it has one.
    fn active_trace(&self) -> Option<Arc<LearningTrace>> {
        let leader = self.branches.iter().max_by_key(|b| b.prime_count())?;
        self.info.get(leader.signature())?.trace.clone()
    }

    fn check_primes(&self) -> impl Iterator<Item = u64> + '_ {
        PrimeClass::Working29
            .primes()
            .filter(|p| !self.used.contains(&(*p as u32)))
    }

    /// Inclusion plus s-polynomial check.
    fn certify(&mut self, candidate: &RationalCandidate) -> Result<CheckReport, DriverError> {
        let mode = self.config.check_mode(candidate.len());
        self.log(1, || format!("checking candidate with {} elements ({mode})", candidate.len()));
        let exhausted = |_: VerifyError| DriverError::PrimeSupplyExhausted(self.used.len());
        let mut report = match mode {
            CheckMode::Probabilistic { epsilon } => {
                let mut primes = self.check_primes();
                let mut report = check_gb_probabilistic(candidate, epsilon, &mut primes).map_err(exhausted)?;
                if report.passed() {
                    if let Err(w) = check_inclusion(&self.gens, candidate, InclusionMode::Modular(&report.primes_used)) {
                        report.result = CheckResult::Rejected(w);
                    }
                }
                report
            }
            CheckMode::DeterministicInteger => match check_inclusion(&self.gens, candidate, InclusionMode::Integer) {
                Err(w) => rejected_report(mode, w),
                Ok(()) => check_gb_deterministic_integer(candidate),
            },
            CheckMode::DeterministicModular => match check_inclusion(&self.gens, candidate, InclusionMode::Rational) {
                Err(w) => rejected_report(mode, w),
                Ok(()) => {
                    let mut primes = self.check_primes();
                    check_gb_deterministic_modular(candidate, &mut primes, ModularCheckOptions::default())
                        .map_err(exhausted)?
                }
            },
        };
        report.mode = mode;
        self.stats.checks.push(report.clone());
        Ok(report)
    }

    /// Handles one modular basis, in prime order.
    fn process(&mut self, p: u32, output: GbOutput) -> Result<Outcome, DriverError> {
        let basis = output.basis;
        let sig: Vec<Monomial> = basis.iter().map(|g| g.monomials()[0]).collect();

        // stabilization: the candidate built without p must map onto this basis
        let ready = self
            .info
            .get(&sig)
            .and_then(|i| i.candidate.as_ref())
            .filter(|c| !self.rejected.contains(&c.basis_q) && stabilized(&c.basis_q, &basis, p))
            .cloned();
        if let Some(candidate) = ready {
            let report = self.certify(&candidate)?;
            if report.passed() {
                return Ok(Outcome::Done(Box::new(GbResult {
                    basis: candidate.basis_q,
                    basis_z: candidate.basis_z,
                    report,
                    stats: std::mem::take(&mut self.stats),
                })));
            }
            self.log(1, || format!("candidate rejected: {:?}", report.result));
            self.rejected.insert(candidate.basis_q);
            if let Some(info) = self.info.get_mut(&sig) {
                // the trace may be what produced the wrong basis
                info.trace = None;
            }
        }

        let absorbed = absorb(&mut self.branches, &basis, p).expect("distinct primes");
        let live: FxHashSet<&[Monomial]> = self.branches.iter().map(|b| b.signature()).collect();
        self.info.retain(|k, _| live.contains(k.as_slice()));
        let branch = match absorbed {
            Absorbed::Discarded => return Ok(Outcome::Continue),
            Absorbed::NewBranch(k) => {
                self.stats.branches_created += 1;
                self.log(1, || format!("prime {p}: new branch ({} elements)", basis.len()));
                k
            }
            Absorbed::Matched(k) => k,
        };
        let candidate = lift_candidate(&self.branches[branch]);
        let info = self.info.entry(sig).or_insert(BranchInfo {
            trace: None,
            candidate: None,
        });
        if info.trace.is_none() {
            info.trace = output.trace.map(Arc::new);
        }
        info.candidate = candidate;
        Ok(Outcome::Continue)
    }
}

fn rejected_report(mode: CheckMode, w: crate::verify::Witness) -> CheckReport {
    CheckReport {
        mode,
        result: CheckResult::Rejected(w),
        primes_used: Vec::new(),
        primes_skipped: 0,
        pairs_checked: 0,
        pairs_skipped: 0,
        identity: Default::default(),
    }
}

fn run_prime(images: &[Polynomial<u32>], p: u32, trace: Option<&LearningTrace>) -> (GbOutput, RunMode) {
    let field = PrimeField::new(p as u64).expect("prime");
    match trace {
        Some(t) => match gbasis_modp(images, field, Mode::Replay(t)) {
            Ok(out) => (out, RunMode::Replay),
            Err(GbError::ReplayMismatch { .. }) => (
                gbasis_modp(images, field, Mode::Record).expect("record run"),
                RunMode::ReplayFallback,
            ),
            Err(e) => panic!("unexpected engine error: {e}"),
        },
        None => (
            gbasis_modp(images, field, Mode::Record).expect("record run"),
            RunMode::Record,
        ),
    }
}

/// Gröbner basis over Q of `ideal` in degrevlex by the modular method.
pub fn modular_gbasis(ideal: &IdealSpec, config: &RunConfig) -> Result<GbResult, DriverError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| DriverError::ThreadPool(e.to_string()))?;
    pool.install(|| run(ideal, config))
}

fn run(ideal: &IdealSpec, config: &RunConfig) -> Result<GbResult, DriverError> {
    let mut co = Coordinator {
        config,
        gens: integer_generators(ideal),
        branches: Vec::new(),
        info: HashMap::new(),
        used: FxHashSet::default(),
        rejected: FxHashSet::default(),
        stats: RunStats::default(),
    };

    // learning prime
    let mut learning = config.learning_class.primes();
    let (p, images) = co.draw(&mut learning)?;
    let (out, mode) = run_prime(&images, p, None);
    co.log(1, || format!("learning prime {p}: {} elements", out.basis.len()));
    co.stats.runs.push(PrimeRun {
        prime: p,
        mode,
        basis_len: out.basis.len(),
        stats: out.stats.clone(),
    });
    if let Outcome::Done(r) = co.process(p, out)? {
        return Ok(*r);
    }

    let mut working = config.prime_class.primes();
    loop {
        let trace = co.active_trace();
        let mut batch = Vec::with_capacity(config.workers);
        for _ in 0..config.workers {
            batch.push(co.draw(&mut working)?);
        }
        let results: Vec<(GbOutput, RunMode)> = batch
            .par_iter()
            .map(|(p, images)| run_prime(images, *p, trace.as_deref()))
            .collect();
        for ((p, _), (out, mode)) in batch.iter().zip(results) {
            co.log(2, || format!("prime {p}: {:?}, {} elements", mode, out.basis.len()));
            co.stats.runs.push(PrimeRun {
                prime: *p,
                mode,
                basis_len: out.basis.len(),
                stats: out.stats.clone(),
            });
            if let Outcome::Done(r) = co.process(*p, out)? {
                return Ok(*r);
            }
        }
    }
}

/// Checks a given basis against an ideal, as the `check` command does.
pub fn check_basis(
    ideal: &IdealSpec,
    basis: &[Polynomial<BigRational>],
    mode: CheckMode,
) -> Result<CheckReport, DriverError> {
    let gens = integer_generators(ideal);
    let basis_q: Vec<Polynomial<BigRational>> = basis
        .iter()
        .filter(|g| !g.is_zero())
        .map(|g| g.make_monic())
        .collect();
    let candidate = RationalCandidate::from_rational(basis_q, BigInt::from(0));
    let exhausted = |_| DriverError::PrimeSupplyExhausted(0);
    let mut primes = PrimeClass::Working29.primes();
    let report = match mode {
        CheckMode::Probabilistic { epsilon } => {
            let mut r = check_gb_probabilistic(&candidate, epsilon, &mut primes).map_err(exhausted)?;
            if r.passed() {
                if let Err(w) = check_inclusion(&gens, &candidate, InclusionMode::Modular(&r.primes_used)) {
                    r.result = CheckResult::Rejected(w);
                }
            }
            r
        }
        CheckMode::DeterministicInteger => match check_inclusion(&gens, &candidate, InclusionMode::Integer) {
            Err(w) => rejected_report(mode, w),
            Ok(()) => check_gb_deterministic_integer(&candidate),
        },
        CheckMode::DeterministicModular => match check_inclusion(&gens, &candidate, InclusionMode::Rational) {
            Err(w) => rejected_report(mode, w),
            Ok(()) => check_gb_deterministic_modular(&candidate, &mut primes, ModularCheckOptions::default())
                .map_err(exhausted)?,
        },
    };
    Ok(report)
}
