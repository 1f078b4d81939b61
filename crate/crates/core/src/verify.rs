//! Checks that a reconstructed candidate is the Gröbner basis of the input
//! ideal: every generator must reduce to zero by the candidate, and so must
//! every s-polynomial of the candidate.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed};
use rayon::prelude::*;
use thiserror::Error;

use crate::arith::PrimeField;
use crate::monomial::Monomial;
use crate::poly::{self, heap_divide, map_mod, spoly, Integers, Polynomial, Rationals};
use crate::reconstruct::{stabilized, CrtPolys, RationalCandidate};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("ran out of check primes")]
    PrimeSupplyExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CheckMode {
    /// s-polynomials reduce to zero modulo primes whose product exceeds `1/epsilon`.
    Probabilistic { epsilon: f64 },
    /// Fraction-free reduction over `Z`.
    DeterministicInteger,
    /// Quotients reconstructed from modular reductions.
    DeterministicModular,
}

impl fmt::Display for CheckMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckMode::Probabilistic { epsilon } => write!(f, "probabilistic (epsilon {epsilon:e})"),
            CheckMode::DeterministicInteger => f.write_str("deterministic integer"),
            CheckMode::DeterministicModular => f.write_str("deterministic modular"),
        }
    }
}

/// What failed to reduce to zero, and modulo which prime if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Witness {
    Generator { index: usize, prime: Option<u32> },
    Pair { i: usize, j: usize, prime: Option<u32> },
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (what, prime) = match self {
            Witness::Generator { index, prime } => (format!("generator {index}"), prime),
            Witness::Pair { i, j, prime } => (format!("s-polynomial of ({i}, {j})"), prime),
        };
        match prime {
            Some(p) => write!(f, "{what} does not reduce to zero mod {p}"),
            None => write!(f, "{what} does not reduce to zero"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CheckResult {
    Certified,
    /// The probability of accepting a wrong basis is at most `bound`.
    ProbablyCorrect { bound: f64 },
    Rejected(Witness),
}

/// How the deterministic modular check settled each pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IdentityStats {
    /// Settled by the coefficient bound.
    pub shortcut: usize,
    /// Settled by expanding the identity over `Z`.
    pub expanded: usize,
    /// s-polynomial was zero to begin with.
    pub trivial: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub mode: CheckMode,
    pub result: CheckResult,
    pub primes_used: Vec<u32>,
    /// Primes passed over because they divide a leading coefficient.
    pub primes_skipped: usize,
    pub pairs_checked: usize,
    /// Pairs with coprime leading monomials.
    pub pairs_skipped: usize,
    pub identity: IdentityStats,
}

impl CheckReport {
    fn new(mode: CheckMode) -> Self {
        CheckReport {
            mode,
            result: CheckResult::Certified,
            primes_used: Vec::new(),
            primes_skipped: 0,
            pairs_checked: 0,
            pairs_skipped: 0,
            identity: IdentityStats::default(),
        }
    }

    pub fn passed(&self) -> bool {
        !matches!(self.result, CheckResult::Rejected(_))
    }
}

/// Pairs `(i, j)`, `i < j`, whose leading monomials are not coprime, and
/// the number of coprime pairs left out.
pub fn critical_pairs<E: Clone>(basis: &[Polynomial<E>]) -> (Vec<(usize, usize)>, usize) {
    let mut pairs = Vec::new();
    let mut skipped = 0;
    for j in 0..basis.len() {
        for i in 0..j {
            let (a, b) = (basis[i].leading_monomial(), basis[j].leading_monomial());
            match (a, b) {
                (Some(a), Some(b)) if !a.is_coprime(b) => pairs.push((i, j)),
                _ => skipped += 1,
            }
        }
    }
    (pairs, skipped)
}

/// The arithmetic used by [`check_inclusion`].
#[derive(Debug, Clone, Copy)]
pub enum InclusionMode<'a> {
    /// Division by the monic basis over `Q`.
    Rational,
    /// Fraction-free division by the primitive basis over `Z`.
    Integer,
    /// Division modulo each listed prime.
    Modular(&'a [u32]),
}

/// Every generator reduces to zero modulo the candidate.
pub fn check_inclusion(
    generators: &[Polynomial<BigInt>],
    candidate: &RationalCandidate,
    mode: InclusionMode<'_>,
) -> Result<(), Witness> {
    let failed = match mode {
        InclusionMode::Rational => generators.par_iter().enumerate().find_map_first(|(k, f)| {
            let fq = Polynomial::from_integer(f);
            (!poly::reduce(&Rationals, &fq, &candidate.basis_q).is_zero()).then_some(
                Witness::Generator {
                    index: k,
                    prime: None,
                },
            )
        }),
        InclusionMode::Integer => generators.par_iter().enumerate().find_map_first(|(k, f)| {
            (!poly::reduce(&Integers, f, &candidate.basis_z).is_zero()).then_some(
                Witness::Generator {
                    index: k,
                    prime: None,
                },
            )
        }),
        InclusionMode::Modular(primes) => primes.iter().find_map(|&p| {
            let field = PrimeField::new(p as u64).expect("check prime");
            let basis: Vec<Polynomial<u32>> =
                candidate.basis_z.iter().map(|g| map_mod(g, &field).0).collect();
            generators.par_iter().enumerate().find_map_first(|(k, f)| {
                let fp = map_mod(f, &field).0;
                (!poly::reduce(&field, &fp, &basis).is_zero()).then_some(Witness::Generator {
                    index: k,
                    prime: Some(p),
                })
            })
        }),
    };
    match failed {
        Some(w) => Err(w),
        None => Ok(()),
    }
}

/// Maps the primitive basis modulo `p`, or `None` when `p` divides one of
/// its leading coefficients.
fn basis_mod(candidate: &RationalCandidate, field: &PrimeField) -> Option<Vec<Polynomial<u32>>> {
    candidate
        .basis_z
        .iter()
        .map(|g| {
            let (gp, lead_changed) = map_mod(g, field);
            (!lead_changed).then_some(gp)
        })
        .collect()
}

/// Draws the next prime not dividing any leading coefficient.
fn next_good_prime(
    candidate: &RationalCandidate,
    primes: &mut dyn Iterator<Item = u64>,
    report: &mut CheckReport,
) -> Result<(PrimeField, Vec<Polynomial<u32>>), VerifyError> {
    loop {
        let p = primes.next().ok_or(VerifyError::PrimeSupplyExhausted)?;
        let field = PrimeField::new(p).map_err(|_| VerifyError::PrimeSupplyExhausted)?;
        match basis_mod(candidate, &field) {
            Some(b) => {
                report.primes_used.push(field.modulus());
                return Ok((field, b));
            }
            None => report.primes_skipped += 1,
        }
    }
}

/// Checks the s-polynomials modulo enough primes that the inverse of their
/// product is at most `epsilon`.
pub fn check_gb_probabilistic(
    candidate: &RationalCandidate,
    epsilon: f64,
    primes: &mut dyn Iterator<Item = u64>,
) -> Result<CheckReport, VerifyError> {
    assert!(epsilon > 0.0, "epsilon must be positive");
    let mut report = CheckReport::new(CheckMode::Probabilistic { epsilon });
    let (pairs, skipped) = critical_pairs(&candidate.basis_z);
    report.pairs_checked = pairs.len();
    report.pairs_skipped = skipped;
    let target = -epsilon.ln();
    let mut log_product = 0.0f64;
    while log_product < target {
        let (field, basis) = next_good_prime(candidate, primes, &mut report)?;
        let p = field.modulus();
        let failed = pairs.par_iter().find_map_first(|&(i, j)| {
            let s = spoly(&field, &basis[i], &basis[j]).unwrap();
            (!poly::reduce(&field, &s, &basis).is_zero()).then_some(Witness::Pair {
                i,
                j,
                prime: Some(p),
            })
        });
        if let Some(w) = failed {
            report.result = CheckResult::Rejected(w);
            return Ok(report);
        }
        log_product += (p as f64).ln();
    }
    report.result = CheckResult::ProbablyCorrect {
        bound: (-log_product).exp(),
    };
    Ok(report)
}

/// Fraction-free reduction of every s-polynomial over `Z`.
pub fn check_gb_deterministic_integer(candidate: &RationalCandidate) -> CheckReport {
    let mut report = CheckReport::new(CheckMode::DeterministicInteger);
    let basis = &candidate.basis_z;
    let (pairs, skipped) = critical_pairs(basis);
    report.pairs_checked = pairs.len();
    report.pairs_skipped = skipped;
    let failed = pairs.par_iter().find_map_first(|&(i, j)| {
        let s = spoly(&Integers, &basis[i], &basis[j]).unwrap();
        (!poly::reduce(&Integers, &s, basis).is_zero()).then_some(Witness::Pair {
            i,
            j,
            prime: None,
        })
    });
    if let Some(w) = failed {
        report.result = CheckResult::Rejected(w);
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModularCheckOptions {
    /// Primes drawn after a pair's quotients stabilize while waiting for the
    /// coefficient bound; after that the identity is expanded over `Z`.
    pub extra_primes: usize,
    /// Total prime budget.
    pub max_primes: usize,
}

impl Default for ModularCheckOptions {
    fn default() -> Self {
        ModularCheckOptions {
            extra_primes: 4,
            max_primes: 4096,
        }
    }
}

enum PairStatus {
    Pending,
    Shortcut,
    Expanded,
    Trivial,
    Rejected(Witness),
}

struct PairState {
    i: usize,
    j: usize,
    s: Polynomial<BigInt>,
    crt: CrtPolys,
    candidate: Option<Vec<Polynomial<BigRational>>>,
    /// Primes that confirmed the current candidate.
    confirmations: usize,
    /// Product of the primes modulo which the candidate satisfies the identity.
    agreed: BigInt,
    /// Coefficient that failed the last reconstruction attempt.
    hint: Option<(usize, Monomial)>,
    /// Coefficient bound of the identity for the current candidate.
    bound: Option<BigInt>,
    status: PairStatus,
}

/// Clears denominators of the quotients: returns `(D, D * q_k)`.
fn clear_denominators(q: &[Polynomial<BigRational>]) -> (BigInt, Vec<Polynomial<BigInt>>) {
    let d = q
        .iter()
        .flat_map(|f| f.coeffs())
        .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let scaled = q
        .iter()
        .map(|f| f.map_coeffs(|c| (c * BigRational::from_integer(d.clone())).to_integer()))
        .collect();
    (d, scaled)
}

fn max_abs(f: &Polynomial<BigInt>) -> BigInt {
    f.coeffs().iter().map(|c| c.abs()).max().unwrap_or_default()
}

fn one_norm(f: &Polynomial<BigInt>) -> BigInt {
    f.coeffs().iter().map(|c| c.abs()).sum()
}

/// Bound on every coefficient of `D*s - sum H_k g_k`.
fn identity_bound(s: &Polynomial<BigInt>, q: &[Polynomial<BigRational>], basis: &[Polynomial<BigInt>]) -> BigInt {
    let (d, h) = clear_denominators(q);
    let mut bound = d * max_abs(s);
    for (hk, gk) in h.iter().zip(basis) {
        if !hk.is_zero() {
            bound += one_norm(hk) * max_abs(gk);
        }
    }
    bound
}

/// `s == sum q_k g_k`, checked by exact expansion over `Z`.
fn identity_holds(s: &Polynomial<BigInt>, q: &[Polynomial<BigRational>], basis: &[Polynomial<BigInt>]) -> bool {
    let (d, h) = clear_denominators(q);
    let mut acc = s.scale(&Integers, &d);
    for (hk, gk) in h.iter().zip(basis) {
        if !hk.is_zero() {
            acc = acc.sub(&Integers, &hk.mul(&Integers, gk));
        }
    }
    acc.is_zero()
}

impl PairState {
    fn step(
        &mut self,
        field: &PrimeField,
        basis_p: &[Polynomial<u32>],
        basis: &[Polynomial<BigInt>],
        options: &ModularCheckOptions,
    ) {
        let p = field.modulus();
        let sp = map_mod(&self.s, field).0;
        let dr = heap_divide(field, &sp, basis_p);
        if !dr.remainder.is_zero() {
            self.status = PairStatus::Rejected(Witness::Pair {
                i: self.i,
                j: self.j,
                prime: Some(p),
            });
            return;
        }
        let confirmed = self
            .candidate
            .as_ref()
            .is_some_and(|c| stabilized(c, &dr.quotients, p));
        if confirmed {
            self.confirmations += 1;
            self.agreed *= p;
        } else {
            self.crt.absorb(&dr.quotients, p).expect("distinct primes");
            self.candidate = self.crt.lift_hinted(&mut self.hint);
            self.agreed = self.crt.modulus().clone();
            self.confirmations = 0;
            self.bound = None;
            return;
        }
        let q = self.candidate.as_ref().unwrap();
        let bound = self
            .bound
            .get_or_insert_with(|| identity_bound(&self.s, q, basis));
        if self.agreed > &*bound * 2u32 {
            self.status = PairStatus::Shortcut;
        } else if self.confirmations > options.extra_primes {
            self.status = if identity_holds(&self.s, q, basis) {
                PairStatus::Expanded
            } else {
                PairStatus::Rejected(Witness::Pair {
                    i: self.i,
                    j: self.j,
                    prime: None,
                })
            };
        }
    }
}

/// Reduces every s-polynomial modulo successive primes, reconstructs the
/// quotients over `Q` and certifies the identity `s = sum q_k g_k`.
pub fn check_gb_deterministic_modular(
    candidate: &RationalCandidate,
    primes: &mut dyn Iterator<Item = u64>,
    options: ModularCheckOptions,
) -> Result<CheckReport, VerifyError> {
    let mut report = CheckReport::new(CheckMode::DeterministicModular);
    let basis = &candidate.basis_z;
    let (pairs, skipped) = critical_pairs(basis);
    report.pairs_checked = pairs.len();
    report.pairs_skipped = skipped;

    let mut states: Vec<PairState> = pairs
        .iter()
        .map(|&(i, j)| {
            let s = spoly(&Integers, &basis[i], &basis[j]).unwrap();
            let status = if s.is_zero() {
                PairStatus::Trivial
            } else {
                PairStatus::Pending
            };
            PairState {
                i,
                j,
                s,
                crt: CrtPolys::new(basis.len()),
                candidate: None,
                confirmations: 0,
                agreed: BigInt::one(),
                hint: None,
                bound: None,
                status,
            }
        })
        .collect();

    while states.iter().any(|s| matches!(s.status, PairStatus::Pending)) {
        if report.primes_used.len() >= options.max_primes {
            return Err(VerifyError::PrimeSupplyExhausted);
        }
        let (field, basis_p) = next_good_prime(candidate, primes, &mut report)?;
        states
            .par_iter_mut()
            .filter(|s| matches!(s.status, PairStatus::Pending))
            .for_each(|s| s.step(&field, &basis_p, basis, &options));
        if let Some(w) = states.iter().find_map(|s| match s.status {
            PairStatus::Rejected(w) => Some(w),
            _ => None,
        }) {
            report.result = CheckResult::Rejected(w);
            return Ok(report);
        }
    }
    for s in &states {
        match s.status {
            PairStatus::Shortcut => report.identity.shortcut += 1,
            PairStatus::Expanded => report.identity.expanded += 1,
            PairStatus::Trivial => report.identity.trivial += 1,
            _ => {}
        }
    }
    Ok(report)
}

/// Runs the s-polynomial check selected by `mode`.
pub fn check_gb(
    candidate: &RationalCandidate,
    mode: CheckMode,
    primes: &mut dyn Iterator<Item = u64>,
) -> Result<CheckReport, VerifyError> {
    match mode {
        CheckMode::Probabilistic { epsilon } => check_gb_probabilistic(candidate, epsilon, primes),
        CheckMode::DeterministicInteger => Ok(check_gb_deterministic_integer(candidate)),
        CheckMode::DeterministicModular => {
            check_gb_deterministic_modular(candidate, primes, ModularCheckOptions::default())
        }
    }
}

/// The modular quotients of one s-polynomial reconstructed for testing;
/// `None` when the pair is coprime or does not stabilize within `max_primes`.
pub fn reconstructed_quotients(
    candidate: &RationalCandidate,
    i: usize,
    j: usize,
    primes: &mut dyn Iterator<Item = u64>,
    max_primes: usize,
) -> Option<Vec<Polynomial<BigRational>>> {
    let basis = &candidate.basis_z;
    let mut state = PairState {
        i,
        j,
        s: spoly(&Integers, &basis[i], &basis[j]).ok()?,
        crt: CrtPolys::new(basis.len()),
        candidate: None,
        confirmations: 0,
        agreed: BigInt::one(),
        hint: None,
        bound: None,
        status: PairStatus::Pending,
    };
    let options = ModularCheckOptions {
        extra_primes: usize::MAX,
        max_primes,
    };
    let mut scratch = CheckReport::new(CheckMode::DeterministicModular);
    for _ in 0..max_primes {
        let (field, basis_p) = next_good_prime(candidate, primes, &mut scratch).ok()?;
        state.step(&field, &basis_p, basis, &options);
        match state.status {
            PairStatus::Shortcut => return state.candidate,
            PairStatus::Rejected(_) => return None,
            _ => {}
        }
    }
    None
}
