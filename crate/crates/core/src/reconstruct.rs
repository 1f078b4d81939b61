//! Chinese remaindering and rational (Farey) reconstruction, for scalars
//! and for whole bases.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::arith::PrimeField;
use crate::monomial::Monomial;
use crate::poly::{map_mod_rational, primitive_part_rational, Polynomial};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReconstructError {
    #[error("moduli are not coprime")]
    NonCoprimeModuli,
}

/// Combines `r1 mod m1` and `r2 mod m2` into a residue modulo `m1 * m2`.
pub fn crt_pair(
    r1: &BigInt,
    m1: &BigInt,
    r2: &BigInt,
    m2: &BigInt,
) -> Result<(BigInt, BigInt), ReconstructError> {
    let e = m1.extended_gcd(m2);
    if !e.gcd.is_one() {
        return Err(ReconstructError::NonCoprimeModuli);
    }
    // e.x * m1 ≡ 1 (mod m2)
    let m = m1 * m2;
    let k = ((r2 - r1) * &e.x).mod_floor(m2);
    Ok(((r1 + m1 * k).mod_floor(&m), m))
}

/// The symmetric reconstruction bound `floor(sqrt((m - 1) / 2))`.
pub fn farey_bound(m: &BigInt) -> BigInt {
    if m <= &BigInt::one() {
        return BigInt::zero();
    }
    ((m - 1u32) / 2u32).sqrt()
}

/// Rational reconstruction of `a mod m` with numerator and denominator
/// both bounded by [`farey_bound`]. `None` means more primes are needed.
pub fn farey(a: &BigInt, m: &BigInt) -> Option<BigRational> {
    farey_within(a, m, &farey_bound(m))
}

fn farey_within(a: &BigInt, m: &BigInt, bound: &BigInt) -> Option<BigRational> {
    let (mut r0, mut r1) = (m.clone(), a.mod_floor(m));
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while &r1 > bound {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        let t2 = &t0 - &q * &t1;
        r0 = std::mem::replace(&mut r1, r2);
        t0 = std::mem::replace(&mut t1, t2);
    }
    let (mut n, mut d) = (r1, t1);
    if d.is_negative() {
        n = -n;
        d = -d;
    }
    if d.is_zero() || &d > bound || !d.gcd(m).is_one() || !n.gcd(&d).is_one() {
        return None;
    }
    Some(BigRational::new_raw(n, d))
}

/// CRT accumulators for a list of polynomials. Supports are merged across
/// primes; a monomial missing at some prime has residue zero there.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CrtPolys {
    supports: Vec<Vec<Monomial>>,
    residues: Vec<Vec<BigInt>>,
    modulus: BigInt,
}

impl CrtPolys {
    pub fn new(len: usize) -> Self {
        CrtPolys {
            supports: vec![Vec::new(); len],
            residues: vec![Vec::new(); len],
            modulus: BigInt::one(),
        }
    }

    pub fn len(&self) -> usize {
        self.supports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.supports.is_empty()
    }

    pub fn modulus(&self) -> &BigInt {
        &self.modulus
    }

    pub fn supports(&self) -> &[Vec<Monomial>] {
        &self.supports
    }

    pub fn residues(&self) -> &[Vec<BigInt>] {
        &self.residues
    }

    /// Folds in one image modulo `p`; `polys` must have [`len`](Self::len) entries.
    pub fn absorb(&mut self, polys: &[Polynomial<u32>], p: u32) -> Result<(), ReconstructError> {
        assert_eq!(polys.len(), self.len(), "polynomial count differs");
        let field = PrimeField::new(p as u64).map_err(|_| ReconstructError::NonCoprimeModuli)?;
        let m_mod_p = field.from_bigint(&self.modulus);
        if m_mod_p == 0 {
            return Err(ReconstructError::NonCoprimeModuli);
        }
        let m_inv = field.inv(m_mod_p).unwrap();
        let big_p = BigInt::from(p);
        let lift = |r: &BigInt, c: u32| -> BigInt {
            // r + M * ((c - r) / M mod p)
            let k = field.mul(field.sub(c, field.from_bigint(r)), m_inv);
            if k == 0 {
                r.clone()
            } else {
                r + &self.modulus * k
            }
        };
        let mut next_supports = Vec::with_capacity(self.len());
        let mut next_residues = Vec::with_capacity(self.len());
        for (k, f) in polys.iter().enumerate() {
            let (old_m, old_r) = (&self.supports[k], &self.residues[k]);
            let new_m = f.monomials();
            let new_c = f.coeffs();
            let mut ms = Vec::with_capacity(old_m.len().max(new_m.len()));
            let mut rs = Vec::with_capacity(ms.capacity());
            let (mut a, mut b) = (0, 0);
            let zero = BigInt::zero();
            while a < old_m.len() || b < new_m.len() {
                let ord = match (old_m.get(a), new_m.get(b)) {
                    (Some(x), Some(y)) => x.cmp(y),
                    (Some(_), None) => std::cmp::Ordering::Greater,
                    _ => std::cmp::Ordering::Less,
                };
                match ord {
                    std::cmp::Ordering::Greater => {
                        ms.push(old_m[a]);
                        rs.push(lift(&old_r[a], 0));
                        a += 1;
                    }
                    std::cmp::Ordering::Less => {
                        ms.push(new_m[b]);
                        rs.push(lift(&zero, new_c[b]));
                        b += 1;
                    }
                    std::cmp::Ordering::Equal => {
                        ms.push(old_m[a]);
                        rs.push(lift(&old_r[a], new_c[b]));
                        a += 1;
                        b += 1;
                    }
                }
            }
            next_supports.push(ms);
            next_residues.push(rs);
        }
        self.supports = next_supports;
        self.residues = next_residues;
        self.modulus *= big_p;
        Ok(())
    }

    /// Farey-lifts every coefficient; zero coefficients are dropped.
    pub fn lift(&self) -> Option<Vec<Polynomial<BigRational>>> {
        self.lift_hinted(&mut None)
    }

    /// As [`lift`](Self::lift), but first retries the coefficient in `hint`
    /// and stores the first failing coefficient there. Across successive
    /// primes this turns most failed lifts into a single reconstruction.
    pub fn lift_hinted(&self, hint: &mut Option<(usize, Monomial)>) -> Option<Vec<Polynomial<BigRational>>> {
        let bound = farey_bound(&self.modulus);
        if let Some((k, m)) = *hint {
            let ms = &self.supports[k];
            if let Ok(pos) = ms.binary_search_by(|x| m.cmp(x)) {
                farey_within(&self.residues[k][pos], &self.modulus, &bound)?;
            }
        }
        let mut out = Vec::with_capacity(self.len());
        for (k, (ms, rs)) in self.supports.iter().zip(&self.residues).enumerate() {
            let mut monos = Vec::with_capacity(ms.len());
            let mut coeffs = Vec::with_capacity(ms.len());
            for (m, r) in ms.iter().zip(rs) {
                let Some(q) = farey_within(r, &self.modulus, &bound) else {
                    *hint = Some((k, *m));
                    return None;
                };
                if !q.is_zero() {
                    monos.push(*m);
                    coeffs.push(q);
                }
            }
            out.push(Polynomial::from_sorted(monos, coeffs));
        }
        Some(out)
    }
}

/// Accumulated images of bases sharing the same leading monomials.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReconstructionBranch {
    signature: Vec<Monomial>,
    crt: CrtPolys,
    primes: Vec<u32>,
}

impl ReconstructionBranch {
    fn start(basis: &[Polynomial<u32>], p: u32) -> Self {
        let mut crt = CrtPolys::new(basis.len());
        crt.absorb(basis, p).expect("fresh modulus");
        ReconstructionBranch {
            signature: leading_monomials(basis),
            crt,
            primes: vec![p],
        }
    }

    pub fn signature(&self) -> &[Monomial] {
        &self.signature
    }

    pub fn modulus(&self) -> &BigInt {
        self.crt.modulus()
    }

    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    pub fn prime_count(&self) -> usize {
        self.primes.len()
    }

    pub fn crt(&self) -> &CrtPolys {
        &self.crt
    }
}

pub fn leading_monomials(basis: &[Polynomial<u32>]) -> Vec<Monomial> {
    basis
        .iter()
        .map(|g| *g.leading_monomial().expect("nonzero basis element"))
        .collect()
}

/// Where [`absorb`] put a new image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Absorbed {
    Matched(usize),
    NewBranch(usize),
    /// Started a branch that was immediately outvoted.
    Discarded,
}

/// Branches trailing the largest one by this many primes are dropped.
pub const BRANCH_GC_LAG: usize = 3;

/// Adds a monic reduced mod-`p` basis to the branch whose leading
/// monomials match, or starts a new branch.
pub fn absorb(
    branches: &mut Vec<ReconstructionBranch>,
    basis: &[Polynomial<u32>],
    p: u32,
) -> Result<Absorbed, ReconstructError> {
    let sig = leading_monomials(basis);
    let (idx, new) = match branches.iter().position(|b| b.signature == sig) {
        Some(k) => {
            let b = &mut branches[k];
            b.crt.absorb(basis, p)?;
            b.primes.push(p);
            (k, false)
        }
        None => {
            branches.push(ReconstructionBranch::start(basis, p));
            (branches.len() - 1, true)
        }
    };
    let most = branches.iter().map(|b| b.prime_count()).max().unwrap_or(0);
    let target = &branches[idx].signature.clone();
    branches.retain(|b| b.prime_count() + BRANCH_GC_LAG > most);
    Ok(match branches.iter().position(|b| &b.signature == target) {
        Some(k) if new => Absorbed::NewBranch(k),
        Some(k) => Absorbed::Matched(k),
        None => Absorbed::Discarded,
    })
}

/// A candidate basis over Q.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalCandidate {
    /// Monic form.
    pub basis_q: Vec<Polynomial<BigRational>>,
    /// Primitive integer form with positive leading coefficients.
    pub basis_z: Vec<Polynomial<BigInt>>,
    pub modulus: BigInt,
}

impl RationalCandidate {
    pub fn from_rational(basis_q: Vec<Polynomial<BigRational>>, modulus: BigInt) -> Self {
        let basis_z = basis_q.iter().map(primitive_part_rational).collect();
        RationalCandidate {
            basis_q,
            basis_z,
            modulus,
        }
    }

    pub fn len(&self) -> usize {
        self.basis_q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis_q.is_empty()
    }
}

/// Farey-lifts every coefficient of the branch.
pub fn lift_candidate(branch: &ReconstructionBranch) -> Option<RationalCandidate> {
    let basis_q = branch.crt.lift()?;
    if basis_q.iter().any(|g| g.is_zero()) {
        return None;
    }
    Some(RationalCandidate::from_rational(
        basis_q,
        branch.modulus().clone(),
    ))
}

/// True when `previous` maps modulo `p` exactly onto `last_basis`.
pub fn stabilized(
    previous: &[Polynomial<BigRational>],
    last_basis: &[Polynomial<u32>],
    p: u32,
) -> bool {
    let Ok(field) = PrimeField::new(p as u64) else {
        return false;
    };
    previous.len() == last_basis.len()
        && previous
            .iter()
            .zip(last_basis)
            .all(|(q, b)| map_mod_rational(q, &field).as_ref() == Some(b))
}
