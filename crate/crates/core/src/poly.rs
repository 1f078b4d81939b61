//! Sparse distributed polynomials over `Z/pZ`, `Z` and `Q`.
//!
//! A [`Polynomial`] is a list of terms sorted strictly decreasing in
//! degrevlex with no zero coefficients. Arithmetic takes the coefficient
//! domain as an explicit context argument (a [`Ring`] value) so that the
//! modular case does not carry the modulus in every coefficient.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::arith::PrimeField;
use crate::monomial::Monomial;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("s-polynomial of a zero polynomial")]
    ZeroInput,
}

/// A commutative coefficient ring, passed by reference as context.
pub trait Ring {
    type Elem: Clone + PartialEq + fmt::Debug;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
}

/// Rings in which top-reduction can make progress: fields divide, `Z`
/// multiplies the dividend through (fraction-free).
pub trait DivisionDomain: Ring {
    /// Returns `(scale, q)` with `scale * c == q * lc`; `None` means a scale of one.
    fn cancel(&self, c: &Self::Elem, lc: &Self::Elem) -> (Option<Self::Elem>, Self::Elem);

    /// Returns `(a, b)` with `a * lc_f == b * lc_g`, used to cancel the
    /// leading terms of an s-polynomial.
    fn spoly_factors(&self, lc_f: &Self::Elem, lc_g: &Self::Elem) -> (Self::Elem, Self::Elem);
}

impl Ring for PrimeField {
    type Elem = u32;

    fn zero(&self) -> u32 {
        0
    }
    fn one(&self) -> u32 {
        1
    }
    fn is_zero(&self, a: &u32) -> bool {
        *a == 0
    }
    fn add(&self, a: &u32, b: &u32) -> u32 {
        PrimeField::add(self, *a, *b)
    }
    fn sub(&self, a: &u32, b: &u32) -> u32 {
        PrimeField::sub(self, *a, *b)
    }
    fn mul(&self, a: &u32, b: &u32) -> u32 {
        PrimeField::mul(self, *a, *b)
    }
    fn neg(&self, a: &u32) -> u32 {
        PrimeField::neg(self, *a)
    }
}

impl DivisionDomain for PrimeField {
    fn cancel(&self, c: &u32, lc: &u32) -> (Option<u32>, u32) {
        let q = if *lc == 1 {
            *c
        } else {
            self.div(*c, *lc).expect("nonzero leading coefficient")
        };
        (None, q)
    }

    fn spoly_factors(&self, lc_f: &u32, lc_g: &u32) -> (u32, u32) {
        (
            self.inv(*lc_f).expect("nonzero leading coefficient"),
            self.inv(*lc_g).expect("nonzero leading coefficient"),
        )
    }
}

/// The integers with arbitrary precision.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Integers;

impl Ring for Integers {
    type Elem = BigInt;

    fn zero(&self) -> BigInt {
        BigInt::zero()
    }
    fn one(&self) -> BigInt {
        BigInt::one()
    }
    fn is_zero(&self, a: &BigInt) -> bool {
        a.is_zero()
    }
    fn add(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a + b
    }
    fn sub(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a - b
    }
    fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a * b
    }
    fn neg(&self, a: &BigInt) -> BigInt {
        -a
    }
}

impl DivisionDomain for Integers {
    fn cancel(&self, c: &BigInt, lc: &BigInt) -> (Option<BigInt>, BigInt) {
        let (q, r) = c.div_rem(lc);
        if r.is_zero() {
            return (None, q);
        }
        let g = c.gcd(lc);
        let scale = (lc / &g).abs();
        let q = (c * &scale) / lc;
        (Some(scale), q)
    }

    fn spoly_factors(&self, lc_f: &BigInt, lc_g: &BigInt) -> (BigInt, BigInt) {
        let g = lc_f.gcd(lc_g);
        let mut a = lc_g / &g;
        let mut b = lc_f / &g;
        if a.is_negative() {
            a = -a;
            b = -b;
        }
        (a, b)
    }
}

/// The rationals as reduced fractions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Rationals;

impl Ring for Rationals {
    type Elem = BigRational;

    fn zero(&self) -> BigRational {
        BigRational::zero()
    }
    fn one(&self) -> BigRational {
        BigRational::one()
    }
    fn is_zero(&self, a: &BigRational) -> bool {
        a.is_zero()
    }
    fn add(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a + b
    }
    fn sub(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a - b
    }
    fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a * b
    }
    fn neg(&self, a: &BigRational) -> BigRational {
        -a
    }
}

impl DivisionDomain for Rationals {
    fn cancel(&self, c: &BigRational, lc: &BigRational) -> (Option<BigRational>, BigRational) {
        (None, c / lc)
    }

    fn spoly_factors(&self, lc_f: &BigRational, lc_g: &BigRational) -> (BigRational, BigRational) {
        (lc_f.recip(), lc_g.recip())
    }
}

/// Sparse polynomial; monomials and coefficients are stored in parallel.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Polynomial<E> {
    monomials: Vec<Monomial>,
    coeffs: Vec<E>,
}

impl<E: fmt::Debug> fmt::Debug for Polynomial<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.monomials.iter().zip(&self.coeffs))
            .finish()
    }
}

impl<E> Default for Polynomial<E> {
    fn default() -> Self {
        Polynomial {
            monomials: Vec::new(),
            coeffs: Vec::new(),
        }
    }
}

impl<E: Clone> Polynomial<E> {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Builds a polynomial from terms already in canonical form.
    ///
    /// Panics in debug builds if the monomials are not strictly decreasing.
    pub fn from_sorted(monomials: Vec<Monomial>, coeffs: Vec<E>) -> Self {
        assert_eq!(monomials.len(), coeffs.len());
        debug_assert!(monomials.windows(2).all(|w| w[0] > w[1]));
        Polynomial { monomials, coeffs }
    }

    /// Sorts, merges equal monomials and drops zero coefficients.
    pub fn normalize<R: Ring<Elem = E>>(ring: &R, mut raw: Vec<(Monomial, E)>) -> Self {
        raw.sort_by(|a, b| b.0.cmp(&a.0));
        let mut monomials: Vec<Monomial> = Vec::with_capacity(raw.len());
        let mut coeffs: Vec<E> = Vec::with_capacity(raw.len());
        for (m, c) in raw {
            if monomials.last() == Some(&m) {
                let last = coeffs.last_mut().unwrap();
                *last = ring.add(last, &c);
            } else {
                monomials.push(m);
                coeffs.push(c);
            }
        }
        let mut p = Polynomial { monomials, coeffs };
        p.prune(ring);
        p
    }

    fn prune<R: Ring<Elem = E>>(&mut self, ring: &R) {
        if self.coeffs.iter().all(|c| !ring.is_zero(c)) {
            return;
        }
        let (mut ms, mut cs) = (Vec::new(), Vec::new());
        for (m, c) in self.monomials.drain(..).zip(self.coeffs.drain(..)) {
            if !ring.is_zero(&c) {
                ms.push(m);
                cs.push(c);
            }
        }
        self.monomials = ms;
        self.coeffs = cs;
    }

    pub fn constant<R: Ring<Elem = E>>(ring: &R, c: E, nvars: usize) -> Self {
        if ring.is_zero(&c) {
            return Self::zero();
        }
        Polynomial {
            monomials: vec![Monomial::one(nvars)],
            coeffs: vec![c],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn coeffs(&self) -> &[E] {
        &self.coeffs
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &E)> + '_ {
        self.monomials.iter().zip(&self.coeffs)
    }

    pub fn into_parts(self) -> (Vec<Monomial>, Vec<E>) {
        (self.monomials, self.coeffs)
    }

    pub fn leading_monomial(&self) -> Option<&Monomial> {
        self.monomials.first()
    }

    pub fn leading_coeff(&self) -> Option<&E> {
        self.coeffs.first()
    }

    /// Coefficient of `m`, if present.
    pub fn coeff_of(&self, m: &Monomial) -> Option<&E> {
        self.monomials
            .binary_search_by(|probe| m.cmp(probe))
            .ok()
            .map(|k| &self.coeffs[k])
    }

    pub fn map_coeffs<F, T>(&self, f: F) -> Polynomial<T>
    where
        F: FnMut(&E) -> T,
    {
        Polynomial {
            monomials: self.monomials.clone(),
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }

    /// `c * m * self`; panics on degree overflow.
    pub fn mul_term<R: Ring<Elem = E>>(&self, ring: &R, m: &Monomial, c: &E) -> Self {
        if ring.is_zero(c) {
            return Self::zero();
        }
        let monomials = self
            .monomials
            .iter()
            .map(|t| t.mul(m).expect("degree overflow in polynomial product"))
            .collect();
        let coeffs = self.coeffs.iter().map(|a| ring.mul(a, c)).collect();
        let mut p = Polynomial { monomials, coeffs };
        // a product can vanish in rings with zero divisors only; cheap in the normal case
        p.prune(ring);
        p
    }

    pub fn scale<R: Ring<Elem = E>>(&self, ring: &R, c: &E) -> Self {
        self.mul_term(ring, &Monomial::one(self.nvars_hint()), c)
    }

    fn nvars_hint(&self) -> usize {
        self.monomials.first().map_or(0, |m| m.nvars())
    }

    pub fn neg<R: Ring<Elem = E>>(&self, ring: &R) -> Self {
        self.map_coeffs(|c| ring.neg(c))
    }

    /// `self + sign * other` by merging the two sorted term lists.
    fn merge<R: Ring<Elem = E>>(&self, ring: &R, other: &Self, subtract: bool) -> Self {
        let (mut i, mut j) = (0, 0);
        let mut monomials = Vec::with_capacity(self.len() + other.len());
        let mut coeffs = Vec::with_capacity(self.len() + other.len());
        while i < self.len() || j < other.len() {
            let ord = if i == self.len() {
                Ordering::Less
            } else if j == other.len() {
                Ordering::Greater
            } else {
                self.monomials[i].cmp(&other.monomials[j])
            };
            match ord {
                Ordering::Greater => {
                    monomials.push(self.monomials[i]);
                    coeffs.push(self.coeffs[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    monomials.push(other.monomials[j]);
                    coeffs.push(if subtract {
                        ring.neg(&other.coeffs[j])
                    } else {
                        other.coeffs[j].clone()
                    });
                    j += 1;
                }
                Ordering::Equal => {
                    let c = if subtract {
                        ring.sub(&self.coeffs[i], &other.coeffs[j])
                    } else {
                        ring.add(&self.coeffs[i], &other.coeffs[j])
                    };
                    if !ring.is_zero(&c) {
                        monomials.push(self.monomials[i]);
                        coeffs.push(c);
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        Polynomial { monomials, coeffs }
    }

    pub fn add<R: Ring<Elem = E>>(&self, ring: &R, other: &Self) -> Self {
        self.merge(ring, other, false)
    }

    pub fn sub<R: Ring<Elem = E>>(&self, ring: &R, other: &Self) -> Self {
        self.merge(ring, other, true)
    }

    /// Full product, accumulating one shifted copy of `self` per term of `other`.
    pub fn mul<R: Ring<Elem = E>>(&self, ring: &R, other: &Self) -> Self {
        let mut raw = Vec::with_capacity(self.len() * other.len());
        for (m, c) in other.terms() {
            for (t, a) in self.terms() {
                raw.push((t.mul(m).expect("degree overflow"), ring.mul(a, c)));
            }
        }
        Self::normalize(ring, raw)
    }
}

impl Polynomial<u32> {
    /// Divides through by the leading coefficient.
    pub fn make_monic(&self, field: &PrimeField) -> Self {
        match self.leading_coeff() {
            None | Some(1) => self.clone(),
            Some(&lc) => {
                let inv = field.inv(lc).expect("nonzero leading coefficient");
                self.map_coeffs(|&c| field.mul(c, inv))
            }
        }
    }
}

impl Polynomial<BigRational> {
    pub fn make_monic(&self) -> Self {
        match self.leading_coeff() {
            None => self.clone(),
            Some(lc) if lc.is_one() => self.clone(),
            Some(lc) => {
                let inv = lc.recip();
                self.map_coeffs(|c| c * &inv)
            }
        }
    }

    pub fn from_integer(f: &Polynomial<BigInt>) -> Self {
        f.map_coeffs(|c| BigRational::from_integer(c.clone()))
    }
}

/// Classical s-polynomial; over `Z` the fraction-free cross-multiplied form.
pub fn spoly<R: DivisionDomain>(
    ring: &R,
    f: &Polynomial<R::Elem>,
    g: &Polynomial<R::Elem>,
) -> Result<Polynomial<R::Elem>, PolyError> {
    let (lm_f, lm_g) = match (f.leading_monomial(), g.leading_monomial()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(PolyError::ZeroInput),
    };
    let lcm = lm_f.lcm(lm_g);
    let (a, b) = ring.spoly_factors(f.leading_coeff().unwrap(), g.leading_coeff().unwrap());
    let sf = f.mul_term(ring, &lcm.try_divide(lm_f).unwrap(), &a);
    let sg = g.mul_term(ring, &lcm.try_divide(lm_g).unwrap(), &b);
    Ok(sf.sub(ring, &sg))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivisionResult<E> {
    pub quotients: Vec<Polynomial<E>>,
    pub remainder: Polynomial<E>,
    /// `multiplier * f = sum quotients[i] * divisors[i] + remainder`.
    /// Always one over a field.
    pub multiplier: E,
}

#[derive(PartialEq, Eq)]
struct HeapEntry {
    monomial: Monomial,
    source: Source,
}

#[derive(PartialEq, Eq, PartialOrd, Ord, Clone, Copy)]
enum Source {
    /// Term `k` of the dividend.
    Dividend(usize),
    /// Product of quotient term `q` of divisor `d` with divisor term `t`.
    Product { d: usize, q: usize, t: usize },
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.monomial
            .cmp(&other.monomial)
            .then_with(|| self.source.cmp(&other.source))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multi-divisor division driven by a max-heap of pending products.
///
/// Each step takes the largest monomial of `multiplier*f - sum q_i d_i`
/// not yet processed, merging every heap entry with that monomial before
/// doing coefficient arithmetic. The term is cancelled by the first divisor
/// whose leading monomial divides it, otherwise moved to the remainder.
pub fn heap_divide<R: DivisionDomain>(
    ring: &R,
    f: &Polynomial<R::Elem>,
    divisors: &[Polynomial<R::Elem>],
) -> DivisionResult<R::Elem> {
    debug_assert!(divisors.iter().all(|d| !d.is_zero()));
    let leads: Vec<(Monomial, u16)> = divisors
        .iter()
        .map(|d| {
            let m = d.monomials[0];
            (m, m.support_mask())
        })
        .collect();
    let mut q_monos: Vec<Vec<Monomial>> = vec![Vec::new(); divisors.len()];
    let mut q_coeffs: Vec<Vec<R::Elem>> = vec![Vec::new(); divisors.len()];
    let mut rem_monos = Vec::new();
    let mut rem_coeffs: Vec<R::Elem> = Vec::new();
    let mut multiplier = ring.one();
    let mut scaled = false;

    let mut heap = BinaryHeap::new();
    if !f.is_zero() {
        heap.push(HeapEntry {
            monomial: f.monomials[0],
            source: Source::Dividend(0),
        });
    }
    let mut popped: Vec<Source> = Vec::new();

    while let Some(top) = heap.pop() {
        let m = top.monomial;
        popped.clear();
        popped.push(top.source);
        while heap.peek().is_some_and(|e| e.monomial == m) {
            popped.push(heap.pop().unwrap().source);
        }

        let mut c = ring.zero();
        for src in &popped {
            match *src {
                Source::Dividend(k) => {
                    let fk = if scaled {
                        ring.mul(&f.coeffs[k], &multiplier)
                    } else {
                        f.coeffs[k].clone()
                    };
                    c = ring.add(&c, &fk);
                }
                Source::Product { d, q, t } => {
                    let prod = ring.mul(&q_coeffs[d][q], &divisors[d].coeffs[t]);
                    c = ring.sub(&c, &prod);
                }
            }
        }
        for src in &popped {
            match *src {
                Source::Dividend(k) => {
                    if k + 1 < f.len() {
                        heap.push(HeapEntry {
                            monomial: f.monomials[k + 1],
                            source: Source::Dividend(k + 1),
                        });
                    }
                }
                Source::Product { d, q, t } => {
                    if t + 1 < divisors[d].len() {
                        heap.push(HeapEntry {
                            monomial: q_monos[d][q].mul(&divisors[d].monomials[t + 1]).unwrap(),
                            source: Source::Product { d, q, t: t + 1 },
                        });
                    }
                }
            }
        }
        if ring.is_zero(&c) {
            continue;
        }

        let mask = m.support_mask();
        let hit = leads
            .iter()
            .position(|(lm, lmask)| lmask & !mask == 0 && lm.divides(&m));
        match hit {
            Some(d) => {
                let (scale, qc) = ring.cancel(&c, &divisors[d].coeffs[0]);
                if let Some(s) = scale {
                    multiplier = ring.mul(&multiplier, &s);
                    scaled = true;
                    for qs in q_coeffs.iter_mut() {
                        for x in qs.iter_mut() {
                            *x = ring.mul(x, &s);
                        }
                    }
                    for x in rem_coeffs.iter_mut() {
                        *x = ring.mul(x, &s);
                    }
                }
                let qm = m.try_divide(&leads[d].0).unwrap();
                q_monos[d].push(qm);
                q_coeffs[d].push(qc);
                if divisors[d].len() > 1 {
                    heap.push(HeapEntry {
                        monomial: qm.mul(&divisors[d].monomials[1]).unwrap(),
                        source: Source::Product {
                            d,
                            q: q_monos[d].len() - 1,
                            t: 1,
                        },
                    });
                }
            }
            None => {
                rem_monos.push(m);
                rem_coeffs.push(c);
            }
        }
    }

    let quotients = q_monos
        .into_iter()
        .zip(q_coeffs)
        .map(|(monomials, coeffs)| Polynomial { monomials, coeffs })
        .collect();
    DivisionResult {
        quotients,
        remainder: Polynomial {
            monomials: rem_monos,
            coeffs: rem_coeffs,
        },
        multiplier,
    }
}

/// Normal form of `f` modulo `divisors` (the remainder of [`heap_divide`]).
pub fn reduce<R: DivisionDomain>(
    ring: &R,
    f: &Polynomial<R::Elem>,
    divisors: &[Polynomial<R::Elem>],
) -> Polynomial<R::Elem> {
    heap_divide(ring, f, divisors).remainder
}

/// Reduces an integer polynomial modulo `p`.
///
/// The flag is set when the leading coefficient vanishes mod `p`, i.e. the
/// leading monomial changes.
pub fn map_mod(f: &Polynomial<BigInt>, field: &PrimeField) -> (Polynomial<u32>, bool) {
    let mut monomials = Vec::with_capacity(f.len());
    let mut coeffs = Vec::with_capacity(f.len());
    for (m, c) in f.terms() {
        let r = field.from_bigint(c);
        if r != 0 {
            monomials.push(*m);
            coeffs.push(r);
        }
    }
    let changed = !f.is_zero() && monomials.first() != f.monomials.first();
    (Polynomial { monomials, coeffs }, changed)
}

/// Rational polynomial mapped mod `p`; `None` if some denominator vanishes.
pub fn map_mod_rational(f: &Polynomial<BigRational>, field: &PrimeField) -> Option<Polynomial<u32>> {
    let mut monomials = Vec::with_capacity(f.len());
    let mut coeffs = Vec::with_capacity(f.len());
    for (m, c) in f.terms() {
        let den = field.from_bigint(c.denom());
        if den == 0 {
            return None;
        }
        let r = field.mul(field.from_bigint(c.numer()), field.inv(den).ok()?);
        if r != 0 {
            monomials.push(*m);
            coeffs.push(r);
        }
    }
    Some(Polynomial { monomials, coeffs })
}

/// Primitive integer form with positive leading coefficient.
pub fn primitive_part_rational(f: &Polynomial<BigRational>) -> Polynomial<BigInt> {
    let den = f
        .coeffs
        .iter()
        .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let ints = f.map_coeffs(|c| (c * BigRational::from_integer(den.clone())).to_integer());
    primitive_part(&ints)
}

/// Divides by the content and makes the leading coefficient positive.
pub fn primitive_part(f: &Polynomial<BigInt>) -> Polynomial<BigInt> {
    let Some(lc) = f.leading_coeff() else {
        return Polynomial::zero();
    };
    let mut content = f.coeffs.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
    if lc.is_negative() {
        content = -content;
    }
    f.map_coeffs(|c| c / &content)
}
