//! Word-size prime fields, prime generation and delayed-reduction accumulators.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("{0} is not an admissible prime modulus (need a prime 2 < p < 2^31)")]
    BadModulus(u64),
    #[error("zero has no inverse")]
    ZeroInverse,
    #[error("no prime below {0}")]
    NoPrime(u64),
}

/// `Z/pZ` for a prime `2 < p < 2^31`, elements kept canonical in `[0, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeField {
    p: u32,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self, ArithError> {
        if p <= 2 || p >= 1 << 31 || !is_prime(p) {
            return Err(ArithError::BadModulus(p));
        }
        Ok(PrimeField { p: p as u32 })
    }

    #[inline]
    pub fn modulus(&self) -> u32 {
        self.p
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        let s = a + b; // < 2^32 since both < 2^31
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.p as u64) as u32
    }

    pub fn inv(&self, a: u32) -> Result<u32, ArithError> {
        let a = a % self.p;
        if a == 0 {
            return Err(ArithError::ZeroInverse);
        }
        // extended Euclid on (p, a)
        let (mut r0, mut r1) = (self.p as i64, a as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        debug_assert_eq!(r0, 1);
        Ok(t0.rem_euclid(self.p as i64) as u32)
    }

    pub fn div(&self, a: u32, b: u32) -> Result<u32, ArithError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, mut base: u32, mut exp: u64) -> u32 {
        let mut acc = 1u32;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    #[inline]
    pub fn from_i64(&self, a: i64) -> u32 {
        a.rem_euclid(self.p as i64) as u32
    }

    pub fn from_bigint(&self, a: &BigInt) -> u32 {
        a.mod_floor(&BigInt::from(self.p))
            .to_u32()
            .expect("canonical residue fits in u32")
    }

    /// Symmetric representative in `(-p/2, p/2]`.
    pub fn symmetric(&self, a: u32) -> i64 {
        if a > self.p / 2 {
            a as i64 - self.p as i64
        } else {
            a as i64
        }
    }

    pub fn accumulator_width(&self) -> AccumulatorWidth {
        AccumulatorWidth::for_prime(self.p)
    }
}

// ---------------------------------------------------------------------------
// primes

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin; the first twelve prime witnesses are exact for all `u64`.
pub fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &w in &WITNESSES {
        if n % w == 0 {
            return n == w;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Below,
    Above,
}

/// Nearest prime strictly below or above `bound`.
pub fn prime_near(bound: u64, direction: Direction) -> Result<u64, ArithError> {
    match direction {
        Direction::Below => {
            let mut n = bound;
            while n > 2 {
                n -= 1;
                if is_prime(n) {
                    return Ok(n);
                }
            }
            Err(ArithError::NoPrime(bound))
        }
        Direction::Above => {
            let mut n = bound + 1;
            while !is_prime(n) {
                n += 1;
            }
            Ok(n)
        }
    }
}

/// Size classes of the primes used by the modular algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrimeClass {
    /// Primes below 2^31, used for the learning run.
    Learning31,
    /// Primes below 2^29.
    Working29,
    /// Primes below 2^24; these use the signed 63-bit accumulator.
    Compact24,
}

impl PrimeClass {
    pub fn bits(self) -> u32 {
        match self {
            PrimeClass::Learning31 => 31,
            PrimeClass::Working29 => 29,
            PrimeClass::Compact24 => 24,
        }
    }

    pub fn from_bits(bits: u32) -> Option<Self> {
        match bits {
            31 => Some(PrimeClass::Learning31),
            29 => Some(PrimeClass::Working29),
            24 => Some(PrimeClass::Compact24),
            _ => None,
        }
    }

    pub fn top(self) -> u64 {
        1u64 << self.bits()
    }

    pub fn primes(self) -> PrimeSequence {
        PrimeSequence::below(self.top())
    }
}

/// Descending consecutive primes below a starting bound.
#[derive(Debug, Clone)]
pub struct PrimeSequence {
    next_below: u64,
}

impl PrimeSequence {
    pub fn below(bound: u64) -> Self {
        PrimeSequence { next_below: bound }
    }
}

impl Iterator for PrimeSequence {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let p = prime_near(self.next_below, Direction::Below).ok()?;
        self.next_below = p;
        Some(p)
    }
}

// ---------------------------------------------------------------------------
// delayed reduction

/// Width class of a dense accumulator.
///
/// `Wide128` holds unreduced sums of products `< 2^62` in 128-bit cells, so
/// at least 2^64 addends fit before overflow. `Signed63` is for primes below
/// 2^24: products are `< 2^48` and the vector is reduced after every
/// [`SIGNED63_BUDGET`] addends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccumulatorWidth {
    Wide128,
    Signed63,
}

/// Addends accepted by a signed 63-bit accumulator between reductions.
pub const SIGNED63_BUDGET: u32 = 1 << 15;

impl AccumulatorWidth {
    pub fn for_prime(p: u32) -> Self {
        if p < 1 << 24 {
            AccumulatorWidth::Signed63
        } else {
            AccumulatorWidth::Wide128
        }
    }
}

/// A dense vector of residues with lazy reduction.
pub trait DenseAccumulator {
    fn with_len(field: PrimeField, len: usize) -> Self;

    fn len(&self) -> usize;

    /// Overwrites cell `col` with the canonical value `v`.
    fn set(&mut self, col: usize, v: u32);

    /// Reduces cell `col`, stores the canonical value back and returns it.
    fn take(&mut self, col: usize) -> u32;

    /// `self[cols[k]] -= factor * coeffs[k]` for all `k`.
    fn sub_scaled(&mut self, factor: u32, cols: &[u32], coeffs: &[u32]);

    /// Same as [`sub_scaled`](Self::sub_scaled) with the target columns
    /// given as `offset + k`.
    fn sub_scaled_contiguous(&mut self, factor: u32, offset: usize, coeffs: &[u32]);

    /// Zeroes every cell.
    fn clear(&mut self);
}

pub struct Wide128Accumulator {
    cells: Vec<u128>,
    p: u32,
}

impl DenseAccumulator for Wide128Accumulator {
    fn with_len(field: PrimeField, len: usize) -> Self {
        Wide128Accumulator {
            cells: vec![0; len],
            p: field.modulus(),
        }
    }

    fn len(&self) -> usize {
        self.cells.len()
    }

    #[inline]
    fn set(&mut self, col: usize, v: u32) {
        self.cells[col] = v as u128;
    }

    #[inline]
    fn take(&mut self, col: usize) -> u32 {
        let c = self.cells[col];
        if c == 0 {
            return 0;
        }
        let r = if c >> 64 == 0 {
            (c as u64 % self.p as u64) as u32
        } else {
            (c % self.p as u128) as u32
        };
        self.cells[col] = r as u128;
        r
    }

    #[inline]
    fn sub_scaled(&mut self, factor: u32, cols: &[u32], coeffs: &[u32]) {
        // adding (p - factor) * c keeps the cells non-negative
        let m = (self.p - factor) as u64;
        for (&col, &c) in cols.iter().zip(coeffs) {
            self.cells[col as usize] += (m * c as u64) as u128;
        }
    }

    #[inline]
    fn sub_scaled_contiguous(&mut self, factor: u32, offset: usize, coeffs: &[u32]) {
        let m = (self.p - factor) as u64;
        for (cell, &c) in self.cells[offset..offset + coeffs.len()].iter_mut().zip(coeffs) {
            *cell += (m * c as u64) as u128;
        }
    }

    fn clear(&mut self) {
        self.cells.iter_mut().for_each(|c| *c = 0);
    }
}

pub struct Signed63Accumulator {
    cells: Vec<i64>,
    p: u32,
    pending: u32,
}

impl Signed63Accumulator {
    fn reduce_all(&mut self) {
        let p = self.p as i64;
        for c in &mut self.cells {
            *c = c.rem_euclid(p);
        }
        self.pending = 0;
    }

    #[inline]
    fn count_addend(&mut self) {
        self.pending += 1;
        if self.pending >= SIGNED63_BUDGET {
            self.reduce_all();
        }
    }

    /// Addends applied since the last full reduction.
    pub fn pending(&self) -> u32 {
        self.pending
    }
}

impl DenseAccumulator for Signed63Accumulator {
    fn with_len(field: PrimeField, len: usize) -> Self {
        assert!(
            field.modulus() < 1 << 24,
            "signed 63-bit accumulator needs a prime below 2^24"
        );
        Signed63Accumulator {
            cells: vec![0; len],
            p: field.modulus(),
            pending: 0,
        }
    }

    fn len(&self) -> usize {
        self.cells.len()
    }

    #[inline]
    fn set(&mut self, col: usize, v: u32) {
        self.cells[col] = v as i64;
    }

    #[inline]
    fn take(&mut self, col: usize) -> u32 {
        let r = self.cells[col].rem_euclid(self.p as i64);
        self.cells[col] = r;
        r as u32
    }

    #[inline]
    fn sub_scaled(&mut self, factor: u32, cols: &[u32], coeffs: &[u32]) {
        let f = factor as i64;
        for (&col, &c) in cols.iter().zip(coeffs) {
            self.cells[col as usize] -= f * c as i64;
        }
        self.count_addend();
    }

    #[inline]
    fn sub_scaled_contiguous(&mut self, factor: u32, offset: usize, coeffs: &[u32]) {
        let f = factor as i64;
        for (cell, &c) in self.cells[offset..offset + coeffs.len()].iter_mut().zip(coeffs) {
            *cell -= f * c as i64;
        }
        self.count_addend();
    }

    fn clear(&mut self) {
        self.cells.iter_mut().for_each(|c| *c = 0);
        self.pending = 0;
    }
}

/// Dot product `sum u[k]*v[k] mod p`, reducing only when the accumulator
/// contract requires it.
pub fn delayed_dot(field: PrimeField, u: &[u32], v: &[u32]) -> u32 {
    assert_eq!(u.len(), v.len());
    let p = field.modulus();
    match field.accumulator_width() {
        AccumulatorWidth::Wide128 => {
            let s: u128 = u
                .iter()
                .zip(v)
                .map(|(&a, &b)| (a as u64 * b as u64) as u128)
                .sum();
            (s % p as u128) as u32
        }
        AccumulatorWidth::Signed63 => {
            let mut acc: i64 = 0;
            for (chunk_u, chunk_v) in u
                .chunks(SIGNED63_BUDGET as usize)
                .zip(v.chunks(SIGNED63_BUDGET as usize))
            {
                for (&a, &b) in chunk_u.iter().zip(chunk_v) {
                    acc += a as i64 * b as i64;
                }
                acc = acc.rem_euclid(p as i64);
            }
            acc as u32
        }
    }
}
