//! Packed exponent vectors ordered by degree reverse lexicographic order.
//!
//! A [`Monomial`] stores up to [`MAX_VARS`] partial degrees as 16-bit slots
//! together with the total degree in slot 0:
//!
//! ```text
//! slot:    0        1     2     ...   n
//! value:   deg      e_1   e_2   ...   e_n      (unused slots are zero)
//! ```
//!
//! Variable `x_1` (slot 1) is the largest variable, so the reverse
//! lexicographic tie-break looks at slot `n` first.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use thiserror::Error;

/// Maximum number of variables; one of the 16 slots is the total degree.
pub const MAX_VARS: usize = 15;

const SLOTS: usize = MAX_VARS + 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MonomialError {
    #[error("{0} variables requested, at most {MAX_VARS} are supported")]
    TooManyVariables(usize),
    #[error("degree overflow: exponents must fit in 16 bits")]
    DegreeOverflow,
}

#[derive(Clone, Copy)]
pub struct Monomial {
    slots: [u16; SLOTS],
    nvars: u8,
}

impl Monomial {
    /// The unit monomial in `nvars` variables.
    pub fn one(nvars: usize) -> Self {
        assert!(nvars <= MAX_VARS, "nvars out of range");
        Monomial {
            slots: [0; SLOTS],
            nvars: nvars as u8,
        }
    }

    pub fn pack(exponents: &[u32], nvars: usize) -> Result<Self, MonomialError> {
        if nvars > MAX_VARS {
            return Err(MonomialError::TooManyVariables(nvars));
        }
        if exponents.len() > nvars {
            return Err(MonomialError::TooManyVariables(exponents.len()));
        }
        let mut slots = [0u16; SLOTS];
        let mut total: u32 = 0;
        for (k, &e) in exponents.iter().enumerate() {
            slots[k + 1] = u16::try_from(e).map_err(|_| MonomialError::DegreeOverflow)?;
            total += e;
        }
        slots[0] = u16::try_from(total).map_err(|_| MonomialError::DegreeOverflow)?;
        Ok(Monomial {
            slots,
            nvars: nvars as u8,
        })
    }

    /// The monomial `x_var^exp`.
    pub fn var(var: usize, exp: u32, nvars: usize) -> Result<Self, MonomialError> {
        let mut e = vec![0; nvars];
        if var >= nvars {
            return Err(MonomialError::TooManyVariables(var + 1));
        }
        e[var] = exp;
        Self::pack(&e, nvars)
    }

    #[inline]
    pub fn nvars(&self) -> usize {
        self.nvars as usize
    }

    #[inline]
    pub fn degree(&self) -> u32 {
        self.slots[0] as u32
    }

    #[inline]
    pub fn is_one(&self) -> bool {
        self.slots[0] == 0
    }

    /// Partial degree of variable `var` (0-based).
    #[inline]
    pub fn exponent(&self, var: usize) -> u32 {
        self.slots[var + 1] as u32
    }

    pub fn exponents(&self) -> Vec<u32> {
        self.slots[1..=self.nvars()].iter().map(|&e| e as u32).collect()
    }

    /// Raw slot view, slot 0 being the total degree.
    pub fn slots(&self) -> &[u16; SLOTS] {
        &self.slots
    }

    /// Bit `k` is set when variable `k` occurs. Used as a cheap divisibility filter.
    #[inline]
    pub fn support_mask(&self) -> u16 {
        let mut mask = 0u16;
        for k in 0..self.nvars() {
            if self.slots[k + 1] != 0 {
                mask |= 1 << k;
            }
        }
        mask
    }

    #[inline]
    fn word(&self, w: usize) -> u64 {
        let s = &self.slots[4 * w..4 * w + 4];
        s[0] as u64 | (s[1] as u64) << 16 | (s[2] as u64) << 32 | (s[3] as u64) << 48
    }

    #[inline]
    pub fn cmp_degrevlex(&self, other: &Self) -> Ordering {
        debug_assert_eq!(self.nvars, other.nvars);
        match self.slots[0].cmp(&other.slots[0]) {
            Ordering::Equal => {}
            ord => return ord,
        }
        // last nonzero entry of (self - other) negative => self is larger.
        // Within a word the highest slot sits in the top bits, so a numeric
        // comparison finds the last differing slot first.
        for w in (0..SLOTS / 4).rev() {
            let (a, b) = (self.word(w), other.word(w));
            if a != b {
                return b.cmp(&a);
            }
        }
        Ordering::Equal
    }

    pub fn mul(&self, other: &Self) -> Result<Self, MonomialError> {
        debug_assert_eq!(self.nvars, other.nvars);
        let mut slots = [0u16; SLOTS];
        for k in 0..SLOTS {
            slots[k] = self.slots[k]
                .checked_add(other.slots[k])
                .ok_or(MonomialError::DegreeOverflow)?;
        }
        Ok(Monomial {
            slots,
            nvars: self.nvars,
        })
    }

    /// Returns `self / divisor` when `divisor` divides `self` componentwise.
    #[inline]
    pub fn try_divide(&self, divisor: &Self) -> Option<Self> {
        debug_assert_eq!(self.nvars, divisor.nvars);
        let mut slots = [0u16; SLOTS];
        for k in 0..SLOTS {
            slots[k] = self.slots[k].checked_sub(divisor.slots[k])?;
        }
        Some(Monomial {
            slots,
            nvars: self.nvars,
        })
    }

    #[inline]
    pub fn divides(&self, other: &Self) -> bool {
        (1..=self.nvars()).all(|k| self.slots[k] <= other.slots[k])
    }

    pub fn lcm(&self, other: &Self) -> Self {
        debug_assert_eq!(self.nvars, other.nvars);
        let mut slots = [0u16; SLOTS];
        let mut total = 0u32;
        for k in 1..SLOTS {
            slots[k] = self.slots[k].max(other.slots[k]);
            total += slots[k] as u32;
        }
        // max of two valid exponent vectors can still overflow the degree slot
        slots[0] = total.min(u16::MAX as u32) as u16;
        debug_assert!(total <= u16::MAX as u32, "lcm degree overflow");
        Monomial {
            slots,
            nvars: self.nvars,
        }
    }

    /// True when the two monomials share no variable.
    pub fn is_coprime(&self, other: &Self) -> bool {
        (1..=self.nvars()).all(|k| self.slots[k] == 0 || other.slots[k] == 0)
    }
}

impl PartialEq for Monomial {
    #[inline]
    fn eq(&self, other: &Self) -> bool {
        self.slots == other.slots
    }
}

impl Eq for Monomial {}

impl Hash for Monomial {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.slots.hash(state);
    }
}

impl Ord for Monomial {
    #[inline]
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_degrevlex(other)
    }
}

impl PartialOrd for Monomial {
    #[inline]
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} |", self.slots[0])?;
        for k in 1..=self.nvars() {
            write!(f, " {}", self.slots[k])?;
        }
        write!(f, "]")
    }
}

impl Monomial {
    /// Renders the monomial as `x^2*y` using the given variable names; the
    /// unit monomial renders as the empty string.
    pub fn display_with<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        DisplayMonomial { m: self, names }
    }
}

struct DisplayMonomial<'a> {
    m: &'a Monomial,
    names: &'a [String],
}

impl fmt::Display for DisplayMonomial<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for k in 0..self.m.nvars() {
            let e = self.m.exponent(k);
            if e == 0 {
                continue;
            }
            if !first {
                f.write_str("*")?;
            }
            first = false;
            f.write_str(&self.names[k])?;
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(e: &[u32]) -> Monomial {
        Monomial::pack(e, e.len()).unwrap()
    }

    /// All exponent vectors in `n` variables with total degree <= `d`.
    fn enumerate(n: usize, d: u32) -> Vec<Monomial> {
        fn rec(n: usize, d: u32, cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
            if cur.len() == n {
                out.push(Monomial::pack(cur, n).unwrap());
                return;
            }
            let used: u32 = cur.iter().sum();
            for e in 0..=(d - used) {
                cur.push(e);
                rec(n, d, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(n, d, &mut Vec::new(), &mut out);
        out
    }

    #[test]
    fn pack_sets_total_degree() {
        let a = m(&[1, 2, 0]);
        assert_eq!(a.slots()[..4], [3, 1, 2, 0]);
        assert!(a.slots()[4..].iter().all(|&s| s == 0));
        let one = m(&[0, 0, 0]);
        assert!(one.is_one());
        assert_eq!(one.degree(), 0);
    }

    #[test]
    fn pack_rejects_bad_input() {
        assert_eq!(
            Monomial::pack(&[0; 16], 16),
            Err(MonomialError::TooManyVariables(16))
        );
        assert_eq!(
            Monomial::pack(&[70000], 1),
            Err(MonomialError::DegreeOverflow)
        );
        assert_eq!(
            Monomial::pack(&[40000, 40000], 2),
            Err(MonomialError::DegreeOverflow)
        );
        assert!(Monomial::pack(&[0; 15], 15).is_ok());
    }

    #[test]
    fn degrevlex_examples() {
        // x > y > z
        let xy = m(&[1, 1, 0]);
        let z2 = m(&[0, 0, 2]);
        assert_eq!(xy.cmp(&z2), Ordering::Greater);
        assert_eq!(xy.cmp(&xy), Ordering::Equal);
        assert_eq!(m(&[3, 0, 0]).cmp(&m(&[2, 0, 0])), Ordering::Greater);

        let chain = [
            m(&[2, 0, 0]),
            m(&[1, 1, 0]),
            m(&[0, 2, 0]),
            m(&[1, 0, 1]),
            m(&[0, 1, 1]),
            m(&[0, 0, 2]),
        ];
        for w in chain.windows(2) {
            assert_eq!(w[0].cmp(&w[1]), Ordering::Greater, "{:?} vs {:?}", w[0], w[1]);
        }
    }

    #[test]
    fn mul_divide_lcm() {
        let x = m(&[1, 0, 0]);
        let y = m(&[0, 1, 0]);
        assert_eq!(x.mul(&y).unwrap(), m(&[1, 1, 0]));
        assert_eq!(x.mul(&Monomial::one(3)).unwrap(), x);
        let big = Monomial::pack(&[60000], 1).unwrap();
        assert_eq!(big.mul(&big), Err(MonomialError::DegreeOverflow));

        assert_eq!(m(&[2, 1, 1]).try_divide(&m(&[1, 1, 0])), Some(m(&[1, 0, 1])));
        assert_eq!(m(&[1, 1, 0]).try_divide(&m(&[2, 0, 0])), None);
        assert_eq!(x.try_divide(&x), Some(Monomial::one(3)));

        assert_eq!(m(&[2, 1, 0]).lcm(&m(&[0, 1, 2])), m(&[2, 1, 2]));
        assert_eq!(x.lcm(&Monomial::one(3)), x);
        assert_eq!(x.lcm(&y), x.mul(&y).unwrap());
        assert!(x.is_coprime(&y));
        assert!(!x.is_coprime(&m(&[1, 1, 0])));
    }

    #[test]
    fn order_axioms_exhaustive() {
        for n in 1..=4 {
            let all = enumerate(n, 6);
            let one = Monomial::one(n);
            for a in &all {
                assert_ne!(a.cmp(&one), Ordering::Less);
                for b in &all {
                    let ab = a.cmp(b);
                    assert_eq!(ab, b.cmp(a).reverse());
                    assert_eq!(ab == Ordering::Equal, a == b);
                }
            }
        }
    }

    #[test]
    fn transitivity_and_compatibility() {
        for n in 1..=4 {
            let all = enumerate(n, 6);
            for a in &all {
                for b in &all {
                    let ab = a.cmp(b);
                    for c in &all {
                        if ab == Ordering::Less && b.cmp(c) == Ordering::Less {
                            assert_eq!(a.cmp(c), Ordering::Less);
                        }
                        let ac = a.mul(c).unwrap();
                        let bc = b.mul(c).unwrap();
                        assert_eq!(ac.cmp(&bc), ab);
                    }
                    assert_eq!(a.mul(b).unwrap().try_divide(b), Some(*a));
                }
            }
        }
    }
}
