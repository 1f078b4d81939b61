//! Reference implementation used as a test oracle: textbook Buchberger with
//! full inter-reduction over an ordered map of exponent vectors. Shares no
//! code with the library beyond conversion helpers.

#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use modgb::monomial::Monomial;
use modgb::poly::Polynomial;

/// Exponent vector ordered by degree, then reverse lexicographically.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Exps(pub Vec<u32>);

impl Ord for Exps {
    fn cmp(&self, other: &Self) -> Ordering {
        let da: u32 = self.0.iter().sum();
        let db: u32 = other.0.iter().sum();
        if da != db {
            return da.cmp(&db);
        }
        for (a, b) in self.0.iter().zip(&other.0).rev() {
            if a != b {
                // smaller trailing exponent is the larger monomial
                return b.cmp(a);
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for Exps {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Exps {
    fn divides(&self, other: &Exps) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
    fn div(&self, other: &Exps) -> Exps {
        Exps(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }
    fn mul(&self, other: &Exps) -> Exps {
        Exps(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
    fn lcm(&self, other: &Exps) -> Exps {
        Exps(self.0.iter().zip(&other.0).map(|(a, b)| *a.max(b)).collect())
    }
    fn coprime(&self, other: &Exps) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| *a == 0 || *b == 0)
    }
}

pub trait Field {
    type E: Clone + PartialEq + Debug;
    fn zero(&self) -> Self::E;
    fn one(&self) -> Self::E;
    fn is_zero(&self, a: &Self::E) -> bool;
    fn sub(&self, a: &Self::E, b: &Self::E) -> Self::E;
    fn mul(&self, a: &Self::E, b: &Self::E) -> Self::E;
    fn inv(&self, a: &Self::E) -> Self::E;
}

pub struct QQ;

impl Field for QQ {
    type E = BigRational;
    fn zero(&self) -> BigRational {
        BigRational::zero()
    }
    fn one(&self) -> BigRational {
        BigRational::one()
    }
    fn is_zero(&self, a: &BigRational) -> bool {
        a.is_zero()
    }
    fn sub(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a - b
    }
    fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a * b
    }
    fn inv(&self, a: &BigRational) -> BigRational {
        a.recip()
    }
}

/// Integers modulo a prime, with plain `u128` arithmetic.
pub struct Zp(pub u64);

impl Field for Zp {
    type E = u64;
    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1
    }
    fn is_zero(&self, a: &u64) -> bool {
        *a == 0
    }
    fn sub(&self, a: &u64, b: &u64) -> u64 {
        (a + self.0 - b) % self.0
    }
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        ((*a as u128 * *b as u128) % self.0 as u128) as u64
    }
    fn inv(&self, a: &u64) -> u64 {
        // Fermat
        let (mut base, mut e, mut acc) = (*a, self.0 - 2, 1u64);
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }
}

pub type Poly<E> = BTreeMap<Exps, E>;

pub fn lead<E>(f: &Poly<E>) -> Option<(&Exps, &E)> {
    f.iter().next_back()
}

/// `f - c * x^m * g`
fn sub_term_mul<'a, F: Field>(
    k: &F,
    f: &mut Poly<F::E>,
    c: &F::E,
    m: &Exps,
    g: impl IntoIterator<Item = (&'a Exps, &'a F::E)>,
) where
    F::E: 'a,
{
    for (e, gc) in g {
        let key = e.mul(m);
        let prod = k.mul(c, gc);
        let cur = f.remove(&key).unwrap_or_else(|| k.zero());
        let next = k.sub(&cur, &prod);
        if !k.is_zero(&next) {
            f.insert(key, next);
        }
    }
}

pub fn monic<F: Field>(k: &F, f: &Poly<F::E>) -> Poly<F::E> {
    let Some((_, lc)) = lead(f) else {
        return Poly::new();
    };
    let inv = k.inv(lc);
    f.iter().map(|(e, c)| (e.clone(), k.mul(c, &inv))).collect()
}

/// Full normal form of `f` with respect to `g`.
pub fn normal_form<F: Field>(k: &F, f: &Poly<F::E>, g: &[Poly<F::E>]) -> Poly<F::E> {
    let mut work = f.clone();
    let mut rem = Poly::new();
    while let Some((e, c)) = work.pop_last() {
        match g.iter().find(|h| lead(h).is_some_and(|(he, _)| he.divides(&e))) {
            Some(h) => {
                let (he, hc) = lead(h).unwrap();
                let factor = k.mul(&c, &k.inv(hc));
                let shift = e.div(he);
                // the leading term cancels exactly
                sub_term_mul(k, &mut work, &factor, &shift, h.iter().rev().skip(1));
            }
            None => {
                rem.insert(e, c);
            }
        }
    }
    rem
}

pub fn spoly<F: Field>(k: &F, f: &Poly<F::E>, g: &Poly<F::E>) -> Poly<F::E> {
    let (fe, fc) = lead(f).unwrap();
    let (ge, gc) = lead(g).unwrap();
    let l = fe.lcm(ge);
    let mut out = Poly::new();
    sub_term_mul(k, &mut out, &k.sub(&k.zero(), &k.inv(fc)), &l.div(fe), f);
    sub_term_mul(k, &mut out, &k.inv(gc), &l.div(ge), g);
    out
}

/// Reduced monic Gröbner basis, leading monomials decreasing.
pub fn buchberger<F: Field>(k: &F, gens: &[Poly<F::E>]) -> Vec<Poly<F::E>> {
    let mut g: Vec<Poly<F::E>> = gens.iter().filter(|f| !f.is_empty()).cloned().collect();
    let mut pairs: Vec<(usize, usize)> = (0..g.len())
        .flat_map(|j| (0..j).map(move |i| (i, j)))
        .collect();
    // normal strategy: smallest lcm first
    while let Some(pos) = (0..pairs.len()).min_by(|&a, &b| {
        let l = |(i, j): (usize, usize)| lead(&g[i]).unwrap().0.lcm(lead(&g[j]).unwrap().0);
        l(pairs[a]).cmp(&l(pairs[b])).then(pairs[a].cmp(&pairs[b]))
    }) {
        let (i, j) = pairs.swap_remove(pos);
        if lead(&g[i]).unwrap().0.coprime(lead(&g[j]).unwrap().0) {
            continue;
        }
        let r = normal_form(k, &spoly(k, &g[i], &g[j]), &g);
        if !r.is_empty() {
            let n = g.len();
            pairs.extend((0..n).map(|i| (i, n)));
            g.push(r);
        }
    }
    interreduce(k, g)
}

pub fn interreduce<F: Field>(k: &F, g: Vec<Poly<F::E>>) -> Vec<Poly<F::E>> {
    let mut minimal: Vec<Poly<F::E>> = Vec::new();
    for (idx, f) in g.iter().enumerate() {
        let fe = lead(f).unwrap().0;
        let redundant = g.iter().enumerate().any(|(other, h)| {
            let he = lead(h).unwrap().0;
            other != idx && he.divides(fe) && (he != fe || other < idx)
        });
        if !redundant {
            minimal.push(monic(k, f));
        }
    }
    let mut out: Vec<Poly<F::E>> = (0..minimal.len())
        .map(|i| {
            let others: Vec<_> = minimal
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, h)| h.clone())
                .collect();
            let f = &minimal[i];
            let (le, lc) = lead(f).unwrap();
            let mut tail = f.clone();
            tail.pop_last();
            let mut r = normal_form(k, &tail, &others);
            r.insert(le.clone(), lc.clone());
            r
        })
        .collect();
    out.sort_by(|a, b| lead(b).unwrap().0.cmp(lead(a).unwrap().0));
    out
}

pub fn from_rational(f: &Polynomial<BigRational>) -> Poly<BigRational> {
    f.terms().map(|(m, c)| (Exps(m.exponents()), c.clone())).collect()
}

pub fn from_modp(f: &Polynomial<u32>) -> Poly<u64> {
    f.terms().map(|(m, c)| (Exps(m.exponents()), *c as u64)).collect()
}

pub fn rational_to_modp(f: &Polynomial<BigRational>, p: u64) -> Poly<u64> {
    let k = Zp(p);
    let modp = |x: &BigInt| -> u64 {
        let r = x % BigInt::from(p);
        let r = if r < BigInt::zero() { r + BigInt::from(p) } else { r };
        u64::try_from(r).unwrap()
    };
    f.terms()
        .map(|(m, c)| {
            let v = k.mul(&modp(c.numer()), &k.inv(&modp(c.denom())));
            (Exps(m.exponents()), v)
        })
        .filter(|(_, v)| *v != 0)
        .collect()
}

pub fn to_polynomial_modp(f: &Poly<u64>, nvars: usize) -> Polynomial<u32> {
    let (ms, cs): (Vec<Monomial>, Vec<u32>) = f
        .iter()
        .rev()
        .map(|(e, c)| (Monomial::pack(&e.0, nvars).unwrap(), *c as u32))
        .unzip();
    Polynomial::from_sorted(ms, cs)
}

/// The oracle's own degree-2 chain in three variables, for cross-checking
/// the comparator itself.
pub fn grevlex_degree2_chain() -> Vec<Exps> {
    vec![
        Exps(vec![2, 0, 0]),
        Exps(vec![1, 1, 0]),
        Exps(vec![0, 2, 0]),
        Exps(vec![1, 0, 1]),
        Exps(vec![0, 1, 1]),
        Exps(vec![0, 0, 2]),
    ]
}

/// Packs an exponent vector so that integer order equals the monomial order:
/// degree in the top byte, then `255 - e` from the last variable down.
fn order_key(e: &Exps) -> u128 {
    assert!(e.0.len() <= 15 && e.0.iter().all(|&x| x < 256));
    let deg: u32 = e.0.iter().sum();
    assert!(deg < 256);
    let mut key = (deg as u128) << 120;
    for (slot, x) in e.0.iter().rev().enumerate() {
        key |= ((255 - x) as u128) << (112 - 8 * slot);
    }
    key
}

/// Normal forms modulo `p` against a fixed monic basis, with reductor rows
/// cached per monomial and a dense accumulator. Same answers as
/// [`normal_form`], much faster for many reductions against one basis.
pub struct ModpReducer {
    p: u64,
    basis: Vec<Vec<(Exps, u64)>>,
    columns: std::collections::HashMap<Exps, u32>,
    exps: Vec<Exps>,
    keys: Vec<u128>,
    /// Per column: not yet looked up, irreducible, or (basis index, columns of the row).
    rows: Vec<Option<Option<(usize, Vec<u32>)>>>,
}

impl ModpReducer {
    pub fn new(p: u64, basis: &[Poly<u64>]) -> Self {
        let k = Zp(p);
        let basis = basis
            .iter()
            .map(|g| monic(&k, g).into_iter().rev().collect())
            .collect();
        ModpReducer {
            p,
            basis,
            columns: Default::default(),
            exps: Vec::new(),
            keys: Vec::new(),
            rows: Vec::new(),
        }
    }

    fn column(&mut self, e: Exps) -> u32 {
        if let Some(&c) = self.columns.get(&e) {
            return c;
        }
        let c = self.exps.len() as u32;
        self.keys.push(order_key(&e));
        self.exps.push(e.clone());
        self.rows.push(None);
        self.columns.insert(e, c);
        c
    }

    fn row(&mut self, col: u32) -> Option<(usize, Vec<u32>)> {
        if let Some(r) = &self.rows[col as usize] {
            return r.clone();
        }
        let e = self.exps[col as usize].clone();
        let found = self.basis.iter().position(|g| g[0].0.divides(&e));
        let row = found.map(|gi| {
            let shift = e.div(&self.basis[gi][0].0);
            let terms: Vec<Exps> = self.basis[gi].iter().map(|(t, _)| t.mul(&shift)).collect();
            (gi, terms.into_iter().map(|t| self.column(t)).collect())
        });
        self.rows[col as usize] = Some(row.clone());
        row
    }

    pub fn normal_form(&mut self, f: &Poly<u64>) -> Poly<u64> {
        let p = self.p;
        let mut acc: Vec<u64> = Vec::new();
        let mut queued: Vec<bool> = Vec::new();
        let mut heap = std::collections::BinaryHeap::new();
        let mut rem = Poly::new();
        for (e, c) in f {
            let col = self.column(e.clone()) as usize;
            if acc.len() <= col {
                acc.resize(col + 1, 0);
                queued.resize(col + 1, false);
            }
            acc[col] = (acc[col] + c) % p;
            if !queued[col] {
                queued[col] = true;
                heap.push((self.keys[col], col as u32));
            }
        }
        while let Some((_, col)) = heap.pop() {
            let c = acc[col as usize];
            if c == 0 {
                continue;
            }
            let Some((gi, cols)) = self.row(col) else {
                rem.insert(self.exps[col as usize].clone(), c);
                continue;
            };
            let factor = p - c;
            if acc.len() < self.exps.len() {
                acc.resize(self.exps.len(), 0);
                queued.resize(self.exps.len(), false);
            }
            for (&t, (_, gc)) in cols.iter().zip(&self.basis[gi]) {
                let t = t as usize;
                acc[t] = (acc[t] + factor * gc) % p;
                if !queued[t] {
                    queued[t] = true;
                    heap.push((self.keys[t], t as u32));
                }
            }
            debug_assert_eq!(acc[col as usize], 0);
        }
        rem
    }
}
