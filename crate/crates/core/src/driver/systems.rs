//! Standard benchmark systems.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use thiserror::Error;

use super::io::{parse_polynomial, IdealSpec};
use crate::monomial::Monomial;
use crate::poly::{Polynomial, Rationals};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{name}({n}) is defined for {min} <= n <= {max}")]
pub struct SystemRangeError {
    pub name: &'static str,
    pub n: usize,
    pub min: usize,
    pub max: usize,
}

fn check_range(name: &'static str, n: usize, min: usize, max: usize) -> Result<(), SystemRangeError> {
    if (min..=max).contains(&n) {
        Ok(())
    } else {
        Err(SystemRangeError { name, n, min, max })
    }
}

fn var(k: usize, nvars: usize) -> Monomial {
    Monomial::var(k, 1, nvars).expect("within variable limit")
}

fn one() -> BigRational {
    BigRational::one()
}

/// Cyclic-n in variables `x0..x(n-1)`: the elementary cyclic sums of
/// products of `k` consecutive variables for `k < n`, and `x0*...*x(n-1) - 1`.
pub fn cyclic(n: usize) -> Result<IdealSpec, SystemRangeError> {
    check_range("cyclic", n, 2, 9)?;
    let vars = (0..n).map(|k| format!("x{k}")).collect();
    let mut generators = Vec::with_capacity(n);
    for k in 1..n {
        let raw = (0..n)
            .map(|i| {
                let m = (0..k).fold(Monomial::one(n), |acc, j| {
                    acc.mul(&var((i + j) % n, n)).unwrap()
                });
                (m, one())
            })
            .collect();
        generators.push(Polynomial::normalize(&Rationals, raw));
    }
    let all = (0..n).fold(Monomial::one(n), |acc, j| acc.mul(&var(j, n)).unwrap());
    generators.push(Polynomial::normalize(
        &Rationals,
        vec![(all, one()), (Monomial::one(n), -one())],
    ));
    Ok(IdealSpec { vars, generators })
}

/// Katsura-n in the `n + 1` variables `u0..un`, with `u(-m) = u(m)` and
/// `u(m) = 0` for `|m| > n`:
/// `sum_k u(k) u(m-k) = u(m)` for `m = 0..n-1` and `sum_k u(k) = 1`.
pub fn katsura(n: usize) -> Result<IdealSpec, SystemRangeError> {
    check_range("katsura", n, 1, 12)?;
    let nv = n + 1;
    let vars = (0..nv).map(|k| format!("u{k}")).collect();
    let idx = |m: i64| -> Option<usize> {
        let a = m.unsigned_abs() as usize;
        (a <= n).then_some(a)
    };
    let mut generators = Vec::with_capacity(nv);
    let nn = n as i64;
    for m in 0..nn {
        let mut raw = Vec::new();
        for k in -nn..=nn {
            if let (Some(a), Some(b)) = (idx(k), idx(m - k)) {
                raw.push((var(a, nv).mul(&var(b, nv)).unwrap(), one()));
            }
        }
        raw.push((var(m as usize, nv), -one()));
        generators.push(Polynomial::normalize(&Rationals, raw));
    }
    let mut raw: Vec<(Monomial, BigRational)> = (-nn..=nn)
        .map(|k| (var(idx(k).unwrap(), nv), one()))
        .collect();
    raw.push((Monomial::one(nv), -one()));
    generators.push(Polynomial::normalize(&Rationals, raw));
    Ok(IdealSpec { vars, generators })
}

/// Variables of [`alea6`].
pub const ALEA6_VARS: [&str; 6] = ["x", "y", "z", "t", "u", "v"];

/// The six alea6 polynomials as published.
pub const ALEA6_LISTING: [&str; 6] = [
    "5*x^2*t+37*y*t*u+32*y*t*v+21*t*v+55*u*v",
    "39*x*y*v+23*y^2*u+57*y*z*u+56*y*u^2+10*z^2+52*t*u*v",
    "33*x^2*t+51*x^2+42*x*t*v+51*y^2*u+32*y*t^2+v^3",
    "44*x*t^2+42*y*t+47*y*u^2+12*z*t+2*z*u*v+43*t*u^2",
    "49*x^2*z+11*x*y*z+39*x*t*u+44*x*t*u+54*x*t+45*y^2*u",
    "48*x*z*t+2*z^2*t+59*z^2*v+17*z+36*t^3+45*u",
];

pub fn alea6() -> IdealSpec {
    let vars: Vec<String> = ALEA6_VARS.iter().map(|s| s.to_string()).collect();
    let generators = ALEA6_LISTING
        .iter()
        .map(|text| parse_polynomial(text, &vars).expect("alea6 listing parses"))
        .collect();
    IdealSpec { vars, generators }
}

/// Integer coefficient of `m` in `f`, for tests and diagnostics.
pub fn integer_coeff(f: &Polynomial<BigRational>, m: &Monomial) -> Option<BigInt> {
    f.coeff_of(m).filter(|c| c.is_integer()).map(|c| c.to_integer())
}
