//! Text format for ideals and bases.
//!
//! ```text
//! # comment
//! vars: x, y, z
//! x^2*y - 1/2
//! 3*x*z + y
//! ```
//!
//! The first non-comment line names the variables; every following
//! non-empty line holds one polynomial with integer or rational
//! coefficients, `*`, `^`, `+` and `-`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::monomial::{Monomial, MAX_VARS};
use crate::poly::{Polynomial, Rationals};

/// Variable names plus generators over Q.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdealSpec {
    pub vars: Vec<String>,
    pub generators: Vec<Polynomial<BigRational>>,
}

impl IdealSpec {
    pub fn nvars(&self) -> usize {
        self.vars.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("missing `vars:` header")]
    MissingVars,
    #[error("invalid variable name `{0}`")]
    BadVariableName(String),
    #[error("variable `{0}` declared twice")]
    DuplicateVariable(String),
    #[error("{0} variables declared, at most {MAX_VARS} are supported")]
    TooManyVariables(usize),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unexpected character `{0}`")]
    UnexpectedChar(char),
    #[error("unexpected end of line")]
    UnexpectedEnd,
    #[error("exponent too large: degrees must fit in 16 bits")]
    DegreeOverflow,
    #[error("division by zero")]
    ZeroDenominator,
    #[error("generator is zero")]
    ZeroGenerator,
}

/// A parse error with a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

/// One term as written: coefficient and exponent vector, before any
/// combination of like terms.
pub type RawTerm = (BigRational, Vec<u32>);

struct Cursor<'a> {
    chars: Vec<(usize, char)>,
    pos: usize,
    vars: &'a [String],
    line: usize,
}

impl Cursor<'_> {
    fn err(&self, kind: ParseErrorKind) -> ParseError {
        let column = self
            .chars
            .get(self.pos)
            .map(|&(c, _)| c)
            .unwrap_or_else(|| self.chars.last().map_or(1, |&(c, _)| c + 1));
        ParseError {
            line: self.line,
            column,
            kind,
        }
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|(_, c)| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn bump(&mut self) {
        self.pos += 1;
    }

    fn number(&mut self) -> Result<BigInt, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.chars.get(self.pos).is_some_and(|(_, c)| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(match self.chars.get(self.pos) {
                Some(&(_, c)) => self.err(ParseErrorKind::UnexpectedChar(c)),
                None => self.err(ParseErrorKind::UnexpectedEnd),
            });
        }
        let digits: String = self.chars[start..self.pos].iter().map(|&(_, c)| c).collect();
        Ok(digits.parse().expect("ascii digits"))
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self
            .chars
            .get(self.pos)
            .is_some_and(|(_, c)| c.is_ascii_alphanumeric() || *c == '_')
        {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().map(|&(_, c)| c).collect()
    }

    /// factor := number ['/' number] | var ['^' number]
    fn factor(&mut self, coeff: &mut BigRational, exps: &mut [u64]) -> Result<(), ParseError> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() => {
                let n = self.number()?;
                if self.peek() == Some('/') {
                    self.bump();
                    let at = self.pos;
                    let d = self.number()?;
                    if d.is_zero() {
                        self.pos = at;
                        self.skip_ws();
                        return Err(self.err(ParseErrorKind::ZeroDenominator));
                    }
                    *coeff *= BigRational::new(n, d);
                } else {
                    *coeff *= BigRational::from_integer(n);
                }
                Ok(())
            }
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let at = self.pos;
                let name = self.ident();
                let Some(k) = self.vars.iter().position(|v| *v == name) else {
                    self.pos = at;
                    return Err(self.err(ParseErrorKind::UnknownVariable(name)));
                };
                let mut e = 1u64;
                if self.peek() == Some('^') {
                    self.bump();
                    let at = self.pos;
                    let n = self.number()?;
                    e = u64::try_from(&n).unwrap_or(u64::MAX);
                    if e > u16::MAX as u64 {
                        self.pos = at;
                        self.skip_ws();
                        return Err(self.err(ParseErrorKind::DegreeOverflow));
                    }
                }
                exps[k] += e;
                Ok(())
            }
            Some(c) => Err(self.err(ParseErrorKind::UnexpectedChar(c))),
            None => Err(self.err(ParseErrorKind::UnexpectedEnd)),
        }
    }

    /// term := factor ('*' factor)*
    fn term(&mut self, sign: bool) -> Result<RawTerm, ParseError> {
        let at = self.pos;
        let mut coeff = if sign {
            -BigRational::one()
        } else {
            BigRational::one()
        };
        let mut exps = vec![0u64; self.vars.len()];
        self.factor(&mut coeff, &mut exps)?;
        while self.peek() == Some('*') {
            self.bump();
            self.factor(&mut coeff, &mut exps)?;
        }
        if exps.iter().sum::<u64>() > u16::MAX as u64 {
            self.pos = at;
            self.skip_ws();
            return Err(self.err(ParseErrorKind::DegreeOverflow));
        }
        Ok((coeff, exps.into_iter().map(|e| e as u32).collect()))
    }

    /// poly := ['+'|'-'] term (('+'|'-') term)*
    fn poly(&mut self) -> Result<Vec<RawTerm>, ParseError> {
        let mut terms = Vec::new();
        let mut sign = match self.peek() {
            Some('-') => {
                self.bump();
                true
            }
            Some('+') => {
                self.bump();
                false
            }
            _ => false,
        };
        loop {
            terms.push(self.term(sign)?);
            match self.peek() {
                None => return Ok(terms),
                Some('+') => sign = false,
                Some('-') => sign = true,
                Some(c) => return Err(self.err(ParseErrorKind::UnexpectedChar(c))),
            }
            self.bump();
        }
    }
}

fn cursor<'a>(text: &str, vars: &'a [String], line: usize, column_offset: usize) -> Cursor<'a> {
    Cursor {
        chars: text
            .chars()
            .enumerate()
            .map(|(k, c)| (k + 1 + column_offset, c))
            .collect(),
        pos: 0,
        vars,
        line,
    }
}

/// The terms of one polynomial exactly as written.
pub fn parse_terms_raw(text: &str, vars: &[String]) -> Result<Vec<RawTerm>, ParseError> {
    cursor(text, vars, 1, 0).poly()
}

fn normalize_terms(terms: Vec<RawTerm>, nvars: usize) -> Polynomial<BigRational> {
    let raw = terms
        .into_iter()
        .map(|(c, e)| (Monomial::pack(&e, nvars).expect("checked while parsing"), c))
        .collect();
    Polynomial::normalize(&Rationals, raw)
}

/// Parses one polynomial over Q in the given variables.
pub fn parse_polynomial(text: &str, vars: &[String]) -> Result<Polynomial<BigRational>, ParseError> {
    if vars.len() > MAX_VARS {
        return Err(ParseError {
            line: 1,
            column: 1,
            kind: ParseErrorKind::TooManyVariables(vars.len()),
        });
    }
    Ok(normalize_terms(parse_terms_raw(text, vars)?, vars.len()))
}

fn parse_vars(rest: &str, line: usize, offset: usize) -> Result<Vec<String>, ParseError> {
    let mut vars: Vec<String> = Vec::new();
    let mut col = offset;
    for piece in rest.split(',') {
        let lead = piece.len() - piece.trim_start().len();
        let name = piece.trim();
        let at = |kind| ParseError {
            line,
            column: col + lead + 1,
            kind,
        };
        let valid = name
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !valid {
            if name.is_empty() && vars.is_empty() && rest.trim().is_empty() {
                break;
            }
            return Err(at(ParseErrorKind::BadVariableName(name.to_string())));
        }
        if vars.iter().any(|v| v == name) {
            return Err(at(ParseErrorKind::DuplicateVariable(name.to_string())));
        }
        vars.push(name.to_string());
        col += piece.chars().count() + 1;
    }
    if vars.len() > MAX_VARS {
        return Err(ParseError {
            line,
            column: offset + 1,
            kind: ParseErrorKind::TooManyVariables(vars.len()),
        });
    }
    Ok(vars)
}

/// Parses the ideal file format.
pub fn parse_ideal(text: &str) -> Result<IdealSpec, ParseError> {
    let mut vars: Option<Vec<String>> = None;
    let mut generators = Vec::new();
    for (k, raw_line) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw_line.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        match &vars {
            None => {
                let lead = content.len() - content.trim_start().len();
                let body = content.trim_start();
                let Some(rest) = body.strip_prefix("vars:") else {
                    return Err(ParseError {
                        line,
                        column: lead + 1,
                        kind: ParseErrorKind::MissingVars,
                    });
                };
                vars = Some(parse_vars(rest, line, lead + "vars:".len())?);
            }
            Some(names) => {
                let terms = cursor(content, names, line, 0).poly()?;
                let f = normalize_terms(terms, names.len());
                if f.is_zero() {
                    let lead = content.len() - content.trim_start().len();
                    return Err(ParseError {
                        line,
                        column: lead + 1,
                        kind: ParseErrorKind::ZeroGenerator,
                    });
                }
                generators.push(f);
            }
        }
    }
    match vars {
        Some(vars) => Ok(IdealSpec { vars, generators }),
        None => Err(ParseError {
            line: text.lines().count().max(1),
            column: 1,
            kind: ParseErrorKind::MissingVars,
        }),
    }
}

/// Coefficients that [`format_polynomial`] can print.
pub trait Coefficient {
    fn is_negative_coeff(&self) -> bool;
    fn is_unit_magnitude(&self) -> bool;
    fn abs_string(&self) -> String;
}

impl Coefficient for BigRational {
    fn is_negative_coeff(&self) -> bool {
        self.is_negative()
    }
    fn is_unit_magnitude(&self) -> bool {
        self.abs().is_one()
    }
    fn abs_string(&self) -> String {
        self.abs().to_string()
    }
}

impl Coefficient for BigInt {
    fn is_negative_coeff(&self) -> bool {
        self.is_negative()
    }
    fn is_unit_magnitude(&self) -> bool {
        self.abs().is_one()
    }
    fn abs_string(&self) -> String {
        self.abs().to_string()
    }
}

/// Renders `f` as `3*x^2*y - 1/2*z + 1`; the zero polynomial is `0`.
pub fn format_polynomial<C: Coefficient>(f: &Polynomial<C>, vars: &[String]) -> String
where
    C: Clone,
{
    if f.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (k, (m, c)) in f.terms().enumerate() {
        let neg = c.is_negative_coeff();
        match (k, neg) {
            (0, true) => out.push('-'),
            (0, false) => {}
            (_, true) => out.push_str(" - "),
            (_, false) => out.push_str(" + "),
        }
        let mono = m.display_with(vars).to_string();
        if mono.is_empty() {
            out.push_str(&c.abs_string());
        } else if c.is_unit_magnitude() {
            out.push_str(&mono);
        } else {
            out.push_str(&c.abs_string());
            out.push('*');
            out.push_str(&mono);
        }
    }
    out
}

/// The `vars:` header line, without newline.
pub fn format_vars(vars: &[String]) -> String {
    format!("vars: {}", vars.join(", "))
}

/// Writes a basis in the ideal file format.
pub fn print_basis<C: Coefficient + Clone>(vars: &[String], basis: &[Polynomial<C>]) -> String {
    let mut out = format_vars(vars);
    out.push('\n');
    for g in basis {
        out.push_str(&format_polynomial(g, vars));
        out.push('\n');
    }
    out
}

impl fmt::Display for IdealSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_basis(&self.vars, &self.generators))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn parses_two_terms() {
        let vars = names(&["x", "y"]);
        let f = parse_polynomial("x^2*y - 1/2", &vars).unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f.coeffs(), &[q(1, 1), q(-1, 2)]);
        assert_eq!(f.monomials()[0], Monomial::pack(&[2, 1], 2).unwrap());
        assert_eq!(format_polynomial(&f, &vars), "x^2*y - 1/2");
    }

    #[test]
    fn repeated_factors_multiply() {
        let vars = names(&["x", "y"]);
        let f = parse_polynomial("2*x*3*x*y + -1", &vars);
        assert!(f.is_err());
        let f = parse_polynomial("2*x*3*x*y - 1", &vars).unwrap();
        assert_eq!(f.coeffs()[0], q(6, 1));
        assert_eq!(f.monomials()[0], Monomial::pack(&[2, 1], 2).unwrap());
    }

    #[test]
    fn degree_overflow_at_parse() {
        let vars = names(&["x"]);
        let e = parse_polynomial("x^70000", &vars).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::DegreeOverflow);
        assert_eq!(e.column, 3);
        let e = parse_polynomial("x^40000*x^40000", &vars).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::DegreeOverflow);
    }

    #[test]
    fn positioned_errors() {
        let e = parse_ideal("vars: x, y\nx + z\n").unwrap_err();
        assert_eq!((e.line, e.column), (2, 5));
        assert_eq!(e.kind, ParseErrorKind::UnknownVariable("z".into()));
        let e = parse_ideal("# header\nx + 1\n").unwrap_err();
        assert_eq!((e.line, e.kind), (2, ParseErrorKind::MissingVars));
        let e = parse_ideal("vars: x, 1y\n").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::BadVariableName("1y".into()));
        assert_eq!(e.column, 10);
        let e = parse_ideal("vars: x\nx + 1/0\n").unwrap_err();
        assert_eq!((e.line, e.column, e.kind), (2, 7, ParseErrorKind::ZeroDenominator));
        let e = parse_ideal("vars: x\nx x\n").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnexpectedChar('x'));
        let e = parse_ideal("vars: x\nx +\n").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnexpectedEnd);
        let e = parse_ideal("vars: x\nx - x\n").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::ZeroGenerator);
        let many: Vec<String> = (0..16).map(|k| format!("v{k}")).collect();
        let e = parse_ideal(&format!("vars: {}\n", many.join(", "))).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::TooManyVariables(16));
    }

    #[test]
    fn ideal_with_comments() {
        let text = "# cyclic 3\nvars: x, y, z\n\nx + y + z  # linear\nx*y + y*z + z*x\nx*y*z - 1\n";
        let ideal = parse_ideal(text).unwrap();
        assert_eq!(ideal.vars, names(&["x", "y", "z"]));
        assert_eq!(ideal.generators.len(), 3);
        assert_eq!(
            ideal.to_string(),
            "vars: x, y, z\nx + y + z\nx*y + x*z + y*z\nx*y*z - 1\n"
        );
    }

    fn arb_poly() -> impl Strategy<Value = Polynomial<BigRational>> {
        proptest::collection::vec(
            ((-50i64..50, 1i64..20), proptest::collection::vec(0u32..5, 3)),
            0..8,
        )
        .prop_map(|terms| {
            let raw = terms
                .into_iter()
                .map(|((n, d), e)| (Monomial::pack(&e, 3).unwrap(), q(n, d)))
                .collect();
            Polynomial::normalize(&Rationals, raw)
        })
    }

    proptest! {
        #[test]
        fn print_parse_roundtrip(basis in proptest::collection::vec(arb_poly(), 1..5)) {
            let vars = names(&["a", "b2", "c_"]);
            let basis: Vec<_> = basis.into_iter().filter(|f| !f.is_zero()).collect();
            let text = print_basis(&vars, &basis);
            let back = parse_ideal(&text).unwrap();
            prop_assert_eq!(back.vars, vars);
            prop_assert_eq!(back.generators, basis);
        }
    }
}
