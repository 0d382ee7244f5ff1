//! Exact scalars over ℚ extended by formal irrational symbols.
//!
//! An [`ExactScalar`] is `r + Σ qₖ·βₖ` with rational `r`, `qₖ` and symbols
//! `βₖ` that the caller declares rationally independent (together with 1).
//! The set is a ℚ-vector space: addition and scaling by rationals are closed,
//! products of two irrational scalars are rejected.
//!
//! Text form: `"p/q"` for rationals and `"p/q + r/s*beta1 - beta2"` for mixed
//! values. [`ExactScalar`]'s `Display` and `FromStr` round-trip exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Int = BigInt;
pub type Rational = BigRational;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumError {
    #[error("unsupported operation: {0}")]
    UnsupportedOperation(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unresolved symbol `{0}`: no float witness available")]
    UnresolvedSymbol(String),
    #[error("cannot parse `{input}`: {reason}")]
    Parse { input: String, reason: String },
}

/// Identifier of a formal irrational.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Symbol(String);

impl Symbol {
    pub fn new(name: impl Into<String>) -> Result<Self, NumError> {
        let name = name.into();
        if !is_identifier(&name) {
            return Err(NumError::Parse {
                input: name,
                reason: "symbol names are identifiers ([A-Za-z_][A-Za-z0-9_]*)".into(),
            });
        }
        Ok(Symbol(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// `rational + Σ coeff·symbol`, always kept in canonical form (no zero coefficients).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct ExactScalar {
    rational: Rational,
    coeffs: BTreeMap<Symbol, Rational>,
}

/// The operations accepted by [`scalar_arith`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    /// Multiplication where at least one side is rational.
    MulByRational,
}

impl ExactScalar {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_rational(r: Rational) -> Self {
        ExactScalar { rational: r, coeffs: BTreeMap::new() }
    }

    pub fn from_int(i: i64) -> Self {
        Self::from_rational(Rational::from_integer(i.into()))
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_rational(Rational::new(num.into(), den.into()))
    }

    /// The scalar `1·symbol`.
    pub fn symbol(symbol: Symbol) -> Self {
        Self::term(Rational::one(), symbol)
    }

    pub fn term(coeff: Rational, symbol: Symbol) -> Self {
        let mut coeffs = BTreeMap::new();
        if !coeff.is_zero() {
            coeffs.insert(symbol, coeff);
        }
        ExactScalar { rational: Rational::zero(), coeffs }
    }

    pub fn rational_part(&self) -> &Rational {
        &self.rational
    }

    pub fn irrational_coeffs(&self) -> &BTreeMap<Symbol, Rational> {
        &self.coeffs
    }

    pub fn coeff(&self, symbol: &Symbol) -> Rational {
        self.coeffs.get(symbol).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_rational(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.rational.is_zero() && self.coeffs.is_empty()
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        self.is_rational().then_some(&self.rational)
    }

    pub fn symbols(&self) -> impl Iterator<Item = &Symbol> {
        self.coeffs.keys()
    }

    pub fn scale(&self, factor: &Rational) -> Self {
        if factor.is_zero() {
            return Self::zero();
        }
        ExactScalar {
            rational: &self.rational * factor,
            coeffs: self.coeffs.iter().map(|(s, c)| (s.clone(), c * factor)).collect(),
        }
    }

    /// Product of two scalars, defined only when one of them is rational.
    pub fn try_mul(&self, other: &ExactScalar) -> Result<Self, NumError> {
        match (self.as_rational(), other.as_rational()) {
            (_, Some(r)) => Ok(self.scale(r)),
            (Some(r), None) => Ok(other.scale(r)),
            (None, None) => Err(NumError::UnsupportedOperation(format!(
                "product of two irrational scalars ({self}) * ({other})"
            ))),
        }
    }

    fn add_scaled(&mut self, other: &ExactScalar, sign: i32) {
        if sign > 0 {
            self.rational += &other.rational;
        } else {
            self.rational -= &other.rational;
        }
        for (sym, c) in &other.coeffs {
            let entry = self.coeffs.entry(sym.clone()).or_insert_with(Rational::zero);
            if sign > 0 {
                *entry += c;
            } else {
                *entry -= c;
            }
            if entry.is_zero() {
                self.coeffs.remove(sym);
            }
        }
    }

    /// Reduces the rational part into `[0, modulus)`; the irrational part is untouched.
    pub fn reduce_mod(&self, modulus: &Rational) -> Result<CircleValue, NumError> {
        CircleValue::new(self.clone(), modulus.clone())
    }

    pub fn evaluate_float(&self, table: &SymbolTable) -> Result<f64, NumError> {
        let mut acc = rational_to_f64(&self.rational);
        for (sym, c) in &self.coeffs {
            let w = table
                .witness(sym)
                .ok_or_else(|| NumError::UnresolvedSymbol(sym.to_string()))?;
            acc += rational_to_f64(c) * w;
        }
        Ok(acc)
    }
}

/// Nearest-f64 conversion of a rational (falls back to quotient of converted parts
/// when numerator or denominator overflow).
pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
    })
}

/// `x mod m` into `[0, m)` for rationals.
pub fn rational_mod(x: &Rational, m: &Rational) -> Rational {
    let q = (x / m).floor();
    x - q * m
}

pub fn scalar_arith(a: &ExactScalar, b: &ExactScalar, op: ArithOp) -> Result<ExactScalar, NumError> {
    match op {
        ArithOp::Add => Ok(a + b),
        ArithOp::Sub => Ok(a - b),
        ArithOp::MulByRational => a.try_mul(b),
    }
}

impl From<Rational> for ExactScalar {
    fn from(r: Rational) -> Self {
        Self::from_rational(r)
    }
}

impl From<i64> for ExactScalar {
    fn from(i: i64) -> Self {
        Self::from_int(i)
    }
}

impl std::ops::Add<&ExactScalar> for &ExactScalar {
    type Output = ExactScalar;
    fn add(self, rhs: &ExactScalar) -> ExactScalar {
        let mut out = self.clone();
        out.add_scaled(rhs, 1);
        out
    }
}

impl std::ops::Sub<&ExactScalar> for &ExactScalar {
    type Output = ExactScalar;
    fn sub(self, rhs: &ExactScalar) -> ExactScalar {
        let mut out = self.clone();
        out.add_scaled(rhs, -1);
        out
    }
}

impl std::ops::Add for ExactScalar {
    type Output = ExactScalar;
    fn add(mut self, rhs: ExactScalar) -> ExactScalar {
        self.add_scaled(&rhs, 1);
        self
    }
}

impl std::ops::Sub for ExactScalar {
    type Output = ExactScalar;
    fn sub(mut self, rhs: ExactScalar) -> ExactScalar {
        self.add_scaled(&rhs, -1);
        self
    }
}

impl std::ops::Neg for &ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        self.scale(&-Rational::one())
    }
}

impl std::iter::Sum for ExactScalar {
    fn sum<I: Iterator<Item = ExactScalar>>(iter: I) -> Self {
        iter.fold(ExactScalar::zero(), |acc, x| acc + x)
    }
}

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        if !self.rational.is_zero() || self.coeffs.is_empty() {
            write!(f, "{}", self.rational)?;
            first = false;
        }
        for (sym, c) in &self.coeffs {
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    f.write_str("-")?;
                }
            } else if c.is_negative() {
                f.write_str(" - ")?;
            } else {
                f.write_str(" + ")?;
            }
            if mag.is_one() {
                write!(f, "{sym}")?;
            } else {
                write!(f, "{mag}*{sym}")?;
            }
            first = false;
        }
        Ok(())
    }
}

impl FromStr for ExactScalar {
    type Err = NumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Parser { src: s, chars: s.char_indices().peekable() }.parse()
    }
}

impl Serialize for ExactScalar {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ExactScalar {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

struct Parser<'a> {
    src: &'a str,
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
}

impl Parser<'_> {
    fn err(&self, reason: impl Into<String>) -> NumError {
        NumError::Parse { input: self.src.to_string(), reason: reason.into() }
    }

    fn skip_ws(&mut self) {
        while self.chars.peek().is_some_and(|(_, c)| c.is_whitespace()) {
            self.chars.next();
        }
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> &str {
        let start = match self.chars.peek() {
            Some(&(i, _)) => i,
            None => return "",
        };
        let mut end = start;
        while let Some(&(i, c)) = self.chars.peek() {
            if !pred(c) {
                break;
            }
            end = i + c.len_utf8();
            self.chars.next();
        }
        &self.src[start..end]
    }

    fn number(&mut self) -> Result<Rational, NumError> {
        let num: Int = self
            .take_while(|c| c.is_ascii_digit())
            .parse()
            .map_err(|_| self.err("expected integer"))?;
        self.skip_ws();
        if self.chars.peek().is_some_and(|&(_, c)| c == '/') {
            self.chars.next();
            self.skip_ws();
            let den: Int = self
                .take_while(|c| c.is_ascii_digit())
                .parse()
                .map_err(|_| self.err("expected denominator"))?;
            if den.is_zero() {
                return Err(self.err("zero denominator"));
            }
            Ok(Rational::new(num, den))
        } else {
            Ok(Rational::from_integer(num))
        }
    }

    fn ident(&mut self) -> Result<Symbol, NumError> {
        let name = self.take_while(|c| c.is_ascii_alphanumeric() || c == '_').to_string();
        Symbol::new(name).map_err(|_| self.err("expected symbol name"))
    }

    fn parse(mut self) -> Result<ExactScalar, NumError> {
        let mut out = ExactScalar::zero();
        let mut expect_term = true;
        let mut sign = 1;
        let mut terms = 0;
        loop {
            self.skip_ws();
            let Some(&(_, c)) = self.chars.peek() else { break };
            if c == '+' || c == '-' {
                self.chars.next();
                if c == '-' {
                    sign = -sign;
                }
                expect_term = true;
                continue;
            }
            if !expect_term {
                return Err(self.err(format!("unexpected `{c}`")));
            }
            let term = if c.is_ascii_digit() {
                let coeff = self.number()?;
                self.skip_ws();
                if self.chars.peek().is_some_and(|&(_, c)| c == '*') {
                    self.chars.next();
                    self.skip_ws();
                    ExactScalar::term(coeff, self.ident()?)
                } else {
                    ExactScalar::from_rational(coeff)
                }
            } else if c.is_ascii_alphabetic() || c == '_' {
                ExactScalar::symbol(self.ident()?)
            } else {
                return Err(self.err(format!("unexpected `{c}`")));
            };
            out.add_scaled(&term, sign);
            terms += 1;
            sign = 1;
            expect_term = false;
        }
        if terms == 0 || expect_term {
            return Err(self.err("expected a term"));
        }
        Ok(out)
    }
}

/// A point of ℝ/Mℤ with canonical representative (rational part in `[0, M)`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CircleValue {
    representative: ExactScalar,
    modulus: Rational,
}

impl CircleValue {
    pub fn new(value: ExactScalar, modulus: Rational) -> Result<Self, NumError> {
        if !modulus.is_positive() {
            return Err(NumError::Domain(format!("modulus must be positive, got {modulus}")));
        }
        let ExactScalar { rational, coeffs } = value;
        let rational = rational_mod(&rational, &modulus);
        Ok(CircleValue { representative: ExactScalar { rational, coeffs }, modulus })
    }

    pub fn representative(&self) -> &ExactScalar {
        &self.representative
    }

    pub fn modulus(&self) -> &Rational {
        &self.modulus
    }

    /// Zero on the circle (rational part 0 and no irrational part).
    pub fn is_zero(&self) -> bool {
        self.representative.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.representative.is_rational()
    }
}

impl fmt::Display for CircleValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.representative, self.modulus)
    }
}

/// A declared formal irrational with an optional float witness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolEntry {
    pub name: Symbol,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<f64>,
}

/// Ordered list of declared symbols. Declaring a set of symbols asserts that
/// `{1} ∪ symbols` is linearly independent over ℚ; nothing here checks it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SymbolTable {
    entries: Vec<SymbolEntry>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, name: Symbol, witness: Option<f64>) -> Result<(), NumError> {
        if let Some(w) = witness {
            if !w.is_finite() {
                return Err(NumError::Domain(format!("witness for `{name}` is not finite")));
            }
        }
        if let Some(entry) = self.entries.iter_mut().find(|e| e.name == name) {
            if entry.witness.is_some() && witness.is_some() && entry.witness != witness {
                return Err(NumError::Domain(format!("symbol `{name}` declared twice")));
            }
            entry.witness = entry.witness.or(witness);
            return Ok(());
        }
        self.entries.push(SymbolEntry { name, witness });
        Ok(())
    }

    pub fn with(mut self, name: &str, witness: f64) -> Self {
        self.declare(Symbol::new(name).expect("valid symbol name"), Some(witness))
            .expect("valid witness");
        self
    }

    pub fn witness(&self, symbol: &Symbol) -> Option<f64> {
        self.entries.iter().find(|e| &e.name == symbol).and_then(|e| e.witness)
    }

    pub fn contains(&self, symbol: &Symbol) -> bool {
        self.entries.iter().any(|e| &e.name == symbol)
    }

    pub fn entries(&self) -> &[SymbolEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Validates entries: unique ids and finite witnesses.
    pub fn validate(&self) -> Result<(), NumError> {
        for (i, e) in self.entries.iter().enumerate() {
            if self.entries[..i].iter().any(|o| o.name == e.name) {
                return Err(NumError::Domain(format!("symbol `{}` declared twice", e.name)));
            }
            if e.witness.is_some_and(|w| !w.is_finite()) {
                return Err(NumError::Domain(format!("witness for `{}` is not finite", e.name)));
            }
        }
        Ok(())
    }
}

/// Least common multiple of the denominators of `values` (1 for an empty list).
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> Int {
    values.into_iter().fold(Int::one(), |acc, r| acc.lcm(r.denom()))
}

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(num.into(), den.into())
}
