//! Exact symbolic expressions.
//!
//! An [`Expression`] is a finite sum of terms
//! `c · Π v^q · Π f(v)^n` with `c` and every `q` exact rationals, `n` an
//! integer and `f` one of `sin, cos, sinh, cosh, exp` applied to a bare
//! variable. This algebra is closed under sums, products, differentiation and
//! the restricted substitutions the celestial-mechanics models need, so every
//! symbolic identity in the crate is decided by structural equality.
//!
//! Terms are kept in a `BTreeMap` keyed by [`Monomial`]; the derived ordering
//! compares the power maps entry by entry (variable name, then exponent) and
//! then the elementary-factor maps the same way. That order is the canonical
//! order used for rendering.

mod eval;
mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub use eval::{CompiledExpr, EvalError};
pub(crate) use parse::parse_pieces;

/// Exact rational number used for coefficients and exponents.
pub type Rational = BigRational;

/// Shorthand for the rational `num/den`.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Renders a rational as `p` or `p/q`.
pub fn fmt_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Parses `p` or `p/q` (optionally signed) into a rational.
pub fn parse_rational(text: &str) -> Result<Rational, ExprError> {
    let text = text.trim();
    let bad = || ExprError::Syntax {
        pos: 0,
        msg: format!("`{text}` is not a rational literal"),
    };
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(ExprError::DivisionByZero);
    }
    Ok(Rational::new(num, den))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown function `{name}` at byte {pos}")]
    UnknownFunction { name: String, pos: usize },
    #[error("exponent at byte {pos} is not a rational literal")]
    NonRationalExponent { pos: usize },
    #[error("substitution leaves the expression algebra: {0}")]
    ClosureViolation(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("leading exponent of the zero expression")]
    ZeroExpression,
}

/// Elementary functions allowed inside a term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Sin,
    Cos,
    Sinh,
    Cosh,
    Exp,
}

impl Func {
    pub const ALL: [Func; 5] = [Func::Sin, Func::Cos, Func::Sinh, Func::Cosh, Func::Exp];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Exp => "exp",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Whether `f(0) = 1`; otherwise `f(0) = 0`.
    fn at_zero(self) -> bool {
        !matches!(self, Func::Sin | Func::Sinh)
    }

    pub fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Exp => x.exp(),
        }
    }

    /// `f'` as `(sign, g)` with `f' = sign · g`.
    fn derivative(self) -> (i64, Func) {
        match self {
            Func::Sin => (1, Func::Cos),
            Func::Cos => (-1, Func::Sin),
            Func::Sinh => (1, Func::Cosh),
            Func::Cosh => (1, Func::Sinh),
            Func::Exp => (1, Func::Exp),
        }
    }
}

/// The non-coefficient part of a term.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    powers: BTreeMap<String, Rational>,
    elems: BTreeMap<(Func, String), i64>,
}

impl Monomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn is_one(&self) -> bool {
        self.powers.is_empty() && self.elems.is_empty()
    }

    pub fn powers(&self) -> &BTreeMap<String, Rational> {
        &self.powers
    }

    pub fn elems(&self) -> &BTreeMap<(Func, String), i64> {
        &self.elems
    }

    /// Exponent of `var` in the power part (zero when absent).
    pub fn exponent(&self, var: &str) -> Rational {
        self.powers.get(var).cloned().unwrap_or_else(Rational::zero)
    }

    fn mul_power(&mut self, var: &str, q: &Rational) {
        if q.is_zero() {
            return;
        }
        let entry = self.powers.entry(var.to_string()).or_insert_with(Rational::zero);
        *entry += q;
        if entry.is_zero() {
            self.powers.remove(var);
        }
    }

    fn mul_elem(&mut self, f: Func, var: &str, n: i64) {
        if n == 0 {
            return;
        }
        let key = (f, var.to_string());
        let entry = self.elems.entry(key.clone()).or_insert(0);
        *entry += n;
        if *entry == 0 {
            self.elems.remove(&key);
        }
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = self.clone();
        for (v, q) in &other.powers {
            out.mul_power(v, q);
        }
        for ((f, v), n) in &other.elems {
            out.mul_elem(*f, v, *n);
        }
        out
    }

    fn inverse(&self) -> Monomial {
        Monomial {
            powers: self.powers.iter().map(|(v, q)| (v.clone(), -q)).collect(),
            elems: self.elems.iter().map(|(k, n)| (k.clone(), -n)).collect(),
        }
    }

    fn mentions(&self, var: &str) -> bool {
        self.powers.contains_key(var) || self.elems.keys().any(|(_, v)| v == var)
    }
}

/// Borrowed view of one term of an expression.
#[derive(Clone, Copy, Debug)]
pub struct Term<'a> {
    pub coeff: &'a Rational,
    pub monomial: &'a Monomial,
}

/// A normalized exact expression. Zero is the empty sum.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expression {
    terms: BTreeMap<Monomial, Rational>,
}

impl Expression {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::monomial(c, Monomial::one())
    }

    pub fn int(n: i64) -> Self {
        Self::constant(Rational::from_integer(BigInt::from(n)))
    }

    pub fn rational(num: i64, den: i64) -> Self {
        Self::constant(rat(num, den))
    }

    pub fn monomial(c: Rational, m: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Self { terms }
    }

    pub fn var(name: &str) -> Self {
        Self::var_pow(name, Rational::one())
    }

    /// `name^q`.
    pub fn var_pow(name: &str, q: Rational) -> Self {
        let mut m = Monomial::one();
        m.mul_power(name, &q);
        Self::monomial(Rational::one(), m)
    }

    /// `f(name)`.
    pub fn func(f: Func, name: &str) -> Self {
        let mut m = Monomial::one();
        m.mul_elem(f, name, 1);
        Self::monomial(Rational::one(), m)
    }

    /// Parses the text grammar (see the crate README).
    pub fn parse(text: &str) -> Result<Self, ExprError> {
        let pieces = parse_pieces(text, None)?;
        Ok(pieces.into_iter().map(|p| p.scalar).fold(Self::zero(), |a, b| a + b))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = Term<'_>> {
        self.terms.iter().map(|(m, c)| Term { coeff: c, monomial: m })
    }

    /// The rational value if the expression is constant.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next()?;
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    /// The variable name if the expression is exactly a bare variable.
    pub fn as_variable(&self) -> Option<&str> {
        let (m, c) = self.single_term()?;
        if !c.is_one() || !m.elems.is_empty() || m.powers.len() != 1 {
            return None;
        }
        let (v, q) = m.powers.iter().next()?;
        q.is_one().then_some(v.as_str())
    }

    fn single_term(&self) -> Option<(&Monomial, &Rational)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    /// Every variable that occurs, in a power or an elementary argument.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for m in self.terms.keys() {
            out.extend(m.powers.keys().cloned());
            out.extend(m.elems.keys().map(|(_, v)| v.clone()));
        }
        out
    }

    pub fn mentions(&self, var: &str) -> bool {
        self.terms.keys().any(|m| m.mentions(var))
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m.clone()).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn scale(&self, c: &Rational) -> Expression {
        if c.is_zero() {
            return Expression::zero();
        }
        Expression {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    /// Exact quotient by a single-term expression.
    pub fn try_div(&self, divisor: &Expression) -> Result<Expression, ExprError> {
        let inv = divisor.reciprocal()?;
        Ok(self * &inv)
    }

    /// `1/self` for single-term expressions.
    pub fn reciprocal(&self) -> Result<Expression, ExprError> {
        if self.is_zero() {
            return Err(ExprError::DivisionByZero);
        }
        let (m, c) = self.single_term().ok_or_else(|| {
            ExprError::ClosureViolation(format!("cannot invert the sum `{self}`"))
        })?;
        Ok(Expression::monomial(c.recip(), m.inverse()))
    }

    /// `self^q` within the algebra.
    ///
    /// Non-negative integer powers always exist. Negative integer powers need
    /// a single term. Fractional powers need a single elems-free term with a
    /// positive coefficient whose `q`-th power is again rational.
    pub fn pow(&self, q: &Rational) -> Result<Expression, ExprError> {
        if q.is_zero() {
            return Ok(Expression::one());
        }
        if q.is_integer() {
            let n = q.numer().to_i64().ok_or_else(|| {
                ExprError::ClosureViolation(format!("exponent {q} is too large"))
            })?;
            if n > 0 {
                if let Some((m, c)) = self.single_term() {
                    return Ok(Self::monomial_pow(m, c, q));
                }
                return Ok(self.pow_u64(n as u64));
            }
            if self.is_zero() {
                return Err(ExprError::DivisionByZero);
            }
            return self.reciprocal()?.pow(&-q);
        }
        if self.is_zero() {
            return if q.is_positive() {
                Ok(Expression::zero())
            } else {
                Err(ExprError::DivisionByZero)
            };
        }
        let (m, c) = self.single_term().ok_or_else(|| {
            ExprError::ClosureViolation(format!(
                "fractional power {} of the sum `{self}`",
                fmt_rational(q)
            ))
        })?;
        if !m.elems.is_empty() {
            return Err(ExprError::ClosureViolation(format!(
                "fractional power {} of an elementary factor in `{self}`",
                fmt_rational(q)
            )));
        }
        if !c.is_positive() {
            return Err(ExprError::ClosureViolation(format!(
                "fractional power {} of a non-positive coefficient in `{self}`",
                fmt_rational(q)
            )));
        }
        let root = rational_root(c, q.denom()).ok_or_else(|| {
            ExprError::ClosureViolation(format!(
                "coefficient {} has no rational power {}",
                fmt_rational(c),
                fmt_rational(q)
            ))
        })?;
        let num = q.numer().to_i32().ok_or_else(|| {
            ExprError::ClosureViolation(format!("exponent {q} is too large"))
        })?;
        let coeff = root.pow(num);
        let mut out = Monomial::one();
        for (v, e) in &m.powers {
            out.mul_power(v, &(e * q));
        }
        Ok(Expression::monomial(coeff, out))
    }

    fn monomial_pow(m: &Monomial, c: &Rational, q: &Rational) -> Expression {
        let n = q.numer().to_i64().expect("integer exponent");
        let mut out = Monomial::one();
        for (v, e) in &m.powers {
            out.mul_power(v, &(e * q));
        }
        for ((f, v), k) in &m.elems {
            out.mul_elem(*f, v, k * n);
        }
        Expression::monomial(c.pow(n as i32), out)
    }

    fn pow_u64(&self, mut n: u64) -> Expression {
        let mut base = self.clone();
        let mut acc = Expression::one();
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &base;
            }
            n >>= 1;
            if n > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Exact partial derivative with respect to `var`.
    pub fn differentiate(&self, var: &str) -> Expression {
        let mut out = Expression::zero();
        for (m, c) in &self.terms {
            if let Some(q) = m.powers.get(var) {
                let mut dm = m.clone();
                dm.mul_power(var, &-Rational::one());
                out.add_term(dm, c * q);
            }
            for ((f, v), n) in &m.elems {
                if v != var {
                    continue;
                }
                let (sign, g) = f.derivative();
                let mut dm = m.clone();
                dm.mul_elem(*f, v, -1);
                dm.mul_elem(g, v, 1);
                out.add_term(dm, c * Rational::from_integer(BigInt::from(sign * n)));
            }
        }
        out
    }

    /// Simultaneous substitution `var ↦ expression`, then normalization.
    ///
    /// A variable that appears with a negative or fractional exponent can only
    /// be replaced by something [`Expression::pow`] accepts; a variable inside
    /// an elementary function can only be renamed to another bare variable or
    /// set to zero.
    pub fn substitute(&self, bindings: &BTreeMap<String, Expression>) -> Result<Expression, ExprError> {
        let mut out = Expression::zero();
        for (m, c) in &self.terms {
            let mut untouched = Monomial::one();
            let mut factor = Expression::constant(c.clone());
            for (v, q) in &m.powers {
                match bindings.get(v) {
                    Some(b) => {
                        let p = b.pow(q).map_err(|e| match e {
                            ExprError::ClosureViolation(msg) => {
                                ExprError::ClosureViolation(format!("binding for `{v}`: {msg}"))
                            }
                            ExprError::DivisionByZero => ExprError::ClosureViolation(format!(
                                "`{v}` bound to zero under a negative power"
                            )),
                            other => other,
                        })?;
                        factor = &factor * &p;
                    }
                    None => untouched.mul_power(v, q),
                }
            }
            for ((f, v), n) in &m.elems {
                match bindings.get(v) {
                    Some(b) if b.is_zero() => match (f.at_zero(), *n < 0) {
                        (true, _) => {}
                        (false, false) => factor = Expression::zero(),
                        (false, true) => {
                            return Err(ExprError::ClosureViolation(format!(
                                "`{}({v})` vanishes at {v} = 0 under a negative power",
                                f.name()
                            )))
                        }
                    },
                    Some(b) => {
                        let target = b.as_variable().ok_or_else(|| {
                            ExprError::ClosureViolation(format!(
                                "`{}({v})` would need the composite argument `{b}`",
                                f.name()
                            ))
                        })?;
                        untouched.mul_elem(*f, target, *n);
                    }
                    None => untouched.mul_elem(*f, v, *n),
                }
            }
            let piece = &factor * &Expression::monomial(Rational::one(), untouched);
            out = out + piece;
        }
        Ok(out)
    }

    /// Lowest power of `var` across the terms and `self / var^that`.
    pub fn leading_exponent(&self, var: &str) -> Result<(Rational, Expression), ExprError> {
        let lowest = self
            .terms
            .keys()
            .map(|m| m.exponent(var))
            .min()
            .ok_or(ExprError::ZeroExpression)?;
        let residual = self * &Expression::var_pow(var, -lowest.clone());
        Ok((lowest, residual))
    }

    /// Lowest and highest power of `var` across the terms.
    pub fn exponent_range(&self, var: &str) -> Option<(Rational, Rational)> {
        let exps: Vec<Rational> = self.terms.keys().map(|m| m.exponent(var)).collect();
        let lo = exps.iter().min()?.clone();
        let hi = exps.iter().max()?.clone();
        Some((lo, hi))
    }

    /// Splits by power of `var`: exponent ↦ (terms with that exponent) / var^exponent.
    pub fn split_by_power(&self, var: &str) -> BTreeMap<Rational, Expression> {
        let mut out: BTreeMap<Rational, Expression> = BTreeMap::new();
        for (m, c) in &self.terms {
            let e = m.exponent(var);
            let mut rest = m.clone();
            rest.powers.remove(var);
            out.entry(e).or_default().add_term(rest, c.clone());
        }
        out
    }

    pub fn evaluate(&self, point: &std::collections::HashMap<String, f64>) -> Result<f64, EvalError> {
        eval::evaluate_with(self, |v| point.get(v).copied())
    }

    pub fn evaluate_with(&self, lookup: impl Fn(&str) -> Option<f64>) -> Result<f64, EvalError> {
        eval::evaluate_with(self, lookup)
    }

    /// Compiles against a fixed variable ordering for fast repeated evaluation.
    pub fn compile(&self, vars: &[String]) -> Result<CompiledExpr, EvalError> {
        CompiledExpr::new(self, vars)
    }
}

/// Exact `c^(1/den)` when it exists in the rationals.
fn rational_root(c: &Rational, den: &BigInt) -> Option<Rational> {
    let k = den.to_u32()?;
    let num = c.numer();
    let d = c.denom();
    let rn = num.nth_root(k);
    let rd = d.nth_root(k);
    (num::pow::pow(rn.clone(), k as usize) == *num && num::pow::pow(rd.clone(), k as usize) == *d)
        .then(|| Rational::new(rn, rd))
}

impl Add for Expression {
    type Output = Expression;
    fn add(mut self, rhs: Expression) -> Expression {
        for (m, c) in rhs.terms {
            self.add_term(m, c);
        }
        self
    }
}

impl Add for &Expression {
    type Output = Expression;
    fn add(self, rhs: &Expression) -> Expression {
        self.clone() + rhs.clone()
    }
}

impl Neg for Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        Expression {
            terms: self.terms.into_iter().map(|(m, c)| (m, -c)).collect(),
        }
    }
}

impl Neg for &Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        -self.clone()
    }
}

impl Sub for Expression {
    type Output = Expression;
    fn sub(self, rhs: Expression) -> Expression {
        self + (-rhs)
    }
}

impl Sub for &Expression {
    type Output = Expression;
    fn sub(self, rhs: &Expression) -> Expression {
        self.clone() - rhs.clone()
    }
}

impl Mul for &Expression {
    type Output = Expression;
    fn mul(self, rhs: &Expression) -> Expression {
        let mut out = Expression::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Mul for Expression {
    type Output = Expression;
    fn mul(self, rhs: Expression) -> Expression {
        &self * &rhs
    }
}

impl std::iter::Sum for Expression {
    fn sum<I: Iterator<Item = Expression>>(iter: I) -> Self {
        iter.fold(Expression::zero(), |a, b| a + b)
    }
}

impl std::str::FromStr for Expression {
    type Err = ExprError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expression::parse(s)
    }
}

fn fmt_exponent(q: &Rational) -> String {
    if q.is_integer() && q.is_positive() {
        q.numer().to_string()
    } else {
        format!("({})", fmt_rational(q))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (v, q) in &self.powers {
            if q.is_one() {
                parts.push(v.clone());
            } else {
                parts.push(format!("{v}^{}", fmt_exponent(q)));
            }
        }
        for ((func, v), n) in &self.elems {
            if *n == 1 {
                parts.push(format!("{}({v})", func.name()));
            } else {
                let q = Rational::from_integer(BigInt::from(*n));
                parts.push(format!("{}({v})^{}", func.name(), fmt_exponent(&q)));
            }
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join("*"))
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let sign = if c.is_negative() { "-" } else { "+" };
            match (i, sign) {
                (0, "-") => write!(f, "-")?,
                (0, _) => {}
                (_, s) => write!(f, " {s} ")?,
            }
            let mag = c.abs();
            if m.is_one() {
                write!(f, "{}", fmt_rational(&mag))?;
            } else if mag.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{}*{m}", fmt_rational(&mag))?;
            }
        }
        Ok(())
    }
}
