//! Differential forms and vector fields on a single coordinate chart.
//!
//! Forms carry [`Expression`] coefficients keyed by strictly increasing index
//! tuples into the chart's variable list. b-forms live in the same smooth
//! basis: `dy/y^m` is just the coefficient `y^(-m)` on `dy`, so wedge, `d` and
//! pullback need no special cases. Top-degree coefficients are always reported
//! against the chart order `dv_0 ∧ dv_1 ∧ … ∧ dv_{n-1}`.

mod literal;

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::symexpr::{CompiledExpr, EvalError, ExprError, Expression, Rational};

pub use literal::{parse_form_file, FormFile};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormError {
    #[error("forms live on different charts")]
    ChartMismatch,
    #[error("degree {0} exceeds the chart dimension {1}")]
    DegreeOverflow(usize, usize),
    #[error("interior product of a 0-form")]
    DegreeUnderflow,
    #[error("top power needs an even-dimensional chart, got dimension {0}")]
    OddDimension(usize),
    #[error("expected a {expected}-form, got degree {got}")]
    WrongDegree { expected: usize, got: usize },
    #[error("`{0}` is not a chart variable")]
    UnknownVariable(String),
    #[error("chart variable `{0}` is repeated")]
    DuplicateVariable(String),
    #[error("literal mixes degrees {0} and {1}")]
    MixedDegree(usize, usize),
    #[error("no component for target variable `{0}`")]
    MissingComponent(String),
    #[error("malformed form file: {0}")]
    FormFile(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Ordered coordinates on an open set, optionally with the coordinate whose
/// zero set is the singular hypersurface.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Chart {
    vars: Vec<String>,
    singular: Option<usize>,
}

impl Chart {
    pub fn new<S: AsRef<str>>(vars: &[S]) -> Result<Self, FormError> {
        let vars: Vec<String> = vars.iter().map(|v| v.as_ref().to_string()).collect();
        for (i, v) in vars.iter().enumerate() {
            if vars[..i].contains(v) {
                return Err(FormError::DuplicateVariable(v.clone()));
            }
        }
        Ok(Self { vars, singular: None })
    }

    pub fn with_singular(mut self, var: &str) -> Result<Self, FormError> {
        let i = self.index_of(var).ok_or_else(|| FormError::UnknownVariable(var.to_string()))?;
        self.singular = Some(i);
        Ok(self)
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn index_of(&self, var: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == var)
    }

    pub fn var(&self, i: usize) -> &str {
        &self.vars[i]
    }

    pub fn singular_var(&self) -> Option<&str> {
        self.singular.map(|i| self.vars[i].as_str())
    }

    pub fn singular_index(&self) -> Option<usize> {
        self.singular
    }

    fn require(&self, var: &str) -> Result<usize, FormError> {
        self.index_of(var).ok_or_else(|| FormError::UnknownVariable(var.to_string()))
    }

    /// Same coordinates in the same order (the singular marker is ignored).
    pub fn same_coordinates(&self, other: &Chart) -> bool {
        self.vars == other.vars
    }

    /// Values in chart order from `name=value` pairs; every variable must appear.
    pub fn point(&self, values: &BTreeMap<String, f64>) -> Result<Vec<f64>, FormError> {
        self.vars
            .iter()
            .map(|v| values.get(v).copied().ok_or_else(|| FormError::UnknownVariable(v.clone())))
            .collect()
    }

    pub fn bindings(&self, x: &[f64]) -> std::collections::HashMap<String, f64> {
        self.vars.iter().cloned().zip(x.iter().copied()).collect()
    }
}

impl fmt::Display for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.vars.join(", "))
    }
}

/// Sorts `idx` in place; returns the permutation sign, or `None` on a repeat.
pub(crate) fn sort_with_sign(idx: &mut [usize]) -> Option<i64> {
    let mut sign = 1;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

fn signed(e: &Expression, sign: i64) -> Expression {
    if sign < 0 {
        -e
    } else {
        e.clone()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DifferentialForm {
    chart: Chart,
    degree: usize,
    coeffs: BTreeMap<Vec<usize>, Expression>,
}

impl DifferentialForm {
    pub fn zero(chart: &Chart, degree: usize) -> Self {
        Self { chart: chart.clone(), degree, coeffs: BTreeMap::new() }
    }

    pub fn scalar(chart: &Chart, f: Expression) -> Self {
        let mut out = Self::zero(chart, 0);
        out.accumulate(Vec::new(), f);
        out
    }

    /// `c · dv_1 ∧ … ∧ dv_k` for named variables in the given order.
    pub fn monomial(chart: &Chart, c: Expression, vars: &[&str]) -> Result<Self, FormError> {
        let mut idx = vars.iter().map(|v| chart.require(v)).collect::<Result<Vec<_>, _>>()?;
        let mut out = Self::zero(chart, idx.len());
        if let Some(sign) = sort_with_sign(&mut idx) {
            out.accumulate(idx, signed(&c, sign));
        }
        Ok(out)
    }

    /// `d var`.
    pub fn differential_of(chart: &Chart, var: &str) -> Result<Self, FormError> {
        Self::monomial(chart, Expression::one(), &[var])
    }

    /// `Σ dq_i ∧ dp_i`.
    pub fn canonical(chart: &Chart, pairs: &[(&str, &str)]) -> Result<Self, FormError> {
        let mut out = Self::zero(chart, 2);
        for (q, p) in pairs {
            out = out.add(&Self::monomial(chart, Expression::one(), &[q, p])?)?;
        }
        Ok(out)
    }

    /// Parses the literal format `coeff * dx^dy + …` against `chart`.
    pub fn parse(chart: &Chart, text: &str) -> Result<Self, FormError> {
        literal::parse_form(chart, text)
    }

    pub fn from_coefficients(
        chart: &Chart,
        degree: usize,
        coeffs: impl IntoIterator<Item = (Vec<usize>, Expression)>,
    ) -> Result<Self, FormError> {
        if degree > chart.dim() {
            return Err(FormError::DegreeOverflow(degree, chart.dim()));
        }
        let mut out = Self::zero(chart, degree);
        for (mut idx, c) in coeffs {
            if idx.len() != degree {
                return Err(FormError::WrongDegree { expected: degree, got: idx.len() });
            }
            if let Some(&bad) = idx.iter().find(|&&i| i >= chart.dim()) {
                return Err(FormError::UnknownVariable(format!("index {bad}")));
            }
            if let Some(sign) = sort_with_sign(&mut idx) {
                out.accumulate(idx, signed(&c, sign));
            }
        }
        Ok(out)
    }

    fn accumulate(&mut self, idx: Vec<usize>, c: Expression) {
        if c.is_zero() {
            return;
        }
        let sum = match self.coeffs.remove(&idx) {
            Some(prev) => prev + c,
            None => c,
        };
        if !sum.is_zero() {
            self.coeffs.insert(idx, sum);
        }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (&[usize], &Expression)> {
        self.coeffs.iter().map(|(k, v)| (k.as_slice(), v))
    }

    /// Coefficient on the sorted index tuple `idx` (zero when absent).
    pub fn coefficient(&self, idx: &[usize]) -> Expression {
        self.coeffs.get(idx).cloned().unwrap_or_default()
    }

    /// Coefficient on `dv_1 ∧ … ∧ dv_k` in the written order, sign included.
    pub fn coefficient_of(&self, vars: &[&str]) -> Result<Expression, FormError> {
        let mut idx = vars.iter().map(|v| self.chart.require(v)).collect::<Result<Vec<_>, _>>()?;
        Ok(match sort_with_sign(&mut idx) {
            Some(sign) => signed(&self.coefficient(&idx), sign),
            None => Expression::zero(),
        })
    }

    /// Coefficient on the chart-ordered volume form (top degree only).
    pub fn top_coefficient(&self) -> Expression {
        let idx: Vec<usize> = (0..self.chart.dim()).collect();
        self.coefficient(&idx)
    }

    fn check_chart(&self, other: &DifferentialForm) -> Result<(), FormError> {
        if self.chart.same_coordinates(&other.chart) {
            Ok(())
        } else {
            Err(FormError::ChartMismatch)
        }
    }

    pub fn add(&self, other: &DifferentialForm) -> Result<DifferentialForm, FormError> {
        self.check_chart(other)?;
        if self.degree != other.degree {
            return Err(FormError::WrongDegree { expected: self.degree, got: other.degree });
        }
        let mut out = self.clone();
        for (k, v) in &other.coeffs {
            out.accumulate(k.clone(), v.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &DifferentialForm) -> Result<DifferentialForm, FormError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> DifferentialForm {
        self.map_coefficients(|c| -c)
    }

    /// Multiplies every coefficient by the function `f`.
    pub fn scale(&self, f: &Expression) -> DifferentialForm {
        self.map_coefficients(|c| c * f)
    }

    fn map_coefficients(&self, f: impl Fn(&Expression) -> Expression) -> DifferentialForm {
        let mut out = Self::zero(&self.chart, self.degree);
        for (k, v) in &self.coeffs {
            out.accumulate(k.clone(), f(v));
        }
        out
    }

    pub fn wedge(&self, other: &DifferentialForm) -> Result<DifferentialForm, FormError> {
        self.check_chart(other)?;
        let degree = self.degree + other.degree;
        if degree > self.chart.dim() {
            return Err(FormError::DegreeOverflow(degree, self.chart.dim()));
        }
        let mut out = Self::zero(&self.chart, degree);
        for (i, a) in &self.coeffs {
            for (j, b) in &other.coeffs {
                let mut idx: Vec<usize> = i.iter().chain(j.iter()).copied().collect();
                if let Some(sign) = sort_with_sign(&mut idx) {
                    out.accumulate(idx, signed(&(a * b), sign));
                }
            }
        }
        Ok(out)
    }

    /// Exterior derivative. Fails only on top-degree input.
    pub fn ext_d(&self) -> Result<DifferentialForm, FormError> {
        let dim = self.chart.dim();
        if self.degree >= dim {
            return Err(FormError::DegreeOverflow(self.degree + 1, dim));
        }
        let mut out = Self::zero(&self.chart, self.degree + 1);
        for (idx, c) in &self.coeffs {
            for j in 0..dim {
                if idx.contains(&j) {
                    continue;
                }
                let dc = c.differentiate(&self.chart.vars[j]);
                if dc.is_zero() {
                    continue;
                }
                let before = idx.iter().filter(|&&i| i < j).count();
                let mut new_idx = idx.clone();
                new_idx.insert(before, j);
                out.accumulate(new_idx, signed(&dc, if before % 2 == 0 { 1 } else { -1 }));
            }
        }
        Ok(out)
    }

    /// Whether `d self` vanishes (top-degree forms are closed).
    pub fn is_closed(&self) -> bool {
        self.degree >= self.chart.dim() || self.ext_d().map(|d| d.is_zero()).unwrap_or(false)
    }

    /// `φ* self` for a form on `φ`'s target chart.
    pub fn pullback(&self, map: &ChartMap) -> Result<DifferentialForm, FormError> {
        if !self.chart.same_coordinates(&map.target) {
            return Err(FormError::ChartMismatch);
        }
        let bindings = map.bindings();
        let jac = map.differentials();
        let mut out = Self::zero(&map.source, self.degree);
        for (idx, c) in &self.coeffs {
            let c = c.substitute(&bindings)?;
            let mut piece = Self::scalar(&map.source, c);
            for &i in idx {
                piece = piece.wedge(&jac[i])?;
            }
            out = out.add(&piece)?;
        }
        Ok(out)
    }

    /// `ι_X self`: contraction in the first slot.
    pub fn interior(&self, x: &VectorField) -> Result<DifferentialForm, FormError> {
        if !self.chart.same_coordinates(&x.chart) {
            return Err(FormError::ChartMismatch);
        }
        if self.degree == 0 {
            return Err(FormError::DegreeUnderflow);
        }
        let mut out = Self::zero(&self.chart, self.degree - 1);
        for (idx, c) in &self.coeffs {
            for (pos, i) in idx.iter().enumerate() {
                let Some(xi) = x.components.get(i) else { continue };
                let mut rest = idx.clone();
                rest.remove(pos);
                let term = c * xi;
                out.accumulate(rest, signed(&term, if pos % 2 == 0 { 1 } else { -1 }));
            }
        }
        Ok(out)
    }

    /// `L_X self = ι_X d self + d ι_X self`.
    pub fn lie_derivative(&self, x: &VectorField) -> Result<DifferentialForm, FormError> {
        if !self.chart.same_coordinates(&x.chart) {
            return Err(FormError::ChartMismatch);
        }
        let dim = self.chart.dim();
        let first = if self.degree < dim {
            self.ext_d()?.interior(x)?
        } else {
            Self::zero(&self.chart, self.degree)
        };
        let second = if self.degree > 0 {
            self.interior(x)?.ext_d()?
        } else {
            Self::zero(&self.chart, 0)
        };
        first.add(&second)
    }

    /// `self^{∧ n}` for a 2-form on a `2n`-dimensional chart.
    pub fn top_power(&self) -> Result<DifferentialForm, FormError> {
        if self.degree != 2 {
            return Err(FormError::WrongDegree { expected: 2, got: self.degree });
        }
        let dim = self.chart.dim();
        if !dim.is_multiple_of(2) {
            return Err(FormError::OddDimension(dim));
        }
        let mut acc = Self::scalar(&self.chart, Expression::one());
        for _ in 0..dim / 2 {
            acc = acc.wedge(self)?;
        }
        Ok(acc)
    }

    /// The same form on a chart listing the same variables in another order.
    pub fn reorder(&self, chart: &Chart) -> Result<DifferentialForm, FormError> {
        if chart.dim() != self.chart.dim() {
            return Err(FormError::ChartMismatch);
        }
        let map: Vec<usize> = self
            .chart
            .vars
            .iter()
            .map(|v| chart.require(v))
            .collect::<Result<_, _>>()?;
        let mut out = Self::zero(chart, self.degree);
        for (idx, c) in &self.coeffs {
            let mut new_idx: Vec<usize> = idx.iter().map(|&i| map[i]).collect();
            let sign = sort_with_sign(&mut new_idx).expect("permutation keeps indices distinct");
            out.accumulate(new_idx, signed(c, sign));
        }
        Ok(out)
    }

    /// Drops every component containing `d var` and sets `var` to zero in the
    /// remaining coefficients.
    pub fn restrict_to_zero_of(&self, var: &str) -> Result<DifferentialForm, FormError> {
        let k = self.chart.require(var)?;
        let mut bind = BTreeMap::new();
        bind.insert(var.to_string(), Expression::zero());
        let mut out = Self::zero(&self.chart, self.degree);
        for (idx, c) in &self.coeffs {
            if idx.contains(&k) {
                continue;
            }
            out.accumulate(idx.clone(), c.substitute(&bind)?);
        }
        Ok(out)
    }

    /// Lowest exponent of `var` over all coefficients.
    pub fn min_exponent(&self, var: &str) -> Option<Rational> {
        self.coeffs.values().filter_map(|c| c.exponent_range(var).map(|r| r.0)).min()
    }

    /// Antisymmetric coefficient matrix `Ω_ij = ω(∂_i, ∂_j)` of a 2-form.
    pub fn matrix_at(&self, x: &[f64]) -> Result<DMatrix<f64>, EvalError> {
        self.compile_two_form()?.matrix(x)
    }

    pub fn compile_two_form(&self) -> Result<CompiledTwoForm, EvalError> {
        assert_eq!(self.degree, 2, "compile_two_form needs a 2-form");
        let entries = self
            .coeffs
            .iter()
            .map(|(k, c)| Ok((k[0], k[1], c.compile(&self.chart.vars)?)))
            .collect::<Result<Vec<_>, EvalError>>()?;
        Ok(CompiledTwoForm { dim: self.chart.dim(), entries })
    }

    /// Coefficient values in key order at `x`.
    pub fn evaluate_coefficients(&self, x: &[f64]) -> Result<Vec<(Vec<usize>, f64)>, EvalError> {
        let env = self.chart.bindings(x);
        self.coeffs
            .iter()
            .map(|(k, c)| Ok((k.clone(), c.evaluate(&env)?)))
            .collect()
    }
}

/// A 2-form with coefficients compiled for repeated numeric evaluation.
#[derive(Clone, Debug)]
pub struct CompiledTwoForm {
    dim: usize,
    entries: Vec<(usize, usize, CompiledExpr)>,
}

impl CompiledTwoForm {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self, x: &[f64]) -> Result<DMatrix<f64>, EvalError> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (i, j, c) in &self.entries {
            let v = c.eval(x)?;
            m[(*i, *j)] = v;
            m[(*j, *i)] = -v;
        }
        Ok(m)
    }
}

fn fmt_wedge(chart: &Chart, idx: &[usize]) -> String {
    idx.iter().map(|&i| format!("d{}", chart.vars[i])).collect::<Vec<_>>().join("^")
}

impl fmt::Display for DifferentialForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        for (n, (idx, c)) in self.coeffs.iter().enumerate() {
            let negative_single = c.len() == 1 && c.terms().all(|t| num::Signed::is_negative(t.coeff));
            let c = if negative_single { -c } else { c.clone() };
            let sep = match (n, negative_single) {
                (0, true) => "-",
                (0, false) => "",
                (_, true) => " - ",
                (_, false) => " + ",
            };
            write!(f, "{sep}")?;
            if idx.is_empty() {
                if c.len() > 1 {
                    write!(f, "({c})")?;
                } else {
                    write!(f, "{c}")?;
                }
            } else if c == Expression::one() {
                write!(f, "{}", fmt_wedge(&self.chart, idx))?;
            } else if c.len() > 1 {
                write!(f, "({c})*{}", fmt_wedge(&self.chart, idx))?;
            } else {
                write!(f, "{c}*{}", fmt_wedge(&self.chart, idx))?;
            }
        }
        Ok(())
    }
}

/// `Σ X^i ∂_i` with expression components.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorField {
    chart: Chart,
    components: BTreeMap<usize, Expression>,
}

impl VectorField {
    pub fn zero(chart: &Chart) -> Self {
        Self { chart: chart.clone(), components: BTreeMap::new() }
    }

    /// `∂/∂var`.
    pub fn coordinate(chart: &Chart, var: &str) -> Result<Self, FormError> {
        Self::from_named(chart, [(var, Expression::one())])
    }

    pub fn from_named<'a>(
        chart: &Chart,
        comps: impl IntoIterator<Item = (&'a str, Expression)>,
    ) -> Result<Self, FormError> {
        let mut out = Self::zero(chart);
        for (v, e) in comps {
            let i = chart.require(v)?;
            out.set(i, e);
        }
        Ok(out)
    }

    pub fn from_components(chart: &Chart, comps: Vec<Expression>) -> Result<Self, FormError> {
        if comps.len() != chart.dim() {
            return Err(FormError::WrongDegree { expected: chart.dim(), got: comps.len() });
        }
        let mut out = Self::zero(chart);
        for (i, e) in comps.into_iter().enumerate() {
            out.set(i, e);
        }
        Ok(out)
    }

    fn set(&mut self, i: usize, e: Expression) {
        let sum = self.components.remove(&i).unwrap_or_default() + e;
        if !sum.is_zero() {
            self.components.insert(i, sum);
        }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn component(&self, i: usize) -> Expression {
        self.components.get(&i).cloned().unwrap_or_default()
    }

    pub fn component_of(&self, var: &str) -> Result<Expression, FormError> {
        Ok(self.component(self.chart.require(var)?))
    }

    pub fn components(&self) -> Vec<Expression> {
        (0..self.chart.dim()).map(|i| self.component(i)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }

    /// Multiplies every component by `f`.
    pub fn scale(&self, f: &Expression) -> VectorField {
        let mut out = Self::zero(&self.chart);
        for (i, e) in &self.components {
            out.set(*i, e * f);
        }
        out
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        let env = self.chart.bindings(x);
        (0..self.chart.dim())
            .map(|i| match self.components.get(&i) {
                Some(e) => e.evaluate(&env),
                None => Ok(0.0),
            })
            .collect()
    }

    pub fn compile(&self) -> Result<Vec<CompiledExpr>, EvalError> {
        self.components().iter().map(|e| e.compile(&self.chart.vars)).collect()
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.components.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .components
            .iter()
            .map(|(i, e)| {
                let v = &self.chart.vars[*i];
                if *e == Expression::one() {
                    format!("d/d{v}")
                } else {
                    format!("({e})*d/d{v}")
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// A smooth map between charts: each target coordinate as an expression in
/// the source coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChartMap {
    source: Chart,
    target: Chart,
    components: Vec<Expression>,
}

impl ChartMap {
    pub fn new<'a>(
        source: &Chart,
        target: &Chart,
        comps: impl IntoIterator<Item = (&'a str, Expression)>,
    ) -> Result<Self, FormError> {
        let mut slots: Vec<Option<Expression>> = vec![None; target.dim()];
        for (v, e) in comps {
            let i = target.require(v)?;
            if let Some(bad) = e.variables().into_iter().find(|w| source.index_of(w).is_none()) {
                return Err(FormError::UnknownVariable(bad));
            }
            slots[i] = Some(e);
        }
        let components = slots
            .into_iter()
            .enumerate()
            .map(|(i, s)| s.ok_or_else(|| FormError::MissingComponent(target.vars[i].clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { source: source.clone(), target: target.clone(), components })
    }

    pub fn identity(chart: &Chart) -> Self {
        Self {
            source: chart.clone(),
            target: chart.clone(),
            components: chart.vars.iter().map(|v| Expression::var(v)).collect(),
        }
    }

    pub fn source(&self) -> &Chart {
        &self.source
    }

    pub fn target(&self) -> &Chart {
        &self.target
    }

    pub fn component(&self, var: &str) -> Option<&Expression> {
        self.target.index_of(var).map(|i| &self.components[i])
    }

    fn bindings(&self) -> BTreeMap<String, Expression> {
        self.target.vars.iter().cloned().zip(self.components.iter().cloned()).collect()
    }

    /// `dφ_i` as 1-forms on the source chart.
    pub fn differentials(&self) -> Vec<DifferentialForm> {
        self.components
            .iter()
            .map(|phi| {
                let mut out = DifferentialForm::zero(&self.source, 1);
                for (j, v) in self.source.vars.iter().enumerate() {
                    out.accumulate(vec![j], phi.differentiate(v));
                }
                out
            })
            .collect()
    }
}
