//! Singularity type of a 2-form along a hypersurface.
//!
//! With `n = dim/2`, write `ω^n = c · vol`. Near `Z = {h = 0}` the coefficient
//! behaves like `h^e · (non-vanishing)`: `e = 0` is symplectic, `e = -m` is
//! b^m-symplectic and `e = +m` is an m-folded candidate. When `h` is a chart
//! coordinate `e` is read off exactly; otherwise it is fitted along a ray.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num::{Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::exterior::{Chart, DifferentialForm, FormError};
use crate::linalg::numeric_rank;
use crate::symexpr::{fmt_rational, EvalError, ExprError, Expression, Rational};

/// Seed for every sampling step unless the caller overrides it.
pub const DEFAULT_SEED: u64 = 0x5EED_2024;
pub const RESIDUAL_SAMPLES: usize = 20;
pub const SAMPLE_BOX: f64 = 2.0;
pub const MIN_R_SQUARED: f64 = 0.999;
pub const MAX_DENOMINATOR: i64 = 12;
pub const RATIONAL_TOLERANCE: f64 = 0.02;
const NONZERO: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("expected a 2-form, got degree {0}")]
    NotTwoForm(usize),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error("the top power vanishes identically")]
    IdenticallyZeroTopPower,
    #[error("residual vanishes or changes sign on the sampled part of Z")]
    InconclusiveResidual(Box<Classification>),
    #[error("exponent fit rejected: {0}")]
    PoorFit(String),
    #[error("gradient of the defining function vanishes at the seed")]
    GradientVanishes,
    #[error("seed is off the hypersurface: h(seed) = {0}")]
    SeedOffSurface(f64),
    #[error("negative power of `{0}` on Z: the restriction is undefined")]
    PoleOnZ(String),
    #[error("not a b^m-form: {0}")]
    NotABmForm(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Symplectic,
    BSymplectic(u32),
    Folded { m: u32, restriction_ok: bool },
    Degenerate,
}

impl Verdict {
    pub fn order(&self) -> Option<u32> {
        match self {
            Verdict::BSymplectic(m) | Verdict::Folded { m, .. } => Some(*m),
            _ => None,
        }
    }

    fn tag(&self) -> &'static str {
        match self {
            Verdict::Symplectic => "symplectic",
            Verdict::BSymplectic(_) => "b-symplectic",
            Verdict::Folded { .. } => "folded",
            Verdict::Degenerate => "degenerate",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Symplectic => write!(f, "symplectic"),
            Verdict::BSymplectic(1) => write!(f, "b-symplectic"),
            Verdict::BSymplectic(m) => write!(f, "b^{m}-symplectic"),
            Verdict::Folded { m, restriction_ok } => {
                let tail = if *restriction_ok { "" } else { " (restriction to Z not of maximal rank)" };
                if *m == 1 {
                    write!(f, "folded{tail}")
                } else {
                    write!(f, "{m}-folded{tail}")
                }
            }
            Verdict::Degenerate => write!(f, "degenerate"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Symbolic,
    NumericFit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub verdict: Verdict,
    pub exponent: Rational,
    pub residual_nonvanishing: bool,
    pub method: Method,
    pub fit_quality: Option<f64>,
    pub seed: u64,
    pub residual_samples: Vec<f64>,
    /// `ω^n` against the chart-ordered volume (symbolic method only).
    pub top_coefficient: Option<Expression>,
    pub closed: bool,
    pub restriction_rank: Option<usize>,
}

/// Serializable view of a [`Classification`].
#[derive(Clone, Debug, Serialize)]
pub struct ClassificationReport {
    pub verdict: &'static str,
    pub label: String,
    pub m: Option<u32>,
    pub restriction_ok: Option<bool>,
    pub restriction_rank: Option<usize>,
    pub exponent: String,
    pub residual_nonvanishing: bool,
    pub method: Method,
    pub fit_quality: Option<f64>,
    pub seed: u64,
    pub residual_samples: Vec<f64>,
    pub top_coefficient: Option<String>,
    pub closed: bool,
}

impl Classification {
    pub fn report(&self) -> ClassificationReport {
        ClassificationReport {
            verdict: self.verdict.tag(),
            label: self.verdict.to_string(),
            m: self.verdict.order(),
            restriction_ok: match self.verdict {
                Verdict::Folded { restriction_ok, .. } => Some(restriction_ok),
                _ => None,
            },
            restriction_rank: self.restriction_rank,
            exponent: fmt_rational(&self.exponent),
            residual_nonvanishing: self.residual_nonvanishing,
            method: self.method,
            fit_quality: self.fit_quality,
            seed: self.seed,
            residual_samples: self.residual_samples.clone(),
            top_coefficient: self.top_coefficient.as_ref().map(|e| e.to_string()),
            closed: self.closed,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ClassifyOptions {
    pub seed: u64,
    pub samples: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { seed: DEFAULT_SEED, samples: RESIDUAL_SAMPLES }
    }
}

/// `Z = {h = 0}` with a point on it from which transversal rays are cast.
#[derive(Clone, Debug)]
pub struct Hypersurface {
    defining: Expression,
    seed: BTreeMap<String, f64>,
}

impl Hypersurface {
    pub fn new(defining: Expression, seed: BTreeMap<String, f64>) -> Result<Self, ClassifyError> {
        let h = defining.evaluate_with(|v| seed.get(v).copied())?;
        if h.abs() > 1e-12 {
            return Err(ClassifyError::SeedOffSurface(h));
        }
        Ok(Self { defining, seed })
    }

    pub fn defining(&self) -> &Expression {
        &self.defining
    }

    pub fn seed(&self) -> &BTreeMap<String, f64> {
        &self.seed
    }
}

fn check_two_form(omega: &DifferentialForm) -> Result<(), ClassifyError> {
    if omega.degree() != 2 {
        return Err(ClassifyError::NotTwoForm(omega.degree()));
    }
    Ok(())
}

fn top_coefficient(omega: &DifferentialForm) -> Result<Expression, ClassifyError> {
    check_two_form(omega)?;
    let top = omega.top_power()?.top_coefficient();
    if top.is_zero() {
        return Err(ClassifyError::IdenticallyZeroTopPower);
    }
    Ok(top)
}

fn verdict_for(exponent: &Rational, restriction_ok: impl FnOnce() -> bool) -> Verdict {
    if !exponent.is_integer() {
        return Verdict::Degenerate;
    }
    let e = exponent.to_i64().unwrap_or(i64::MAX);
    match e {
        0 => Verdict::Symplectic,
        e if e < 0 => Verdict::BSymplectic((-e) as u32),
        e => Verdict::Folded { m: e as u32, restriction_ok: restriction_ok() },
    }
}

/// Random points of `{var = 0}` in the sampling box, in chart order.
fn points_on_coordinate_zero(chart: &Chart, var: usize, opts: &ClassifyOptions) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    (0..opts.samples)
        .map(|_| {
            (0..chart.dim())
                .map(|i| if i == var { 0.0 } else { rng.gen_range(-SAMPLE_BOX..=SAMPLE_BOX) })
                .collect()
        })
        .collect()
}

pub fn classify_along_coordinate(omega: &DifferentialForm, var: &str) -> Result<Classification, ClassifyError> {
    classify_along_coordinate_with(omega, var, &ClassifyOptions::default())
}

pub fn classify_along_coordinate_with(
    omega: &DifferentialForm,
    var: &str,
    opts: &ClassifyOptions,
) -> Result<Classification, ClassifyError> {
    let chart = omega.chart();
    let k = chart.index_of(var).ok_or_else(|| FormError::UnknownVariable(var.to_string()))?;
    let top = top_coefficient(omega)?;
    let (exponent, residual) = top.leading_exponent(var)?;
    let compiled = residual.compile(chart.vars())?;
    let samples: Vec<f64> = points_on_coordinate_zero(chart, k, opts)
        .iter()
        .map(|p| compiled.eval(p).unwrap_or(f64::NAN))
        .collect();
    let residual_nonvanishing = sign_constant(&samples);
    let mut restriction = None;
    let verdict = verdict_for(&exponent, || {
        restriction = restriction_rank_with(omega, var, opts).ok();
        restriction.is_some_and(|(_, ok)| ok)
    });
    let out = Classification {
        verdict: if residual_nonvanishing { verdict } else { Verdict::Degenerate },
        exponent,
        residual_nonvanishing,
        method: Method::Symbolic,
        fit_quality: None,
        seed: opts.seed,
        residual_samples: samples,
        top_coefficient: Some(top),
        closed: omega.is_closed(),
        restriction_rank: restriction.map(|r| r.0),
    };
    if residual_nonvanishing {
        Ok(out)
    } else {
        Err(ClassifyError::InconclusiveResidual(Box::new(out)))
    }
}

fn sign_constant(samples: &[f64]) -> bool {
    !samples.is_empty()
        && (samples.iter().all(|&v| v.is_finite() && v > NONZERO)
            || samples.iter().all(|&v| v.is_finite() && v < -NONZERO))
}

/// Nearest `p/q` with `q ≤ MAX_DENOMINATOR` within `RATIONAL_TOLERANCE`.
pub fn reconstruct_rational(x: f64) -> Option<Rational> {
    let mut best: Option<(f64, Rational)> = None;
    for q in 1..=MAX_DENOMINATOR {
        let p = (x * q as f64).round();
        let dist = (x - p / q as f64).abs();
        if best.as_ref().is_none_or(|(d, _)| dist < *d - 1e-15) {
            best = Some((dist, Rational::new((p as i64).into(), q.into())));
        }
    }
    best.filter(|(d, _)| *d <= RATIONAL_TOLERANCE).map(|(_, r)| r)
}

/// Least-squares line through `(x_i, y_i)`: `(slope, intercept, R²)`.
/// A flat response counts as a perfect fit.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r2 = if ss_tot <= 1e-24 * n.max(1.0) { 1.0 } else { 1.0 - ss_res / ss_tot };
    (slope, intercept, r2)
}

pub fn classify_along_hypersurface(
    omega: &DifferentialForm,
    z: &Hypersurface,
) -> Result<Classification, ClassifyError> {
    classify_along_hypersurface_with(omega, z, &ClassifyOptions::default())
}

pub fn classify_along_hypersurface_with(
    omega: &DifferentialForm,
    z: &Hypersurface,
    opts: &ClassifyOptions,
) -> Result<Classification, ClassifyError> {
    let chart = omega.chart();
    let top = top_coefficient(omega)?;
    let c = top.compile(chart.vars())?;
    let h = z.defining.compile(chart.vars())?;
    let grad = gradient(&z.defining, chart)?;
    let seed = chart.point(&z.seed)?;
    let g = eval_all(&grad, &seed)?;
    let norm = g.norm();
    if norm < 1e-12 {
        return Err(ClassifyError::GradientVanishes);
    }
    let dir = g / norm;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for j in 4..=14 {
        let s = 2f64.powi(-j);
        let p: Vec<f64> = seed.iter().zip(dir.iter()).map(|(a, d)| a + s * d).collect();
        let hv = h.eval(&p)?;
        let cv = c.eval(&p)?;
        if hv == 0.0 || cv == 0.0 {
            return Err(ClassifyError::PoorFit(format!("zero value at s = 2^-{j}")));
        }
        xs.push(hv.abs().ln());
        ys.push(cv.abs().ln());
    }
    let (slope, _, r2) = linear_fit(&xs, &ys);
    if !(r2 >= MIN_R_SQUARED) {
        return Err(ClassifyError::PoorFit(format!("R² = {r2:.6} below {MIN_R_SQUARED}")));
    }
    let exponent = reconstruct_rational(slope)
        .ok_or_else(|| ClassifyError::PoorFit(format!("slope {slope:.6} has no small rational near it")))?;
    let e = exponent.to_f64().unwrap_or(f64::NAN);
    let residual_samples: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| (y - e * x).exp()).collect();
    let mut restriction = None;
    let verdict = verdict_for(&exponent, || {
        restriction = tangent_restriction_rank(omega, z, opts).ok();
        restriction.is_some_and(|r| r == chart.dim() - 2)
    });
    Ok(Classification {
        verdict,
        exponent,
        residual_nonvanishing: true,
        method: Method::NumericFit,
        fit_quality: Some(r2),
        seed: opts.seed,
        residual_samples,
        top_coefficient: None,
        closed: omega.is_closed(),
        restriction_rank: restriction,
    })
}

fn gradient(h: &Expression, chart: &Chart) -> Result<Vec<crate::symexpr::CompiledExpr>, EvalError> {
    chart.vars().iter().map(|v| h.differentiate(v).compile(chart.vars())).collect()
}

fn eval_all(g: &[crate::symexpr::CompiledExpr], p: &[f64]) -> Result<DVector<f64>, EvalError> {
    Ok(DVector::from_vec(g.iter().map(|e| e.eval(p)).collect::<Result<Vec<_>, _>>()?))
}

/// Rank of `ω` restricted to `T Z` at Newton-projected random points of `Z`.
fn tangent_restriction_rank(
    omega: &DifferentialForm,
    z: &Hypersurface,
    opts: &ClassifyOptions,
) -> Result<usize, ClassifyError> {
    let chart = omega.chart();
    let n = chart.dim();
    let h = z.defining.compile(chart.vars())?;
    let grad = gradient(&z.defining, chart)?;
    let form = omega.compile_two_form()?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut points = vec![chart.point(&z.seed)?];
    points.extend((0..opts.samples).map(|_| (0..n).map(|_| rng.gen_range(-SAMPLE_BOX..=SAMPLE_BOX)).collect()));
    let mut best = 0;
    for mut p in points {
        let mut on_z = false;
        for _ in 0..60 {
            let (Ok(hv), Ok(g)) = (h.eval(&p), eval_all(&grad, &p)) else { break };
            if hv.abs() < 1e-13 {
                on_z = true;
                break;
            }
            let g2 = g.norm_squared();
            if g2 < 1e-24 {
                break;
            }
            for (x, gi) in p.iter_mut().zip(g.iter()) {
                *x -= hv * gi / g2;
            }
        }
        if !on_z {
            continue;
        }
        let (Ok(g), Ok(m)) = (eval_all(&grad, &p), form.matrix(&p)) else { continue };
        let basis = tangent_basis(&g);
        let restricted = basis.transpose() * m * &basis;
        best = best.max(numeric_rank(&restricted));
    }
    Ok(best)
}

/// Orthonormal basis of the hyperplane orthogonal to `g`, as columns.
fn tangent_basis(g: &DVector<f64>) -> DMatrix<f64> {
    let n = g.len();
    let row = DMatrix::from_row_slice(1, n, g.as_slice());
    let svd = row.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    // rows 1.. of the full V^T span the kernel; thin SVD gives only one row,
    // so complete it with Gram-Schmidt against the remaining coordinate axes.
    let mut cols: Vec<DVector<f64>> = vec![vt.row(0).transpose()];
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        for c in &cols {
            let proj = c.dot(&e);
            e -= c * proj;
        }
        let norm = e.norm();
        if norm > 1e-8 {
            cols.push(e / norm);
        }
        if cols.len() == n {
            break;
        }
    }
    DMatrix::from_columns(&cols[1..])
}

/// Rank of `ω|_Z` for `Z = {var = 0}` and whether it is maximal (`dim - 2`).
pub fn restriction_rank(omega: &DifferentialForm, var: &str) -> Result<(usize, bool), ClassifyError> {
    restriction_rank_with(omega, var, &ClassifyOptions::default())
}

pub fn restriction_rank_with(
    omega: &DifferentialForm,
    var: &str,
    opts: &ClassifyOptions,
) -> Result<(usize, bool), ClassifyError> {
    check_two_form(omega)?;
    let chart = omega.chart();
    let k = chart.index_of(var).ok_or_else(|| FormError::UnknownVariable(var.to_string()))?;
    if omega.min_exponent(var).is_some_and(|e| e.is_negative()) {
        return Err(ClassifyError::PoleOnZ(var.to_string()));
    }
    let restricted = omega.restrict_to_zero_of(var)?;
    if restricted.is_zero() {
        return Ok((0, false));
    }
    let form = restricted.compile_two_form()?;
    let mut best = 0;
    for p in points_on_coordinate_zero(chart, k, opts) {
        if let Ok(m) = form.matrix(&p) {
            best = best.max(numeric_rank(&m));
        }
    }
    Ok((best, best == chart.dim() - 2))
}

/// `ω = (d var / var^m) ∧ Σ var^i α_i + β`.
#[derive(Clone, Debug, PartialEq)]
pub struct BDecomposition {
    pub var: String,
    pub m: u32,
    pub alphas: Vec<DifferentialForm>,
    pub beta: DifferentialForm,
}

impl BDecomposition {
    pub fn reassemble(&self) -> Result<DifferentialForm, FormError> {
        let chart = self.beta.chart();
        let dvar = DifferentialForm::monomial(
            chart,
            Expression::var_pow(&self.var, -Rational::from_integer(self.m.into())),
            &[&self.var],
        )?;
        let mut sum = DifferentialForm::zero(chart, 1);
        for (i, a) in self.alphas.iter().enumerate() {
            sum = sum.add(&a.scale(&Expression::var_pow(&self.var, Rational::from_integer(i.into()))))?;
        }
        dvar.wedge(&sum)?.add(&self.beta)
    }
}

pub fn b_decomposition(omega: &DifferentialForm, var: &str, m: u32) -> Result<BDecomposition, ClassifyError> {
    check_two_form(omega)?;
    let chart = omega.chart();
    let k = chart.index_of(var).ok_or_else(|| FormError::UnknownVariable(var.to_string()))?;
    let m_r = Rational::from_integer(m.into());
    let mut alpha_coeffs: Vec<Vec<(Vec<usize>, Expression)>> = vec![Vec::new(); m as usize];
    let mut beta = Vec::new();
    for (idx, c) in omega.coefficients() {
        let pos = idx.iter().position(|&i| i == k);
        for (e, part) in c.split_by_power(var) {
            if !e.is_negative() {
                beta.push((idx.to_vec(), &part * &Expression::var_pow(var, e)));
                continue;
            }
            let Some(pos) = pos else {
                return Err(ClassifyError::NotABmForm(format!(
                    "pole of order {} without d{var}",
                    fmt_rational(&-e)
                )));
            };
            if !e.is_integer() || e < -m_r.clone() {
                return Err(ClassifyError::NotABmForm(format!(
                    "exponent {} outside the b^{m} pattern",
                    fmt_rational(&e)
                )));
            }
            let i = (e + &m_r).to_usize().expect("0 ≤ i < m");
            let mut rest = idx.to_vec();
            rest.remove(pos);
            let part = if pos % 2 == 0 { part } else { -part };
            alpha_coeffs[i].push((rest, part));
        }
    }
    let alphas = alpha_coeffs
        .into_iter()
        .map(|cs| DifferentialForm::from_coefficients(chart, 1, cs))
        .collect::<Result<Vec<_>, _>>()?;
    let beta = DifferentialForm::from_coefficients(chart, 2, beta)?;
    Ok(BDecomposition { var: var.to_string(), m, alphas, beta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::rat;

    fn form(vars: &[&str], text: &str) -> DifferentialForm {
        DifferentialForm::parse(&Chart::new(vars).unwrap(), text).unwrap()
    }

    #[test]
    fn coordinate_verdicts() {
        let inf = form(&["x", "alpha", "Pr", "Palpha"], "-4*x^(-3)*dx^dPr + dalpha^dPalpha");
        let c = classify_along_coordinate(&inf, "x").unwrap();
        assert_eq!(c.verdict, Verdict::BSymplectic(3));
        assert_eq!(c.exponent, rat(-3, 1));
        assert_eq!(c.residual_samples.len(), RESIDUAL_SAMPLES);

        let folded = form(&["x1", "y1", "x2", "y2"], "y1*dx1^dy1 + dx2^dy2");
        let c = classify_along_coordinate(&folded, "y1").unwrap();
        assert_eq!(c.verdict, Verdict::Folded { m: 1, restriction_ok: true });
        assert_eq!(c.restriction_rank, Some(2));

        let std = form(&["x1", "y1", "x2", "y2"], "dx1^dy1 + dx2^dy2");
        assert_eq!(classify_along_coordinate(&std, "y1").unwrap().verdict, Verdict::Symplectic);

        let frac = form(&["r", "t", "v", "w"], "r^(-1/3)*dr^dv + dt^dw");
        let c = classify_along_coordinate(&frac, "r").unwrap();
        assert_eq!(c.verdict, Verdict::Degenerate);
        assert_eq!(c.exponent, rat(-1, 3));
    }

    #[test]
    fn coordinate_errors() {
        let zero_top = form(&["x1", "y1", "x2", "y2"], "dx1^dy1");
        assert_eq!(classify_along_coordinate(&zero_top, "y1"), Err(ClassifyError::IdenticallyZeroTopPower));
        // residual x2 changes sign on Z
        let bad = form(&["x1", "y1", "x2", "y2"], "x2*dx1^dy1 + dx2^dy2");
        match classify_along_coordinate(&bad, "y1") {
            Err(ClassifyError::InconclusiveResidual(c)) => assert_eq!(c.verdict, Verdict::Degenerate),
            other => panic!("{other:?}"),
        }
        let one = form(&["x", "y"], "dx");
        assert_eq!(classify_along_coordinate(&one, "x"), Err(ClassifyError::NotTwoForm(1)));
    }

    #[test]
    fn fold_with_degenerate_restriction() {
        // closed, ω² = 2 y1 vol, and the pullback to {y1 = 0} is zero
        let w = form(&["x1", "y1", "x2", "y2"], "dx1^dy1 + x2*dy1^dy2 + y1*dx2^dy2");
        assert!(w.is_closed());
        let c = classify_along_coordinate(&w, "y1").unwrap();
        assert_eq!(c.verdict, Verdict::Folded { m: 1, restriction_ok: false });
        assert_eq!(restriction_rank(&w, "y1").unwrap(), (0, false));
    }

    #[test]
    fn restriction_rank_errors() {
        let inf = form(&["x", "alpha", "Pr", "Palpha"], "-4*x^(-3)*dx^dPr + dalpha^dPalpha");
        assert_eq!(restriction_rank(&inf, "x"), Err(ClassifyError::PoleOnZ("x".into())));
        let folded = form(&["x1", "y1", "x2", "y2"], "y1*dx1^dy1 + dx2^dy2");
        assert_eq!(restriction_rank(&folded, "y1").unwrap(), (2, true));
    }

    #[test]
    fn numeric_fit_matches_symbolic() {
        let inf = form(&["x", "alpha", "Pr", "Palpha"], "-4*x^(-3)*dx^dPr + dalpha^dPalpha");
        let seed: BTreeMap<String, f64> =
            [("x", 0.0), ("alpha", 0.3), ("Pr", -0.2), ("Palpha", 0.5)].iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let z = Hypersurface::new(Expression::var("x"), seed).unwrap();
        let c = classify_along_hypersurface(&inf, &z).unwrap();
        assert_eq!(c.exponent, rat(-3, 1));
        assert_eq!(c.verdict, Verdict::BSymplectic(3));
        assert!(c.fit_quality.unwrap() > MIN_R_SQUARED);
    }

    #[test]
    fn numeric_fit_on_a_curved_fold() {
        // ω² is a constant times u1^2 - u2^2
        let w = form(&["u1", "u2", "p1", "p2"], "du1^dp1 + (u1^2 - u2^2)*du2^dp2");
        let seed: BTreeMap<String, f64> =
            [("u1", 1.0), ("u2", 1.0), ("p1", 0.1), ("p2", 0.2)].iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let z = Hypersurface::new(Expression::parse("u1^2 - u2^2").unwrap(), seed.clone()).unwrap();
        let c = classify_along_hypersurface(&w, &z).unwrap();
        assert_eq!(c.exponent, rat(1, 1));
        assert!(matches!(c.verdict, Verdict::Folded { m: 1, .. }));
        let std = form(&["u1", "u2", "p1", "p2"], "du1^dp1 + du2^dp2");
        assert_eq!(classify_along_hypersurface(&std, &z).unwrap().verdict, Verdict::Symplectic);
        let flat = Hypersurface::new(Expression::parse("(u1 - 1)^2").unwrap(), seed);
        assert!(matches!(classify_along_hypersurface(&std, &flat.unwrap()), Err(ClassifyError::GradientVanishes)));
    }

    #[test]
    fn hypersurface_seed_must_lie_on_z() {
        let seed: BTreeMap<String, f64> = [("x", 0.5)].iter().map(|(k, v)| (k.to_string(), *v)).collect();
        assert!(matches!(
            Hypersurface::new(Expression::var("x"), seed),
            Err(ClassifyError::SeedOffSurface(_))
        ));
    }

    #[test]
    fn rational_reconstruction() {
        assert_eq!(reconstruct_rational(-1.0004), Some(rat(-1, 1)));
        assert_eq!(reconstruct_rational(0.3335), Some(rat(1, 3)));
        assert_eq!(reconstruct_rational(-0.142), Some(rat(-1, 7)));
        assert_eq!(reconstruct_rational(2.0 / 5.0 + 0.001), Some(rat(2, 5)));
    }

    #[test]
    fn b_decompositions() {
        let inf = form(&["x", "alpha", "Pr", "Palpha"], "-4*x^(-3)*dx^dPr + dalpha^dPalpha");
        let d = b_decomposition(&inf, "x", 3).unwrap();
        let c = inf.chart();
        assert_eq!(d.alphas[0], DifferentialForm::parse(c, "-4*dPr").unwrap());
        assert!(d.alphas[1].is_zero() && d.alphas[2].is_zero());
        assert_eq!(d.beta, DifferentialForm::parse(c, "dalpha^dPalpha").unwrap());
        assert_eq!(d.reassemble().unwrap(), inf);

        let bd = form(&["x1", "y1", "x2", "y2"], "y1^(-1)*dx1^dy1 + dx2^dy2");
        let d = b_decomposition(&bd, "y1", 1).unwrap();
        assert_eq!(d.alphas[0], DifferentialForm::parse(bd.chart(), "-dx1").unwrap());
        assert_eq!(d.reassemble().unwrap(), bd);

        let std = form(&["x1", "y1", "x2", "y2"], "dx1^dy1 + dx2^dy2");
        let d = b_decomposition(&std, "y1", 1).unwrap();
        assert!(d.alphas[0].is_zero());
        assert_eq!(d.beta, std);

        assert!(matches!(b_decomposition(&inf, "x", 2), Err(ClassifyError::NotABmForm(_))));
        let stray = form(&["x1", "y1", "x2", "y2"], "y1^(-1)*dx2^dy2 + dx1^dy1");
        assert!(matches!(b_decomposition(&stray, "y1", 1), Err(ClassifyError::NotABmForm(_))));
    }

    #[test]
    fn report_serializes() {
        let inf = form(&["x", "alpha", "Pr", "Palpha"], "-4*x^(-3)*dx^dPr + dalpha^dPalpha");
        let r = classify_along_coordinate(&inf, "x").unwrap().report();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["verdict"], "b-symplectic");
        assert_eq!(v["m"], 3);
        assert_eq!(v["exponent"], "-3");
        assert_eq!(v["method"], "symbolic");
        assert_eq!(v["seed"], DEFAULT_SEED);
    }
}
