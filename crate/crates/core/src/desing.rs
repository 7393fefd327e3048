//! Desingularization of b^{2k}-forms: `dx/x^{2k}` is replaced by `df_ε`, where
//! `f_ε(x) = ε^{-(2k-1)} f(x/ε)` and `f` is odd with `f'(x) = x^{-2k}` for `|x| > 1`.
//!
//! On `[-1, 1]` the profile is the odd quintic `a x + c x³ + e x⁵` matching the
//! outer branch to second order at `x = 1`, so `f` is C² globally.

use nalgebra::DMatrix;
use num::{Signed, ToPrimitive};
use serde::Serialize;
use thiserror::Error;

use crate::classify::{b_decomposition, ClassifyError};
use crate::exterior::{Chart, CompiledTwoForm, DifferentialForm, FormError};
use crate::linalg::pfaffian;
use crate::symexpr::{fmt_rational, CompiledExpr, EvalError, Rational};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DesingError {
    #[error("k must be positive")]
    InvalidK,
    #[error("pole of odd order {0}: only b^{{2k}}-forms are desingularized")]
    OddPoleOrder(u32),
    #[error("epsilon must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error("epsilons must be strictly decreasing")]
    EpsilonsNotDecreasing,
    #[error("profile derivative is not positive at x = {0}")]
    ProfileNotMonotone(f64),
    #[error("coefficient matrix is singular at {0:?}")]
    SingularMatrixAtSample(Vec<f64>),
    #[error("sample {0:?} lies on Z")]
    SampleOnZ(Vec<f64>),
    #[error("bad grid spec: {0}")]
    Grid(String),
    #[error("`{0}` is not a chart variable")]
    UnknownVariable(String),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Odd C² profile for pole order `2k`.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothingProfile {
    k: u32,
    coeffs: [Rational; 3],
    float: [f64; 3],
    continuity_order: u32,
}

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

impl SmoothingProfile {
    pub fn new(k: u32) -> Result<Self, DesingError> {
        if k == 0 {
            return Err(DesingError::InvalidK);
        }
        let kk = i64::from(k);
        // a + c + e = 2 - 1/(2k-1),  a + 3c + 5e = 1,  6c + 20e = -2k
        let value = q(2, 1) - q(1, 2 * kk - 1);
        // subtracting the first two rows: 2c + 4e = 1 - value
        let d1 = q(1, 1) - &value;
        // 6c + 20e = -2k with c = d1/2 - 2e  ⇒  8e = -2k - 3 d1
        let e = (q(-2 * kk, 1) - q(3, 1) * &d1) / q(8, 1);
        let c = &d1 / q(2, 1) - q(2, 1) * &e;
        let a = &value - &c - &e;
        let float = [a.to_f64().unwrap(), c.to_f64().unwrap(), e.to_f64().unwrap()];
        let mut p = Self { k, coeffs: [a, c, e], float, continuity_order: 0 };
        p.continuity_order = p.matched_order();
        for i in 0..=1000 {
            let x = -1.0 + 2.0 * i as f64 / 1000.0;
            if p.inner_prime(x) <= 0.0 {
                return Err(DesingError::ProfileNotMonotone(x));
            }
        }
        Ok(p)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// `(a, c, e)` of `p(x) = a x + c x³ + e x⁵`.
    pub fn coefficients(&self) -> &[Rational; 3] {
        &self.coeffs
    }

    pub fn continuity_order(&self) -> u32 {
        self.continuity_order
    }

    /// Number of derivatives at `x = 1` where the quintic and the outer
    /// branch agree exactly.
    fn matched_order(&self) -> u32 {
        let [a, c, e] = &self.coeffs;
        let kk = i64::from(self.k);
        let inner = [
            a + c + e,
            a + q(3, 1) * c + q(5, 1) * e,
            q(6, 1) * c + q(20, 1) * e,
            q(6, 1) * c + q(60, 1) * e,
        ];
        let outer = [q(2, 1) - q(1, 2 * kk - 1), q(1, 1), q(-2 * kk, 1), q(2 * kk * (2 * kk + 1), 1)];
        inner.iter().zip(&outer).take_while(|(i, o)| i == o).count() as u32 - 1
    }

    fn inner(&self, x: f64) -> f64 {
        let [a, c, e] = self.float;
        let x2 = x * x;
        x * (a + x2 * (c + x2 * e))
    }

    fn inner_prime(&self, x: f64) -> f64 {
        let [a, c, e] = self.float;
        let x2 = x * x;
        a + x2 * (3.0 * c + 5.0 * e * x2)
    }

    /// `f(x)`.
    pub fn f(&self, x: f64) -> f64 {
        if x.abs() <= 1.0 {
            self.inner(x)
        } else {
            let n = 2 * self.k as i32 - 1;
            -1.0 / (f64::from(n) * x.powi(n)) + 2.0 * x.signum()
        }
    }

    /// `f'(x)`.
    pub fn f_prime(&self, x: f64) -> f64 {
        if x.abs() <= 1.0 {
            self.inner_prime(x)
        } else {
            x.powi(-2 * self.k as i32)
        }
    }

    /// `f_ε(x) = ε^{-(2k-1)} f(x/ε)`.
    pub fn f_eps(&self, eps: f64, x: f64) -> f64 {
        eps.powi(-(2 * self.k as i32 - 1)) * self.f(x / eps)
    }

    /// `f_ε'(x)`; outside the collar this is `x^{-2k}` computed directly,
    /// so it agrees bit for bit with the undesingularized coefficient.
    pub fn f_eps_prime(&self, eps: f64, x: f64) -> f64 {
        if x.abs() > eps {
            x.powi(-2 * self.k as i32)
        } else {
            eps.powi(-2 * self.k as i32) * self.inner_prime(x / eps)
        }
    }
}

/// A 2-form known only through pointwise evaluation of its matrix.
pub trait NumericForm {
    fn chart(&self) -> &Chart;
    fn matrix(&self, p: &[f64]) -> Result<DMatrix<f64>, EvalError>;
}

/// A symbolic 2-form compiled for evaluation.
pub struct CompiledForm {
    chart: Chart,
    inner: CompiledTwoForm,
}

impl CompiledForm {
    pub fn new(omega: &DifferentialForm) -> Result<Self, DesingError> {
        if omega.degree() != 2 {
            return Err(ClassifyError::NotTwoForm(omega.degree()).into());
        }
        Ok(Self { chart: omega.chart().clone(), inner: omega.compile_two_form()? })
    }
}

impl NumericForm for CompiledForm {
    fn chart(&self) -> &Chart {
        &self.chart
    }

    fn matrix(&self, p: &[f64]) -> Result<DMatrix<f64>, EvalError> {
        self.inner.matrix(p)
    }
}

/// `ω_ε = df_ε ∧ Σ x^i α_i + β`.
pub struct Desingularized {
    chart: Chart,
    var: usize,
    eps: f64,
    profile: SmoothingProfile,
    /// `(i, j, a)`: term `x^i · a · dvar ∧ dx_j`.
    alpha_terms: Vec<(i32, usize, CompiledExpr)>,
    beta: CompiledTwoForm,
}

impl Desingularized {
    pub fn eps(&self) -> f64 {
        self.eps
    }

    fn dvar_coefficient(&self, i: i32, p: &[f64]) -> f64 {
        let x = p[self.var];
        self.profile.f_eps_prime(self.eps, x) * x.powi(i)
    }
}

impl NumericForm for Desingularized {
    fn chart(&self) -> &Chart {
        &self.chart
    }

    fn matrix(&self, p: &[f64]) -> Result<DMatrix<f64>, EvalError> {
        let mut m = self.beta.matrix(p)?;
        let k = self.var;
        for (i, j, a) in &self.alpha_terms {
            let v = self.dvar_coefficient(*i, p) * a.eval(p)?;
            m[(k, *j)] += v;
            m[(*j, k)] -= v;
        }
        Ok(m)
    }
}

pub fn desingularize(
    omega: &DifferentialForm,
    var: &str,
    eps: f64,
    profile: &SmoothingProfile,
) -> Result<Desingularized, DesingError> {
    if !(eps > 0.0) {
        return Err(DesingError::InvalidEpsilon(eps));
    }
    let chart = omega.chart();
    let k = chart.index_of(var).ok_or_else(|| DesingError::UnknownVariable(var.to_string()))?;
    if let Some(lowest) = omega.min_exponent(var).filter(|e| e.is_negative() && e.is_integer()) {
        let order = (-lowest).to_u32().unwrap_or(u32::MAX);
        if order % 2 == 1 {
            return Err(DesingError::OddPoleOrder(order));
        }
    }
    let d = b_decomposition(omega, var, 2 * profile.k())?;
    let mut alpha_terms = Vec::new();
    for (i, alpha) in d.alphas.iter().enumerate() {
        for (idx, c) in alpha.coefficients() {
            alpha_terms.push((i as i32, idx[0], c.compile(chart.vars())?));
        }
    }
    Ok(Desingularized {
        chart: chart.clone(),
        var: k,
        eps,
        profile: profile.clone(),
        alpha_terms,
        beta: d.beta.compile_two_form()?,
    })
}

/// Axis-aligned lattice `lo:hi:n` per coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    axes: Vec<(f64, f64, usize)>,
}

impl Grid {
    /// A single axis spec is repeated for every coordinate.
    pub fn parse(text: &str, dim: usize) -> Result<Self, DesingError> {
        let axes = text
            .split(',')
            .map(|a| {
                let parts: Vec<&str> = a.trim().split(':').collect();
                let [lo, hi, n] = parts[..] else {
                    return Err(DesingError::Grid(format!("`{a}` is not lo:hi:n")));
                };
                let num = |s: &str| s.trim().parse::<f64>().map_err(|_| DesingError::Grid(format!("bad number `{s}`")));
                let n: usize = n.trim().parse().map_err(|_| DesingError::Grid(format!("bad count `{n}`")))?;
                if n == 0 {
                    return Err(DesingError::Grid("axis with zero points".into()));
                }
                Ok((num(lo)?, num(hi)?, n))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let axes = match axes.len() {
            1 => vec![axes[0]; dim],
            n if n == dim => axes,
            n => return Err(DesingError::Grid(format!("{n} axes for a {dim}-dimensional chart"))),
        };
        Ok(Self { axes })
    }

    pub fn uniform(lo: f64, hi: f64, n: usize, dim: usize) -> Self {
        Self { axes: vec![(lo, hi, n); dim] }
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.2).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn coordinate(&self, axis: usize, i: usize) -> f64 {
        let (lo, hi, n) = self.axes[axis];
        if n == 1 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    }

    /// Lattice points in row-major order (last axis fastest).
    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |mut flat| {
            let mut p = vec![0.0; self.axes.len()];
            for axis in (0..self.axes.len()).rev() {
                let n = self.axes[axis].2;
                p[axis] = self.coordinate(axis, flat % n);
                flat /= n;
            }
            p
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GridFailure {
    pub point: Vec<f64>,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct GridReport {
    pub points: usize,
    pub min_abs_det: f64,
    pub max_abs_det: f64,
    /// `det > 0` at every point (the determinant of an antisymmetric matrix is `Pf²`).
    pub det_sign_constant: bool,
    /// The Pfaffian keeps one sign over the grid: the orientation never flips.
    pub pfaffian_sign_constant: bool,
    pub failures: Vec<GridFailure>,
    /// Determinant at each grid point in lattice order (`NaN` where evaluation failed).
    #[serde(skip)]
    pub dets: Vec<(Vec<f64>, f64)>,
}

impl GridReport {
    pub fn symplectic(&self) -> bool {
        self.failures.is_empty() && self.det_sign_constant && self.pfaffian_sign_constant && self.min_abs_det > 0.0
    }
}

pub fn verify_symplectic_on_grid(form: &dyn NumericForm, grid: &Grid) -> GridReport {
    let mut min_abs_det = f64::INFINITY;
    let mut max_abs_det = 0.0f64;
    let mut signs = (false, false);
    let mut det_positive = true;
    let mut failures = Vec::new();
    let mut dets = Vec::with_capacity(grid.len());
    for p in grid.points() {
        match form.matrix(&p) {
            Ok(m) => {
                let det = m.determinant();
                let pf = pfaffian(&m);
                if !det.is_finite() || !pf.is_finite() {
                    failures.push(GridFailure { point: p.clone(), reason: "non-finite determinant".into() });
                    dets.push((p, f64::NAN));
                    continue;
                }
                min_abs_det = min_abs_det.min(det.abs());
                max_abs_det = max_abs_det.max(det.abs());
                det_positive &= det > 0.0;
                if pf > 0.0 {
                    signs.0 = true;
                } else if pf < 0.0 {
                    signs.1 = true;
                } else {
                    failures.push(GridFailure { point: p.clone(), reason: "degenerate".into() });
                }
                dets.push((p, det));
            }
            Err(err) => {
                failures.push(GridFailure { point: p.clone(), reason: err.to_string() });
                dets.push((p, f64::NAN));
            }
        }
    }
    if dets.iter().all(|(_, d)| d.is_nan()) {
        min_abs_det = 0.0;
    }
    GridReport {
        points: dets.len(),
        min_abs_det,
        max_abs_det,
        det_sign_constant: det_positive && failures.is_empty(),
        pfaffian_sign_constant: !(signs.0 && signs.1),
        failures,
        dets,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub sup_deviation: f64,
}

/// `sup_p ‖ω_ε^{-1}(p) - ω^{-1}(p)‖_F` for each `ε`.
pub fn convergence_report(
    omega: &DifferentialForm,
    var: &str,
    profile: &SmoothingProfile,
    epsilons: &[f64],
    samples: &[Vec<f64>],
) -> Result<Vec<ConvergenceRow>, DesingError> {
    if epsilons.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(DesingError::EpsilonsNotDecreasing);
    }
    if samples.is_empty() {
        return Ok(Vec::new());
    }
    let k = omega.chart().index_of(var).ok_or_else(|| DesingError::UnknownVariable(var.to_string()))?;
    let exact = omega.compile_two_form()?;
    let inverse = |m: DMatrix<f64>, p: &[f64]| {
        m.try_inverse().ok_or_else(|| DesingError::SingularMatrixAtSample(p.to_vec()))
    };
    let mut exact_inv = Vec::with_capacity(samples.len());
    for p in samples {
        if p[k] == 0.0 {
            return Err(DesingError::SampleOnZ(p.clone()));
        }
        exact_inv.push(inverse(exact.matrix(p)?, p)?);
    }
    let mut rows = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let d = desingularize(omega, var, eps, profile)?;
        let mut sup = 0.0f64;
        for (p, inv) in samples.iter().zip(&exact_inv) {
            let diff = inverse(d.matrix(p)?, p)? - inv;
            sup = sup.max(diff.norm());
        }
        rows.push(ConvergenceRow { eps, sup_deviation: sup });
    }
    Ok(rows)
}

/// Exact profile coefficients as `p/q` strings, for reports.
pub fn profile_summary(p: &SmoothingProfile) -> serde_json::Value {
    let [a, c, e] = p.coefficients();
    serde_json::json!({
        "k": p.k(),
        "a": fmt_rational(a),
        "c": fmt_rational(c),
        "e": fmt_rational(e),
        "continuity_order": p.continuity_order(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn profile_coefficients() {
        let p = SmoothingProfile::new(1).unwrap();
        assert_eq!(p.coefficients(), &[q(3, 4), q(1, 2), q(-1, 4)]);
        assert_eq!(p.continuity_order(), 2);
        let p2 = SmoothingProfile::new(2).unwrap();
        assert_eq!(p2.coefficients(), &[q(7, 4), q(1, 6), q(-1, 4)]);
        assert_eq!(p2.continuity_order(), 2);
        assert_eq!(SmoothingProfile::new(0), Err(DesingError::InvalidK));
    }

    #[test]
    fn profile_is_c2_odd_and_increasing() {
        for k in 1..=3 {
            let p = SmoothingProfile::new(k).unwrap();
            let h = 1e-7;
            assert!((p.f(1.0) - p.f(1.0 + 1e-15)).abs() < 1e-12);
            assert!((p.f_prime(1.0) - p.f_prime(1.0 + 1e-15)).abs() < 1e-12);
            let d2 = |x: f64| (p.f_prime(x + h) - p.f_prime(x - h)) / (2.0 * h);
            assert!((d2(1.0 - 2.0 * h) - d2(1.0 + 2.0 * h)).abs() < 1e-4);
            for i in 0..10_000 {
                let x = -3.0 + 6.0 * i as f64 / 9999.0;
                assert!(p.f_eps_prime(0.1, x * 0.1) > 0.0);
                assert_eq!(p.f_eps(0.1, -x), -p.f_eps(0.1, x));
                assert_eq!(p.f_eps_prime(0.1, -x), p.f_eps_prime(0.1, x));
            }
            assert_eq!(p.f_eps(0.1, 0.0), 0.0);
        }
    }

    #[test]
    fn outer_branch_for_k1() {
        let p = SmoothingProfile::new(1).unwrap();
        let eps = 0.1;
        for x in [0.2, 0.7, 3.0, -0.5] {
            let expected = -1.0 / x + 2.0 * f64::signum(x) / eps;
            assert!((p.f_eps(eps, x) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn desingularized_fixture() {
        let m = catalog::b_darboux(2).unwrap();
        let p = SmoothingProfile::new(1).unwrap();
        let d = desingularize(&m.form, "x", 0.1, &p).unwrap();
        let exact = CompiledForm::new(&m.form).unwrap();
        let pt = [0.5, 0.3, -0.2, 0.9];
        assert_eq!(d.matrix(&pt).unwrap(), exact.matrix(&pt).unwrap());
        let origin = d.matrix(&[0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((origin[(0, 1)] - 100.0 * 0.75).abs() < 1e-12);
        let b1 = catalog::b_darboux(1).unwrap();
        assert_eq!(desingularize(&b1.form, "x", 0.1, &p).err(), Some(DesingError::OddPoleOrder(1)));
        let b4 = catalog::b_darboux(4).unwrap();
        assert!(matches!(
            desingularize(&b4.form, "x", 0.1, &p),
            Err(DesingError::Classify(ClassifyError::NotABmForm(_)))
        ));
        assert_eq!(desingularize(&m.form, "x", 0.0, &p).err(), Some(DesingError::InvalidEpsilon(0.0)));
    }

    #[test]
    fn grid_checks() {
        let m = catalog::b_darboux(2).unwrap();
        let p = SmoothingProfile::new(1).unwrap();
        let d = desingularize(&m.form, "x", 0.1, &p).unwrap();
        let grid = Grid::parse("-1:1:5", 4).unwrap();
        assert_eq!(grid.len(), 625);
        assert!(verify_symplectic_on_grid(&d, &grid).symplectic());
        let raw = verify_symplectic_on_grid(&CompiledForm::new(&m.form).unwrap(), &grid);
        assert!(!raw.failures.is_empty() && !raw.symplectic());
        let std = CompiledForm::new(&catalog::darboux(2).unwrap().form).unwrap();
        let r = verify_symplectic_on_grid(&std, &grid);
        assert_eq!((r.min_abs_det, r.max_abs_det), (1.0, 1.0));
        assert!(Grid::parse("-1:1", 4).is_err());
        assert!(Grid::parse("-1:1:3,0:1:2", 4).is_err());
    }

    #[test]
    fn convergence() {
        let m = catalog::b_darboux(2).unwrap();
        let p = SmoothingProfile::new(1).unwrap();
        let eps = [0.2, 0.1, 0.05, 0.025];
        let far = vec![vec![0.3, 0.1, 0.2, -0.4], vec![-0.7, 1.0, 0.0, 0.5]];
        let rows = convergence_report(&m.form, "x", &p, &eps, &far).unwrap();
        assert!(rows.iter().all(|r| r.sup_deviation == 0.0));
        let near = vec![vec![0.01, 0.1, 0.2, -0.4], vec![-0.02, 1.0, 0.0, 0.5]];
        let rows = convergence_report(&m.form, "x", &p, &eps, &near).unwrap();
        assert!(rows.windows(2).all(|w| w[1].sup_deviation < w[0].sup_deviation));
        assert!(rows[0].sup_deviation > 0.0);
        assert!(convergence_report(&m.form, "x", &p, &eps, &[]).unwrap().is_empty());
        assert_eq!(
            convergence_report(&m.form, "x", &p, &[0.1, 0.2], &near).err(),
            Some(DesingError::EpsilonsNotDecreasing)
        );
    }
}
