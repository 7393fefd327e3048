//! b-contact forms: the contact condition, Reeb fields, Liouville fields and
//! the induced contact form `ι_X ω`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::classify::{DEFAULT_SEED, SAMPLE_BOX};
use crate::exterior::{Chart, CompiledTwoForm, DifferentialForm, FormError, VectorField};
use crate::linalg::{numeric_rank, symbolic_det};
use crate::symexpr::{CompiledExpr, EvalError, Expression};

/// Samples taken on and off `Z` by [`is_b_contact`].
pub const CONTACT_SAMPLES: usize = 20;
const NONZERO: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContactError {
    #[error("contact forms live on odd-dimensional charts, got dimension {0}")]
    EvenDimension(usize),
    #[error("expected a 1-form, got degree {0}")]
    NotOneForm(usize),
    #[error("Reeb system is rank deficient (rank {rank} of {dim}) at {point:?}")]
    RankDeficient { rank: usize, dim: usize, point: Vec<f64> },
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Clone, Debug, Serialize)]
pub struct ContactReport {
    pub contact: bool,
    /// Coefficient of `α ∧ (dα)^n` against the chart's volume form.
    pub top_coefficient: String,
    /// The coefficient multiplied by the singular variable, if any; this is
    /// the coefficient against the b-volume form.
    pub b_coefficient: String,
    pub seed: u64,
    pub samples_on_z: Vec<f64>,
    pub samples_off_z: Vec<f64>,
    pub reason: Option<String>,
}

fn check_shape(alpha: &DifferentialForm) -> Result<usize, ContactError> {
    let dim = alpha.chart().dim();
    if dim.is_multiple_of(2) {
        return Err(ContactError::EvenDimension(dim));
    }
    if alpha.degree() != 1 {
        return Err(ContactError::NotOneForm(alpha.degree()));
    }
    Ok(dim / 2)
}

/// `α ∧ (dα)^n`.
pub fn contact_volume(alpha: &DifferentialForm) -> Result<DifferentialForm, ContactError> {
    let n = check_shape(alpha)?;
    let d = alpha.ext_d()?;
    let mut acc = alpha.clone();
    for _ in 0..n {
        acc = acc.wedge(&d)?;
    }
    Ok(acc)
}

pub fn is_b_contact(alpha: &DifferentialForm) -> Result<ContactReport, ContactError> {
    is_b_contact_with(alpha, DEFAULT_SEED)
}

pub fn is_b_contact_with(alpha: &DifferentialForm, seed: u64) -> Result<ContactReport, ContactError> {
    let top = contact_volume(alpha)?.top_coefficient();
    let chart = alpha.chart();
    let z = chart.singular_index();
    let b = match chart.singular_var() {
        Some(v) => &top * &Expression::var(v),
        None => top.clone(),
    };
    let mut report = ContactReport {
        contact: false,
        top_coefficient: top.to_string(),
        b_coefficient: b.to_string(),
        seed,
        samples_on_z: Vec::new(),
        samples_off_z: Vec::new(),
        reason: None,
    };
    if b.is_zero() {
        report.reason = Some("α ∧ (dα)^n vanishes identically".into());
        return Ok(report);
    }
    let compiled = b.compile(chart.vars())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |on_z: bool| -> Vec<f64> {
        let mut p: Vec<f64> = (0..chart.dim()).map(|_| rng.gen_range(-SAMPLE_BOX..=SAMPLE_BOX)).collect();
        if let (true, Some(k)) = (on_z, z) {
            p[k] = 0.0;
        }
        p
    };
    for _ in 0..CONTACT_SAMPLES {
        let p = draw(false);
        match compiled.eval(&p) {
            Ok(v) => report.samples_off_z.push(v),
            Err(e) => {
                report.reason = Some(format!("coefficient not evaluable off Z: {e}"));
                return Ok(report);
            }
        }
    }
    if z.is_some() {
        for _ in 0..CONTACT_SAMPLES {
            let p = draw(true);
            match compiled.eval(&p) {
                Ok(v) => report.samples_on_z.push(v),
                Err(e) => {
                    report.reason = Some(format!("pole of order above one along Z: {e}"));
                    return Ok(report);
                }
            }
        }
    }
    let all = report.samples_on_z.iter().chain(&report.samples_off_z);
    if let Some(v) = all.clone().find(|v| v.abs() <= NONZERO) {
        report.reason = Some(format!("coefficient vanishes at a sample ({v:e})"));
        return Ok(report);
    }
    report.contact = true;
    Ok(report)
}

/// Pointwise least-squares solve of the Reeb system.
#[derive(Clone, Debug)]
pub struct NumericReeb {
    alpha: Vec<CompiledExpr>,
    d_alpha: CompiledTwoForm,
}

impl NumericReeb {
    fn system(&self, p: &[f64]) -> Result<DMatrix<f64>, EvalError> {
        let n = self.alpha.len();
        let omega = self.d_alpha.matrix(p)?;
        let mut m = DMatrix::zeros(n + 1, n);
        for (i, a) in self.alpha.iter().enumerate() {
            m[(0, i)] = a.eval(p)?;
        }
        // (ι_R dα)_j = Σ_i R^i Ω_ij
        for j in 0..n {
            for i in 0..n {
                m[(j + 1, i)] = omega[(i, j)];
            }
        }
        Ok(m)
    }

    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>, ContactError> {
        let m = self.system(p)?;
        let n = m.ncols();
        let rank = numeric_rank(&m);
        if rank < n {
            return Err(ContactError::RankDeficient { rank, dim: n, point: p.to_vec() });
        }
        let mut b = DVector::zeros(n + 1);
        b[0] = 1.0;
        let x = m.svd(true, true).solve(&b, 1e-14).map_err(|_| ContactError::RankDeficient {
            rank,
            dim: n,
            point: p.to_vec(),
        })?;
        Ok(x.iter().copied().collect())
    }
}

#[derive(Clone, Debug)]
pub enum ReebField {
    Symbolic(VectorField),
    Numeric(NumericReeb),
}

impl ReebField {
    pub fn symbolic(&self) -> Option<&VectorField> {
        match self {
            ReebField::Symbolic(x) => Some(x),
            ReebField::Numeric(_) => None,
        }
    }

    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>, ContactError> {
        match self {
            ReebField::Symbolic(x) => Ok(x.evaluate(p)?),
            ReebField::Numeric(n) => n.eval(p),
        }
    }
}

/// Expression matrix of the Reeb system: the row of `α` followed by the rows
/// of `ι_· dα`.
fn symbolic_system(alpha: &DifferentialForm) -> Result<Vec<Vec<Expression>>, ContactError> {
    let n = alpha.chart().dim();
    let d = alpha.ext_d()?;
    let mut m = vec![vec![Expression::zero(); n]; n + 1];
    for (idx, c) in alpha.coefficients() {
        m[0][idx[0]] = c.clone();
    }
    for (idx, c) in d.coefficients() {
        let (i, j) = (idx[0], idx[1]);
        m[j + 1][i] = c.clone();
        m[i + 1][j] = -c;
    }
    Ok(m)
}

/// Cramer's rule on the square subsystem that keeps the `α` row and drops one
/// `dα` row, provided its determinant is a single term. The dropped equation
/// is checked exactly afterwards.
fn symbolic_reeb(chart: &Chart, m: &[Vec<Expression>]) -> Result<Option<VectorField>, ContactError> {
    let n = chart.dim();
    for drop in 1..=n {
        let rows: Vec<&Vec<Expression>> = m.iter().enumerate().filter(|(i, _)| *i != drop).map(|(_, r)| r).collect();
        let sub: Vec<Vec<Expression>> = rows.iter().map(|r| r.to_vec()).collect();
        let det = symbolic_det(&sub);
        if det.len() != 1 {
            continue;
        }
        let Ok(inv) = det.reciprocal() else { continue };
        let mut comps = Vec::with_capacity(n);
        for j in 0..n {
            let mut mj = sub.clone();
            for (k, row) in mj.iter_mut().enumerate() {
                row[j] = if k == 0 { Expression::one() } else { Expression::zero() };
            }
            comps.push(&symbolic_det(&mj) * &inv);
        }
        let dropped: Expression = m[drop].iter().zip(&comps).map(|(a, r)| a * r).sum();
        if dropped.is_zero() {
            return Ok(Some(VectorField::from_components(chart, comps)?));
        }
    }
    Ok(None)
}

/// The Reeb field of `α`: `ι_R α = 1`, `ι_R dα = 0`.
pub fn reeb_field(alpha: &DifferentialForm) -> Result<ReebField, ContactError> {
    check_shape(alpha)?;
    let chart = alpha.chart();
    let m = symbolic_system(alpha)?;
    if let Some(x) = symbolic_reeb(chart, &m)? {
        return Ok(ReebField::Symbolic(x));
    }
    let numeric = NumericReeb {
        alpha: (0..chart.dim())
            .map(|i| alpha.coefficient(&[i]).compile(chart.vars()))
            .collect::<Result<_, _>>()?,
        d_alpha: alpha.ext_d()?.compile_two_form()?,
    };
    // uniqueness needs full rank; probe a generic point off Z
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let p: Vec<f64> = (0..chart.dim()).map(|_| rng.gen_range(0.5..1.5)).collect();
    numeric.eval(&p)?;
    Ok(ReebField::Numeric(numeric))
}

/// `max` over points of `|ι_R α - 1|` and `‖ι_R dα‖_∞`.
pub fn reeb_residual(alpha: &DifferentialForm, reeb: &ReebField, points: &[Vec<f64>]) -> Result<f64, ContactError> {
    let chart = alpha.chart();
    let a: Vec<CompiledExpr> = (0..chart.dim())
        .map(|i| alpha.coefficient(&[i]).compile(chart.vars()))
        .collect::<Result<_, _>>()?;
    let d = alpha.ext_d()?.compile_two_form()?;
    let mut worst = 0.0f64;
    for p in points {
        let r = DVector::from_vec(reeb.eval(p)?);
        let mut pairing = 0.0;
        for (ai, ri) in a.iter().zip(r.iter()) {
            pairing += ai.eval(p)? * ri;
        }
        worst = worst.max((pairing - 1.0).abs());
        let contraction = d.matrix(p)?.transpose() * &r;
        worst = worst.max(contraction.amax());
    }
    Ok(worst)
}

/// Structural test of `L_X ω = ω`.
pub fn liouville_check(x: &VectorField, omega: &DifferentialForm) -> Result<bool, ContactError> {
    Ok(omega.lie_derivative(x)? == *omega)
}

/// `ι_X ω`.
pub fn induced_contact(x: &VectorField, omega: &DifferentialForm) -> Result<DifferentialForm, ContactError> {
    Ok(omega.interior(x)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn form(vars: &[&str], text: &str) -> DifferentialForm {
        DifferentialForm::parse(&Chart::new(vars).unwrap(), text).unwrap()
    }

    #[test]
    fn contact_condition() {
        let ext = catalog::extended_phase_space(2).unwrap().form;
        let r = is_b_contact(&ext).unwrap();
        assert!(r.contact, "{r:?}");
        assert_eq!(r.samples_on_z.len(), CONTACT_SAMPLES);
        assert!(!is_b_contact(&form(&["t", "x", "y"], "dt")).unwrap().contact);
        assert!(is_b_contact(&form(&["z", "x", "y"], "dz + x*dy")).unwrap().contact);
        assert!(matches!(is_b_contact(&form(&["x", "y"], "dx")), Err(ContactError::EvenDimension(2))));
        // a double pole is not a b-contact form
        let c = Chart::new(&["t", "z", "x"]).unwrap().with_singular("z").unwrap();
        let double = DifferentialForm::parse(&c, "dt + x*z^(-2)*dz").unwrap();
        assert!(!is_b_contact(&double).unwrap().contact);
    }

    #[test]
    fn reeb_fields() {
        let std = form(&["z", "x", "y"], "dz + x*dy");
        let r = reeb_field(&std).unwrap();
        assert_eq!(r.symbolic().unwrap(), &VectorField::coordinate(std.chart(), "z").unwrap());

        let doubled = std.scale(&Expression::int(2));
        let r2 = reeb_field(&doubled).unwrap();
        assert_eq!(r2.symbolic().unwrap(), &r.symbolic().unwrap().scale(&Expression::rational(1, 2)));

        for n in 1..=3 {
            let ext = catalog::extended_phase_space(n).unwrap().form;
            let r = reeb_field(&ext).unwrap();
            assert_eq!(r.symbolic().unwrap(), &VectorField::coordinate(ext.chart(), "t").unwrap(), "n = {n}");
        }
    }

    #[test]
    fn numeric_reeb_fallback() {
        // α = (1 + x^2) dz + x dy: the Reeb subsystem determinants are not monomials
        let a = form(&["z", "x", "y"], "(1 + x^2)*dz + x*dy");
        let r = reeb_field(&a).unwrap();
        let pts: Vec<Vec<f64>> = (0..50).map(|i| vec![0.1 * i as f64, 0.3 - 0.02 * i as f64, 0.7]).collect();
        assert!(reeb_residual(&a, &r, &pts).unwrap() < 1e-10);
        assert!(matches!(reeb_field(&form(&["t", "x", "y"], "dt")), Err(ContactError::RankDeficient { .. })));
    }

    #[test]
    fn liouville_and_induced_form() {
        let c = Chart::new(&["q1", "p1", "q2", "p2"]).unwrap();
        let omega = DifferentialForm::parse(&c, "dq1^dp1 + dq2^dp2").unwrap();
        let x = VectorField::from_named(&c, [("p1", Expression::var("p1")), ("p2", Expression::var("p2"))]).unwrap();
        assert!(liouville_check(&x, &omega).unwrap());
        assert!(!liouville_check(&VectorField::zero(&c), &omega).unwrap());
        let induced = induced_contact(&x, &omega).unwrap();
        assert_eq!(induced, DifferentialForm::parse(&c, "-p1*dq1 - p2*dq2").unwrap());
        assert!(induced_contact(&VectorField::zero(&c), &omega).unwrap().is_zero());
        assert!(induced_contact(&x, &DifferentialForm::zero(&c, 2)).unwrap().is_zero());
    }

    #[test]
    fn liouville_on_b_cotangent() {
        // dλ with λ = x1 dz/z + x2 dy2; the fibre-scaling field Σ x_i ∂x_i is Liouville
        let model = catalog::b_cotangent(2).unwrap();
        let c = model.chart.clone();
        let x = VectorField::from_named(&c, [("x1", Expression::var("x1")), ("x2", Expression::var("x2"))]).unwrap();
        assert!(liouville_check(&x, &model.form).unwrap());
        let induced = induced_contact(&x, &model.form).unwrap();
        assert_eq!(induced, DifferentialForm::parse(&c, "x1*z^(-1)*dz + x2*dy2").unwrap());
    }
}
