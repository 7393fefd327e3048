//! Hamiltonian vector fields of (possibly singular) 2-forms, time changes and
//! numerical flows.
//!
//! Convention: `ι_X ω = dH`. With `Ω_ij = ω(∂_i, ∂_j)` this is `Ω X = -∇H`.
//! It gives `X = p ∂_q - q ∂_p` for `H = (p² + q²)/2` on `dq ∧ dp`.

mod integrator;

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num::{One, ToPrimitive};
use serde::Serialize;
use thiserror::Error;

use crate::catalog::{self, CatalogError};
use crate::exterior::{Chart, CompiledTwoForm, DifferentialForm, FormError, VectorField};
use crate::linalg::{solve, symbolic_det};
use crate::symexpr::{CompiledExpr, EvalError, ExprError, Expression, Rational};

pub use integrator::{dopri5, Halt, Rhs, Solution, StepStats, Tolerances};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("expected a 2-form on an even-dimensional chart")]
    NotSymplecticShape,
    #[error("the form is degenerate: its determinant vanishes identically")]
    DegenerateForm,
    #[error("the form is singular at {0:?}")]
    SingularAt(Vec<f64>),
    #[error("state has {got} entries, chart has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("initial state is not admissible: {0}")]
    InvalidInitialState(String),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

/// Pointwise solver for `Ω X = -∇H`.
#[derive(Clone, Debug)]
pub struct NumericField {
    omega: CompiledTwoForm,
    grad: Vec<CompiledExpr>,
}

impl NumericField {
    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>, DynamicsError> {
        let m: DMatrix<f64> = self.omega.matrix(p)?;
        let g = self.grad.iter().map(|e| e.eval(p).map(|v| -v)).collect::<Result<Vec<_>, _>>()?;
        let x = solve(&m, &DVector::from_vec(g)).ok_or_else(|| DynamicsError::SingularAt(p.to_vec()))?;
        Ok(x.iter().copied().collect())
    }
}

#[derive(Clone, Debug)]
pub enum FieldSolution {
    Symbolic(VectorField),
    Numeric(NumericField),
}

#[derive(Clone, Debug)]
pub struct HamiltonianField {
    pub solution: FieldSolution,
    /// `det Ω` as an expression.
    pub determinant: Expression,
    /// Whether `dω = 0`; a non-closed form still yields a field, but not a
    /// Hamiltonian flow in the usual sense.
    pub closed: bool,
}

impl HamiltonianField {
    pub fn symbolic(&self) -> Option<&VectorField> {
        match &self.solution {
            FieldSolution::Symbolic(x) => Some(x),
            FieldSolution::Numeric(_) => None,
        }
    }

    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>, DynamicsError> {
        match &self.solution {
            FieldSolution::Symbolic(x) => Ok(x.evaluate(p)?),
            FieldSolution::Numeric(n) => n.eval(p),
        }
    }
}

/// Solves `ι_X ω = dH`. Cramer's rule is used when `det Ω` is a single term;
/// otherwise the field is solved pointwise.
pub fn hamiltonian_vector_field(omega: &DifferentialForm, h: &Expression) -> Result<HamiltonianField, DynamicsError> {
    let chart = omega.chart();
    let n = chart.dim();
    if omega.degree() != 2 || !n.is_multiple_of(2) {
        return Err(DynamicsError::NotSymplecticShape);
    }
    let mut m = vec![vec![Expression::zero(); n]; n];
    for (idx, c) in omega.coefficients() {
        m[idx[0]][idx[1]] = c.clone();
        m[idx[1]][idx[0]] = -c;
    }
    let rhs: Vec<Expression> = chart.vars().iter().map(|v| -h.differentiate(v)).collect();
    let det = symbolic_det(&m);
    if det.is_zero() {
        return Err(DynamicsError::DegenerateForm);
    }
    let closed = omega.is_closed();
    let solution = match det.reciprocal() {
        Ok(inv) if det.len() == 1 => {
            let mut comps = Vec::with_capacity(n);
            for j in 0..n {
                let mut mj = m.clone();
                for (row, b) in mj.iter_mut().zip(&rhs) {
                    row[j] = b.clone();
                }
                comps.push(&symbolic_det(&mj) * &inv);
            }
            FieldSolution::Symbolic(VectorField::from_components(chart, comps)?)
        }
        _ => FieldSolution::Numeric(NumericField {
            omega: omega.compile_two_form()?,
            grad: rhs.iter().map(|e| (-e).compile(chart.vars())).collect::<Result<_, _>>()?,
        }),
    };
    Ok(HamiltonianField { solution, determinant: det, closed })
}

/// Time change `X_τ = factor · X_t`.
pub fn reparametrize(x: &VectorField, factor: &Expression) -> VectorField {
    x.scale(factor)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TimeLabel {
    #[serde(rename = "t")]
    T,
    #[serde(rename = "tau")]
    Tau,
}

pub type StateFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type FieldFn = Arc<dyn Fn(&[f64]) -> Result<Vec<f64>, DynamicsError> + Send + Sync>;

#[derive(Clone)]
pub struct Monitor {
    pub name: String,
    pub f: StateFn,
}

/// A vector field ready for integration.
#[derive(Clone)]
pub struct FlowSystem {
    pub chart: Chart,
    pub symbolic: Option<VectorField>,
    rhs: FieldFn,
    pub time_label: TimeLabel,
    pub monitors: Vec<Monitor>,
}

impl FlowSystem {
    pub fn from_field(x: &VectorField, time_label: TimeLabel) -> Result<Self, DynamicsError> {
        let compiled = x.compile()?;
        let rhs: FieldFn = Arc::new(move |p: &[f64]| {
            compiled.iter().map(|c| c.eval(p).map_err(DynamicsError::from)).collect()
        });
        Ok(Self { chart: x.chart().clone(), symbolic: Some(x.clone()), rhs, time_label, monitors: Vec::new() })
    }

    pub fn from_hamiltonian(field: &HamiltonianField, chart: &Chart, time_label: TimeLabel) -> Result<Self, DynamicsError> {
        match &field.solution {
            FieldSolution::Symbolic(x) => Self::from_field(x, time_label),
            FieldSolution::Numeric(n) => {
                let n = n.clone();
                Ok(Self {
                    chart: chart.clone(),
                    symbolic: None,
                    rhs: Arc::new(move |p: &[f64]| n.eval(p)),
                    time_label,
                    monitors: Vec::new(),
                })
            }
        }
    }

    pub fn with_monitor(mut self, name: &str, f: StateFn) -> Self {
        self.monitors.push(Monitor { name: name.to_string(), f });
        self
    }

    /// Monitor that evaluates an expression in the chart variables.
    pub fn with_expression_monitor(self, name: &str, e: &Expression) -> Result<Self, DynamicsError> {
        let c = e.compile(self.chart.vars())?;
        Ok(self.with_monitor(name, Arc::new(move |p: &[f64]| c.eval(p).unwrap_or(f64::NAN))))
    }

    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>, DynamicsError> {
        (self.rhs)(p)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub time_label: TimeLabel,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub stats: StepStats,
    /// Monitor values per accepted state, by monitor name.
    pub monitors: BTreeMap<String, Vec<f64>>,
    /// `max |value - initial value|` per monitor.
    pub drift: BTreeMap<String, f64>,
    pub halt: Option<Halt>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("at least the initial state")
    }

    /// `max |value - initial| / |initial|`.
    pub fn relative_drift(&self, monitor: &str) -> Option<f64> {
        let v = self.monitors.get(monitor)?;
        let v0 = v[0].abs();
        Some(self.drift[monitor] / if v0 > 0.0 { v0 } else { 1.0 })
    }
}

pub fn integrate(
    system: &FlowSystem,
    x0: &[f64],
    span: (f64, f64),
    tol: &Tolerances,
) -> Result<Trajectory, DynamicsError> {
    if x0.len() != system.chart.dim() {
        return Err(DynamicsError::DimensionMismatch { expected: system.chart.dim(), got: x0.len() });
    }
    if !x0.iter().all(|v| v.is_finite()) {
        return Err(DynamicsError::InvalidInitialState("non-finite entry".into()));
    }
    system.eval(x0).map_err(|e| DynamicsError::InvalidInitialState(e.to_string()))?;
    let rhs = |_: f64, y: &[f64], out: &mut [f64]| -> Result<(), EvalError> {
        let v = system.eval(y).map_err(|e| match e {
            DynamicsError::Eval(e) => e,
            _ => EvalError::NonFinite,
        })?;
        out.copy_from_slice(&v);
        Ok(())
    };
    let sol = dopri5(&rhs, span.0, x0, span.1, tol)?;
    let mut monitors = BTreeMap::new();
    let mut drift = BTreeMap::new();
    for m in &system.monitors {
        let values: Vec<f64> = sol.states.iter().map(|s| (m.f)(s)).collect();
        let d = values.iter().map(|v| (v - values[0]).abs()).fold(0.0, f64::max);
        drift.insert(m.name.clone(), d);
        monitors.insert(m.name.clone(), values);
    }
    Ok(Trajectory {
        time_label: system.time_label,
        times: sol.times,
        states: sol.states,
        stats: sol.stats,
        monitors,
        drift,
        halt: sol.halt,
    })
}

/// `|w| · |v² + w² - 2|^{1-β}` on states `(r, θ, v, w)`.
pub fn mcgehee_first_integral(beta: &Rational) -> StateFn {
    let e = 1.0 - beta.to_f64().unwrap_or(f64::NAN);
    Arc::new(move |s: &[f64]| {
        let (v, w) = (s[2], s[3]);
        if w == 0.0 {
            return 0.0;
        }
        w.abs() * (v * v + w * w - 2.0).abs().powf(e)
    })
}

/// `|w|^{2β} · |v² + w² - 2|^{1-β}`, conserved by the primed flow for every β.
pub fn mcgehee_general_integral(beta: &Rational) -> StateFn {
    let b = beta.to_f64().unwrap_or(f64::NAN);
    Arc::new(move |s: &[f64]| {
        let (v, w) = (s[2], s[3]);
        w.abs().powf(2.0 * b) * (v * v + w * w - 2.0).abs().powf(1.0 - b)
    })
}

/// For `F = w^a · E^b` with `E = v² + w² - 2` on the branch `w > 0`, `E > 0`:
/// `w·E·(d log F/dτ) = a w' E + b w (2 v v' + 2 w w')`, as an expression.
pub fn log_derivative_numerator(x: &VectorField, a: &Rational, b: &Rational) -> Result<Expression, FormError> {
    let v = Expression::var("v");
    let w = Expression::var("w");
    let vp = x.component_of("v")?;
    let wp = x.component_of("w")?;
    let energy = &(&v * &v) + &(&w * &w) - Expression::int(2);
    let two = Expression::int(2);
    let first = &(&Expression::constant(a.clone()) * &wp) * &energy;
    let second = &(&Expression::constant(b.clone()) * &w) * &(&two * &(&(&v * &vp) + &(&w * &wp)));
    Ok(first + second)
}

/// The McGehee collision model and its two flows.
pub struct McGeheeFlow {
    pub model: catalog::Model,
    pub beta: Rational,
    pub gamma: Rational,
    /// Field in physical time.
    pub field_t: VectorField,
    /// `r^{βγ+γ} · field_t`.
    pub field_tau: VectorField,
    pub time_factor: Expression,
}

impl McGeheeFlow {
    pub fn new(alpha: &Rational) -> Result<Self, DynamicsError> {
        let model = catalog::mcgehee_double_collision(alpha)?;
        let beta = model.params["beta"].clone();
        let gamma = model.params["gamma"].clone();
        let h = model.hamiltonian.clone().expect("collision model has a Hamiltonian");
        let field = hamiltonian_vector_field(&model.form, &h)?;
        let field_t = field.symbolic().cloned().ok_or(DynamicsError::DegenerateForm)?;
        let time_factor = Expression::var_pow("r", &beta * &gamma + &gamma);
        let field_tau = reparametrize(&field_t, &time_factor);
        Ok(Self { model, beta, gamma, field_t, field_tau, time_factor })
    }

    pub fn hamiltonian(&self) -> &Expression {
        self.model.hamiltonian.as_ref().expect("collision model has a Hamiltonian")
    }

    /// Flow system in `t` or `τ`, monitoring `H`, `F` and the general integral.
    pub fn system(&self, time: TimeLabel) -> Result<FlowSystem, DynamicsError> {
        let field = match time {
            TimeLabel::T => &self.field_t,
            TimeLabel::Tau => &self.field_tau,
        };
        Ok(FlowSystem::from_field(field, time)?
            .with_expression_monitor("H", self.hamiltonian())?
            .with_monitor("F", mcgehee_first_integral(&self.beta)))
    }
}

/// One component of the primed system: as printed and as computed.
#[derive(Clone, Debug, Serialize)]
pub struct ComponentCheck {
    pub component: String,
    pub expected: String,
    pub computed: String,
    pub equal: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowEquationCheck {
    pub alpha: String,
    pub components: Vec<ComponentCheck>,
    pub closed: bool,
}

impl FlowEquationCheck {
    pub fn holds(&self) -> bool {
        self.components.iter().all(|c| c.equal)
    }
}

/// The published primed system
/// `θ' = w`, `r' = (1/γ) v r`, `w' = (β - 1) w v`, `v' = -β(v² - 2) - w²`.
pub fn published_primed_system(beta: &Rational, gamma: &Rational) -> [(&'static str, Expression); 4] {
    let (r, v, w) = (Expression::var("r"), Expression::var("v"), Expression::var("w"));
    let b = Expression::constant(beta.clone());
    let one = Rational::one();
    [
        ("theta", w.clone()),
        ("r", &(&Expression::constant(&one / gamma) * &v) * &r),
        ("w", &(&Expression::constant(beta - &one) * &w) * &v),
        ("v", -(&b * &((&v * &v) - Expression::int(2))) - &w * &w),
    ]
}

/// Compares the computed primed field with the published system, by exact
/// expression equality per component.
pub fn verify_flow_equations(alpha: &Rational) -> Result<FlowEquationCheck, DynamicsError> {
    let flow = McGeheeFlow::new(alpha)?;
    let components = published_primed_system(&flow.beta, &flow.gamma)
        .into_iter()
        .map(|(name, expected)| {
            let computed = flow.field_tau.component_of(name)?;
            Ok(ComponentCheck {
                component: name.to_string(),
                equal: computed == expected,
                expected: expected.to_string(),
                computed: computed.to_string(),
            })
        })
        .collect::<Result<Vec<_>, FormError>>()?;
    Ok(FlowEquationCheck {
        alpha: crate::symexpr::fmt_rational(alpha),
        components,
        closed: flow.model.form.is_closed(),
    })
}

/// `max_p ‖ι_X ω - dH‖_∞` over the given points.
pub fn interior_residual(
    omega: &DifferentialForm,
    h: &Expression,
    field: &HamiltonianField,
    points: &[Vec<f64>],
) -> Result<f64, DynamicsError> {
    let chart = omega.chart();
    let form = omega.compile_two_form()?;
    let grad = chart.vars().iter().map(|v| h.differentiate(v).compile(chart.vars())).collect::<Result<Vec<_>, _>>()?;
    let mut worst = 0.0f64;
    for p in points {
        let m = form.matrix(p)?;
        let x = DVector::from_vec(field.eval(p)?);
        // (ι_X ω)_j = Σ_i X^i Ω_ij
        let contraction = m.transpose() * x;
        for (j, g) in grad.iter().enumerate() {
            let scale = g.eval(p)?.abs().max(1.0);
            worst = worst.max((contraction[j] - g.eval(p)?).abs() / scale);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::rat;

    fn e(s: &str) -> Expression {
        Expression::parse(s).unwrap()
    }

    #[test]
    fn harmonic_oscillator_field() {
        let c = Chart::new(&["q", "p"]).unwrap();
        let omega = DifferentialForm::parse(&c, "dq^dp").unwrap();
        let f = hamiltonian_vector_field(&omega, &e("1/2*p^2 + 1/2*q^2")).unwrap();
        let x = f.symbolic().unwrap();
        assert_eq!(x.component_of("q").unwrap(), e("p"));
        assert_eq!(x.component_of("p").unwrap(), e("-q"));
        // ι_X ω = dH exactly
        let dh = DifferentialForm::scalar(&c, e("1/2*p^2 + 1/2*q^2")).ext_d().unwrap();
        assert_eq!(omega.interior(x).unwrap(), dh);
    }

    #[test]
    fn b_darboux_field() {
        let c = Chart::new(&["x", "y"]).unwrap();
        let omega = DifferentialForm::parse(&c, "y^(-1)*dx^dy").unwrap();
        let f = hamiltonian_vector_field(&omega, &e("x")).unwrap();
        let x = f.symbolic().unwrap();
        assert_eq!(x.component_of("x").unwrap(), Expression::zero());
        assert_eq!(x.component_of("y").unwrap(), e("-y"));
    }

    #[test]
    fn degenerate_and_numeric_paths() {
        let c = Chart::new(&["q", "p"]).unwrap();
        let zero = DifferentialForm::zero(&c, 2);
        assert!(matches!(hamiltonian_vector_field(&zero, &e("q")), Err(DynamicsError::DegenerateForm)));
        // det = (1 + q^2)^2 is not a single term, so the solve is pointwise
        let omega = DifferentialForm::parse(&c, "(1 + q^2)*dq^dp").unwrap();
        let f = hamiltonian_vector_field(&omega, &e("1/2*p^2")).unwrap();
        assert!(f.symbolic().is_none());
        let x = f.eval(&[1.0, 3.0]).unwrap();
        assert!((x[0] - 1.5).abs() < 1e-15 && x[1].abs() < 1e-15);
        let pts = vec![vec![0.3, -0.4], vec![1.2, 2.0]];
        assert!(interior_residual(&omega, &e("1/2*p^2"), &f, &pts).unwrap() < 1e-12);
    }

    #[test]
    fn collision_field_in_physical_time() {
        let flow = McGeheeFlow::new(&rat(2, 1)).unwrap();
        // β = 1, γ = 1/2: ṙ = (1/γ) v r^{1-βγ-γ} = 2 v
        assert_eq!(flow.field_t.component_of("r").unwrap(), e("2*v"));
        assert_eq!(flow.field_t.component_of("theta").unwrap(), e("w*r^(-1)"));
        assert_eq!(flow.time_factor, e("r"));
    }

    #[test]
    fn primed_system_as_computed() {
        for a in ["1/2", "1", "2", "3", "6"] {
            let alpha = crate::symexpr::parse_rational(a).unwrap();
            let flow = McGeheeFlow::new(&alpha).unwrap();
            let b = Expression::constant(flow.beta.clone());
            let (v, w) = (e("v"), e("w"));
            let expected_v = &b * &((&v * &v) - Expression::int(2)) + &w * &w;
            assert_eq!(flow.field_tau.component_of("v").unwrap(), expected_v, "alpha = {a}");
            let check = verify_flow_equations(&alpha).unwrap();
            let verdicts: Vec<bool> = check.components.iter().map(|c| c.equal).collect();
            assert_eq!(verdicts, [true, true, true, false], "alpha = {a}");
        }
    }

    #[test]
    fn first_integral_branches() {
        for (b, conserved) in [("1/2", true), ("1", true), ("1/4", false), ("3", false)] {
            let beta = crate::symexpr::parse_rational(b).unwrap();
            let alpha = &beta * rat(2, 1);
            let flow = McGeheeFlow::new(&alpha).unwrap();
            let printed = log_derivative_numerator(&flow.field_tau, &rat(1, 1), &(rat(1, 1) - &beta)).unwrap();
            assert_eq!(printed.is_zero(), conserved, "beta = {b}");
            let general = log_derivative_numerator(&flow.field_tau, &(rat(2, 1) * &beta), &(rat(1, 1) - &beta)).unwrap();
            assert!(general.is_zero(), "beta = {b}");
        }
        let f = mcgehee_first_integral(&rat(1, 1));
        assert_eq!(f(&[1.0, 0.0, 0.3, -0.7]), 0.7);
        let f = mcgehee_first_integral(&rat(1, 2));
        assert_eq!(f(&[1.0, 0.0, 1.0, 1.0]), 0.0);
    }

    #[test]
    fn conservation_along_primed_flow() {
        let flow = McGeheeFlow::new(&rat(1, 1)).unwrap();
        let sys = flow.system(TimeLabel::Tau).unwrap();
        let tol = Tolerances { rtol: 1e-10, atol: 1e-12, ..Default::default() };
        let traj = integrate(&sys, &[1.0, 0.0, 0.1, 1.0], (0.0, 10.0), &tol).unwrap();
        assert!(traj.halt.is_none());
        assert!(traj.drift["F"] < 1e-6, "{}", traj.drift["F"]);
        assert!(traj.states.iter().all(|s| s[0] > 0.0));
        let two = McGeheeFlow::new(&rat(2, 1)).unwrap().system(TimeLabel::Tau).unwrap();
        let traj = integrate(&two, &[1.0, 0.0, 0.1, 1.0], (0.0, 3.0), &tol).unwrap();
        assert!(traj.states.iter().all(|s| s[3] == 1.0));
    }

    #[test]
    fn pole_at_start_is_rejected() {
        let sys = McGeheeFlow::new(&rat(1, 1)).unwrap().system(TimeLabel::T).unwrap();
        let tol = Tolerances::default();
        assert!(matches!(
            integrate(&sys, &[0.0, 0.0, 0.1, 1.0], (0.0, 1.0), &tol),
            Err(DynamicsError::InvalidInitialState(_))
        ));
        assert!(matches!(integrate(&sys, &[1.0], (0.0, 1.0), &tol), Err(DynamicsError::DimensionMismatch { .. })));
    }
}
