//! Ready-made models: singular forms produced by non-canonical changes of
//! coordinates, plus normal-form fixtures.
//!
//! Complex shorthand is expanded into real maps by hand:
//!
//! * point Levi-Civita, `q = u²/2`: `q1 = (u1² - u2²)/2`, `q2 = u1 u2`.
//! * elliptic coordinates, `q1 + i q2 = sinh(λ + iν)`:
//!   `q1 = sinh λ cos ν`, `q2 = cosh λ sin ν`.
//! * collision blow-up, `x = r^γ e^{iθ}`, `y = r^{-βγ}(v + i w) e^{iθ}`:
//!   `x1 = r^γ cos θ`, `x2 = r^γ sin θ`,
//!   `y1 = r^{-βγ}(v cos θ - w sin θ)`, `y2 = r^{-βγ}(v sin θ + w cos θ)`.
//!
//! Every model with a map is checked against the pullback of the canonical
//! form when it is constructed.

use std::collections::BTreeMap;

use num::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::classify::{
    classify_along_coordinate_with, classify_along_hypersurface_with, Classification, ClassifyError,
    ClassifyOptions, Hypersurface, Verdict, DEFAULT_SEED,
};
use crate::exterior::{Chart, ChartMap, DifferentialForm, FormError};
use crate::symexpr::{fmt_rational, rat, Expression, Rational};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("alpha must be positive, got {0}")]
    InvalidAlpha(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("alpha = 2 fixes the exponent at -1 for every gamma")]
    AlphaEqualsTwo,
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("model `{model}` failed its construction check: {detail}")]
    SelfCheck { model: String, detail: String },
    #[error(transparent)]
    Form(#[from] FormError),
}

/// Where a model's form is expected to be singular.
#[derive(Clone, Debug)]
pub enum Locus {
    Coordinate(String),
    Hypersurface(Hypersurface),
}

#[derive(Clone, Debug)]
pub struct Model {
    pub name: String,
    pub chart: Chart,
    pub map: Option<ChartMap>,
    pub form: DifferentialForm,
    pub hamiltonian: Option<Expression>,
    pub params: BTreeMap<String, Rational>,
    pub locus: Option<Locus>,
    /// Verdict the engine is expected to reach along `locus`.
    pub expected: Option<Verdict>,
    pub notes: Vec<String>,
}

impl Model {
    pub fn param(&self, name: &str) -> Option<&Rational> {
        self.params.get(name)
    }

    /// Classifies the model's form along its locus; `None` for models without one.
    pub fn classify(&self, opts: &ClassifyOptions) -> Option<Result<Classification, ClassifyError>> {
        self.locus.as_ref().map(|locus| classify_locus(&self.form, locus, opts))
    }
}

pub fn classify_locus(
    omega: &DifferentialForm,
    locus: &Locus,
    opts: &ClassifyOptions,
) -> Result<Classification, ClassifyError> {
    match locus {
        Locus::Coordinate(v) => classify_along_coordinate_with(omega, v, opts),
        Locus::Hypersurface(h) => classify_along_hypersurface_with(omega, h, opts),
    }
}

/// Parameter overrides accepted by [`by_name`].
#[derive(Clone, Debug, Default)]
pub struct ModelParams {
    pub alpha: Option<Rational>,
    pub gamma: Option<Rational>,
    pub m: Option<u32>,
}

fn e(text: &str) -> Expression {
    Expression::parse(text).expect("catalog literal")
}

fn chart(vars: &[&str]) -> Chart {
    Chart::new(vars).expect("distinct catalog variables")
}

fn point(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn check_pullback(name: &str, map: &ChartMap, pairs: &[(&str, &str)], form: &DifferentialForm) -> Result<(), CatalogError> {
    let canonical = DifferentialForm::canonical(map.target(), pairs)?;
    let pulled = canonical.pullback(map)?;
    if pulled != *form {
        return Err(CatalogError::SelfCheck {
            model: name.to_string(),
            detail: format!("pullback gave {pulled}"),
        });
    }
    Ok(())
}

/// Point Levi-Civita map on the planar Kepler problem; momenta unchanged.
pub fn levi_civita_point() -> Result<Model, CatalogError> {
    let target = chart(&["q1", "q2", "p1", "p2"]);
    let source = chart(&["u1", "u2", "p1", "p2"]);
    let map = ChartMap::new(
        &source,
        &target,
        [("q1", e("1/2*u1^2 - 1/2*u2^2")), ("q2", e("u1*u2")), ("p1", e("p1")), ("p2", e("p2"))],
    )?;
    let liouville = DifferentialForm::parse(&target, "p1*dq1 + p2*dq2")?;
    let form = liouville.pullback(&map)?.ext_d()?.neg();
    check_pullback("levi-civita", &map, &[("q1", "p1"), ("q2", "p2")], &form)?;
    let seed = point(&[("u1", 1.0), ("u2", 1.0), ("p1", 0.3), ("p2", -0.2)]);
    Ok(Model {
        name: "levi-civita".into(),
        chart: source,
        map: Some(map),
        form,
        hamiltonian: None,
        params: BTreeMap::new(),
        locus: Some(Locus::Hypersurface(
            Hypersurface::new(e("u1^2 - u2^2"), seed).expect("seed on u1 = u2"),
        )),
        expected: None,
        notes: vec![
            "form is minus d of the pulled-back Liouville form".into(),
            "the squaring map is conformal, so the top power is a multiple of u1^2 + u2^2".into(),
        ],
    })
}

/// Elliptic coordinates for the problem of two fixed centers.
pub fn two_centers_elliptic() -> Result<Model, CatalogError> {
    let target = chart(&["q1", "q2", "p1", "p2"]);
    let source = chart(&["lambda", "nu", "p1", "p2"]);
    let map = ChartMap::new(
        &source,
        &target,
        [
            ("q1", e("sinh(lambda)*cos(nu)")),
            ("q2", e("cosh(lambda)*sin(nu)")),
            ("p1", e("p1")),
            ("p2", e("p2")),
        ],
    )?;
    let form = DifferentialForm::canonical(&target, &[("q1", "p1"), ("q2", "p2")])?.pullback(&map)?;
    // cosh λ cos ν = sinh λ sin ν  ⇔  tan ν = coth λ
    let lambda = 1.0f64;
    let seed = point(&[("lambda", lambda), ("nu", (1.0 / lambda.tanh()).atan()), ("p1", 0.3), ("p2", -0.2)]);
    let h = e("cosh(lambda)*cos(nu) - sinh(lambda)*sin(nu)");
    Ok(Model {
        name: "two-centers".into(),
        chart: source,
        map: Some(map),
        form,
        hamiltonian: None,
        params: BTreeMap::new(),
        locus: Some(Locus::Hypersurface(Hypersurface::new(h, seed).expect("seed on the locus"))),
        expected: None,
        notes: vec!["q1 + i q2 = sinh(lambda + i nu) is holomorphic, so the top power never vanishes off the foci".into()],
    })
}

/// Blow-up at infinity `r = 2/x²`.
pub fn mcgehee_infinity() -> Result<Model, CatalogError> {
    let target = chart(&["r", "alpha", "Pr", "Palpha"]);
    let source = chart(&["x", "alpha", "Pr", "Palpha"]).with_singular("x")?;
    let map = ChartMap::new(
        &source,
        &target,
        [("r", e("2*x^(-2)")), ("alpha", e("alpha")), ("Pr", e("Pr")), ("Palpha", e("Palpha"))],
    )?;
    let pairs = [("r", "Pr"), ("alpha", "Palpha")];
    let form = DifferentialForm::canonical(&target, &pairs)?.pullback(&map)?;
    let mut params = BTreeMap::new();
    params.insert("mu".to_string(), rat(1, 1));
    Ok(Model {
        name: "mcgehee-infinity".into(),
        chart: source,
        map: Some(map),
        form,
        hamiltonian: None,
        params,
        locus: Some(Locus::Coordinate("x".into())),
        expected: Some(Verdict::BSymplectic(3)),
        notes: vec![
            "momentum relation P_r = -(x^3/4) P_x".into(),
            "mu is the reduced mass; it does not enter the form".into(),
        ],
    })
}

/// `β = α/2`, `γ = 2/(2+α)`.
pub fn mcgehee_double_collision(alpha: &Rational) -> Result<Model, CatalogError> {
    if !alpha.is_positive() {
        return Err(CatalogError::InvalidAlpha(fmt_rational(alpha)));
    }
    let gamma = Rational::from_integer(2.into()) / (Rational::from_integer(2.into()) + alpha);
    let mut m = mcgehee_general(alpha, &gamma)?;
    m.name = "double-collision".into();
    Ok(m)
}

/// Exponent of the top power of [`mcgehee_general`]: `γ(2 - α) - 1`.
pub fn mcgehee_exponent(alpha: &Rational, gamma: &Rational) -> Rational {
    gamma * (Rational::from_integer(2.into()) - alpha) - Rational::from_integer(1.into())
}

/// `γ` giving top-power exponent `e` for a given `α ≠ 2`.
pub fn gamma_for_exponent(alpha: &Rational, e: &Rational) -> Result<Rational, CatalogError> {
    let two = Rational::from_integer(2.into());
    if *alpha == two {
        return Err(CatalogError::AlphaEqualsTwo);
    }
    Ok((e + Rational::from_integer(1.into())) / (two - alpha))
}

fn verdict_for_exponent(e: &Rational) -> Verdict {
    match e.to_i64() {
        Some(0) if e.is_integer() => Verdict::Symplectic,
        Some(n) if e.is_integer() && n < 0 => Verdict::BSymplectic((-n) as u32),
        Some(n) if e.is_integer() => Verdict::Folded { m: n as u32, restriction_ok: false },
        _ => Verdict::Degenerate,
    }
}

/// Collision blow-up with independent `γ`; `β = α/2`.
pub fn mcgehee_general(alpha: &Rational, gamma: &Rational) -> Result<Model, CatalogError> {
    if !alpha.is_positive() {
        return Err(CatalogError::InvalidAlpha(fmt_rational(alpha)));
    }
    if gamma.is_zero() {
        return Err(CatalogError::InvalidParams("gamma must be nonzero".into()));
    }
    let one = Rational::from_integer(1.into());
    let beta = alpha / Rational::from_integer(2.into());
    let e1 = -(&beta * gamma) + gamma - &one;
    let source = chart(&["r", "theta", "v", "w"]).with_singular("r")?;
    let g = Expression::constant(gamma.clone());
    let re1 = Expression::var_pow("r", e1.clone());
    let mut form = DifferentialForm::monomial(&source, &g * &re1, &["r", "v"])?;
    let cross = &(&g * &Expression::constant(&one - &beta)) * &(&Expression::var("w") * &re1);
    form = form.sub(&DifferentialForm::monomial(&source, cross, &["r", "theta"])?)?;
    let outer = Expression::var_pow("r", &e1 + &one);
    form = form.sub(&DifferentialForm::monomial(&source, outer, &["w", "theta"])?)?;

    let target = chart(&["x1", "x2", "y1", "y2"]);
    let rg = Expression::var_pow("r", gamma.clone());
    let rmb = Expression::var_pow("r", -(&beta * gamma));
    let (cos, sin) = (e("cos(theta)"), e("sin(theta)"));
    let (v, w) = (Expression::var("v"), Expression::var("w"));
    let map = ChartMap::new(
        &source,
        &target,
        [
            ("x1", &rg * &cos),
            ("x2", &rg * &sin),
            ("y1", &rmb * &(&(&v * &cos) - &(&w * &sin))),
            ("y2", &rmb * &(&(&v * &sin) + &(&w * &cos))),
        ],
    )?;
    check_numerically("mcgehee-general", &map, &[("x1", "y1"), ("x2", "y2")], &form)?;

    let half = Expression::rational(1, 2);
    let h = &(&half * &Expression::var_pow("r", -(Rational::from_integer(2.into()) * &beta * gamma)))
        * &(&(&v * &v) + &(&w * &w))
        - Expression::var_pow("r", -(alpha * gamma));
    let mut params = BTreeMap::new();
    params.insert("alpha".to_string(), alpha.clone());
    params.insert("beta".to_string(), beta);
    params.insert("gamma".to_string(), gamma.clone());
    Ok(Model {
        name: "mcgehee-general".into(),
        chart: source,
        map: Some(map),
        form,
        hamiltonian: Some(h),
        params,
        locus: Some(Locus::Coordinate("r".into())),
        expected: Some(verdict_for_exponent(&mcgehee_exponent(alpha, gamma))),
        notes: vec!["the trigonometric pullback is compared numerically (sin^2 + cos^2 is not rewritten)".into()],
    })
}

/// Pullback equality at seeded points with `r > 0`, relative tolerance 1e-12.
fn check_numerically(
    name: &str,
    map: &ChartMap,
    pairs: &[(&str, &str)],
    form: &DifferentialForm,
) -> Result<(), CatalogError> {
    let pulled = DifferentialForm::canonical(map.target(), pairs)?.pullback(map)?;
    let a = pulled.compile_two_form().map_err(|err| self_check(name, err))?;
    let b = form.compile_two_form().map_err(|err| self_check(name, err))?;
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    for _ in 0..20 {
        let p: Vec<f64> = (0..4)
            .map(|i| if i == 0 { rng.gen_range(0.2..2.0) } else { rng.gen_range(-2.0..2.0) })
            .collect();
        let ma = a.matrix(&p).map_err(|err| self_check(name, err))?;
        let mb = b.matrix(&p).map_err(|err| self_check(name, err))?;
        let scale = mb.amax().max(1.0);
        if (&ma - &mb).amax() > 1e-12 * scale {
            return Err(self_check(name, format!("pullback differs at {p:?}")));
        }
    }
    Ok(())
}

fn self_check(name: &str, detail: impl ToString) -> CatalogError {
    CatalogError::SelfCheck { model: name.to_string(), detail: detail.to_string() }
}

/// `Σ dx_i ∧ dy_i` on `(x1, y1, …, xn, yn)`.
pub fn darboux(n: usize) -> Result<Model, CatalogError> {
    let vars: Vec<String> = (1..=n).flat_map(|i| [format!("x{i}"), format!("y{i}")]).collect();
    let c = Chart::new(&vars)?;
    let pairs: Vec<(&str, &str)> = vars.chunks(2).map(|p| (p[0].as_str(), p[1].as_str())).collect();
    let form = DifferentialForm::canonical(&c, &pairs)?;
    Ok(fixture("darboux", c, form, None, Some(Verdict::Symplectic)))
}

/// `x^{-m} dx∧dy + du∧dw` with `Z = {x = 0}`.
pub fn b_darboux(m: u32) -> Result<Model, CatalogError> {
    if m == 0 {
        return Err(CatalogError::InvalidParams("m must be positive".into()));
    }
    let c = chart(&["x", "y", "u", "w"]).with_singular("x")?;
    let form = DifferentialForm::parse(&c, &format!("x^(-{m})*dx^dy + du^dw"))?;
    Ok(fixture("b-darboux", c, form, Some("x"), Some(Verdict::BSymplectic(m))).with_m(m))
}

/// `y1^m dx1∧dy1 + dx2∧dy2` with `Z = {y1 = 0}`.
pub fn folded_darboux(m: u32) -> Result<Model, CatalogError> {
    if m == 0 {
        return Err(CatalogError::InvalidParams("m must be positive".into()));
    }
    let c = chart(&["x1", "y1", "x2", "y2"]).with_singular("y1")?;
    let form = DifferentialForm::parse(&c, &format!("y1^{m}*dx1^dy1 + dx2^dy2"))?;
    let expected = Verdict::Folded { m, restriction_ok: true };
    Ok(fixture("folded-darboux", c, form, Some("y1"), Some(expected)).with_m(m))
}

/// Split-complex squaring `q1 = (u1² + u2²)/2`, `q2 = u1 u2`: a closed form
/// folded along `u1 = ±u2`, with top power `2(u2² - u1²)`.
pub fn split_squaring() -> Result<Model, CatalogError> {
    let target = chart(&["q1", "q2", "p1", "p2"]);
    let source = chart(&["u1", "u2", "p1", "p2"]);
    let map = ChartMap::new(
        &source,
        &target,
        [("q1", e("1/2*u1^2 + 1/2*u2^2")), ("q2", e("u1*u2")), ("p1", e("p1")), ("p2", e("p2"))],
    )?;
    let form = DifferentialForm::canonical(&target, &[("q1", "p1"), ("q2", "p2")])?.pullback(&map)?;
    let seed = point(&[("u1", 1.0), ("u2", 1.0), ("p1", 0.3), ("p2", -0.2)]);
    Ok(Model {
        name: "split-squaring".into(),
        chart: source,
        map: Some(map),
        form,
        hamiltonian: None,
        params: BTreeMap::new(),
        locus: Some(Locus::Hypersurface(Hypersurface::new(e("u1^2 - u2^2"), seed).expect("seed on u1 = u2"))),
        expected: Some(Verdict::Folded { m: 1, restriction_ok: true }),
        notes: Vec::new(),
    })
}

fn extended_chart(n: usize) -> Vec<String> {
    let mut vars = vec!["z".to_string()];
    vars.extend((2..=n).map(|i| format!("y{i}")));
    vars.extend((1..=n).map(|i| format!("x{i}")));
    vars
}

fn liouville_text(n: usize) -> String {
    let mut text = "x1*dz/z".to_string();
    for i in 2..=n {
        text.push_str(&format!(" + x{i}*dy{i}"));
    }
    text
}

/// `λ = x1 dz/z + Σ_{i≥2} x_i dy_i` on the b-cotangent bundle; the model's
/// form is `dλ`, with `Z = {z = 0}`.
pub fn b_cotangent(n: usize) -> Result<Model, CatalogError> {
    if n == 0 {
        return Err(CatalogError::InvalidParams("n must be positive".into()));
    }
    let c = Chart::new(&extended_chart(n))?.with_singular("z")?;
    let form = DifferentialForm::parse(&c, &liouville_text(n))?.ext_d()?;
    Ok(fixture("b-cotangent", c, form, Some("z"), Some(Verdict::BSymplectic(1))))
}

/// The b-contact form `dt + λ` on `ℝ × bT*M`, `Z = {z = 0}`.
pub fn extended_phase_space(n: usize) -> Result<Model, CatalogError> {
    if n == 0 {
        return Err(CatalogError::InvalidParams("n must be positive".into()));
    }
    let mut vars = vec!["t".to_string()];
    vars.extend(extended_chart(n));
    let c = Chart::new(&vars)?.with_singular("z")?;
    let form = DifferentialForm::parse(&c, &format!("dt + {}", liouville_text(n)))?;
    Ok(fixture("extended-phase-space", c, form, Some("z"), None))
}

/// Classical contact form `dz + x dy` on `(z, x, y)`.
pub fn standard_contact() -> Result<Model, CatalogError> {
    let c = chart(&["z", "x", "y"]);
    let form = DifferentialForm::parse(&c, "dz + x*dy")?;
    Ok(fixture("standard-contact", c, form, None, None))
}

fn fixture(name: &str, chart: Chart, form: DifferentialForm, var: Option<&str>, expected: Option<Verdict>) -> Model {
    Model {
        name: name.into(),
        chart,
        map: None,
        form,
        hamiltonian: None,
        params: BTreeMap::new(),
        locus: var.map(|v| Locus::Coordinate(v.into())),
        expected,
        notes: Vec::new(),
    }
}

impl Model {
    fn with_m(mut self, m: u32) -> Self {
        self.params.insert("m".into(), Rational::from_integer(m.into()));
        self
    }
}

/// One row of `catalog list`.
#[derive(Clone, Debug, serde::Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub params: &'static str,
    pub degree: usize,
    pub chart: String,
    pub locus: String,
    pub expected: String,
}

pub const MODEL_NAMES: [&str; 12] = [
    "levi-civita",
    "two-centers",
    "mcgehee-infinity",
    "double-collision",
    "mcgehee-general",
    "darboux",
    "b-darboux",
    "folded-darboux",
    "split-squaring",
    "b-cotangent",
    "extended-phase-space",
    "standard-contact",
];

fn param_help(name: &str) -> &'static str {
    match name {
        "double-collision" => "alpha (default 2)",
        "mcgehee-general" => "alpha (default 1), gamma (default 2/(2+alpha))",
        "b-darboux" | "folded-darboux" => "m (default 1)",
        "darboux" | "b-cotangent" | "extended-phase-space" => "m = n (default 2)",
        _ => "-",
    }
}

/// Builds a model by its CLI name.
pub fn by_name(name: &str, p: &ModelParams) -> Result<Model, CatalogError> {
    let alpha = |d: i64| p.alpha.clone().unwrap_or_else(|| rat(d, 1));
    match name {
        "levi-civita" => levi_civita_point(),
        "two-centers" => two_centers_elliptic(),
        "mcgehee-infinity" => mcgehee_infinity(),
        "double-collision" => match &p.gamma {
            None => mcgehee_double_collision(&alpha(2)),
            Some(_) => Err(CatalogError::InvalidParams("double-collision fixes gamma; use mcgehee-general".into())),
        },
        "mcgehee-general" => {
            let a = alpha(1);
            let g = p.gamma.clone().unwrap_or_else(|| rat(2, 1) / (rat(2, 1) + &a));
            mcgehee_general(&a, &g)
        }
        "darboux" => darboux(p.m.unwrap_or(2) as usize),
        "b-darboux" => b_darboux(p.m.unwrap_or(1)),
        "folded-darboux" => folded_darboux(p.m.unwrap_or(1)),
        "split-squaring" => split_squaring(),
        "b-cotangent" => b_cotangent(p.m.unwrap_or(2) as usize),
        "extended-phase-space" => extended_phase_space(p.m.unwrap_or(2) as usize),
        "standard-contact" => standard_contact(),
        other => Err(CatalogError::UnknownModel(other.to_string())),
    }
}

pub fn list() -> Vec<CatalogEntry> {
    MODEL_NAMES
        .iter()
        .map(|&name| {
            let model = by_name(name, &ModelParams::default()).expect("default parameters are valid");
            let locus = match &model.locus {
                Some(Locus::Coordinate(v)) => format!("{v} = 0"),
                Some(Locus::Hypersurface(h)) => format!("{} = 0", h.defining()),
                None => "-".into(),
            };
            CatalogEntry {
                name,
                params: param_help(name),
                degree: model.form.degree(),
                chart: model.chart.to_string(),
                locus,
                expected: model.expected.map_or_else(|| "-".into(), |v| v.to_string()),
            }
        })
        .collect()
}
