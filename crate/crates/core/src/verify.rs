//! Self-check suite behind `singsymp verify`.
//!
//! Each criterion produces a pass flag, human-readable measurements and a set
//! of exact regression facts. The facts are compared against a golden file;
//! any mismatch fails the criterion and is reported as a diff.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::DMatrix;
use num::{One, Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::catalog::{self, Locus};
use crate::classify::{self, Verdict, DEFAULT_SEED};
use crate::contact;
use crate::desing::{self, Grid, NumericForm, SmoothingProfile};
use crate::dynamics::{self, TimeLabel, Tolerances};
use crate::exterior::{Chart, ChartMap, DifferentialForm, VectorField};
use crate::symexpr::{fmt_rational, rat, Expression, Func, Rational};

/// Golden facts shipped with the crate.
pub const EMBEDDED_GOLDEN: &str = include_str!("../golden/verify.json");

pub type Golden = BTreeMap<String, BTreeMap<String, String>>;

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub module: &'static str,
    pub title: &'static str,
    pub pass: bool,
    pub measured: Vec<String>,
    pub facts: BTreeMap<String, String>,
    pub golden_diff: Vec<String>,
    pub elapsed_ms: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "{} criterion {:>2} [{}] {} ({:.1} ms): {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.module,
            self.title,
            self.elapsed_ms,
            self.measured.join("; ")
        )
    }
}

struct Outcome {
    pass: bool,
    measured: Vec<String>,
    facts: BTreeMap<String, String>,
}

impl Outcome {
    fn new() -> Self {
        Self { pass: true, measured: Vec::new(), facts: BTreeMap::new() }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        self.pass &= ok;
        let what = what.into();
        self.measured.push(if ok { what } else { format!("FAILED {what}") });
    }

    fn fact(&mut self, key: impl Into<String>, value: impl ToString) {
        self.facts.insert(key.into(), value.to_string());
    }

    fn error(&mut self, e: impl std::fmt::Display) {
        self.check(false, format!("error: {e}"));
    }
}

type Runner = fn() -> Outcome;

const CRITERIA: [(u8, &str, &str, Runner); 11] = [
    (1, "classify", "double-collision verdicts for alpha = 2/3, 2, 6", criterion_1),
    (2, "catalog", "exponent law (2 - 3 alpha)/(2 + alpha)", criterion_2),
    (3, "catalog", "generalized family hits any target exponent", criterion_3),
    (4, "classify", "Levi-Civita point map folds along u1 = +-u2", criterion_4),
    (5, "catalog", "two-centers pullback and top power", criterion_5),
    (6, "classify", "McGehee infinity is b^3-symplectic", criterion_6),
    (7, "desing", "f_eps desingularization of the b^2-Darboux form", criterion_7),
    (8, "dynamics", "primed collision flow equations", criterion_8),
    (9, "dynamics", "first integral and energy conservation", criterion_9),
    (10, "contact", "Reeb field and Liouville condition", criterion_10),
    (11, "exterior", "exterior calculus identities on random inputs", criterion_11),
];

/// `(id, module, title)` of every criterion.
pub fn criteria() -> impl Iterator<Item = (u8, &'static str, &'static str)> {
    CRITERIA.iter().map(|(id, m, t, _)| (*id, *m, *t))
}

/// Whether `filter` selects a criterion: a number matches the id only,
/// anything else matches the module name or part of the title.
pub fn selects(filter: &str, id: u8, module: &str, title: &str) -> bool {
    let f = filter.trim().to_lowercase();
    match f.parse::<u8>() {
        Ok(n) => n == id,
        Err(_) => module == f || title.to_lowercase().contains(&f),
    }
}

pub fn parse_golden(text: &str) -> Result<Golden, serde_json::Error> {
    serde_json::from_str(text)
}

pub fn run(filter: Option<&str>, golden: &Golden) -> Vec<CriterionResult> {
    CRITERIA
        .iter()
        .filter(|(id, m, t, _)| filter.is_none_or(|f| selects(f, *id, m, t)))
        .map(|&(id, module, title, runner)| run_one(id, module, title, runner, golden))
        .collect()
}

fn run_one(id: u8, module: &'static str, title: &'static str, runner: Runner, golden: &Golden) -> CriterionResult {
    let start = Instant::now();
    let out = runner();
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    let expected = golden.get(&format!("c{id}"));
    let golden_diff = diff_facts(expected, &out.facts);
    CriterionResult {
        id,
        module,
        title,
        pass: out.pass && golden_diff.is_empty(),
        measured: out.measured,
        facts: out.facts,
        golden_diff,
        elapsed_ms,
    }
}

fn diff_facts(expected: Option<&BTreeMap<String, String>>, got: &BTreeMap<String, String>) -> Vec<String> {
    let Some(expected) = expected else {
        return vec!["no golden entry".into()];
    };
    let mut diff = Vec::new();
    for (k, v) in expected {
        match got.get(k) {
            Some(g) if g == v => {}
            Some(g) => diff.push(format!("{k}: golden {v:?}, computed {g:?}")),
            None => diff.push(format!("{k}: golden {v:?}, not computed")),
        }
    }
    for (k, g) in got {
        if !expected.contains_key(k) {
            diff.push(format!("{k}: computed {g:?}, not in golden"));
        }
    }
    diff
}

/// All facts of a run, in golden-file layout.
pub fn facts_as_golden(results: &[CriterionResult]) -> Golden {
    results.iter().map(|r| (format!("c{}", r.id), r.facts.clone())).collect()
}

fn leading_top_exponent(form: &DifferentialForm, var: &str) -> Result<Rational, String> {
    let top = form.top_power().map_err(|e| e.to_string())?.top_coefficient();
    top.leading_exponent(var).map(|(e, _)| e).map_err(|e| e.to_string())
}

fn random_alpha(rng: &mut ChaCha8Rng) -> Rational {
    let q = rng.gen_range(1..=12i64);
    let p = rng.gen_range(1..10 * q);
    rat(p, q)
}

fn criterion_1() -> Outcome {
    let mut out = Outcome::new();
    for (a, verdict, exponent) in
        [(rat(2, 3), Verdict::Symplectic, 0), (rat(2, 1), Verdict::BSymplectic(1), -1), (rat(6, 1), Verdict::BSymplectic(2), -2)]
    {
        let label = fmt_rational(&a);
        let c = catalog::mcgehee_double_collision(&a)
            .map_err(|e| e.to_string())
            .and_then(|m| classify::classify_along_coordinate(&m.form, "r").map_err(|e| e.to_string()));
        match c {
            Ok(c) => {
                out.check(
                    c.verdict == verdict && c.exponent == rat(exponent, 1),
                    format!("alpha={label}: {} exponent {}", c.verdict, fmt_rational(&c.exponent)),
                );
                out.fact(format!("alpha={label}"), format!("{} {}", c.verdict, fmt_rational(&c.exponent)));
            }
            Err(e) => out.error(e),
        }
    }
    out
}

fn criterion_2() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let mut mismatches = 0;
    for _ in 0..50 {
        let a = random_alpha(&mut rng);
        let law = (rat(2, 1) - rat(3, 1) * &a) / (rat(2, 1) + &a);
        let got = catalog::mcgehee_double_collision(&a)
            .map_err(|e| e.to_string())
            .and_then(|m| leading_top_exponent(&m.form, "r"));
        if got.as_ref() != Ok(&law) {
            mismatches += 1;
        }
    }
    out.check(mismatches == 0, format!("{mismatches}/50 random alpha disagree with the law"));
    let big = rat(1_000_000, 1);
    match catalog::mcgehee_double_collision(&big).map_err(|e| e.to_string()).and_then(|m| leading_top_exponent(&m.form, "r")) {
        Ok(e) => {
            let x = e.to_f64().unwrap_or(f64::NAN);
            out.check(-3.0 < x && x < -2.9999, format!("alpha=10^6: exponent {} = {x:.7}", fmt_rational(&e)));
            out.fact("alpha=1000000", fmt_rational(&e));
        }
        Err(e) => out.error(e),
    }
    out
}

fn criterion_3() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED ^ 3);
    let mut checked = 0;
    let mut mismatches = Vec::new();
    while checked < 50 {
        let a = random_alpha(&mut rng);
        let e = rat(rng.gen_range(-4..=4i64), rng.gen_range(1..=3i64));
        if a == rat(2, 1) || e == rat(-1, 1) {
            continue;
        }
        checked += 1;
        let got = catalog::gamma_for_exponent(&a, &e)
            .and_then(|g| catalog::mcgehee_general(&a, &g))
            .map_err(|err| err.to_string())
            .and_then(|m| leading_top_exponent(&m.form, "r"));
        if got.as_ref() != Ok(&e) {
            mismatches.push(format!("alpha={} e={}", fmt_rational(&a), fmt_rational(&e)));
        }
    }
    out.check(mismatches.is_empty(), format!("{}/50 (alpha, e) pairs miss the target {:?}", mismatches.len(), mismatches));
    match catalog::gamma_for_exponent(&rat(6, 1), &rat(-2, 1)) {
        Ok(g) => out.fact("gamma(alpha=6,e=-2)", fmt_rational(&g)),
        Err(e) => out.error(e),
    }
    out
}

/// `c / target` when it is a nonzero rational constant.
fn proportionality(c: &Expression, target: &Expression) -> Option<Rational> {
    let t = target.terms().next()?;
    let coeff = c.terms().find(|u| u.monomial == t.monomial).map(|u| u.coeff / t.coeff)?;
    (c == &target.scale(&coeff)).then_some(coeff)
}

fn criterion_4() -> Outcome {
    let mut out = Outcome::new();
    let model = match catalog::levi_civita_point() {
        Ok(m) => m,
        Err(e) => {
            out.error(e);
            return out;
        }
    };
    let top = model.form.top_power().map(|t| t.top_coefficient());
    let target = Expression::parse("u1^2 - u2^2").expect("literal");
    match top {
        Ok(top) => {
            let k = proportionality(&top, &target);
            out.check(
                k.as_ref().is_some_and(|k| k.abs() == Rational::one()),
                format!("top coefficient {top}, multiple of u1^2 - u2^2: {}", k.map_or("no".into(), |k| fmt_rational(&k))),
            );
            out.fact("top_coefficient", &top);
        }
        Err(e) => out.error(e),
    }
    let Some(Locus::Hypersurface(h)) = &model.locus else {
        out.error("model has no hypersurface locus");
        return out;
    };
    match classify::classify_along_hypersurface(&model.form, h) {
        Ok(c) => {
            let slope = c.exponent.to_f64().unwrap_or(f64::NAN);
            let r2 = c.fit_quality.unwrap_or(f64::NAN);
            out.check((slope - 1.0).abs() <= 0.02 && r2 >= 0.999, format!("fit slope {slope:.4}, R^2 {r2:.6}, verdict {}", c.verdict));
            out.fact("verdict", c.verdict);
        }
        Err(e) => {
            out.error(&e);
            out.fact("verdict", format!("error: {e}"));
        }
    }
    out
}

/// The pulled-back form as printed for the elliptic chart.
pub const TWO_CENTERS_PRINTED: &str = "cosh(lambda)*cos(nu)*dlambda^dp1 + cosh(lambda)*cos(nu)*dnu^dp2 \
     - sinh(lambda)*sin(nu)*dnu^dp1 - sinh(lambda)*sin(nu)*dlambda^dp2";

fn criterion_5() -> Outcome {
    let mut out = Outcome::new();
    let model = match catalog::two_centers_elliptic() {
        Ok(m) => m,
        Err(e) => {
            out.error(e);
            return out;
        }
    };
    let printed = DifferentialForm::parse(&model.chart, TWO_CENTERS_PRINTED).expect("literal");
    let mut agree = 0;
    let mut differ = Vec::new();
    let keys: std::collections::BTreeSet<Vec<usize>> =
        model.form.coefficients().chain(printed.coefficients()).map(|(k, _)| k.to_vec()).collect();
    for idx in &keys {
        if model.form.coefficient(idx) == printed.coefficient(idx) {
            agree += 1;
        } else {
            let names: Vec<&str> = idx.iter().map(|&i| model.chart.var(i)).collect();
            differ.push(format!("d{}: computed {}, printed {}", names.join("^d"), model.form.coefficient(idx), printed.coefficient(idx)));
        }
    }
    out.check(differ.is_empty(), format!("{agree}/{} components agree {differ:?}", keys.len()));
    out.fact("components_agreeing", format!("{agree}/{}", keys.len()));
    out.fact("printed_closed", printed.is_closed());
    match model.form.top_power() {
        Ok(t) => {
            let top = t.top_coefficient();
            let target =
                Expression::parse("cosh(lambda)^2*cos(nu)^2 - sinh(lambda)^2*sin(nu)^2").expect("literal");
            let k = proportionality(&top, &target);
            out.check(
                k.as_ref().is_some_and(|k| k.abs() == rat(2, 1)),
                format!("top coefficient {top}, multiple of the target: {}", k.map_or("no".into(), |k| fmt_rational(&k))),
            );
            out.fact("top_coefficient", top);
        }
        Err(e) => out.error(e),
    }
    out
}

fn criterion_6() -> Outcome {
    let mut out = Outcome::new();
    let model = match catalog::mcgehee_infinity() {
        Ok(m) => m,
        Err(e) => {
            out.error(e);
            return out;
        }
    };
    match classify::classify_along_coordinate(&model.form, "x") {
        Ok(c) => {
            out.check(c.verdict == Verdict::BSymplectic(3), format!("verdict {}", c.verdict));
            out.fact("verdict", c.verdict);
        }
        Err(e) => out.error(e),
    }
    match model.form.coefficient_of(&["x", "Pr"]) {
        Ok(c) => {
            let k = proportionality(&c, &Expression::var_pow("x", rat(-3, 1)));
            out.check(
                k.as_ref().is_some_and(|k| k.abs() == rat(4, 1)),
                format!("dx^dPr coefficient {c}"),
            );
            out.fact("dx^dPr", c);
        }
        Err(e) => out.error(e),
    }
    out
}

fn criterion_7() -> Outcome {
    let mut out = Outcome::new();
    let result = (|| -> Result<(), String> {
        let model = catalog::b_darboux(2).map_err(|e| e.to_string())?;
        let profile = SmoothingProfile::new(1).map_err(|e| e.to_string())?;
        let eps = 0.1;
        let d = desing::desingularize(&model.form, "x", eps, &profile).map_err(|e| e.to_string())?;
        let exact = desing::CompiledForm::new(&model.form).map_err(|e| e.to_string())?;
        let grid = Grid::uniform(-1.0, 1.0, 11, 4);
        let k = model.chart.index_of("x").expect("x in chart");
        let (mut outside, mut identical) = (0, 0);
        for p in grid.points() {
            if p[k].abs() > eps {
                outside += 1;
                let (a, b) = (d.matrix(&p).map_err(|e| e.to_string())?, exact.matrix(&p).map_err(|e| e.to_string())?);
                if bit_equal(&a, &b) {
                    identical += 1;
                }
            }
        }
        out.check(outside > 0 && identical == outside, format!("(a) bit-exact at {identical}/{outside} points with |x| > eps"));
        let report = desing::verify_symplectic_on_grid(&d, &grid);
        out.check(
            report.symplectic(),
            format!("(b) {} points, min|det| {:.4e}, sign constant {}", report.points, report.min_abs_det, report.det_sign_constant),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED ^ 7);
        let samples: Vec<Vec<f64>> = (0..200)
            .map(|_| {
                let mut p: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let x: f64 = rng.gen_range(0.0005..0.025);
                p[k] = if rng.gen_bool(0.5) { x } else { -x };
                p
            })
            .collect();
        let epsilons = [0.2, 0.1, 0.05, 0.025];
        let rows = desing::convergence_report(&model.form, "x", &profile, &epsilons, &samples).map_err(|e| e.to_string())?;
        let devs: Vec<f64> = rows.iter().map(|r| r.sup_deviation).collect();
        out.check(
            devs.windows(2).all(|w| w[1] < w[0]),
            format!("(c) sup deviation {:?}", devs.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>()),
        );
        out.fact("profile", serde_json::to_string(&desing::profile_summary(&profile)).unwrap_or_default());
        out.fact("grid_points", report.points);
        Ok(())
    })();
    if let Err(e) = result {
        out.error(e);
    }
    out
}

fn bit_equal(a: &DMatrix<f64>, b: &DMatrix<f64>) -> bool {
    a.shape() == b.shape() && a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits() || (*x == 0.0 && *y == 0.0))
}

fn criterion_8() -> Outcome {
    let mut out = Outcome::new();
    for a in [rat(1, 2), rat(1, 1), rat(2, 1), rat(3, 1), rat(6, 1)] {
        let label = fmt_rational(&a);
        match dynamics::verify_flow_equations(&a) {
            Ok(check) => {
                let bad: Vec<String> = check
                    .components
                    .iter()
                    .filter(|c| !c.equal)
                    .map(|c| format!("{}' computed {} printed {}", c.component, c.computed, c.expected))
                    .collect();
                out.check(check.holds(), format!("alpha={label}: {}", if bad.is_empty() { "all four agree".into() } else { bad.join(", ") }));
                let verdicts: Vec<&str> = check.components.iter().map(|c| if c.equal { "=" } else { "!=" }).collect();
                out.fact(format!("alpha={label}"), verdicts.join(" "));
            }
            Err(e) => out.error(e),
        }
    }
    out
}

/// Initial state and spans used by the conservation criterion.
pub const CONSERVATION_X0: [f64; 4] = [1.0, 0.0, 0.1, 1.0];
pub const CONSERVATION_TAU: f64 = 10.0;
pub const CONSERVATION_T: f64 = 3.0;

fn criterion_9() -> Outcome {
    let mut out = Outcome::new();
    let result = (|| -> Result<(), String> {
        let flow = dynamics::McGeheeFlow::new(&rat(1, 1)).map_err(|e| e.to_string())?;
        let tol = Tolerances { rtol: 1e-10, atol: 1e-12, ..Default::default() };
        let tau = flow.system(TimeLabel::Tau).map_err(|e| e.to_string())?;
        let tr = dynamics::integrate(&tau, &CONSERVATION_X0, (0.0, CONSERVATION_TAU), &tol).map_err(|e| e.to_string())?;
        let drift = tr.drift["F"];
        out.check(tr.halt.is_none() && drift < 1e-6, format!("tau-flow: max F drift {drift:.3e} over {} steps", tr.stats.accepted));
        let t = flow.system(TimeLabel::T).map_err(|e| e.to_string())?;
        let tr = dynamics::integrate(&t, &CONSERVATION_X0, (0.0, CONSERVATION_T), &tol).map_err(|e| e.to_string())?;
        let rmin = tr.states.iter().map(|s| s[0]).fold(f64::INFINITY, f64::min);
        let rel = tr.relative_drift("H").unwrap_or(f64::NAN);
        out.check(
            tr.halt.is_none() && rmin >= 0.1 && rel < 1e-8,
            format!("t-flow: relative H drift {rel:.3e}, min r {rmin:.3}"),
        );
        out.fact("beta", fmt_rational(&flow.beta));
        out.fact("time_factor", &flow.time_factor);
        Ok(())
    })();
    if let Err(e) = result {
        out.error(e);
    }
    out
}

fn criterion_10() -> Outcome {
    let mut out = Outcome::new();
    let result = (|| -> Result<(), String> {
        let model = catalog::extended_phase_space(2).map_err(|e| e.to_string())?;
        let alpha = &model.form;
        let reeb = contact::reeb_field(alpha).map_err(|e| e.to_string())?;
        let dt = VectorField::coordinate(alpha.chart(), "t").map_err(|e| e.to_string())?;
        out.check(reeb.symbolic() == Some(&dt), format!("Reeb field {}", reeb.symbolic().map_or("numeric".into(), |x| x.to_string())));
        let k = alpha.chart().index_of("z").expect("z in chart");
        let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED ^ 10);
        let points: Vec<Vec<f64>> = (0..50)
            .map(|_| {
                let mut p: Vec<f64> = (0..alpha.chart().dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let z: f64 = rng.gen_range(0.1..2.0);
                p[k] = if rng.gen_bool(0.5) { z } else { -z };
                p
            })
            .collect();
        let residual = contact::reeb_residual(alpha, &reeb, &points).map_err(|e| e.to_string())?;
        out.check(residual < 1e-10, format!("defining-equation residual {residual:.2e} at 50 points"));

        let c = Chart::new(&["q1", "q2", "p1", "p2"]).map_err(|e| e.to_string())?;
        let omega = DifferentialForm::canonical(&c, &[("q1", "p1"), ("q2", "p2")]).map_err(|e| e.to_string())?;
        let x = VectorField::from_named(&c, [("p1", Expression::var("p1")), ("p2", Expression::var("p2"))])
            .map_err(|e| e.to_string())?;
        let liouville = contact::liouville_check(&x, &omega).map_err(|e| e.to_string())?;
        out.check(liouville, "L_X omega = omega for X = p1 d/dp1 + p2 d/dp2");

        let b = catalog::b_cotangent(2).map_err(|e| e.to_string())?;
        let xb = VectorField::from_named(&b.chart, [("x1", Expression::var("x1")), ("x2", Expression::var("x2"))])
            .map_err(|e| e.to_string())?;
        let b_liouville = contact::liouville_check(&xb, &b.form).map_err(|e| e.to_string())?;
        out.fact("reeb", reeb.symbolic().map_or("numeric".into(), |x| x.to_string()));
        out.fact("induced_contact", contact::induced_contact(&x, &omega).map_err(|e| e.to_string())?);
        out.fact("b_cotangent_liouville", b_liouville);
        Ok(())
    })();
    if let Err(e) = result {
        out.error(e);
    }
    out
}

/// Random-input generators shared by the property criterion.
pub mod random {
    use super::*;

    const FUNCS: [Func; 3] = [Func::Sin, Func::Cos, Func::Exp];

    /// Sum of up to three terms with small rational coefficients. With
    /// `elementary`, terms may also carry `sin`/`cos`/`exp` factors and
    /// negative powers.
    pub fn expression(rng: &mut impl Rng, vars: &[String], elementary: bool) -> Expression {
        let mut out = Expression::zero();
        for _ in 0..rng.gen_range(0..=3) {
            let mut t = Expression::rational(rng.gen_range(-5..=5), rng.gen_range(1..=4));
            for v in vars {
                let lo = if elementary { -1 } else { 0 };
                let p = rng.gen_range(lo..=2);
                if p != 0 {
                    t = &t * &Expression::var_pow(v, rat(p, 1));
                }
            }
            if elementary && rng.gen_bool(0.4) {
                let f = FUNCS[rng.gen_range(0..FUNCS.len())];
                t = &t * &Expression::func(f, &vars[rng.gen_range(0..vars.len())]);
            }
            out = out + t;
        }
        out
    }

    pub fn form(rng: &mut impl Rng, chart: &Chart, degree: usize, elementary: bool) -> DifferentialForm {
        let n = chart.dim();
        let mut coeffs = Vec::new();
        for idx in subsets(n, degree) {
            if rng.gen_bool(0.6) {
                coeffs.push((idx, expression(rng, chart.vars(), elementary)));
            }
        }
        DifferentialForm::from_coefficients(chart, degree, coeffs).expect("valid indices")
    }

    pub fn field(rng: &mut impl Rng, chart: &Chart, elementary: bool) -> VectorField {
        let comps = (0..chart.dim()).map(|_| expression(rng, chart.vars(), elementary)).collect();
        VectorField::from_components(chart, comps).expect("one component per coordinate")
    }

    /// Polynomial map `source → target`.
    pub fn map(rng: &mut impl Rng, source: &Chart, target: &Chart) -> ChartMap {
        let comps: Vec<(&str, Expression)> =
            target.vars().iter().map(|v| (v.as_str(), expression(rng, source.vars(), false))).collect();
        ChartMap::new(source, target, comps).expect("every target coordinate given")
    }

    /// Strictly increasing `k`-subsets of `0..n`.
    pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
        fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in start..n {
                cur.push(i);
                go(i + 1, n, k, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        go(0, n, k, &mut Vec::new(), &mut out);
        out
    }
}

/// Randomized cases per identity in criterion 11.
pub const PROPERTY_CASES: usize = 100;

fn criterion_11() -> Outcome {
    let mut out = Outcome::new();
    let chart = Chart::new(&["x", "y", "z", "w"]).expect("distinct");
    let source = Chart::new(&["a", "b", "c"]).expect("distinct");
    let target = Chart::new(&["x", "y", "z"]).expect("distinct");
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED ^ 11);
    let mut tally = |name: &str, out: &mut Outcome, mut case: Box<dyn FnMut(&mut ChaCha8Rng) -> bool>| {
        let failures = (0..PROPERTY_CASES).filter(|_| !case(&mut rng)).count();
        out.check(failures == 0, format!("{name}: {failures}/{PROPERTY_CASES} failures"));
        out.fact(name, failures);
    };
    let c = chart.clone();
    tally("d(d(omega)) = 0", &mut out, Box::new(move |rng| {
        let p = rng.gen_range(0..=2);
        let w = random::form(rng, &c, p, true);
        w.ext_d().and_then(|d| d.ext_d()).is_ok_and(|dd| dd.is_zero())
    }));
    let (s, t) = (source.clone(), target.clone());
    tally("pullback commutes with d", &mut out, Box::new(move |rng| {
        let phi = random::map(rng, &s, &t);
        let p = rng.gen_range(0..=2);
        let w = random::form(rng, &t, p, false);
        let lhs = w.ext_d().and_then(|d| d.pullback(&phi));
        let rhs = w.pullback(&phi).and_then(|f| f.ext_d());
        matches!((lhs, rhs), (Ok(l), Ok(r)) if l == r)
    }));
    let c = chart.clone();
    tally("wedge graded commutativity", &mut out, Box::new(move |rng| {
        let (p, q) = (rng.gen_range(0..=2), rng.gen_range(0..=2));
        let a = random::form(rng, &c, p, true);
        let b = random::form(rng, &c, q, true);
        let sign = if (p * q) % 2 == 0 { Expression::one() } else { Expression::int(-1) };
        matches!((a.wedge(&b), b.wedge(&a)), (Ok(l), Ok(r)) if l == r.scale(&sign))
    }));
    let c = chart;
    tally("interior product graded Leibniz", &mut out, Box::new(move |rng| {
        let (p, q) = (rng.gen_range(1..=2), rng.gen_range(1..=2));
        let a = random::form(rng, &c, p, true);
        let b = random::form(rng, &c, q, true);
        let x = random::field(rng, &c, true);
        let sign = if p % 2 == 0 { Expression::one() } else { Expression::int(-1) };
        let lhs = a.wedge(&b).and_then(|ab| ab.interior(&x));
        let rhs = (|| a.interior(&x)?.wedge(&b)?.add(&a.wedge(&b.interior(&x)?)?.scale(&sign)))();
        matches!((lhs, rhs), (Ok(l), Ok(r)) if l == r)
    }));
    out
}
