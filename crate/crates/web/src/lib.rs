//! Browser bindings for three demo operations. Each export returns a JSON
//! string; the plain `*_json` functions behind them are usable natively.

use num::ToPrimitive;
use serde_json::{json, Value};
use singsymp::catalog;
use singsymp::classify::ClassifyOptions;
use singsymp::desing::SmoothingProfile;
use singsymp::dynamics::{self, McGeheeFlow, TimeLabel, Tolerances};
use singsymp::symexpr::{fmt_rational, parse_rational, Rational};
use wasm_bindgen::prelude::*;

/// Hard cap on samples returned to the page.
pub const MAX_POINTS: usize = 4000;

fn alpha(text: &str) -> Result<Rational, String> {
    parse_rational(text).map_err(|e| format!("alpha: {e}"))
}

/// `f_ε` and `f_ε'` on `n` evenly spaced points of `[-span, span]`.
pub fn profile_json(k: u32, eps: f64, span: f64, n: usize) -> Result<String, String> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err("eps must be positive".into());
    }
    if !(span > 0.0 && span.is_finite()) || !(2..=MAX_POINTS).contains(&n) {
        return Err(format!("need span > 0 and 2 <= n <= {MAX_POINTS}"));
    }
    let f = SmoothingProfile::new(k).map_err(|e| e.to_string())?;
    let xs: Vec<f64> = (0..n).map(|i| -span + 2.0 * span * i as f64 / (n - 1) as f64).collect();
    // the singular coefficient x^{-2k}, clipped near the pole
    let raw: Vec<Option<f64>> = xs
        .iter()
        .map(|&x| Some(x.powi(-2 * k as i32)).filter(|v| v.is_finite()))
        .collect();
    let [a, c, e] = f.coefficients();
    Ok(json!({
        "k": k,
        "eps": eps,
        "coefficients": { "a": fmt_rational(a), "c": fmt_rational(c), "e": fmt_rational(e) },
        "continuity_order": f.continuity_order(),
        "x": xs,
        "f_eps": xs.iter().map(|&x| f.f_eps(eps, x)).collect::<Vec<_>>(),
        "f_eps_prime": xs.iter().map(|&x| f.f_eps_prime(eps, x)).collect::<Vec<_>>(),
        "singular": raw,
    })
    .to_string())
}

/// Classification of the collision blow-up form for potential exponent `α`.
pub fn exponent_json(alpha_text: &str) -> Result<String, String> {
    let a = alpha(alpha_text)?;
    let model = catalog::mcgehee_double_collision(&a).map_err(|e| e.to_string())?;
    let gamma = model.params["gamma"].clone();
    let law = catalog::mcgehee_exponent(&a, &gamma);
    let classification = match model.classify(&ClassifyOptions::default()) {
        Some(Ok(c)) => serde_json::to_value(c.report()).map_err(|e| e.to_string())?,
        Some(Err(e)) => json!({ "error": e.to_string() }),
        None => Value::Null,
    };
    Ok(json!({
        "alpha": fmt_rational(&a),
        "beta": fmt_rational(&model.params["beta"]),
        "gamma": fmt_rational(&gamma),
        "law_exponent": fmt_rational(&law),
        "form": model.form.to_string(),
        "classification": classification,
    })
    .to_string())
}

/// τ-orbit of the blown-up collision flow from `(r, θ, v, w)`.
pub fn orbit_json(alpha_text: &str, x0: [f64; 4], tau: f64, rtol: f64) -> Result<String, String> {
    if !(tau.is_finite() && tau.abs() <= 1e3) {
        return Err("tau must satisfy |tau| <= 1000".into());
    }
    if !(rtol > 0.0 && rtol < 1e-2) {
        return Err("rtol must lie in (0, 1e-2)".into());
    }
    let flow = McGeheeFlow::new(&alpha(alpha_text)?).map_err(|e| e.to_string())?;
    let system = flow
        .system(TimeLabel::Tau)
        .map_err(|e| e.to_string())?
        .with_monitor("G", dynamics::mcgehee_general_integral(&flow.beta));
    let tol = Tolerances { rtol, atol: rtol * 1e-4, max_steps: 50_000, ..Default::default() };
    let traj = dynamics::integrate(&system, &x0, (0.0, tau), &tol).map_err(|e| e.to_string())?;
    let stride = traj.times.len().div_ceil(MAX_POINTS).max(1);
    let keep: Vec<usize> = (0..traj.times.len())
        .step_by(stride)
        .chain(std::iter::once(traj.times.len() - 1))
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let col = |j: usize| keep.iter().map(|&i| traj.states[i][j]).collect::<Vec<_>>();
    let gamma = flow.gamma.to_f64().unwrap_or(f64::NAN);
    // configuration-space position: |x| = r^γ
    let (px, py): (Vec<f64>, Vec<f64>) = keep
        .iter()
        .map(|&i| {
            let s = &traj.states[i];
            let rho = s[0].powf(gamma);
            (rho * s[1].cos(), rho * s[1].sin())
        })
        .unzip();
    Ok(json!({
        "alpha": fmt_rational(&flow.model.params["alpha"]),
        "beta": fmt_rational(&flow.beta),
        "tau": keep.iter().map(|&i| traj.times[i]).collect::<Vec<_>>(),
        "r": col(0),
        "theta": col(1),
        "v": col(2),
        "w": col(3),
        "x": px,
        "y": py,
        "steps": traj.stats,
        "halt": traj.halt,
        "relative_drift": {
            "H": traj.relative_drift("H"),
            "F": traj.relative_drift("F"),
            "G": traj.relative_drift("G"),
        },
    })
    .to_string())
}

fn to_js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn profile(k: u32, eps: f64, span: f64, n: usize) -> Result<String, JsValue> {
    to_js(profile_json(k, eps, span, n))
}

#[wasm_bindgen]
pub fn exponent(alpha: &str) -> Result<String, JsValue> {
    to_js(exponent_json(alpha))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn orbit(alpha: &str, r: f64, theta: f64, v: f64, w: f64, tau: f64, rtol: f64) -> Result<String, JsValue> {
    to_js(orbit_json(alpha, [r, theta, v, w], tau, rtol))
}

#[wasm_bindgen]
pub fn version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}
