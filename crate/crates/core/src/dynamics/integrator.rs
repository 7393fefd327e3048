//! Dormand–Prince 5(4) with PI step-size control.

use serde::Serialize;

use crate::symexpr::EvalError;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights (first-same-as-last: equal to the last row of `A`).
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
/// `B - B̂`, the embedded error weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;
const ALPHA: f64 = 0.7 / 5.0;
const BETA: f64 = 0.4 / 5.0;

/// Right-hand side `dy/dt = f(t, y)`.
pub trait Rhs {
    fn eval(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<(), EvalError>;
}

impl<F> Rhs for F
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<(), EvalError>,
{
    fn eval(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        self(t, y, out)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Initial step; `None` picks one from the local derivatives.
    pub h0: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-10, max_steps: 1_000_000, h0: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Halt {
    /// The step size collapsed, typically on approach to a pole of the field.
    StepSizeUnderflow,
    NonFiniteState,
    MaxSteps,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub min_step: f64,
    pub max_step: f64,
}

/// Accepted states, starting with the initial one.
#[derive(Clone, Debug)]
pub struct Solution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub stats: StepStats,
    pub halt: Option<Halt>,
}

fn error_norm(err: &[f64], y: &[f64], y_new: &[f64], tol: &Tolerances) -> f64 {
    let n = err.len() as f64;
    let sum: f64 = err
        .iter()
        .zip(y.iter().zip(y_new))
        .map(|(e, (a, b))| {
            let sc = tol.atol + tol.rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

fn initial_step(f: &dyn Rhs, t0: f64, y0: &[f64], f0: &[f64], dir: f64, tol: &Tolerances) -> Result<f64, EvalError> {
    let scale: Vec<f64> = y0.iter().map(|y| tol.atol + tol.rtol * y.abs()).collect();
    let norm = |v: &[f64]| (v.iter().zip(&scale).map(|(x, s)| (x / s).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
    let d0 = norm(y0);
    let d1 = norm(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, k)| y + dir * h0 * k).collect();
    let mut f1 = vec![0.0; y0.len()];
    f.eval(t0 + dir * h0, &y1, &mut f1)?;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    Ok((100.0 * h0).min(h1))
}

/// Integrates from `t0` to `t1` (either direction). Evaluation failures inside
/// a step count as rejections; the run halts when the step underflows.
pub fn dopri5(f: &dyn Rhs, t0: f64, y0: &[f64], t1: f64, tol: &Tolerances) -> Result<Solution, EvalError> {
    let n = y0.len();
    let mut out = Solution { times: vec![t0], states: vec![y0.to_vec()], stats: StepStats::default(), halt: None };
    if t1 == t0 {
        return Ok(out);
    }
    let dir = (t1 - t0).signum();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    f.eval(t0, y0, &mut k[0])?;
    let span = (t1 - t0).abs();
    let mut h = match tol.h0 {
        Some(h) => h.abs(),
        None => initial_step(f, t0, y0, &k[0], dir, tol)?,
    }
    .min(span);
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut err_old = 1e-4f64;
    let mut last_rejected = false;
    let mut stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];
    out.stats.min_step = f64::INFINITY;
    let mut steps = 0;

    while (t1 - t) * dir > 0.0 {
        if steps >= tol.max_steps {
            out.halt = Some(Halt::MaxSteps);
            break;
        }
        steps += 1;
        if h < 1e-14 * t.abs().max(1.0) {
            out.halt = Some(Halt::StepSizeUnderflow);
            break;
        }
        let last = h >= (t1 - t).abs();
        if last {
            h = (t1 - t).abs();
        }
        let hs = dir * h;
        let mut failed = false;
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                stage[i] = y[i] + hs * acc;
            }
            if f.eval(t + C[s] * hs, &stage, &mut k[s]).is_err() {
                failed = true;
                break;
            }
        }
        if !failed {
            for i in 0..n {
                let mut acc = 0.0;
                let mut e = 0.0;
                for s in 0..7 {
                    acc += B[s] * k[s][i];
                    e += E[s] * k[s][i];
                }
                y_new[i] = y[i] + hs * acc;
                err[i] = hs * e;
            }
            failed = !y_new.iter().all(|v| v.is_finite());
        }
        // stage 7 was evaluated at y_new (FSAL), so k[6] is f(t + h, y_new)
        let e_norm = if failed { f64::INFINITY } else { error_norm(&err, &y, &y_new, tol) };
        if e_norm <= 1.0 {
            t = if last { t1 } else { t + hs };
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);
            out.times.push(t);
            out.states.push(y.clone());
            out.stats.accepted += 1;
            out.stats.min_step = out.stats.min_step.min(h);
            out.stats.max_step = out.stats.max_step.max(h);
            let mut fac = SAFETY * e_norm.max(1e-10).powf(-ALPHA) * err_old.powf(BETA);
            fac = fac.clamp(FAC_MIN, FAC_MAX);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h *= fac;
            err_old = e_norm.max(1e-4);
            last_rejected = false;
        } else {
            out.stats.rejected += 1;
            let fac = if e_norm.is_finite() { (SAFETY * e_norm.powf(-ALPHA)).clamp(FAC_MIN, 1.0) } else { FAC_MIN };
            h *= fac;
            last_rejected = true;
        }
    }
    if out.stats.accepted == 0 {
        out.stats.min_step = 0.0;
    }
    if out.halt.is_none() && !out.states.last().is_some_and(|s| s.iter().all(|v| v.is_finite())) {
        out.halt = Some(Halt::NonFiniteState);
    }
    Ok(out)
}
