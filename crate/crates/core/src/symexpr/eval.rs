use num::ToPrimitive;
use thiserror::Error;

use super::{Expression, Func, Rational};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("variable `{0}` is unbound")]
    UnboundVariable(String),
    #[error("negative base {base} for `{var}` under the fractional exponent {exponent}")]
    DomainError { var: String, base: f64, exponent: String },
    #[error("pole: `{var}` is zero under a negative exponent")]
    Pole { var: String },
    #[error("non-finite value")]
    NonFinite,
}

#[derive(Clone, Copy, Debug)]
enum Power {
    Int(i32),
    Frac(f64),
}

impl Power {
    fn from_rational(q: &Rational) -> Power {
        if q.is_integer() {
            Power::Int(q.numer().to_i32().unwrap_or(i32::MAX))
        } else {
            Power::Frac(q.to_f64().unwrap_or(f64::NAN))
        }
    }

    fn negative(self) -> bool {
        match self {
            Power::Int(n) => n < 0,
            Power::Frac(q) => q < 0.0,
        }
    }

    fn apply(self, var: &str, base: f64) -> Result<f64, EvalError> {
        if base == 0.0 && self.negative() {
            return Err(EvalError::Pole { var: var.to_string() });
        }
        match self {
            Power::Int(n) => Ok(base.powi(n)),
            Power::Frac(q) => {
                if base < 0.0 {
                    Err(EvalError::DomainError {
                        var: var.to_string(),
                        base,
                        exponent: q.to_string(),
                    })
                } else {
                    Ok(base.powf(q))
                }
            }
        }
    }
}

fn elem_power(var: &str, f: Func, x: f64, n: i64) -> Result<f64, EvalError> {
    let v = f.apply(x);
    if v == 0.0 && n < 0 {
        return Err(EvalError::Pole { var: format!("{}({var})", f.name()) });
    }
    Ok(v.powi(n as i32))
}

pub(super) fn evaluate_with(
    e: &Expression,
    lookup: impl Fn(&str) -> Option<f64>,
) -> Result<f64, EvalError> {
    let get = |v: &str| lookup(v).ok_or_else(|| EvalError::UnboundVariable(v.to_string()));
    let mut total = 0.0;
    for t in e.terms() {
        let mut value = t.coeff.to_f64().unwrap_or(f64::NAN);
        for (v, q) in t.monomial.powers() {
            value *= Power::from_rational(q).apply(v, get(v)?)?;
        }
        for ((f, v), n) in t.monomial.elems() {
            value *= elem_power(v, *f, get(v)?, *n)?;
        }
        total += value;
    }
    if total.is_finite() {
        Ok(total)
    } else {
        Err(EvalError::NonFinite)
    }
}

#[derive(Clone, Debug)]
struct CompiledTerm {
    coeff: f64,
    powers: Vec<(usize, Power)>,
    elems: Vec<(usize, Func, i64)>,
}

/// An expression bound to a variable ordering; evaluates from a slice.
#[derive(Clone, Debug)]
pub struct CompiledExpr {
    vars: Vec<String>,
    terms: Vec<CompiledTerm>,
}

impl CompiledExpr {
    pub(super) fn new(e: &Expression, vars: &[String]) -> Result<Self, EvalError> {
        let index = |v: &str| {
            vars.iter()
                .position(|w| w == v)
                .ok_or_else(|| EvalError::UnboundVariable(v.to_string()))
        };
        let mut terms = Vec::with_capacity(e.len());
        for t in e.terms() {
            let mut powers = Vec::new();
            for (v, q) in t.monomial.powers() {
                powers.push((index(v)?, Power::from_rational(q)));
            }
            let mut elems = Vec::new();
            for ((f, v), n) in t.monomial.elems() {
                elems.push((index(v)?, *f, *n));
            }
            terms.push(CompiledTerm {
                coeff: t.coeff.to_f64().unwrap_or(f64::NAN),
                powers,
                elems,
            });
        }
        Ok(Self { vars: vars.to_vec(), terms })
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        let mut total = 0.0;
        for t in &self.terms {
            let mut value = t.coeff;
            for &(i, p) in &t.powers {
                value *= p.apply(&self.vars[i], x[i])?;
            }
            for &(i, f, n) in &t.elems {
                value *= elem_power(&self.vars[i], f, x[i], n)?;
            }
            total += value;
        }
        if total.is_finite() {
            Ok(total)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn at(pairs: &[(&str, f64)]) -> HashMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn evaluation_examples() {
        let e = Expression::parse("u1^2 - u2^2").unwrap();
        assert_eq!(e.evaluate(&at(&[("u1", 1.0), ("u2", 1.0)])).unwrap(), 0.0);
        let e = Expression::parse("r^(-3)").unwrap();
        assert_eq!(e.evaluate(&at(&[("r", 2.0)])).unwrap(), 0.125);
        let e = Expression::parse("cosh(l)*cos(n)").unwrap();
        assert_eq!(e.evaluate(&at(&[("l", 0.0), ("n", 0.0)])).unwrap(), 1.0);
    }

    #[test]
    fn evaluation_errors() {
        let e = Expression::parse("r^(1/2)").unwrap();
        assert!(matches!(e.evaluate(&at(&[("r", -1.0)])), Err(EvalError::DomainError { .. })));
        assert!(matches!(e.evaluate(&at(&[])), Err(EvalError::UnboundVariable(_))));
        let e = Expression::parse("x^(-2)").unwrap();
        assert!(matches!(e.evaluate(&at(&[("x", 0.0)])), Err(EvalError::Pole { .. })));
        // a positive fractional power of zero is fine
        let e = Expression::parse("r^(1/3)").unwrap();
        assert_eq!(e.evaluate(&at(&[("r", 0.0)])).unwrap(), 0.0);
    }

    #[test]
    fn compiled_matches_interpreted() {
        let e = Expression::parse("3/4*x^2*y^(1/2) - sin(x)*cosh(y)^2 + 5").unwrap();
        let vars = vec!["x".to_string(), "y".to_string()];
        let c = e.compile(&vars).unwrap();
        let p = [0.3, 1.7];
        let direct = e.evaluate(&at(&[("x", 0.3), ("y", 1.7)])).unwrap();
        assert_eq!(c.eval(&p).unwrap(), direct);
        assert!(Expression::parse("z").unwrap().compile(&vars).is_err());
    }
}
