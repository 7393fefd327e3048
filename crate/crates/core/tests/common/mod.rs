//! Proptest strategies for expressions, forms, fields and maps.
#![allow(dead_code)]

use proptest::collection::vec;
use proptest::option;
use proptest::prelude::*;
use singsymp::exterior::{Chart, ChartMap, DifferentialForm, VectorField};
use singsymp::symexpr::{rat, Expression, Func};
use singsymp::verify::random::subsets;

const FUNCS: [Func; 5] = [Func::Sin, Func::Cos, Func::Sinh, Func::Cosh, Func::Exp];

pub fn chart(vars: &[&str]) -> Chart {
    Chart::new(vars).unwrap()
}

/// Up to three terms with coefficients `p/q`, `|p| ≤ 5`, `q ≤ 4`. With
/// `elementary`, powers may be negative and terms may carry one function factor.
pub fn expression(vars: Vec<String>, elementary: bool) -> BoxedStrategy<Expression> {
    let nv = vars.len();
    let lo = if elementary { -1 } else { 0 };
    let func = if elementary {
        option::weighted(0.4, (0..FUNCS.len(), 0..nv)).boxed()
    } else {
        Just(None).boxed()
    };
    let term = (-5i64..=5, 1i64..=4, vec(lo..=2i64, nv), func);
    vec(term, 0..=3)
        .prop_map(move |terms| {
            let mut out = Expression::zero();
            for (p, q, powers, f) in terms {
                let mut t = Expression::rational(p, q);
                for (v, k) in vars.iter().zip(powers) {
                    if k != 0 {
                        t = &t * &Expression::var_pow(v, rat(k, 1));
                    }
                }
                if let Some((fi, vi)) = f {
                    t = &t * &Expression::func(FUNCS[fi], &vars[vi]);
                }
                out = out + t;
            }
            out
        })
        .boxed()
}

pub fn form(chart: Chart, degree: usize, elementary: bool) -> BoxedStrategy<DifferentialForm> {
    let idx = subsets(chart.dim(), degree);
    let n = idx.len();
    vec(option::of(expression(chart.vars().to_vec(), elementary)), n)
        .prop_map(move |coeffs| {
            let pairs = idx.iter().cloned().zip(coeffs).filter_map(|(i, c)| c.map(|c| (i, c)));
            DifferentialForm::from_coefficients(&chart, degree, pairs).unwrap()
        })
        .boxed()
}

/// A form of random degree in `0..=max_degree`, with that degree.
pub fn any_form(chart: Chart, max_degree: usize, elementary: bool) -> BoxedStrategy<(usize, DifferentialForm)> {
    forms_between(chart, 0, max_degree, elementary)
}

/// A form of random degree in `lo..=hi`, with that degree.
pub fn forms_between(chart: Chart, lo: usize, hi: usize, elementary: bool) -> BoxedStrategy<(usize, DifferentialForm)> {
    (lo..=hi)
        .prop_flat_map(move |p| form(chart.clone(), p, elementary).prop_map(move |f| (p, f)))
        .boxed()
}

pub fn field(chart: Chart, elementary: bool) -> BoxedStrategy<VectorField> {
    vec(expression(chart.vars().to_vec(), elementary), chart.dim())
        .prop_map(move |comps| VectorField::from_components(&chart, comps).unwrap())
        .boxed()
}

/// Polynomial map `source → target`.
pub fn chart_map(source: Chart, target: Chart) -> BoxedStrategy<ChartMap> {
    vec(expression(source.vars().to_vec(), false), target.dim())
        .prop_map(move |comps| {
            let named: Vec<(&str, Expression)> =
                target.vars().iter().map(String::as_str).zip(comps).collect();
            ChartMap::new(&source, &target, named).unwrap()
        })
        .boxed()
}

pub fn four_chart() -> Chart {
    chart(&["x", "y", "z", "w"])
}
