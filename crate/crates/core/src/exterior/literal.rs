//! Text formats for forms: the inline literal and the small `key: value` file.

use super::{Chart, DifferentialForm, FormError};
use crate::symexpr::parse_pieces;

pub(super) fn parse_form(chart: &Chart, text: &str) -> Result<DifferentialForm, FormError> {
    let pieces = parse_pieces(text, Some(chart.vars()))?;
    let degree = pieces.iter().find(|p| !p.scalar.is_zero()).map_or(0, |p| p.wedge.len());
    let mut out = DifferentialForm::zero(chart, degree);
    for p in pieces {
        if p.scalar.is_zero() {
            continue;
        }
        if let Some(bad) = p.scalar.variables().into_iter().find(|v| chart.index_of(v).is_none()) {
            return Err(FormError::UnknownVariable(bad));
        }
        if p.wedge.len() != degree {
            return Err(FormError::MixedDegree(degree, p.wedge.len()));
        }
        if degree > chart.dim() {
            return Err(FormError::DegreeOverflow(degree, chart.dim()));
        }
        let names: Vec<&str> = p.wedge.iter().map(String::as_str).collect();
        out = out.add(&DifferentialForm::monomial(chart, p.scalar, &names)?)?;
    }
    Ok(out)
}

/// Contents of a form file:
///
/// ```text
/// # comment
/// chart: x, alpha, Pr, Palpha
/// singular: x
/// form: -4*x^(-3)*dx^dPr
///       + dalpha^dPalpha
/// ```
///
/// Indented lines continue the previous value. `singular` is optional.
#[derive(Clone, Debug)]
pub struct FormFile {
    pub chart: Chart,
    pub form: DifferentialForm,
}

pub fn parse_form_file(text: &str) -> Result<FormFile, FormError> {
    let mut entries: Vec<(String, String)> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        if line.starts_with(char::is_whitespace) {
            match entries.last_mut() {
                Some((_, v)) => {
                    v.push(' ');
                    v.push_str(line.trim());
                }
                None => return Err(FormError::FormFile(format!("line {}: continuation without a key", n + 1))),
            }
            continue;
        }
        let (k, v) = line
            .split_once(':')
            .ok_or_else(|| FormError::FormFile(format!("line {}: expected `key: value`", n + 1)))?;
        entries.push((k.trim().to_string(), v.trim().to_string()));
    }
    let get = |key: &str| entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
    for (k, _) in &entries {
        if !matches!(k.as_str(), "chart" | "singular" | "form") {
            return Err(FormError::FormFile(format!("unknown key `{k}`")));
        }
    }
    let vars: Vec<&str> = get("chart")
        .ok_or_else(|| FormError::FormFile("missing `chart`".into()))?
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    let mut chart = Chart::new(&vars)?;
    if let Some(s) = get("singular") {
        chart = chart.with_singular(s)?;
    }
    let form = parse_form(&chart, get("form").ok_or_else(|| FormError::FormFile("missing `form`".into()))?)?;
    Ok(FormFile { chart, form })
}
