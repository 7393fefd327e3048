//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error (and failed
//! self-checks), 2 inconclusive result.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::catalog::{self, Locus, Model, ModelParams};
use crate::classify::{ClassifyError, ClassifyOptions, Hypersurface, Verdict, DEFAULT_SEED, RESIDUAL_SAMPLES};
use crate::contact;
use crate::desing::{self, Grid, SmoothingProfile};
use crate::dynamics::{self, McGeheeFlow, TimeLabel, Tolerances};
use crate::exterior::{parse_form_file, Chart, DifferentialForm};
use crate::symexpr::{parse_rational, Expression, Rational};
use crate::verify;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "singsymp", version, about = "Singular symplectic and b-contact forms: classify, desingularize, integrate")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Browse the built-in models.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Classify a 2-form along its singular hypersurface (JSON report).
    Classify(ClassifyArgs),
    /// Desingularize a b^{2k}-form and check it on a grid (JSON report).
    Desing(DesingArgs),
    /// Integrate a Hamiltonian flow (CSV).
    Integrate(IntegrateArgs),
    /// b-contact forms.
    Contact {
        #[command(subcommand)]
        action: ContactAction,
    },
    /// Run the self-check suite.
    Verify(VerifyArgs),
}

#[derive(Subcommand, Debug)]
pub enum CatalogAction {
    /// List model names, parameters and expected classifications.
    List {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Source {
    /// Built-in model name (see `catalog list`).
    #[arg(long, conflicts_with = "form_file")]
    pub model: Option<String>,
    /// Form file with `chart:`, optional `singular:` and `form:` entries.
    #[arg(long)]
    pub form_file: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub gamma: Option<String>,
    /// Order parameter for normal-form fixtures (m, or n for dimension-indexed ones).
    #[arg(long)]
    pub m: Option<u32>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub source: Source,
    /// Defining function of Z; a bare coordinate selects the symbolic method.
    #[arg(long)]
    pub hypersurface: Option<String>,
    /// Point on Z for a non-coordinate hypersurface, e.g. "u1=1,u2=1,p1=0,p2=0".
    #[arg(long)]
    pub at: Option<String>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = RESIDUAL_SAMPLES)]
    pub samples: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DesingArgs {
    #[command(flatten)]
    pub source: Source,
    /// Defining coordinate of Z (defaults to the model's).
    #[arg(long)]
    pub var: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub k: u32,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// `lo:hi:n` per axis, comma separated; a single axis applies to all.
    #[arg(long, default_value = "-1:1:11", allow_hyphen_values = true)]
    pub grid: String,
    /// Decreasing ε values for the convergence table.
    #[arg(long, value_delimiter = ',')]
    pub eps_sequence: Vec<f64>,
    /// Number of convergence samples inside the smallest collar.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Write the determinant at every grid point as CSV.
    #[arg(long)]
    pub dets_csv: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct IntegrateArgs {
    #[arg(long, default_value = "double-collision")]
    pub model: String,
    #[arg(long)]
    pub alpha: Option<String>,
    /// Initial state, e.g. "r=1,theta=0,v=0.1,w=1".
    #[arg(long)]
    pub x0: String,
    /// Span in the rescaled time τ.
    #[arg(long, conflicts_with = "t")]
    pub tau: Option<f64>,
    /// Span in physical time t.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub atol: f64,
    #[arg(long, default_value_t = 200_000)]
    pub max_steps: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum ContactAction {
    /// Check the b-contact condition.
    Check(ContactArgs),
    /// Compute the Reeb field.
    Reeb(ContactArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ContactArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Evaluate a numeric Reeb field at this point.
    #[arg(long)]
    pub at: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    /// Criterion number, module name or title word.
    #[arg(long)]
    pub filter: Option<String>,
    /// Golden facts file (defaults to the embedded one).
    #[arg(long)]
    pub golden: Option<PathBuf>,
    /// Write the computed facts as a golden file.
    #[arg(long)]
    pub write_golden: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Inconclusive(String),
    Failed(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Failed(_) => 1,
            CliError::Inconclusive(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Inconclusive(m) | CliError::Failed(m) => m,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

type CliResult = Result<(), CliError>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if code == 0 { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.code()
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    match command {
        Command::Catalog { action: CatalogAction::List { json } } => cmd_catalog_list(json, out),
        Command::Classify(a) => cmd_classify(&a, out),
        Command::Desing(a) => cmd_desing(&a, out),
        Command::Integrate(a) => cmd_integrate(&a, out, err),
        Command::Contact { action: ContactAction::Check(a) } => cmd_contact_check(&a, out),
        Command::Contact { action: ContactAction::Reeb(a) } => cmd_contact_reeb(&a, out),
        Command::Verify(a) => cmd_verify(&a, out),
    }
}

fn emit(out: &mut dyn Write, path: Option<&PathBuf>, text: &str) -> CliResult {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| usage(format!("cannot write {}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(|e| CliError::Failed(e.to_string())),
    }
}

fn report(command: &str, config: &impl Serialize, body: Value) -> String {
    let mut text = serde_json::to_string_pretty(&json!({
        "tool": "singsymp",
        "version": VERSION,
        "command": command,
        "config": config,
        "result": body,
    }))
    .expect("reports serialize");
    text.push('\n');
    text
}

fn rational(flag: &str, text: &Option<String>) -> Result<Option<Rational>, CliError> {
    text.as_ref()
        .map(|t| parse_rational(t.trim()).map_err(|e| usage(format!("--{flag} {t:?}: {e}"))))
        .transpose()
}

/// Form and model (if any) named by `--model` / `--form-file`.
fn load(source: &Source) -> Result<(DifferentialForm, Option<Model>), CliError> {
    match (&source.model, &source.form_file) {
        (Some(name), None) => {
            let params = ModelParams {
                alpha: rational("alpha", &source.alpha)?,
                gamma: rational("gamma", &source.gamma)?,
                m: source.m,
            };
            let model = catalog::by_name(name, &params).map_err(usage)?;
            Ok((model.form.clone(), Some(model)))
        }
        (None, Some(path)) => {
            if source.alpha.is_some() || source.gamma.is_some() || source.m.is_some() {
                return Err(usage("--alpha/--gamma/--m apply to --model only"));
            }
            let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            let file = parse_form_file(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            Ok((file.form, None))
        }
        (Some(_), Some(_)) => Err(usage("give exactly one of --model and --form-file")),
        (None, None) => Err(usage("one of --model and --form-file is required")),
    }
}

/// `"a=1,b=-2"` as a point of `chart`; every coordinate must appear once.
pub fn parse_point(chart: &Chart, text: &str) -> Result<Vec<f64>, CliError> {
    let mut values = BTreeMap::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| usage(format!("expected name=value, got {part:?}")))?;
        let k = k.trim();
        if chart.index_of(k).is_none() {
            return Err(usage(format!("unknown coordinate {k:?}; chart is {chart}")));
        }
        let v: f64 = v.trim().parse().map_err(|_| usage(format!("bad number for {k}: {v:?}")))?;
        if values.insert(k.to_string(), v).is_some() {
            return Err(usage(format!("coordinate {k} given twice")));
        }
    }
    chart
        .vars()
        .iter()
        .map(|v| values.get(v).copied().ok_or_else(|| usage(format!("missing coordinate {v}"))))
        .collect()
}

fn cmd_catalog_list(json: bool, out: &mut dyn Write) -> CliResult {
    let rows = catalog::list();
    let text = if json {
        serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n"
    } else {
        let mut t = format!("{:<22} {:<46} {:<42} {}\n", "model", "parameters", "locus", "expected");
        for r in &rows {
            t.push_str(&format!("{:<22} {:<46} {:<42} {}\n", r.name, r.params, r.locus, r.expected));
        }
        t
    };
    emit(out, None, &text)
}

fn cmd_classify(a: &ClassifyArgs, out: &mut dyn Write) -> CliResult {
    let (form, model) = load(&a.source)?;
    let opts = ClassifyOptions { seed: a.seed, samples: a.samples };
    let locus = match (&a.hypersurface, &model) {
        (Some(h), _) => {
            let e = Expression::parse(h).map_err(|e| usage(format!("--hypersurface: {e}")))?;
            match e.as_variable() {
                Some(v) if a.at.is_none() => Locus::Coordinate(v.to_string()),
                _ => {
                    let at = a.at.as_ref().ok_or_else(|| usage("--at is required for a non-coordinate --hypersurface"))?;
                    let p = parse_point(form.chart(), at)?;
                    let seed = form.chart().vars().iter().cloned().zip(p).collect();
                    Locus::Hypersurface(Hypersurface::new(e, seed).map_err(usage)?)
                }
            }
        }
        (None, Some(Model { locus: Some(l), .. })) => l.clone(),
        (None, _) => match form.chart().singular_var() {
            Some(v) => Locus::Coordinate(v.to_string()),
            None => return Err(usage("no hypersurface: pass --hypersurface")),
        },
    };
    let locus_text = match &locus {
        Locus::Coordinate(v) => v.clone(),
        Locus::Hypersurface(h) => h.defining().to_string(),
    };
    let config = json!({ "source": a.source, "hypersurface": locus_text, "at": a.at, "seed": a.seed, "samples": a.samples });
    match catalog::classify_locus(&form, &locus, &opts) {
        Ok(c) => {
            let expected = model.as_ref().and_then(|m| m.expected);
            let body = json!({
                "classification": c.report(),
                "expected": expected.map(|v| v.to_string()),
                "matches_expected": expected.map(|v| v == c.verdict),
            });
            emit(out, a.output.as_ref(), &report("classify", &config, body))?;
            if c.verdict == Verdict::Degenerate {
                return Err(CliError::Inconclusive("verdict is degenerate".into()));
            }
            Ok(())
        }
        Err(e @ (ClassifyError::PoorFit(_) | ClassifyError::InconclusiveResidual(_) | ClassifyError::IdenticallyZeroTopPower)) => {
            let partial = match &e {
                ClassifyError::InconclusiveResidual(c) => Some(c.report()),
                _ => None,
            };
            let body = json!({ "inconclusive": e.to_string(), "classification": partial });
            emit(out, a.output.as_ref(), &report("classify", &config, body))?;
            Err(CliError::Inconclusive(e.to_string()))
        }
        Err(e) => Err(usage(e)),
    }
}

fn default_var(form: &DifferentialForm, model: &Option<Model>) -> Option<String> {
    if let Some(Model { locus: Some(Locus::Coordinate(v)), .. }) = model {
        return Some(v.clone());
    }
    form.chart().singular_var().map(str::to_string)
}

fn cmd_desing(a: &DesingArgs, out: &mut dyn Write) -> CliResult {
    use rand::{Rng, SeedableRng};
    let (form, model) = load(&a.source)?;
    let var = a.var.clone().or_else(|| default_var(&form, &model)).ok_or_else(|| usage("--var is required"))?;
    let k = form.chart().index_of(&var).ok_or_else(|| usage(format!("unknown coordinate {var:?}")))?;
    let profile = SmoothingProfile::new(a.k).map_err(usage)?;
    let d = desing::desingularize(&form, &var, a.eps, &profile).map_err(usage)?;
    let grid = Grid::parse(&a.grid, form.chart().dim()).map_err(usage)?;
    let grid_report = desing::verify_symplectic_on_grid(&d, &grid);
    let mut convergence = Vec::new();
    if !a.eps_sequence.is_empty() {
        let smallest = a.eps_sequence.iter().copied().fold(f64::INFINITY, f64::min);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(a.seed);
        let samples: Vec<Vec<f64>> = (0..a.samples)
            .map(|_| {
                let mut p: Vec<f64> = (0..form.chart().dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let x = rng.gen_range(smallest * 0.02..smallest);
                p[k] = if rng.gen_bool(0.5) { x } else { -x };
                p
            })
            .collect();
        convergence = desing::convergence_report(&form, &var, &profile, &a.eps_sequence, &samples).map_err(usage)?;
    }
    if let Some(path) = &a.dets_csv {
        let mut csv = format!("{},det\n", form.chart().vars().join(","));
        for (p, det) in &grid_report.dets {
            let cells: Vec<String> = p.iter().map(|v| v.to_string()).collect();
            csv.push_str(&format!("{},{det}\n", cells.join(",")));
        }
        std::fs::write(path, csv).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
    }
    let symplectic = grid_report.symplectic();
    let config = json!({
        "source": a.source, "var": var, "k": a.k, "eps": a.eps, "grid": a.grid,
        "eps_sequence": a.eps_sequence, "samples": a.samples, "seed": a.seed,
    });
    let body = json!({
        "profile": desing::profile_summary(&profile),
        "grid": grid_report,
        "symplectic_on_grid": symplectic,
        "convergence": convergence,
        "convergence_decreasing": convergence.windows(2).all(|w| w[1].sup_deviation < w[0].sup_deviation),
    });
    emit(out, a.output.as_ref(), &report("desing", &config, body))?;
    if symplectic {
        Ok(())
    } else {
        Err(CliError::Inconclusive("desingularized form is not symplectic on the whole grid".into()))
    }
}

fn cmd_integrate(a: &IntegrateArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let (label, span) = match (a.tau, a.t) {
        (Some(s), None) => (TimeLabel::Tau, s),
        (None, Some(s)) => (TimeLabel::T, s),
        _ => return Err(usage("give exactly one of --tau and --t")),
    };
    if !span.is_finite() {
        return Err(usage("time span must be finite"));
    }
    if !(a.rtol > 0.0 && a.atol >= 0.0) {
        return Err(usage("need rtol > 0 and atol >= 0"));
    }
    let (system, chart, f_monitor) = match a.model.as_str() {
        "double-collision" => {
            let alpha = rational("alpha", &a.alpha)?.unwrap_or_else(|| Rational::from_integer(2.into()));
            let flow = McGeheeFlow::new(&alpha).map_err(usage)?;
            (flow.system(label).map_err(usage)?, flow.model.chart.clone(), true)
        }
        name => {
            if a.alpha.is_some() {
                return Err(usage("--alpha applies to double-collision only"));
            }
            let model = catalog::by_name(name, &ModelParams::default()).map_err(usage)?;
            let h = model.hamiltonian.clone().ok_or_else(|| usage(format!("model {name} has no Hamiltonian")))?;
            if label == TimeLabel::Tau {
                return Err(usage("--tau applies to double-collision only"));
            }
            let field = dynamics::hamiltonian_vector_field(&model.form, &h).map_err(usage)?;
            let sys = dynamics::FlowSystem::from_hamiltonian(&field, &model.chart, label)
                .and_then(|s| s.with_expression_monitor("H", &h))
                .map_err(usage)?;
            (sys, model.chart, false)
        }
    };
    let x0 = parse_point(&chart, &a.x0)?;
    let tol = Tolerances { rtol: a.rtol, atol: a.atol, max_steps: a.max_steps, ..Default::default() };
    let traj = dynamics::integrate(&system, &x0, (0.0, span), &tol).map_err(usage)?;
    let time = match label {
        TimeLabel::T => "t",
        TimeLabel::Tau => "tau",
    };
    let mut csv = format!(
        "# singsymp {VERSION} integrate model={} alpha={} x0={} {time}={span} rtol={} atol={} max_steps={}\n",
        a.model,
        a.alpha.as_deref().unwrap_or("2"),
        a.x0.replace(' ', ""),
        a.rtol,
        a.atol,
        a.max_steps
    );
    let mut header = vec![time.to_string()];
    header.extend(chart.vars().iter().cloned());
    header.push("H".into());
    if f_monitor {
        header.push("F".into());
    }
    csv.push_str(&header.join(","));
    csv.push('\n');
    for (i, (t, s)) in traj.times.iter().zip(&traj.states).enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(s.iter().map(|v| v.to_string()));
        row.push(traj.monitors["H"][i].to_string());
        if f_monitor {
            row.push(traj.monitors["F"][i].to_string());
        }
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    emit(out, a.output.as_ref(), &csv)?;
    let _ = writeln!(
        err,
        "accepted {} rejected {} steps; drift {}",
        traj.stats.accepted,
        traj.stats.rejected,
        traj.drift.iter().map(|(k, v)| format!("{k}={v:.3e}")).collect::<Vec<_>>().join(" ")
    );
    match traj.halt {
        Some(h) => Err(CliError::Inconclusive(format!("integration halted at {time}={}: {h:?}", traj.times.last().unwrap_or(&0.0)))),
        None => Ok(()),
    }
}

fn cmd_contact_check(a: &ContactArgs, out: &mut dyn Write) -> CliResult {
    let (form, _) = load(&a.source)?;
    let r = contact::is_b_contact_with(&form, a.seed).map_err(usage)?;
    let config = json!({ "source": a.source, "seed": a.seed });
    emit(out, None, &report("contact check", &config, serde_json::to_value(&r).expect("report serializes")))
}

fn cmd_contact_reeb(a: &ContactArgs, out: &mut dyn Write) -> CliResult {
    let (form, _) = load(&a.source)?;
    let reeb = contact::reeb_field(&form).map_err(usage)?;
    let chart = form.chart();
    let mut body = serde_json::Map::new();
    match reeb.symbolic() {
        Some(x) => {
            body.insert("method".into(), json!("symbolic"));
            let comps: serde_json::Map<String, Value> = chart
                .vars()
                .iter()
                .enumerate()
                .map(|(i, v)| (v.clone(), json!(x.component(i).to_string())))
                .collect();
            body.insert("components".into(), Value::Object(comps));
            body.insert("field".into(), json!(x.to_string()));
        }
        None => {
            body.insert("method".into(), json!("numeric"));
        }
    }
    if let Some(at) = &a.at {
        let p = parse_point(chart, at)?;
        let v = reeb.eval(&p).map_err(usage)?;
        let residual = contact::reeb_residual(&form, &reeb, &[p]).map_err(usage)?;
        body.insert("at".into(), json!(chart.vars().iter().cloned().zip(v).collect::<BTreeMap<_, _>>()));
        body.insert("residual".into(), json!(residual));
    } else if reeb.symbolic().is_none() {
        return Err(usage("the Reeb field is only available pointwise here; pass --at"));
    }
    let config = json!({ "source": a.source, "at": a.at });
    emit(out, None, &report("contact reeb", &config, Value::Object(body)))
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> CliResult {
    let golden_text = match &a.golden {
        Some(p) => std::fs::read_to_string(p).map_err(|e| usage(format!("cannot read {}: {e}", p.display())))?,
        None => verify::EMBEDDED_GOLDEN.to_string(),
    };
    let golden = verify::parse_golden(&golden_text).map_err(|e| usage(format!("golden file: {e}")))?;
    let results = verify::run(a.filter.as_deref(), &golden);
    if results.is_empty() {
        return Err(usage(format!("filter {:?} selects no criterion", a.filter.as_deref().unwrap_or(""))));
    }
    if let Some(p) = &a.write_golden {
        let text = serde_json::to_string_pretty(&verify::facts_as_golden(&results)).expect("facts serialize") + "\n";
        std::fs::write(p, text).map_err(|e| usage(format!("cannot write {}: {e}", p.display())))?;
    }
    let failed = results.iter().filter(|r| !r.pass).count();
    let text = if a.json {
        serde_json::to_string_pretty(&json!({ "version": VERSION, "filter": a.filter, "results": results }))
            .expect("results serialize")
            + "\n"
    } else {
        let mut t = String::new();
        for r in &results {
            t.push_str(&r.line());
            t.push('\n');
            for d in &r.golden_diff {
                t.push_str(&format!("    golden diff: {d}\n"));
            }
        }
        t.push_str(&format!("{} of {} criteria passed\n", results.len() - failed, results.len()));
        t
    };
    emit(out, None, &text)?;
    if failed > 0 {
        Err(CliError::Failed(format!("{failed} criteria failed")))
    } else {
        Ok(())
    }
}
