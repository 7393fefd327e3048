//! Command-line behaviour: reports, CSV output and exit codes.

use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;
use singsymp::cli;

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn run(args: &[&str]) -> Run {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut argv = vec!["singsymp"];
    argv.extend_from_slice(args);
    let code = cli::run(argv, &mut out, &mut err);
    Run { code, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

fn json(r: &Run) -> Value {
    serde_json::from_str(&r.out).unwrap_or_else(|e| panic!("{e}: {}", r.out))
}

fn form_file(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "forms", name].iter().collect();
    p.to_string_lossy().into_owned()
}

#[test]
fn catalog_lists_every_model() {
    let r = run(&["catalog", "list"]);
    assert_eq!(r.code, 0);
    for name in singsymp::catalog::MODEL_NAMES {
        assert!(r.out.contains(name), "{name} missing");
    }
    assert!(r.out.contains("b^3-symplectic"));
    let rows: Value = serde_json::from_str(&run(&["catalog", "list", "--json"]).out).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), singsymp::catalog::MODEL_NAMES.len());
}

#[test]
fn classify_double_collision_and_infinity() {
    let r = run(&["classify", "--model", "double-collision", "--alpha", "2"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let v = json(&r);
    assert_eq!(v["version"], cli::VERSION);
    assert_eq!(v["result"]["classification"]["verdict"], "b-symplectic");
    assert_eq!(v["result"]["classification"]["m"], 1);
    assert_eq!(v["result"]["classification"]["exponent"], "-1");
    assert_eq!(v["result"]["classification"]["seed"], singsymp::classify::DEFAULT_SEED);
    assert_eq!(v["config"]["source"]["alpha"], "2");

    let v = json(&run(&["classify", "--model", "mcgehee-infinity"]));
    assert_eq!(v["result"]["classification"]["label"], "b^3-symplectic");
    assert_eq!(v["result"]["matches_expected"], true);

    let v = json(&run(&["classify", "--form-file", &form_file("mcgehee_infinity.form")]));
    assert_eq!(v["result"]["classification"]["m"], 3);
}

#[test]
fn classify_folded_form_file() {
    let r = run(&["classify", "--form-file", &form_file("darboux_folded.form"), "--hypersurface", "y1"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let c = &json(&r)["result"]["classification"];
    assert_eq!(c["verdict"], "folded");
    assert_eq!(c["m"], 1);
    assert_eq!(c["restriction_ok"], true);
}

#[test]
fn classify_numeric_path_and_inconclusive_exit() {
    let r = run(&["classify", "--model", "split-squaring"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let c = &json(&r)["result"]["classification"];
    assert_eq!(c["method"], "numeric-fit");
    assert_eq!(c["label"], "folded");
    // the conformal squaring map never folds: the fit is rejected
    let r = run(&["classify", "--model", "levi-civita"]);
    assert_eq!(r.code, 2);
    assert!(json(&r)["result"]["inconclusive"].as_str().unwrap().contains("R²"));
    let point = "u1=1,u2=-1,p1=0,p2=0";
    let r = run(&["classify", "--model", "split-squaring", "--hypersurface", "u1^2 - u2^2", "--at", point]);
    assert_eq!(r.code, 0, "{}", r.err);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["classify"]).code, 1);
    assert_eq!(run(&["classify", "--model", "nope"]).code, 1);
    let both = run(&["classify", "--model", "darboux", "--form-file", &form_file("b2_darboux.form")]);
    assert_eq!(both.code, 1);
    assert_eq!(run(&["classify", "--model", "double-collision", "--alpha", "x"]).code, 1);
    assert_eq!(run(&["classify", "--model", "split-squaring", "--hypersurface", "u1^2 - u2^2"]).code, 1);
    assert_eq!(run(&["frobnicate"]).code, 1);
    assert_eq!(run(&["--version"]).code, 0);
}

#[test]
fn desing_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("dets.csv");
    let r = run(&[
        "desing", "--form-file", &form_file("b2_darboux.form"), "--k", "1", "--eps", "0.1",
        "--grid", "-1:1:5", "--eps-sequence", "0.2,0.1,0.05,0.025",
        "--dets-csv", csv.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    let v = json(&r);
    assert_eq!(v["config"]["var"], "x");
    assert_eq!(v["result"]["symplectic_on_grid"], true);
    assert_eq!(v["result"]["convergence_decreasing"], true);
    assert_eq!(v["result"]["profile"]["a"], "3/4");
    assert_eq!(v["result"]["grid"]["points"], 625);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("x,y,u,w,det\n"));
    assert_eq!(text.lines().count(), 626);
    // b^1 has an odd pole order
    assert_eq!(run(&["desing", "--model", "b-darboux", "--m", "1"]).code, 1);
}

#[test]
fn integrate_csv_contract() {
    let args = ["integrate", "--model", "double-collision", "--alpha", "2", "--x0", "r=1,theta=0,v=0.1,w=1", "--tau", "10", "--rtol", "1e-10"];
    let r = run(&args);
    assert_eq!(r.code, 0, "{}", r.err);
    let mut lines = r.out.lines();
    assert!(lines.next().unwrap().starts_with("# singsymp"));
    assert_eq!(lines.next().unwrap(), "tau,r,theta,v,w,H,F");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert!(rows.len() > 10);
    assert!(rows.iter().all(|row| row[4] == 1.0), "w must stay constant for alpha = 2");
    assert_eq!(rows.last().unwrap()[0], 10.0);
    // determinism
    assert_eq!(run(&args).out, r.out);

    let zero = run(&["integrate", "--alpha", "2", "--x0", "r=1,theta=0,v=0.1,w=1", "--tau", "0"]);
    assert_eq!(zero.code, 0);
    assert_eq!(zero.out.lines().count(), 3);

    let pole = run(&["integrate", "--alpha", "2", "--x0", "r=0,theta=0,v=0.1,w=1", "--t", "1"]);
    assert_eq!(pole.code, 1);
    assert!(pole.err.contains("initial state"), "{}", pole.err);
    assert_eq!(run(&["integrate", "--x0", "r=1,theta=0,v=0.1", "--tau", "1"]).code, 1);
    assert_eq!(run(&["integrate", "--x0", "r=1,theta=0,v=0.1,w=1"]).code, 1);
}

#[test]
fn contact_commands() {
    let r = run(&["contact", "check", "--form-file", &form_file("b_contact.form")]);
    assert_eq!(r.code, 0, "{}", r.err);
    let v = json(&r);
    assert_eq!(v["result"]["contact"], true);
    assert_eq!(v["result"]["samples_on_z"].as_array().unwrap().len(), singsymp::contact::CONTACT_SAMPLES);

    let v = json(&run(&["contact", "reeb", "--model", "extended-phase-space"]));
    assert_eq!(v["result"]["method"], "symbolic");
    assert_eq!(v["result"]["components"]["t"], "1");
    assert_eq!(v["result"]["components"]["z"], "0");

    let v = json(&run(&["contact", "reeb", "--model", "standard-contact", "--at", "z=0,x=1,y=2"]));
    assert_eq!(v["result"]["at"]["z"], 1.0);
    assert_eq!(v["result"]["residual"], 0.0);

    assert_eq!(run(&["contact", "check", "--form-file", &form_file("b2_darboux.form")]).code, 1);
}

#[test]
fn verify_filters_and_golden_diff() {
    let r = run(&["verify", "--filter", "desing"]);
    assert_eq!(r.code, 0, "{}\n{}", r.out, r.err);
    assert_eq!(r.out.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).count(), 1);
    assert!(r.out.starts_with("PASS criterion  7"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("golden.json");
    let mut golden: Value = serde_json::from_str(singsymp::verify::EMBEDDED_GOLDEN).unwrap();
    golden["c7"]["grid_points"] = Value::String("14640".into());
    std::fs::write(&bad, golden.to_string()).unwrap();
    let r = run(&["verify", "--filter", "7", "--golden", bad.to_str().unwrap()]);
    assert_eq!(r.code, 1);
    assert!(r.out.contains("golden diff: grid_points: golden \"14640\", computed \"14641\""), "{}", r.out);

    assert_eq!(run(&["verify", "--filter", "no-such-criterion"]).code, 1);
}

#[test]
fn verify_full_run_reports_every_criterion() {
    let r = run(&["verify", "--json"]);
    let v = json(&r);
    let results = v["results"].as_array().unwrap();
    assert_eq!(results.len(), 11);
    let failing: Vec<u64> = results.iter().filter(|c| c["pass"] == false).map(|c| c["id"].as_u64().unwrap()).collect();
    assert_eq!(failing, [4, 5, 8]);
    assert_eq!(r.code, 1);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_singsymp");
    let ok = Command::new(bin).args(["classify", "--model", "b-darboux", "--m", "2"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(v["result"]["classification"]["label"], "b^2-symplectic");
    let usage = Command::new(bin).args(["classify", "--bogus"]).output().unwrap();
    assert_eq!(usage.status.code(), Some(1));
    let inconclusive = Command::new(bin).args(["classify", "--model", "levi-civita"]).output().unwrap();
    assert_eq!(inconclusive.status.code(), Some(2));
}
