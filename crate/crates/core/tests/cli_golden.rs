//! Runs each subcommand against fixtures in `tests/golden/inputs` and compares the exit code
//! and JSON report with `tests/golden/<case>.json`. `UPDATE_GOLDEN=1` rewrites the goldens.

use std::path::{Path, PathBuf};

use conformal_core::cli::run_with;
use serde_json::{json, Value};

/// Relative tolerance for numbers in the reports; libm differences stay far below it.
const NUM_TOL: f64 = 1e-8;

const C_BUBBLE: &str = "0.13333333333333333";

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn input(name: &str) -> String {
    golden_dir()
        .join("inputs")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[String]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("conformal".to_string()).chain(args.iter().cloned());
    let code = run_with(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn close(a: &Value, b: &Value, path: &str, diffs: &mut Vec<String>) {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            if (x - y).abs() > NUM_TOL * x.abs().max(y.abs()).max(1e-300) && (x - y).abs() > 1e-300
            {
                diffs.push(format!("{path}: {x} vs {y}"));
            }
        }
        (Value::Array(x), Value::Array(y)) if x.len() == y.len() => {
            for (i, (p, q)) in x.iter().zip(y).enumerate() {
                close(p, q, &format!("{path}[{i}]"), diffs);
            }
        }
        (Value::Object(x), Value::Object(y)) if x.len() == y.len() => {
            for (k, p) in x {
                match y.get(k) {
                    Some(q) => close(p, q, &format!("{path}.{k}"), diffs),
                    None => diffs.push(format!("{path}.{k}: missing")),
                }
            }
        }
        _ if a == b => {}
        _ => diffs.push(format!("{path}: {a} vs {b}")),
    }
}

fn case(name: &str, args: &[&str], want_code: i32) {
    let args: Vec<String> = args.iter().map(|s| s.to_string()).collect();
    let (code, out, err) = run(&args);
    assert_eq!(
        code, want_code,
        "{name}: exit {code}\nstdout:\n{out}\nstderr:\n{err}"
    );
    if code == 2 {
        assert!(out.is_empty(), "{name}: no report on invalid input");
        assert!(
            !err.trim().is_empty(),
            "{name}: invalid input must explain itself"
        );
        return;
    }
    let report: Value = serde_json::from_str(&out).unwrap_or_else(|e| panic!("{name}: {e}\n{out}"));
    assert_eq!(
        report["pass"],
        json!(code == 0),
        "{name}: pass flag disagrees with exit code"
    );
    assert!(report.get("timestamp").is_none(), "{name}");
    let path = golden_dir().join(format!("{name}.json"));
    let prefix = golden_dir().to_string_lossy().into_owned() + "/";
    let shown: Vec<String> = args.iter().map(|a| a.replace(&prefix, "")).collect();
    let record = json!({"args": shown, "exit": code, "stdout": report});
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, serde_json::to_string_pretty(&record).unwrap() + "\n").unwrap();
        return;
    }
    let want: Value = serde_json::from_str(
        &std::fs::read_to_string(&path)
            .unwrap_or_else(|e| panic!("{name}: missing golden {}: {e}", path.display())),
    )
    .unwrap();
    let mut diffs = Vec::new();
    close(&report, &want["stdout"], "", &mut diffs);
    assert!(
        diffs.is_empty(),
        "{name} differs from its golden:\n{}",
        diffs.join("\n")
    );
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(run(&["--help".into()]).0, 0);
    assert_eq!(run(&["--version".into()]).0, 0);
    assert_eq!(run(&[]).0, 2);
    assert_eq!(run(&["frobnicate".into()]).0, 2);
}

#[test]
fn eig() {
    let f = input("bubble.json");
    let third = "0.3333333333333333,0.3333333333333333,0.3333333333333333";
    case(
        "eig_pass",
        &[
            "eig",
            "--field",
            &f,
            "--point",
            "0.1,-0.5,1.2",
            "--method",
            "analytic",
            "--cone",
            "gamma_k:3",
            "--expect",
            third,
            "--no-timestamp",
        ],
        0,
    );
    case(
        "eig_mismatch",
        &[
            "eig",
            "--field",
            &f,
            "--point",
            "0.1,-0.5,1.2",
            "--expect",
            "1,1,1",
            "--no-timestamp",
        ],
        1,
    );
    case(
        "eig_bad_point",
        &["eig", "--field", &f, "--point", "0.1,0.2", "--no-timestamp"],
        2,
    );
}

#[test]
fn invariance() {
    let (f, m) = (input("bubble.json"), input("map.json"));
    let lp = input("log_power.json");
    case(
        "invariance_pass",
        &[
            "invariance",
            "--field",
            &f,
            "--map",
            &m,
            "--point",
            "0.3,0.1,0.7",
            "--point",
            "-1,0.5,2",
            "--method",
            "analytic",
            "--no-timestamp",
        ],
        0,
    );
    case(
        "invariance_fd",
        &[
            "invariance",
            "--field",
            &lp,
            "--map",
            &m,
            "--point",
            "0.3,0.1,0.7",
            "--method",
            "fd",
            "--no-timestamp",
        ],
        0,
    );
    case(
        "invariance_tight_fd",
        &[
            "invariance",
            "--field",
            &lp,
            "--map",
            &m,
            "--point",
            "0.3,0.1,0.7",
            "--method",
            "fd",
            "--tol",
            "1e-15",
            "--no-timestamp",
        ],
        1,
    );
    case(
        "invariance_missing_file",
        &[
            "invariance",
            "--field",
            &input("nope.json"),
            "--map",
            &m,
            "--point",
            "0,0,1",
            "--no-timestamp",
        ],
        2,
    );
}

#[test]
fn cone() {
    case(
        "cone_gamma1",
        &[
            "cone",
            "--cone",
            "gamma_k:1",
            "--n",
            "3",
            "--lams",
            "1,-0.2,-0.5",
            "--expect-mu",
            "2",
            "--no-timestamp",
        ],
        0,
    );
    case(
        "cone_unbounded",
        &[
            "cone",
            "--cone",
            "gamma_k:2",
            "--n",
            "4",
            "--expect-mu",
            "unbounded",
            "--no-timestamp",
        ],
        0,
    );
    case(
        "cone_mu_mismatch",
        &[
            "cone",
            "--cone",
            "gamma_k:1",
            "--n",
            "3",
            "--expect-mu",
            "3",
            "--no-timestamp",
        ],
        1,
    );
    case(
        "cone_unknown",
        &["cone", "--cone", "gamma_q:1", "--n", "3", "--no-timestamp"],
        2,
    );
    case(
        "cone_unsorted",
        &[
            "cone",
            "--cone",
            "gamma_k:1",
            "--n",
            "3",
            "--lams",
            "-1,2,0",
            "--no-timestamp",
        ],
        2,
    );
}

#[test]
fn conditions() {
    case(
        "conditions_pass",
        &[
            "conditions",
            "--f",
            "sigma_k:1",
            "--cone",
            "gamma_k:2",
            "--n",
            "3",
            "--no-timestamp",
        ],
        0,
    );
    case(
        "conditions_flat_partial",
        &[
            "conditions",
            "--f",
            "affine:0.5",
            "--cone",
            "gamma_k:1",
            "--n",
            "3",
            "--no-timestamp",
        ],
        1,
    );
    case(
        "conditions_bad_dim",
        &[
            "conditions",
            "--f",
            "sigma_k:4",
            "--cone",
            "gamma_k:1",
            "--n",
            "3",
            "--no-timestamp",
        ],
        2,
    );
}

#[test]
fn ode() {
    case(
        "ode_model_global",
        &[
            "ode",
            "--mu",
            "3",
            "--p",
            "6",
            "--v0",
            "0",
            "--w0",
            "1.1",
            "--tmax",
            "50",
            "--expect",
            "global",
            "--convexity",
            "--no-timestamp",
        ],
        0,
    );
    case(
        "ode_model_wrong_expectation",
        &[
            "ode",
            "--mu",
            "3",
            "--p",
            "6",
            "--v0",
            "0",
            "--w0",
            "0.9",
            "--tmax",
            "50",
            "--expect",
            "global",
            "--no-timestamp",
        ],
        1,
    );
    case(
        "ode_general_blowup",
        &[
            "ode",
            "--f",
            "affine:2",
            "--cone",
            "affine:2",
            "--n",
            "3",
            "--p",
            "0",
            "--c",
            "1",
            "--tmax",
            "200",
            "--expect",
            "blowup",
            "--no-timestamp",
        ],
        0,
    );
    case(
        "ode_bad_mu",
        &[
            "ode",
            "--mu",
            "0.5",
            "--p",
            "3",
            "--w0",
            "1",
            "--no-timestamp",
        ],
        2,
    );
    case(
        "ode_both_data",
        &[
            "ode",
            "--f",
            "affine:2",
            "--cone",
            "affine:2",
            "--p",
            "0",
            "--c",
            "1",
            "--h",
            "1",
            "--no-timestamp",
        ],
        2,
    );
}

#[test]
fn ode_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("run.csv");
    let args: Vec<String> = [
        "ode",
        "--mu",
        "2",
        "--p",
        "4",
        "--w0",
        "2",
        "--tmax",
        "5",
        "--no-timestamp",
        "--out",
    ]
    .iter()
    .map(|s| s.to_string())
    .chain(std::iter::once(csv.to_string_lossy().into_owned()))
    .collect();
    assert_eq!(run(&args).0, 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "t,v,w,phi,I,drift,cone_margin"
    );
    assert!(text.lines().count() > 10);
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(csv.with_extension("json")).unwrap())
            .unwrap();
    assert_eq!(summary["pass"], json!(true));
}

#[test]
fn threshold() {
    case(
        "threshold_value",
        &[
            "threshold",
            "--mu",
            "3",
            "--p",
            "6",
            "--v0",
            "0",
            "--no-timestamp",
        ],
        0,
    );
    case(
        "threshold_checked",
        &[
            "threshold",
            "--mu",
            "2",
            "--p",
            "4",
            "--v0",
            "-1",
            "--w0",
            "5",
            "--no-timestamp",
        ],
        0,
    );
    case(
        "threshold_short_horizon",
        &[
            "threshold",
            "--mu",
            "3",
            "--p",
            "6",
            "--v0",
            "0",
            "--w0",
            "0.9",
            "--tmax",
            "1",
            "--no-timestamp",
        ],
        1,
    );
    case(
        "threshold_subcritical_p",
        &["threshold", "--mu", "3", "--p", "3", "--no-timestamp"],
        2,
    );
}

#[test]
fn spheres() {
    let (f, t) = (input("bubble_origin.json"), input("template.json"));
    case(
        "spheres_critical",
        &[
            "spheres",
            "--field",
            &f,
            "--x",
            "0,0,0",
            "--grid",
            &t,
            "--expect-lambda",
            "1.7320508075688772",
            "--no-timestamp",
        ],
        0,
    );
    case(
        "spheres_wrong_lambda",
        &[
            "spheres",
            "--field",
            &f,
            "--x",
            "0,0,0",
            "--grid",
            &t,
            "--expect-lambda",
            "1.5",
            "--no-timestamp",
        ],
        1,
    );
    case(
        "spheres_off_boundary",
        &[
            "spheres",
            "--field",
            &f,
            "--x",
            "0,0,1",
            "--grid",
            &t,
            "--no-timestamp",
        ],
        2,
    );
}

#[test]
fn rigidity() {
    let g = input("grid.json");
    case(
        "rigidity_bubble",
        &[
            "rigidity",
            "--field",
            &input("bubble.json"),
            "--f",
            "sigma_k:1",
            "--cone",
            "gamma_k:1",
            "--c",
            C_BUBBLE,
            "--grid",
            &g,
            "--no-timestamp",
        ],
        0,
    );
    case(
        "rigidity_wrong_scale",
        &[
            "rigidity",
            "--field",
            &input("bubble_wrong.json"),
            "--f",
            "sigma_k:1",
            "--cone",
            "gamma_k:1",
            "--c",
            C_BUBBLE,
            "--grid",
            &g,
            "--no-timestamp",
        ],
        1,
    );
    case(
        "rigidity_two_data",
        &[
            "rigidity",
            "--field",
            &input("bubble.json"),
            "--f",
            "sigma_k:1",
            "--cone",
            "gamma_k:1",
            "--c",
            "0.1",
            "--h",
            "0.1",
            "--no-timestamp",
        ],
        2,
    );
}

#[test]
fn counterexample() {
    case(
        "counterexample_log_power",
        &[
            "counterexample",
            "--kind",
            "log-power",
            "--n",
            "3",
            "--alpha",
            "1",
            "--samples",
            "20",
            "--seed",
            "1",
            "--no-timestamp",
        ],
        0,
    );
    case(
        "counterexample_barrier",
        &[
            "counterexample",
            "--kind",
            "barrier",
            "--n",
            "4",
            "--mu",
            "2",
            "--delta",
            "0.01",
            "--c",
            "1",
            "--cone",
            "min_mu:3",
            "--samples",
            "20",
            "--seed",
            "2",
            "--no-timestamp",
        ],
        0,
    );
    case(
        "counterexample_barrier_n3",
        &[
            "counterexample",
            "--kind",
            "barrier",
            "--n",
            "3",
            "--mu",
            "2",
            "--delta",
            "0.01",
            "--c",
            "1",
            "--cone",
            "min_mu:3",
            "--samples",
            "20",
            "--seed",
            "2",
            "--no-timestamp",
        ],
        1,
    );
    case(
        "counterexample_xn_only",
        &[
            "counterexample",
            "--kind",
            "xn-only",
            "--n",
            "3",
            "--mu",
            "3",
            "--c",
            "1",
            "--samples",
            "20",
            "--seed",
            "3",
            "--no-timestamp",
        ],
        0,
    );
    case(
        "counterexample_xn_only_small_mu",
        &[
            "counterexample",
            "--kind",
            "xn-only",
            "--n",
            "3",
            "--mu",
            "1.5",
            "--c",
            "1",
            "--no-timestamp",
        ],
        2,
    );
}

#[test]
fn residual() {
    let (f, g) = (input("bubble.json"), input("grid.json"));
    case(
        "residual_bubble",
        &[
            "residual",
            "--field",
            &f,
            "--f",
            "sigma_k:1",
            "--cone",
            "gamma_k:1",
            "--c",
            C_BUBBLE,
            "--grid",
            &g,
            "--no-timestamp",
        ],
        0,
    );
    case(
        "residual_wrong_p",
        &[
            "residual",
            "--field",
            &f,
            "--f",
            "sigma_k:1",
            "--cone",
            "gamma_k:1",
            "--p",
            "1",
            "--c",
            C_BUBBLE,
            "--grid",
            &g,
            "--no-timestamp",
        ],
        1,
    );
    case(
        "residual_no_datum",
        &[
            "residual",
            "--field",
            &f,
            "--f",
            "sigma_k:1",
            "--cone",
            "gamma_k:1",
            "--grid",
            &g,
            "--no-timestamp",
        ],
        2,
    );
}

#[test]
fn ricci() {
    case(
        "ricci_lambda_star",
        &[
            "ricci",
            "--lams",
            "1,-1,-1",
            "--expect",
            "0,-2,-2",
            "--no-timestamp",
        ],
        0,
    );
    case(
        "ricci_bubble",
        &[
            "ricci",
            "--field",
            &input("bubble.json"),
            "--point",
            "0.2,0.1,0.5",
            "--no-timestamp",
        ],
        0,
    );
    case(
        "ricci_inverse_mismatch",
        &[
            "ricci",
            "--lams",
            "2,2,2",
            "--direction",
            "ricci-to-schouten",
            "--expect",
            "2,2,2",
            "--no-timestamp",
        ],
        1,
    );
    case(
        "ricci_n2",
        &["ricci", "--lams", "1,-1", "--no-timestamp"],
        2,
    );
}
