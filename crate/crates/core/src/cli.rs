//! `conformal` command line: one subcommand per operation, JSON reports on stdout.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails (the report is still
//! printed and written), 2 on invalid input.

use crate::cones::{
    self, cone_constants, cone_status, parse_cone, parse_func, MuMinus, MEMBERSHIP_TOL, MU_TOL,
};
use crate::error::{Error, Result};
use crate::field::{make_field, FieldSpec, JetMethod, Point, ScalarField};
use crate::hessian::{
    boundary_values, ricci_transform, spectrum, BoundaryConvention, RicciDirection,
};
use crate::linalg::EigList;
use crate::liouville::{self, Counterexample, GridSpec, COMPARISON_TOL};
use crate::mobius::{pushforward, MobiusMap};
use crate::ode::{self, OdeParams};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(
    name = "conformal",
    version,
    about = "Conformal Hessian, cone, ODE and moving-sphere checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Write the JSON report here as well (atomically).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Leave the timestamp out of the report.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Args, Debug, Clone)]
struct Boundary {
    /// Neumann datum `c` in `dv/dx_n = c e^v`.
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    /// Geometric mean curvature `h = -c`.
    #[arg(long, allow_hyphen_values = true)]
    h: Option<f64>,
}

impl Boundary {
    fn datum(&self) -> Result<f64> {
        match (self.c, self.h) {
            (Some(c), None) => Ok(c),
            (None, Some(h)) => Ok(-h),
            _ => Err(Error::Input("give exactly one of --c and --h".into())),
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Method {
    Analytic,
    Fd,
    Auto,
}

impl From<Method> for JetMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Analytic => JetMethod::Analytic,
            Method::Fd => JetMethod::FiniteDifference,
            Method::Auto => JetMethod::Auto,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Direction {
    SchoutenToRicci,
    RicciToSchouten,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq)]
enum Expect {
    Global,
    Blowup,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Kind {
    LogPower,
    BoundaryDrift,
    Barrier,
    XnOnly,
    AuxSubsolution,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sorted eigenvalues of A[v] at a point.
    Eig {
        #[arg(long)]
        field: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long, value_enum, default_value = "auto")]
        method: Method,
        /// Also report the cone status of the spectrum.
        #[arg(long)]
        cone: Option<String>,
        /// Expected eigenvalues, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        expect: Option<String>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Compare λ(A[v^φ])(y) with λ(A[v])(φ(y)).
    Invariance {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        map: PathBuf,
        /// Evaluation point y; repeatable.
        #[arg(long, required = true, allow_hyphen_values = true)]
        point: Vec<String>,
        #[arg(long, value_enum, default_value = "auto")]
        method: Method,
        /// Defaults to 1e-9 with analytic jets and 1e-4 with finite differences.
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Cone constants, and the status of an eigenvalue list.
    Cone {
        #[arg(long)]
        cone: String,
        #[arg(long)]
        n: usize,
        /// Eigenvalues, comma separated, sorted descending.
        #[arg(long, allow_hyphen_values = true)]
        lams: Option<String>,
        /// Expected μ⁻: a number or "unbounded".
        #[arg(long)]
        expect_mu: Option<String>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Sampled checks of monotonicity, homogeneity and the level set of f.
    Conditions {
        #[arg(long)]
        f: String,
        #[arg(long)]
        cone: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Integrate the model ODE (--mu, --p, --w0) or the general one (--f, --cone, --c|--h).
    Ode {
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        p: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        v0: f64,
        #[arg(long, allow_hyphen_values = true)]
        w0: Option<f64>,
        #[arg(long)]
        f: Option<String>,
        #[arg(long)]
        cone: Option<String>,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[command(flatten)]
        boundary: Boundary,
        #[arg(long, default_value_t = 50.0)]
        tmax: f64,
        /// Drift bound for the model, residual bound for the general equation.
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[arg(long, value_enum)]
        expect: Option<Expect>,
        /// Add the convexity report.
        #[arg(long)]
        convexity: bool,
        /// CSV trajectory path; the summary goes next to it with a .json extension.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        no_timestamp: bool,
    },
    /// Closed-form existence threshold, optionally checked against an integration.
    Threshold {
        #[arg(long)]
        mu: f64,
        #[arg(long, allow_hyphen_values = true)]
        p: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        v0: f64,
        #[arg(long, allow_hyphen_values = true)]
        w0: Option<f64>,
        #[arg(long, default_value_t = 200.0)]
        tmax: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Sphere comparison at one radius (--lam) or the critical radius.
    Spheres {
        #[arg(long)]
        field: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long)]
        lam: Option<f64>,
        #[arg(long)]
        grid: Option<PathBuf>,
        /// Lower end of the critical-radius bisection.
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long)]
        expect_lambda: Option<f64>,
        #[arg(long, default_value_t = 1e-5)]
        expect_tol: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Bubble fit plus the identities a bubble solution must satisfy.
    Rigidity {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        f: String,
        #[arg(long)]
        cone: String,
        #[command(flatten)]
        boundary: Boundary,
        #[arg(long)]
        grid: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Build a catalog field and check its advertised property.
    Counterexample {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        #[arg(long, allow_hyphen_values = true)]
        c: Option<f64>,
        /// Slope of the affine cone for boundary_drift.
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        #[arg(long)]
        cone: Option<String>,
        #[arg(long, default_value_t = 0.01)]
        radius: f64,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Residuals of f(λ(A[v])) = e^{-pv} and the boundary condition on a grid.
    Residual {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        f: String,
        #[arg(long)]
        cone: String,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        p: f64,
        #[command(flatten)]
        boundary: Boundary,
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Apply T = (n-2)I + e⊗e or its inverse.
    Ricci {
        #[arg(long, allow_hyphen_values = true)]
        lams: Option<String>,
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        point: Option<String>,
        #[arg(long, value_enum, default_value = "schouten-to-ricci")]
        direction: Direction,
        #[arg(long, allow_hyphen_values = true)]
        expect: Option<String>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[command(flatten)]
        common: Common,
    },
}

/// Entry point for the binary.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Like [`run`] with explicit output streams.
pub fn run_with<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn read_field(path: &Path) -> Result<ScalarField> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    make_field(&FieldSpec::from_json(&text)?)
}

fn read_grid(path: &Path) -> Result<GridSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    let g: GridSpec = serde_json::from_str(&text)?;
    g.validate()?;
    Ok(g)
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number '{t}' in '{s}'")))
        })
        .collect()
}

fn half_box(center: &[f64], r: f64, res: usize) -> GridSpec {
    let n = center.len();
    let lo: Vec<f64> = (0..n)
        .map(|i| if i == n - 1 { 0.0 } else { center[i] - r })
        .collect();
    let hi: Vec<f64> = center.iter().map(|c| c + r).collect();
    GridSpec::uniform(lo, hi, res)
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn timestamp() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

fn emit(
    out: &mut dyn Write,
    command: &str,
    report: Value,
    pass: bool,
    out_path: Option<&Path>,
    no_ts: bool,
) -> Result<bool> {
    let mut env = serde_json::Map::new();
    env.insert("command".into(), json!(command));
    env.insert("pass".into(), json!(pass));
    env.insert("report".into(), report);
    if !no_ts {
        env.insert("timestamp".into(), json!(timestamp()));
    }
    let text = serde_json::to_string_pretty(&Value::Object(env))? + "\n";
    if let Some(p) = out_path {
        write_atomic(p, text.as_bytes())?;
    }
    out.write_all(text.as_bytes())?;
    Ok(pass)
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<bool> {
    match cmd {
        Command::Eig {
            field,
            point,
            method,
            cone,
            expect,
            tol,
            common,
        } => {
            let v = read_field(&field)?;
            let x = Point::parse(&point)?;
            let jet = v.jet(&x, method.into())?;
            let lam = spectrum(&jet)?;
            let mut rep = json!({ "point": x.coords(), "eigenvalues": lam, "method": JetMethod::from(method) });
            if let Some(name) = cone {
                let c = parse_cone(&name, v.dim())?;
                rep["cone"] = json!(name);
                rep["status"] = json!(cone_status(&c, lam.as_slice(), MEMBERSHIP_TOL)?);
                rep["margin"] = json!(c.margin(lam.as_slice()));
            }
            if x[v.dim() - 1] == 0.0 {
                rep["neumann"] = json!(boundary_values(&jet, BoundaryConvention::Neumann)?);
            }
            let mut pass = true;
            if let Some(e) = expect {
                let want = EigList::from_unsorted(parse_list(&e)?);
                if want.len() != lam.len() {
                    return Err(Error::Input("expected list has the wrong length".into()));
                }
                let gap = lam.max_abs_diff(&want);
                rep["expect_gap"] = json!(gap);
                rep["tol"] = json!(tol);
                pass = gap <= tol;
            }
            emit(
                out,
                "eig",
                rep,
                pass,
                common.out.as_deref(),
                common.no_timestamp,
            )
        }
        Command::Invariance {
            field,
            map,
            point,
            method,
            tol,
            common,
        } => {
            let v = read_field(&field)?;
            let text = std::fs::read_to_string(&map)
                .map_err(|e| Error::Input(format!("cannot read {}: {e}", map.display())))?;
            let phi = MobiusMap::from_json(&text)?;
            let pushed = pushforward(&v, &phi)?;
            let m: JetMethod = method.into();
            let fd = matches!(m, JetMethod::FiniteDifference) || !v.has_analytic_jet();
            let tol = tol.unwrap_or(if fd { 1e-4 } else { 1e-9 });
            let mut rows = Vec::new();
            let mut worst: f64 = 0.0;
            for p in &point {
                let y = Point::parse(p)?;
                let image = phi.apply_finite(&y)?;
                let a = spectrum(&pushed.jet(&y, m)?)?;
                let b = spectrum(&v.jet(&image, m)?)?;
                let gap = a.max_abs_diff(&b) / b.norm().max(1.0);
                worst = worst.max(gap);
                rows.push(
                    json!({ "y": y.coords(), "image": image, "pushed": a, "base": b, "gap": gap }),
                );
            }
            let rep = json!({ "points": rows, "max_gap": worst, "tol": tol });
            emit(
                out,
                "invariance",
                rep,
                worst <= tol,
                common.out.as_deref(),
                common.no_timestamp,
            )
        }
        Command::Cone {
            cone,
            n,
            lams,
            expect_mu,
            tol,
            common,
        } => {
            let c = parse_cone(&cone, n)?;
            let k = cone_constants(&c);
            let mut rep = json!({ "cone": c.name(), "n": n, "constants": k, "mu_tol": MU_TOL });
            let mut pass = k.consistent;
            if let Some(l) = lams {
                let l = parse_list(&l)?;
                rep["lams"] = json!(l);
                rep["status"] = json!(cone_status(&c, &l, MEMBERSHIP_TOL)?);
                rep["margin"] = json!(c.margin(&l));
            }
            if let Some(e) = expect_mu {
                let ok = match (e.trim(), k.mu_minus) {
                    ("unbounded", m) => m.is_unbounded(),
                    (s, MuMinus::Finite(m)) => {
                        let want: f64 = s
                            .parse()
                            .map_err(|_| Error::Parse(format!("bad --expect-mu '{s}'")))?;
                        (m - want).abs() <= tol
                    }
                    (s, MuMinus::Unbounded) => {
                        s.parse::<f64>()
                            .map_err(|_| Error::Parse(format!("bad --expect-mu '{s}'")))?;
                        false
                    }
                };
                rep["expect_mu"] = json!(e);
                rep["tol"] = json!(tol);
                pass &= ok;
            }
            emit(
                out,
                "cone",
                rep,
                pass,
                common.out.as_deref(),
                common.no_timestamp,
            )
        }
        Command::Conditions {
            f,
            cone,
            n,
            samples,
            seed,
            common,
        } => {
            let func = parse_func(&f, n)?;
            let c = parse_cone(&cone, n)?;
            let r = cones::check_conditions(&func, &c, samples, seed)?;
            let pass = r.partials_positive && r.level_away_from_origin;
            let mu = cones::mu_minus(&c, MU_TOL);
            // for degree-one f the two growth conditions reduce to ranges of p
            let ranges = cones::homogeneous_p_ranges(r.degree, mu, 0.0).map(|_| {
                json!({ "h1": format!("[0, {})", mu.value() + 1.0), "h2": format!("[0, {}]", mu.value() + 1.0) })
            });
            let rep =
                json!({ "f": func.name(), "cone": c.name(), "report": r, "p_ranges": ranges });
            emit(
                out,
                "conditions",
                rep,
                pass,
                common.out.as_deref(),
                common.no_timestamp,
            )
        }
        Command::Ode {
            mu,
            p,
            v0,
            w0,
            f,
            cone,
            n,
            boundary,
            tmax,
            tol,
            expect,
            convexity,
            out: path,
            no_timestamp,
        } => {
            let (traj, conv_mu) = match (mu, w0, f, cone) {
                (Some(mu), Some(w0), None, None) => {
                    if boundary.c.is_some() || boundary.h.is_some() {
                        return Err(Error::Input(
                            "the model ODE takes --w0, not a boundary datum".into(),
                        ));
                    }
                    (
                        ode::integrate_model(&OdeParams::new(mu, p)?, v0, w0, tmax)?,
                        mu,
                    )
                }
                (None, None, Some(f), Some(cone)) => {
                    let func = parse_func(&f, n)?;
                    let c = parse_cone(&cone, n)?;
                    let mu = cones::mu_minus(&c, MU_TOL).value();
                    (
                        ode::integrate_general(&func, &c, p, boundary.datum()?, v0, tmax)?,
                        mu,
                    )
                }
                _ => return Err(Error::Input(
                    "use either --mu with --w0 (model) or --f with --cone and --c/--h (general)"
                        .into(),
                )),
            };
            let mut rep = traj.summary();
            let mut pass = match &traj.trace {
                Some(t) => t.max_residual <= tol,
                None => traj.max_drift <= tol,
            };
            rep["tol"] = json!(tol);
            if let Some(e) = expect {
                let got = if traj.classification.is_blowup() {
                    Expect::Blowup
                } else {
                    Expect::Global
                };
                pass &= got == e;
            }
            if convexity {
                rep["convexity"] = json!(ode::convexity_check(conv_mu, &traj)?);
            }
            let sidecar = match &path {
                Some(p) => {
                    let mut buf = Vec::new();
                    traj.write_csv(&mut buf)?;
                    write_atomic(p, &buf)?;
                    Some(p.with_extension("json"))
                }
                None => None,
            };
            emit(out, "ode", rep, pass, sidecar.as_deref(), no_timestamp)
        }
        Command::Threshold {
            mu,
            p,
            v0,
            w0,
            tmax,
            common,
        } => {
            let th = ode::threshold_w0(mu, p, v0)?;
            let mut rep = json!({ "mu": mu, "p": p, "v0": v0, "threshold": th });
            let mut pass = true;
            if let Some(w0) = w0 {
                let params = OdeParams::new(mu, p)?;
                let traj = ode::integrate_model(&params, v0, w0, tmax)?;
                let predicted_global = w0 >= th;
                let got_global = !traj.classification.is_blowup();
                rep["w0"] = json!(w0);
                rep["tmax"] = json!(tmax);
                rep["predicted"] = json!(if predicted_global { "global" } else { "blowup" });
                rep["classification"] = json!(traj.classification);
                rep["first_integral"] = json!(ode::first_integral(&params, &traj.samples[0])?);
                pass = predicted_global == got_global;
            }
            emit(
                out,
                "threshold",
                rep,
                pass,
                common.out.as_deref(),
                common.no_timestamp,
            )
        }
        Command::Spheres {
            field,
            x,
            lam,
            grid,
            tol,
            expect_lambda,
            expect_tol,
            common,
        } => {
            let v = read_field(&field)?;
            let x = Point::parse(&x)?;
            match lam {
                Some(l) => {
                    let g = match grid {
                        Some(p) => read_grid(&p)?,
                        None => half_box(&x, 5.0 * l, 9).excluding(x.to_vec(), l),
                    };
                    let m = liouville::sphere_comparison(&v, &x, l, &g)?;
                    let pass = m >= -COMPARISON_TOL;
                    let rep = json!({ "x": x.coords(), "lam": l, "min_difference": m, "comparison_tol": COMPARISON_TOL, "grid": g });
                    emit(
                        out,
                        "spheres",
                        rep,
                        pass,
                        common.out.as_deref(),
                        common.no_timestamp,
                    )
                }
                None => {
                    let g = match grid {
                        Some(p) => read_grid(&p)?,
                        None => half_box(&x, 3.0, 7).excluding(x.to_vec(), 1.0),
                    };
                    let r = liouville::critical_lambda(&v, &x, &g, tol)?;
                    let mut pass = r.grazing_consistent;
                    let mut rep = json!({ "x": x.coords(), "critical": r, "tol": tol, "grid": g });
                    if let liouville::CriticalLambda::Finite(l) = r.lambda {
                        rep["kelvin_gap"] = json!(liouville::kelvin_gap(&v, &x, l, &g)?);
                    }
                    if let Some(e) = expect_lambda {
                        rep["expect_lambda"] = json!(e);
                        rep["expect_tol"] = json!(expect_tol);
                        pass &= (r.lambda.value() - e).abs() <= expect_tol;
                    }
                    emit(
                        out,
                        "spheres",
                        rep,
                        pass,
                        common.out.as_deref(),
                        common.no_timestamp,
                    )
                }
            }
        }
        Command::Rigidity {
            field,
            f,
            cone,
            boundary,
            grid,
            common,
        } => {
            let v = read_field(&field)?;
            let n = v.dim();
            let func = parse_func(&f, n)?;
            let c = parse_cone(&cone, n)?;
            let g = match grid {
                Some(p) => read_grid(&p)?,
                None => half_box(&vec![0.0; n], 2.0, 5),
            };
            let r = liouville::rigidity_check(&v, &func, &c, boundary.datum()?, &g)?;
            let pass = r.pass;
            let rep = json!({ "tol": liouville::RIGIDITY_TOL, "result": r });
            emit(
                out,
                "rigidity",
                rep,
                pass,
                common.out.as_deref(),
                common.no_timestamp,
            )
        }
        Command::Counterexample {
            kind,
            n,
            alpha,
            mu,
            delta,
            c,
            s,
            cone,
            radius,
            samples,
            seed,
            common,
        } => {
            let need_mu = |m: Option<f64>| {
                m.ok_or_else(|| Error::Input("--mu is required for this kind".into()))
            };
            let ce = match kind {
                Kind::LogPower => Counterexample::LogPower { n, alpha },
                Kind::BoundaryDrift => Counterexample::BoundaryDrift {
                    n,
                    alpha,
                    c: c.unwrap_or(-1.0),
                    s,
                    radius,
                },
                Kind::Barrier => {
                    let cone = parse_cone(cone.as_deref().unwrap_or("min_mu:3"), n)?;
                    Counterexample::Barrier {
                        n,
                        mu: need_mu(mu)?,
                        delta,
                        c: c.unwrap_or(0.0),
                        cone,
                    }
                }
                Kind::XnOnly => Counterexample::XnOnly {
                    n,
                    mu: need_mu(mu)?,
                    c: c.unwrap_or(1.0),
                },
                Kind::AuxSubsolution => {
                    let cone = parse_cone(cone.as_deref().unwrap_or("gamma_k:1"), n)?;
                    Counterexample::AuxSubsolution {
                        n,
                        alpha,
                        delta_tilde: c.unwrap_or(1.0),
                        cone,
                        radius,
                    }
                }
            };
            let (_, r) = liouville::counterexample(&ce, samples, seed)?;
            let pass = r.pass;
            emit(
                out,
                "counterexample",
                json!(r),
                pass,
                common.out.as_deref(),
                common.no_timestamp,
            )
        }
        Command::Residual {
            field,
            f,
            cone,
            p,
            boundary,
            grid,
            tol,
            seed,
            common,
        } => {
            let v = read_field(&field)?;
            let n = v.dim();
            let func = parse_func(&f, n)?;
            let c = parse_cone(&cone, n)?;
            let mut g = match grid {
                Some(path) => read_grid(&path)?,
                None => half_box(&vec![0.0; n], 2.0, 5).with_scatter(32, 0),
            };
            if let Some(s) = seed {
                g.seed = s;
            }
            let r = liouville::residual(&v, &func, &c, p, boundary.datum()?, &g, tol)?;
            let pass = r.pass;
            emit(
                out,
                "residual",
                json!(r),
                pass,
                common.out.as_deref(),
                common.no_timestamp,
            )
        }
        Command::Ricci {
            lams,
            field,
            point,
            direction,
            expect,
            tol,
            common,
        } => {
            let input = match (lams, field, point) {
                (Some(l), None, None) => EigList::from_unsorted(parse_list(&l)?),
                (None, Some(fp), Some(pt)) => {
                    let v = read_field(&fp)?;
                    spectrum(&v.jet(&Point::parse(&pt)?, JetMethod::Auto)?)?
                }
                _ => {
                    return Err(Error::Input(
                        "give either --lams or --field with --point".into(),
                    ))
                }
            };
            let dir = match direction {
                Direction::SchoutenToRicci => RicciDirection::SchoutenToRicci,
                Direction::RicciToSchouten => RicciDirection::RicciToSchouten,
            };
            let res = ricci_transform(&input, dir)?;
            let mut rep = json!({ "input": input, "output": res });
            let mut pass = true;
            if let Some(e) = expect {
                let want = EigList::from_unsorted(parse_list(&e)?);
                if want.len() != res.len() {
                    return Err(Error::Input("expected list has the wrong length".into()));
                }
                let gap = res.max_abs_diff(&want);
                rep["expect_gap"] = json!(gap);
                rep["tol"] = json!(tol);
                pass = gap <= tol;
            }
            emit(
                out,
                "ricci",
                rep,
                pass,
                common.out.as_deref(),
                common.no_timestamp,
            )
        }
    }
}
