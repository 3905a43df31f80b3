//! Moving-sphere comparisons, bubble recovery, residual verification and the counterexample
//! catalog, all evaluated on reproducible point sets in the closed half-space.

use crate::cones::{mu_minus, Cone, MuMinus, Status, SymFunc, MEMBERSHIP_TOL, MU_TOL};
use crate::error::{Error, Result};
use crate::field::{make_field, BubbleParams, FieldKind, FieldSpec, JetMethod, ScalarField};
use crate::hessian::{eigenvalues, spectrum, w_tensor};
use crate::linalg::{dist, norm, norm_sq};
use crate::mobius::kelvin;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Upper end of the `λ` bisection; comparisons holding here count as unbounded.
pub const LAM_MAX: f64 = 1e3;
/// Slack allowed in `min(v − v^{x,λ}) ≥ 0` for rounding.
pub const COMPARISON_TOL: f64 = 1e-12;
/// Relative offset of the grazing re-check around `λ̄`.
pub const GRAZING_OFFSET: f64 = 1e-4;
/// Default pass thresholds for residual reports.
pub const ANALYTIC_TOL: f64 = 1e-8;
pub const FD_TOL: f64 = 1e-4;
/// Largest fit residual still accepted as a bubble.
pub const FIT_TOL: f64 = 1e-4;
/// Gap allowed in the rigidity identities.
pub const RIGIDITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

/// Box lattice clipped to `xₙ ≥ 0`, plus a seeded Halton scatter, minus excluded balls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub resolution: Vec<usize>,
    #[serde(default)]
    pub scatter: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub excluded: Vec<Ball>,
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

impl GridSpec {
    /// Lattice on `[lower, upper]` with the same resolution on every axis.
    pub fn uniform(lower: Vec<f64>, upper: Vec<f64>, res: usize) -> Self {
        let n = lower.len();
        Self {
            lower,
            upper,
            resolution: vec![res; n],
            scatter: 0,
            seed: 0,
            excluded: vec![],
        }
    }

    pub fn with_scatter(mut self, count: usize, seed: u64) -> Self {
        self.scatter = count;
        self.seed = seed;
        self
    }

    pub fn excluding(mut self, center: Vec<f64>, radius: f64) -> Self {
        self.excluded.push(Ball { center, radius });
        self
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.lower.len();
        if n < 2 || self.upper.len() != n || self.resolution.len() != n {
            return Err(Error::Input(
                "grid lower, upper and resolution need the same length >= 2".into(),
            ));
        }
        for i in 0..n {
            if !(self.lower[i].is_finite()
                && self.upper[i].is_finite()
                && self.upper[i] >= self.lower[i])
            {
                return Err(Error::Input(format!(
                    "grid axis {i} has an empty or non-finite range"
                )));
            }
            if self.resolution[i] < 2 {
                return Err(Error::Input(format!(
                    "grid resolution on axis {i} must be >= 2"
                )));
            }
        }
        if self.upper[n - 1] < 0.0 {
            return Err(Error::Input("grid box lies below the half-space".into()));
        }
        for b in &self.excluded {
            if b.center.len() != n || !(b.radius >= 0.0) {
                return Err(Error::Input(
                    "excluded balls need an n-dimensional center and radius >= 0".into(),
                ));
            }
        }
        Ok(())
    }

    fn clipped_lower(&self) -> Vec<f64> {
        let mut lo = self.lower.clone();
        let n = lo.len();
        lo[n - 1] = lo[n - 1].max(0.0);
        lo
    }

    fn kept(&self, p: &[f64]) -> bool {
        self.excluded.iter().all(|b| dist(p, &b.center) >= b.radius)
    }

    /// Lattice points first (in lexicographic order), then the scatter.
    pub fn points(&self) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        let n = self.dim();
        let lo = self.clipped_lower();
        let hi = &self.upper;
        let axes: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let m = self.resolution[i];
                (0..m)
                    .map(|k| {
                        if k == m - 1 {
                            hi[i]
                        } else {
                            lo[i] + (hi[i] - lo[i]) * k as f64 / (m - 1) as f64
                        }
                    })
                    .collect()
            })
            .collect();
        let mut out = Vec::new();
        let mut idx = vec![0usize; n];
        loop {
            let p: Vec<f64> = (0..n).map(|i| axes[i][idx[i]]).collect();
            if self.kept(&p) {
                out.push(p);
            }
            let mut d = n;
            loop {
                if d == 0 {
                    break;
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < axes[d].len() {
                    break;
                }
                idx[d] = 0;
                if d == 0 {
                    d = usize::MAX;
                    break;
                }
            }
            if d == usize::MAX {
                break;
            }
        }
        if self.scatter > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            let shift: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            for k in 1..=self.scatter as u64 {
                let p: Vec<f64> = (0..n)
                    .map(|i| {
                        let u = (radical_inverse(k, PRIMES[i % PRIMES.len()]) + shift[i]).fract();
                        lo[i] + (hi[i] - lo[i]) * u
                    })
                    .collect();
                if self.kept(&p) {
                    out.push(p);
                }
            }
        }
        Ok(out)
    }
}

/// Maps `f` over `items` on scoped worker threads, preserving order.
pub fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(16);
    if workers <= 1 || items.len() < 64 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(workers);
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| s.spawn(|| c.iter().map(&f).collect::<Vec<R>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub interior_residual_max: f64,
    pub boundary_residual_max: f64,
    pub cone_margin_min: f64,
    pub pass: bool,
    pub interior_pass: bool,
    pub boundary_pass: bool,
    pub cone_pass: bool,
    pub tol: f64,
    pub jet_method: JetMethod,
    pub interior_points: usize,
    pub boundary_points: usize,
    pub grid: GridSpec,
    pub seed: u64,
}

/// Residuals of `f(λ(A[v])) = e^{−pv}` in the open half-space and `∂ₙv = bc·e^v` on its
/// boundary, with the cone margin of `λ(A[v])` everywhere. `tol` defaults to
/// [`ANALYTIC_TOL`] or [`FD_TOL`] depending on how jets are obtained.
pub fn residual(
    v: &ScalarField,
    f: &SymFunc,
    cone: &Cone,
    p: f64,
    bc: f64,
    grid: &GridSpec,
    tol: Option<f64>,
) -> Result<VerifyReport> {
    let n = v.dim();
    if f.dim() != n || cone.dim() != n || grid.dim() != n {
        return Err(Error::Input(
            "field, function, cone and grid dimensions differ".into(),
        ));
    }
    let points = grid.points()?;
    let method = if v.has_analytic_jet() {
        JetMethod::Analytic
    } else {
        JetMethod::FiniteDifference
    };
    let tol = tol.unwrap_or(if v.has_analytic_jet() {
        ANALYTIC_TOL
    } else {
        FD_TOL
    });
    let rows = par_map(&points, |x| -> Result<(f64, Option<f64>, f64)> {
        let jet = v.jet(x, method)?;
        let lam = spectrum(&jet)?;
        let margin = cone.margin(lam.as_slice());
        if x[n - 1] > 0.0 {
            let r = (f.eval(lam.as_slice()) - (-p * jet.value).exp()).abs();
            Ok((r, None, margin))
        } else {
            let r = (jet.gradient[n - 1] - bc * jet.value.exp()).abs();
            Ok((0.0, Some(r), margin))
        }
    });
    let (mut imax, mut bmax, mut mmin) = (0.0f64, 0.0f64, f64::INFINITY);
    let (mut ni, mut nb) = (0, 0);
    for row in rows {
        let (ri, rb, m) = row?;
        match rb {
            Some(b) => {
                nb += 1;
                bmax = bmax.max(b);
            }
            None => {
                ni += 1;
                imax = imax.max(ri);
            }
        }
        mmin = mmin.min(m);
    }
    let interior_pass = imax <= tol;
    let boundary_pass = bmax <= tol;
    let cone_pass = mmin >= -tol;
    Ok(VerifyReport {
        interior_residual_max: imax,
        boundary_residual_max: bmax,
        cone_margin_min: mmin,
        pass: interior_pass && boundary_pass && cone_pass,
        interior_pass,
        boundary_pass,
        cone_pass,
        tol,
        jet_method: method,
        interior_points: ni,
        boundary_points: nb,
        grid: grid.clone(),
        seed: grid.seed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BubbleFit {
    /// Recovered parameters when the quadratic has the bubble sign pattern.
    pub params: Option<BubbleParams>,
    /// `max |v − v_fit|`, or the `e^{−v}` misfit when no bubble could be formed.
    pub residual: f64,
    pub is_bubble: bool,
    /// `(α, β, γ)` of `e^{−v} ≈ α|x|² + β·x + γ`.
    pub alpha: f64,
    pub beta: Vec<f64>,
    pub gamma: f64,
}

/// Weighted least squares for `e^{−v} = α|x|² + β·x + γ`, each row scaled by `e^{v}` so the
/// misfit approximates the error in `v`.
pub fn bubble_fit(samples: &[(Vec<f64>, f64)], tol: f64) -> Result<BubbleFit> {
    let Some((x0, _)) = samples.first() else {
        return Err(Error::Fit("no samples".into()));
    };
    let n = x0.len();
    if samples.len() < n + 2 {
        return Err(Error::Fit(format!(
            "need at least {} samples, got {}",
            n + 2,
            samples.len()
        )));
    }
    let m = samples.len();
    let mut a = DMatrix::<f64>::zeros(m, n + 2);
    let mut rhs = DVector::<f64>::zeros(m);
    for (r, (x, v)) in samples.iter().enumerate() {
        if x.len() != n || !v.is_finite() {
            return Err(Error::Input(
                "samples need equal dimensions and finite values".into(),
            ));
        }
        let w = v.exp();
        a[(r, 0)] = w * norm_sq(x);
        for i in 0..n {
            a[(r, 1 + i)] = w * x[i];
        }
        a[(r, n + 1)] = w;
        rhs[r] = 1.0;
    }
    // column scaling keeps the rank test meaningful
    let scales: Vec<f64> = (0..n + 2)
        .map(|j| a.column(j).norm().max(f64::MIN_POSITIVE))
        .collect();
    for (j, &s) in scales.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-10 * smax) {
        return Err(Error::Fit(format!(
            "sample set is rank deficient (singular values {smin:e} / {smax:e})"
        )));
    }
    let sol = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::Fit(e.to_string()))?;
    let coef: Vec<f64> = (0..n + 2).map(|j| sol[j] / scales[j]).collect();
    let alpha = coef[0];
    let beta = coef[1..=n].to_vec();
    let gamma = coef[n + 1];
    let quad = |x: &[f64]| {
        alpha * norm_sq(x) + beta.iter().zip(x).map(|(b, xi)| b * xi).sum::<f64>() + gamma
    };

    let xbar: Vec<f64> = beta.iter().map(|b| -b / (2.0 * alpha)).collect();
    let a_par = 1.0 / (gamma - alpha * norm_sq(&xbar));
    let b_par = alpha * a_par;
    if alpha > 0.0 && a_par > 0.0 && a_par.is_finite() {
        let params = BubbleParams::new(a_par, b_par, xbar)?;
        let residual = samples
            .iter()
            .map(|(x, v)| (v - params.value(x)).abs())
            .fold(0.0, f64::max);
        return Ok(BubbleFit {
            is_bubble: residual <= tol,
            params: Some(params),
            residual,
            alpha,
            beta,
            gamma,
        });
    }
    let residual = samples
        .iter()
        .map(|(x, v)| ((-v).exp() - quad(x)).abs() * v.exp())
        .fold(0.0, f64::max);
    Ok(BubbleFit {
        params: None,
        residual,
        is_bubble: false,
        alpha,
        beta,
        gamma,
    })
}

fn check_boundary_center(v: &ScalarField, x: &[f64]) -> Result<()> {
    let n = v.dim();
    if x.len() != n {
        return Err(Error::Input("center has the wrong dimension".into()));
    }
    if x[n - 1].abs() > 1e-12 {
        return Err(Error::Precondition(format!(
            "center must lie on x_n = 0, got x_n = {}",
            x[n - 1]
        )));
    }
    Ok(())
}

/// `min (v − v^{x,λ})` over `points`.
pub fn comparison_min(v: &ScalarField, x: &[f64], lam: f64, points: &[Vec<f64>]) -> Result<f64> {
    let k = kelvin(v, x, lam)?;
    let vals = par_map(points, |y| -> Result<f64> { Ok(v.value(y)? - k.value(y)?) });
    let mut m = f64::INFINITY;
    for d in vals {
        m = m.min(d?);
    }
    Ok(m)
}

/// `min` over the grid of `v − v^{x,λ}`; nonnegative certifies the comparison on the grid.
pub fn sphere_comparison(v: &ScalarField, x: &[f64], lam: f64, grid: &GridSpec) -> Result<f64> {
    check_boundary_center(v, x)?;
    if !(lam > 0.0) {
        return Err(Error::Parameter(format!("lam must be positive, got {lam}")));
    }
    let pts = grid.points()?;
    if let Some(p) = pts.iter().find(|p| dist(p, x) < lam * (1.0 - 1e-12)) {
        return Err(Error::Input(format!(
            "grid point {p:?} lies inside B_lam(x)"
        )));
    }
    comparison_min(v, x, lam, &pts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CriticalLambda {
    Finite(f64),
    Unbounded,
}

impl CriticalLambda {
    pub fn value(self) -> f64 {
        match self {
            CriticalLambda::Finite(l) => l,
            CriticalLambda::Unbounded => f64::INFINITY,
        }
    }
}

impl Serialize for CriticalLambda {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CriticalLambda::Finite(l) => s.serialize_f64(*l),
            CriticalLambda::Unbounded => s.serialize_str("unbounded"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalReport {
    pub lambda: CriticalLambda,
    /// Comparison just below `λ̄` holds and just above fails.
    pub grazing_consistent: bool,
    pub below_min: Option<f64>,
    pub above_min: Option<f64>,
    pub evaluations: usize,
}

/// Template points `z` with `|z − x| ≥ 1`; each `λ` is tested on `x + λ(z − x)`.
fn template(grid: &GridSpec, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    let pts = grid.points()?;
    if let Some(p) = pts.iter().find(|p| dist(p, x) < 1.0 - 1e-12) {
        return Err(Error::Input(format!(
            "template point {p:?} is closer than 1 to the center; exclude the unit ball around it"
        )));
    }
    Ok(pts)
}

fn dilate(tpl: &[Vec<f64>], x: &[f64], lam: f64) -> Vec<Vec<f64>> {
    tpl.iter()
        .map(|z| {
            z.iter()
                .zip(x)
                .map(|(zi, xi)| xi + lam * (zi - xi))
                .collect()
        })
        .collect()
}

/// `sup{μ : v^{x,λ} ≤ v outside B_λ(x) for all λ < μ}` by bisection on `[tol, LAM_MAX]`.
///
/// `grid` is a template: it must avoid the unit ball about `x`, and the comparison at radius
/// `λ` runs on its image under `z ↦ x + λ(z − x)`.
pub fn critical_lambda(
    v: &ScalarField,
    x: &[f64],
    grid: &GridSpec,
    tol: f64,
) -> Result<CriticalReport> {
    check_boundary_center(v, x)?;
    if !(tol > 0.0 && tol < LAM_MAX) {
        return Err(Error::Parameter(format!(
            "tol must lie in (0, {LAM_MAX}), got {tol}"
        )));
    }
    let tpl = template(grid, x)?;
    let mut evals = 0;
    let mut holds = |lam: f64| -> Result<(bool, f64)> {
        evals += 1;
        let m = comparison_min(v, x, lam, &dilate(&tpl, x, lam))?;
        Ok((m >= -COMPARISON_TOL, m))
    };
    let (ok_lo, m_lo) = holds(tol)?;
    if !ok_lo {
        return Err(Error::Precondition(format!(
            "comparison already fails at lam = {tol} (min = {m_lo:e})"
        )));
    }
    if holds(LAM_MAX)?.0 {
        return Ok(CriticalReport {
            lambda: CriticalLambda::Unbounded,
            grazing_consistent: true,
            below_min: None,
            above_min: None,
            evaluations: evals,
        });
    }
    let (mut lo, mut hi) = (tol, LAM_MAX);
    while hi - lo > 1e-13 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if holds(mid)?.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lam = 0.5 * (lo + hi);
    let (below_ok, below) = holds(lam * (1.0 - GRAZING_OFFSET))?;
    let (above_ok, above) = holds(lam * (1.0 + GRAZING_OFFSET))?;
    Ok(CriticalReport {
        lambda: CriticalLambda::Finite(lam),
        grazing_consistent: below_ok && !above_ok,
        below_min: Some(below),
        above_min: Some(above),
        evaluations: evals,
    })
}

/// `max |v^{x,λ} − v|` on the template dilated by `λ`.
pub fn kelvin_gap(v: &ScalarField, x: &[f64], lam: f64, grid: &GridSpec) -> Result<f64> {
    check_boundary_center(v, x)?;
    let pts = dilate(&template(grid, x)?, x, lam);
    let k = kelvin(v, x, lam)?;
    let gaps = par_map(&pts, |y| -> Result<f64> {
        Ok((k.value(y)? - v.value(y)?).abs())
    });
    let mut m: f64 = 0.0;
    for g in gaps {
        m = m.max(g?);
    }
    Ok(m)
}

#[derive(Debug, Clone, Serialize)]
pub struct RigidityReport {
    pub residual: VerifyReport,
    pub fit: BubbleFit,
    /// `|f(2a⁻²b·e) − 1|`.
    pub equation_gap: Option<f64>,
    /// `|2a⁻¹b·x̄ₙ − bc|`.
    pub boundary_gap: Option<f64>,
    pub pass: bool,
}

/// Fits a bubble to `v` on the grid and checks the two identities every bubble solution obeys.
pub fn rigidity_check(
    v: &ScalarField,
    f: &SymFunc,
    cone: &Cone,
    bc: f64,
    grid: &GridSpec,
) -> Result<RigidityReport> {
    let res = residual(v, f, cone, 0.0, bc, grid, Some(RIGIDITY_TOL))?;
    let pts = grid.points()?;
    let samples: Vec<(Vec<f64>, f64)> = pts
        .into_iter()
        .map(|x| v.value(&x).map(|val| (x, val)))
        .collect::<Result<_>>()?;
    let fit = bubble_fit(&samples, RIGIDITY_TOL)?;
    let (eq, bd) = match (&fit.params, fit.is_bubble) {
        (Some(p), true) => {
            let e = vec![p.eigenvalue(); v.dim()];
            (
                Some((f.eval(&e) - 1.0).abs()),
                Some((p.neumann() - bc).abs()),
            )
        }
        _ => (None, None),
    };
    let pass = res.pass
        && fit.is_bubble
        && eq.is_some_and(|g| g <= RIGIDITY_TOL)
        && bd.is_some_and(|g| g <= RIGIDITY_TOL);
    Ok(RigidityReport {
        residual: res,
        fit,
        equation_gap: eq,
        boundary_gap: bd,
        pass,
    })
}

#[derive(Debug, Clone)]
pub enum Counterexample {
    /// `α log|x|`.
    LogPower { n: usize, alpha: f64 },
    /// `α log|x| + 2c xₙ − 10c²|x|²` near the origin, against the cone `affine(s)` with `s < 1`.
    BoundaryDrift {
        n: usize,
        alpha: f64,
        c: f64,
        s: f64,
        radius: f64,
    },
    /// `w_δ` on `B_R(eₙ) ∖ B₃(eₙ)` with `ε = (|c|+1)^{−(μ−1)/2}`.
    Barrier {
        n: usize,
        mu: f64,
        delta: f64,
        c: f64,
        cone: Cone,
    },
    /// `2(μ−1)⁻¹ log(1 + (μ−1)c xₙ/2)` against `f = min_mu_shifted(μ)`, `Γ = min_mu(μ)`.
    XnOnly { n: usize, mu: f64, c: f64 },
    /// `α log|x| + δ̃ xₙ + (5δ̃²/2)|x|²` on `B_r ∖ {0}`.
    AuxSubsolution {
        n: usize,
        alpha: f64,
        delta_tilde: f64,
        cone: Cone,
        radius: f64,
    },
}

impl Counterexample {
    pub fn name(&self) -> &'static str {
        match self {
            Counterexample::LogPower { .. } => "log_power",
            Counterexample::BoundaryDrift { .. } => "boundary_drift",
            Counterexample::Barrier { .. } => "barrier",
            Counterexample::XnOnly { .. } => "xn_only",
            Counterexample::AuxSubsolution { .. } => "aux_subsolution",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    /// Worst sampled value of the checked quantity.
    pub worst: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleReport {
    pub kind: String,
    pub field: FieldSpec,
    pub cone: Option<String>,
    pub samples: usize,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub verify: Option<VerifyReport>,
    pub pass: bool,
}

fn check(name: &str, worst: f64, pass: bool) -> Check {
    Check {
        name: name.into(),
        worst,
        pass,
    }
}

/// Random point with `|x − center| ∈ [r0, r1]` and `xₙ ≥ 0`; on `xₙ = 0` when `boundary`.
fn sample_shell(
    rng: &mut ChaCha8Rng,
    center: &[f64],
    r0: f64,
    r1: f64,
    boundary: bool,
) -> Option<Vec<f64>> {
    let n = center.len();
    for _ in 0..1000 {
        let mut d: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let nd = norm(&d);
        if !(0.05..=1.0).contains(&nd) {
            continue;
        }
        d.iter_mut().for_each(|x| *x /= nd);
        let r = r0 * (r1 / r0).powf(rng.gen::<f64>());
        let mut x: Vec<f64> = center.iter().zip(&d).map(|(c, di)| c + r * di).collect();
        if boundary {
            // put the point on xₙ = 0 at distance r from the center
            let h = center[n - 1];
            if r < h.abs() {
                continue;
            }
            let tang = (r * r - h * h).sqrt();
            let tn = norm(&d[..n - 1]);
            if tn < 1e-3 {
                continue;
            }
            for i in 0..n - 1 {
                x[i] = center[i] + tang * d[i] / tn;
            }
            x[n - 1] = 0.0;
            return Some(x);
        }
        if x[n - 1] > 0.0 {
            return Some(x);
        }
    }
    None
}

fn shell_points(
    rng: &mut ChaCha8Rng,
    center: &[f64],
    r0: f64,
    r1: f64,
    count: usize,
    boundary: bool,
) -> Result<Vec<Vec<f64>>> {
    (0..count)
        .map(|_| {
            sample_shell(rng, center, r0, r1, boundary).ok_or_else(|| {
                Error::Input("could not place samples in the requested shell".into())
            })
        })
        .collect()
}

fn default_grid(n: usize) -> GridSpec {
    let mut lo = vec![-2.0; n];
    let mut hi = vec![2.0; n];
    lo[n - 1] = 0.0;
    hi[n - 1] = 4.0;
    GridSpec::uniform(lo, hi, 5).with_scatter(32, 11)
}

/// Builds the catalog field and checks the property it is meant to exhibit.
pub fn counterexample(
    kind: &Counterexample,
    samples: usize,
    seed: u64,
) -> Result<(ScalarField, CounterexampleReport)> {
    if samples == 0 {
        return Err(Error::Parameter("samples must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let mut verify = None;
    let mut cone_name = None;
    let (spec, field) = match kind {
        Counterexample::LogPower { n, alpha } => {
            if !(*alpha > 0.0) {
                return Err(Error::Parameter(format!("alpha must be > 0, got {alpha}")));
            }
            let spec = FieldSpec::new(*n, FieldKind::LogPower { alpha: *alpha });
            let v = make_field(&spec)?;
            let origin = vec![0.0; *n];
            let (mut dir, mut cmin, mut form) = (0.0f64, f64::INFINITY, 0.0f64);
            for x in shell_points(&mut rng, &origin, 0.1, 3.0, samples, false)? {
                let lam = spectrum(&v.jet(&x, JetMethod::Analytic)?)?;
                let c = lam[0];
                cmin = cmin.min(c);
                for l in &lam.as_slice()[1..] {
                    dir = dir.max((l + c).abs() / c.abs());
                }
                let r = norm(&x);
                let want = alpha * (alpha + 2.0) / (2.0 * r.powf(2.0 * alpha + 2.0));
                form = form.max((c - want).abs() / want);
            }
            let mut neu = 0.0f64;
            for x in shell_points(&mut rng, &origin, 0.1, 3.0, samples, true)? {
                let j = v.jet(&x, JetMethod::Analytic)?;
                neu = neu.max(j.gradient[n - 1].abs());
            }
            checks.push(check("spectrum_direction_lambda_star", dir, dir <= 1e-10));
            checks.push(check("factor_positive", cmin, cmin > 0.0));
            checks.push(check("factor_closed_form", form, form <= 1e-10));
            checks.push(check("neumann_datum_zero", neu, neu <= 1e-12));
            (spec, v)
        }
        Counterexample::BoundaryDrift {
            n,
            alpha,
            c,
            s,
            radius,
        } => {
            if !(*alpha > 0.0 && *c < 0.0 && *radius > 0.0) {
                return Err(Error::Parameter(
                    "boundary_drift needs alpha > 0, c < 0, radius > 0".into(),
                ));
            }
            if !(*s >= 0.0 && *s < 1.0) {
                return Err(Error::Parameter(format!(
                    "boundary_drift needs a cone with mu < 1, got s = {s}"
                )));
            }
            let cone = Cone::affine(*n, *s)?;
            cone_name = Some(cone.name());
            let spec = FieldSpec::new(
                *n,
                FieldKind::LogPowerDrift {
                    alpha: *alpha,
                    c: *c,
                },
            );
            let v = make_field(&spec)?;
            let origin = vec![0.0; *n];
            let r0 = radius * 1e-4;
            let mut mmin = f64::INFINITY;
            for x in shell_points(&mut rng, &origin, r0, *radius, samples, false)? {
                let lam = spectrum(&v.jet(&x, JetMethod::Analytic)?)?;
                mmin = mmin.min(cone.margin(lam.as_slice()));
            }
            let mut worst = f64::NEG_INFINITY;
            for x in shell_points(&mut rng, &origin, r0, *radius, samples, true)? {
                let j = v.jet(&x, JetMethod::Analytic)?;
                worst = worst.max(j.gradient[n - 1] - c * j.value.exp());
            }
            checks.push(check("cone_interior", mmin, mmin > 0.0));
            checks.push(check("boundary_inequality", worst, worst <= 0.0));
            (spec, v)
        }
        Counterexample::Barrier {
            n,
            mu,
            delta,
            c,
            cone,
        } => {
            if cone.dim() != *n {
                return Err(Error::Input("cone dimension does not match n".into()));
            }
            let eps = (c.abs() + 1.0).powf(-(mu - 1.0) / 2.0);
            let spec = FieldSpec::new(
                *n,
                FieldKind::BarrierWDelta {
                    mu: *mu,
                    delta: *delta,
                    eps,
                },
            );
            let v = make_field(&spec)?;
            cone_name = Some(cone.name());
            let big_r = delta.powf(-1.0 / (mu - 1.0));
            if !(big_r > 3.0) {
                return Err(Error::Parameter(format!(
                    "annulus is empty: R = {big_r} <= 3"
                )));
            }
            let mut en = vec![0.0; *n];
            en[n - 1] = 1.0;
            let mu_cone = mu_minus(cone, MU_TOL);
            let below = match mu_cone {
                MuMinus::Unbounded => true,
                MuMinus::Finite(m) => *mu < m,
            };
            let r1 = big_r * (1.0 - 1e-3);
            let (mut exterior, mut gmax, mut dir) = (true, f64::NEG_INFINITY, 0.0f64);
            for x in shell_points(&mut rng, &en, 3.0, r1, samples, false)? {
                let lam = spectrum(&v.jet(&x, JetMethod::Analytic)?)?;
                let scale = norm(lam.as_slice()).max(1.0);
                let g = cone.g(lam.as_slice()) / scale;
                gmax = gmax.max(g);
                exterior &= g < -MEMBERSHIP_TOL;
                let k = lam[0] / mu;
                for l in &lam.as_slice()[1..] {
                    dir = dir.max((l + k).abs() / k.abs());
                }
            }
            let mut worst = f64::INFINITY;
            for x in shell_points(&mut rng, &en, 3.0, r1, samples, true)? {
                let j = v.jet(&x, JetMethod::Analytic)?;
                worst = worst.min(j.gradient[n - 1] - (c.abs() + 1.0) * j.value.exp());
            }
            checks.push(check("mu_below_cone_constant", mu_cone.value(), below));
            checks.push(check("spectrum_direction", dir, dir <= 1e-8));
            checks.push(check("cone_exterior", gmax, exterior));
            checks.push(check("boundary_inequality", worst, worst >= 0.0));
            (spec, v)
        }
        Counterexample::XnOnly { n, mu, c } => {
            if !(*mu > (*n as f64 - 1.0)) {
                return Err(Error::Parameter(format!(
                    "xn_only needs mu > n - 1, got mu = {mu}"
                )));
            }
            if !(*c > 0.0) {
                return Err(Error::Parameter(format!(
                    "xn_only needs c > 0 to live on the half-space, got {c}"
                )));
            }
            let spec = FieldSpec::new(*n, FieldKind::OneVarMinF { mu: *mu, c: *c });
            let v = make_field(&spec)?;
            let f = SymFunc::new(*n, crate::cones::FuncKind::MinMuShifted(*mu))?;
            let cone = Cone::min_mu(*n, *mu)?;
            cone_name = Some(cone.name());
            let grid = default_grid(*n).with_scatter(samples, seed);
            let rep = residual(&v, &f, &cone, 0.0, *c, &grid, Some(ANALYTIC_TOL))?;
            checks.push(check(
                "interior_residual",
                rep.interior_residual_max,
                rep.interior_pass,
            ));
            checks.push(check(
                "boundary_residual",
                rep.boundary_residual_max,
                rep.boundary_pass,
            ));
            checks.push(check("cone_margin", rep.cone_margin_min, rep.cone_pass));
            let lam_star_out = !crate::cones::cone_constants(&cone).lambda_star_in_closure;
            checks.push(check(
                "lambda_star_outside_closure",
                mu_minus(&cone, MU_TOL).value(),
                lam_star_out,
            ));
            verify = Some(rep);
            (spec, v)
        }
        Counterexample::AuxSubsolution {
            n,
            alpha,
            delta_tilde,
            cone,
            radius,
        } => {
            if !(*alpha > 0.0 && *delta_tilde > 0.0 && *radius > 0.0) {
                return Err(Error::Parameter(
                    "aux_subsolution needs alpha, delta_tilde, radius > 0".into(),
                ));
            }
            if cone.dim() != *n {
                return Err(Error::Input("cone dimension does not match n".into()));
            }
            cone_name = Some(cone.name());
            let spec = FieldSpec::new(
                *n,
                FieldKind::AuxSubsolution {
                    alpha: *alpha,
                    delta_tilde: *delta_tilde,
                },
            );
            let v = make_field(&spec)?;
            let v0 = make_field(&FieldSpec::new(
                *n,
                FieldKind::AuxSubsolution {
                    alpha: 0.0,
                    delta_tilde: *delta_tilde,
                },
            ))?;
            let origin = vec![0.0; *n];
            let (mut exterior, mut gmax, mut wmax) = (true, f64::NEG_INFINITY, f64::NEG_INFINITY);
            for x in shell_points(&mut rng, &origin, radius * 1e-4, *radius, samples, false)? {
                let lam = spectrum(&v.jet(&x, JetMethod::Analytic)?)?;
                let g = cone.g(lam.as_slice()) / norm(lam.as_slice()).max(1.0);
                gmax = gmax.max(g);
                exterior &= g < -MEMBERSHIP_TOL;
                let w0 = eigenvalues(&w_tensor(&v0.jet(&x, JetMethod::Analytic)?))?;
                wmax = wmax.max(w0[0] + delta_tilde * delta_tilde);
            }
            let outside = !crate::cones::cone_constants(cone).lambda_star_in_closure;
            checks.push(check(
                "lambda_star_outside_closure",
                mu_minus(cone, MU_TOL).value(),
                outside,
            ));
            checks.push(check("cone_exterior", gmax, exterior));
            checks.push(check("quadratic_part_bound", wmax, wmax <= 0.0));
            (spec, v)
        }
    };
    let pass = checks.iter().all(|c| c.pass);
    Ok((
        field,
        CounterexampleReport {
            kind: kind.name().into(),
            field: spec,
            cone: cone_name,
            samples,
            seed,
            checks,
            verify,
            pass,
        },
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct StarterReport {
    pub radii: Vec<f64>,
    /// `min v^{0,1}` over each sampled half-sphere.
    pub minima: Vec<f64>,
    pub finite: bool,
    /// Minima move monotonically as the radius shrinks.
    pub monotone: bool,
    pub lower_bound: f64,
}

/// Lower-bound proxy for `liminf_{x→0} v^{0,1}(x)`: minima of `v^{0,1}` on small half-spheres.
pub fn starter_proxy(
    v: &ScalarField,
    radii: &[f64],
    per_sphere: usize,
    seed: u64,
) -> Result<StarterReport> {
    if radii.is_empty() || per_sphere == 0 {
        return Err(Error::Parameter(
            "need at least one radius and one sample per sphere".into(),
        ));
    }
    let n = v.dim();
    let origin = vec![0.0; n];
    let u = kelvin(v, &origin, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut minima = Vec::new();
    for &r in radii {
        let mut m = f64::INFINITY;
        for x in shell_points(&mut rng, &origin, r, r, per_sphere, false)? {
            m = m.min(u.value(&x)?);
        }
        minima.push(m);
    }
    let finite = minima.iter().all(|m| m.is_finite());
    let monotone =
        minima.windows(2).all(|w| w[1] >= w[0]) || minima.windows(2).all(|w| w[1] <= w[0]);
    let lower_bound = minima.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(StarterReport {
        radii: radii.to_vec(),
        minima,
        finite,
        monotone,
        lower_bound,
    })
}

/// Cone status of `λ(A[v])` at `x`.
pub fn status_at(v: &ScalarField, cone: &Cone, x: &[f64]) -> Result<Status> {
    let lam = spectrum(&v.jet(x, JetMethod::Auto)?)?;
    crate::cones::cone_status(cone, lam.as_slice(), MEMBERSHIP_TOL)
}
