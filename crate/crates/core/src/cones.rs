//! Symmetric open cones `Γ = {g > 0}` and symmetric operators `f` on them.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::linalg::norm;
use crate::scalar::Scalar;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::path::Path;

/// Past this value `μ_Γ⁻` is reported unbounded.
pub const MU_MAX: f64 = 1e6;
/// Relative membership tolerance: `|g| < tol * max(1, |λ|)` counts as boundary.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
/// Default absolute accuracy of the `μ_Γ⁻` bisection.
pub const MU_TOL: f64 = 1e-10;

/// `σ_k(λ)`, with `σ_0 = 1`.
pub fn sigma<T: Scalar>(lams: &[T], k: usize) -> T {
    sigmas(lams, k)[k]
}

/// `[σ_0, …, σ_k]`.
pub fn sigmas<T: Scalar>(lams: &[T], k: usize) -> Vec<T> {
    let mut e = vec![T::zero(); k + 1];
    e[0] = T::one();
    for &x in lams {
        for j in (1..=k).rev() {
            e[j] = e[j] + x * e[j - 1];
        }
    }
    e
}

/// `p Σ_{i ≤ n-p} λ_i + (n-p) Σ_{i > n-p} λ_i` on a descending list.
pub fn g_p<T: Scalar>(sorted: &[T], p: usize) -> T {
    let n = sorted.len();
    let (top, rest) = sorted.split_at(n - p);
    let s1 = top.iter().fold(T::zero(), |a, &x| a + x);
    let s2 = rest.iter().fold(T::zero(), |a, &x| a + x);
    T::lit(p as f64) * s1 + T::lit((n - p) as f64) * s2
}

/// `min_i (λ_i + k Σ_{j≠i} λ_j)`.
pub fn min_type<T: Scalar>(lams: &[T], k: T) -> T {
    let s = lams.iter().fold(T::zero(), |a, &x| a + x);
    lams.iter()
        .map(|&x| x + k * (s - x))
        .fold(T::infinity(), |a, b| a.min(b))
}

fn sorted_desc(lams: &[f64]) -> Vec<f64> {
    let mut v = lams.to_vec();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    v
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConeKind {
    /// `σ_1, …, σ_k > 0`.
    GammaK(usize),
    /// `G_p > 0`.
    Gp(usize),
    /// `min_i(λ_i + (μ+1)/(2(n-1)) Σ_{j≠i} λ_j) > 0`.
    MinMu(f64),
    /// `λ_(1) + s λ_(2) > 0` on the descending list.
    Affine(f64),
    /// User expression over `l1..ln`, evaluated on the descending list.
    Custom(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cone {
    n: usize,
    kind: ConeKind,
}

/// `μ_Γ⁻`, possibly `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuMinus {
    Finite(f64),
    Unbounded,
}

impl MuMinus {
    pub fn value(self) -> f64 {
        match self {
            MuMinus::Finite(m) => m,
            MuMinus::Unbounded => f64::INFINITY,
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, MuMinus::Unbounded)
    }
}

impl Serialize for MuMinus {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            MuMinus::Finite(m) => s.serialize_f64(*m),
            MuMinus::Unbounded => s.serialize_str("unbounded"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Interior,
    Boundary,
    Exterior,
}

fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Parameter(format!("cones need n >= 2, got {n}")));
    }
    Ok(())
}

impl Cone {
    pub fn gamma_k(n: usize, k: usize) -> Result<Self> {
        check_dim(n)?;
        if !(1..=n).contains(&k) {
            return Err(Error::Parameter(format!(
                "gamma_k needs 1 <= k <= n, got k={k}, n={n}"
            )));
        }
        Ok(Self {
            n,
            kind: ConeKind::GammaK(k),
        })
    }

    /// `Γ_n`, the positive cone.
    pub fn positive(n: usize) -> Result<Self> {
        Self::gamma_k(n, n)
    }

    pub fn g_p(n: usize, p: usize) -> Result<Self> {
        check_dim(n)?;
        if !(1..n).contains(&p) {
            return Err(Error::Parameter(format!(
                "g_p needs 1 <= p <= n-1, got p={p}, n={n}"
            )));
        }
        Ok(Self {
            n,
            kind: ConeKind::Gp(p),
        })
    }

    pub fn min_mu(n: usize, mu: f64) -> Result<Self> {
        check_dim(n)?;
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Parameter(format!("min_mu needs mu > 0, got {mu}")));
        }
        Ok(Self {
            n,
            kind: ConeKind::MinMu(mu),
        })
    }

    pub fn affine(n: usize, s: f64) -> Result<Self> {
        check_dim(n)?;
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::Parameter(format!(
                "affine cone needs s >= 0, got {s}"
            )));
        }
        Ok(Self {
            n,
            kind: ConeKind::Affine(s),
        })
    }

    /// Validates the expression on seeded samples: `e ∈ Γ`, `-e ∉ Γ`, and `g(λ + μ) ≥ g(λ)`
    /// for `μ ∈ Γ_n`. Symmetry holds by construction since `g` only sees sorted input.
    pub fn custom(n: usize, expr: Expr) -> Result<Self> {
        check_dim(n)?;
        if expr.dim() != n {
            return Err(Error::Parameter(
                "expression dimension does not match n".into(),
            ));
        }
        let cone = Self {
            n,
            kind: ConeKind::Custom(expr),
        };
        cone.validate()?;
        Ok(cone)
    }

    fn validate(&self) -> Result<()> {
        let e = vec![1.0; self.n];
        if self.g(&e) <= 0.0 {
            return Err(Error::Validation("e = (1,…,1) is not in the cone".into()));
        }
        let me = vec![-1.0; self.n];
        if self.g(&me) > 0.0 {
            return Err(Error::Validation(
                "-e lies in the cone, so the cone is all of R^n".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..500 {
            let lam: Vec<f64> = (0..self.n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let bump: Vec<f64> = (0..self.n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let g0 = self.g(&lam);
            let moved: Vec<f64> = lam.iter().zip(&bump).map(|(a, b)| a + b).collect();
            let g1 = self.g(&moved);
            if !g0.is_finite() || !g1.is_finite() {
                return Err(Error::Validation(format!("g is not finite near {lam:?}")));
            }
            if g1 < g0 - 1e-12 * (1.0 + g0.abs()) {
                return Err(Error::Validation(format!(
                    "g decreases along a positive direction at {lam:?}"
                )));
            }
            for perm_seed in 0..2 {
                let mut p = lam.clone();
                p.rotate_left(perm_seed + 1);
                if self.g(&p) != g0 {
                    return Err(Error::Validation("g is not permutation invariant".into()));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &ConeKind {
        &self.kind
    }

    pub fn name(&self) -> String {
        match &self.kind {
            ConeKind::GammaK(k) => format!("gamma_k:{k}"),
            ConeKind::Gp(p) => format!("g_p:{p}"),
            ConeKind::MinMu(m) => format!("min_mu:{m}"),
            ConeKind::Affine(s) => format!("affine:{s}"),
            ConeKind::Custom(e) => format!("custom:{}", e.source()),
        }
    }

    /// Defining function on a descending list.
    pub fn defining(&self, sorted: &[f64]) -> f64 {
        match &self.kind {
            ConeKind::GammaK(k) => sigmas(sorted, *k)[1..]
                .iter()
                .fold(f64::INFINITY, |a, &b| a.min(b)),
            ConeKind::Gp(p) => g_p(sorted, *p),
            ConeKind::MinMu(mu) => min_type(sorted, (mu + 1.0) / (2.0 * (self.n as f64 - 1.0))),
            ConeKind::Affine(s) => sorted[0] + s * sorted[1],
            ConeKind::Custom(e) => e.eval(sorted),
        }
    }

    /// Defining function on any ordering.
    pub fn g(&self, lams: &[f64]) -> f64 {
        self.defining(&sorted_desc(lams))
    }

    /// Normalized margin `g / max(1, |λ|)`.
    pub fn margin(&self, lams: &[f64]) -> f64 {
        self.g(lams) / norm(lams).max(1.0)
    }

    /// Closed-form `μ_Γ⁻` where one is known.
    pub fn closed_form_mu(&self) -> Option<MuMinus> {
        let n = self.n as f64;
        match &self.kind {
            ConeKind::GammaK(1) => Some(MuMinus::Finite(n - 1.0)),
            ConeKind::GammaK(_) => Some(MuMinus::Unbounded),
            ConeKind::Gp(p) => Some(MuMinus::Finite((2.0 * n - 2.0 * *p as f64 - 1.0).max(0.0))),
            ConeKind::MinMu(mu) => {
                let a = (mu + 1.0) / 2.0;
                let b = 2.0 * (n - 1.0) / (mu + 1.0) + n - 2.0;
                Some(MuMinus::Finite(a.max(b)))
            }
            ConeKind::Affine(s) => Some(MuMinus::Finite(*s)),
            ConeKind::Custom(_) => None,
        }
    }
}

fn check_sorted(lams: &[f64]) -> Result<()> {
    if lams.iter().any(|x| x.is_nan()) {
        return Err(Error::Input("eigenvalues contain NaN".into()));
    }
    if lams.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::Input("eigenvalues must be sorted descending".into()));
    }
    Ok(())
}

pub fn cone_status(c: &Cone, lams: &[f64], tol: f64) -> Result<Status> {
    check_sorted(lams)?;
    if lams.len() != c.n {
        return Err(Error::Input(format!(
            "expected {} eigenvalues, got {}",
            c.n,
            lams.len()
        )));
    }
    let g = c.defining(lams);
    let scale = norm(lams).max(1.0);
    Ok(if g >= tol * scale {
        Status::Interior
    } else if g <= -tol * scale {
        Status::Exterior
    } else {
        Status::Boundary
    })
}

/// `(c, -1, …, -1)` sorted.
pub fn probe(n: usize, c: f64) -> Vec<f64> {
    let mut v = vec![-1.0; n];
    v[0] = c;
    sorted_desc(&v)
}

/// `inf{c ≥ 0 : (c, -1, …, -1) ∈ Γ̄}` by bisection on `[0, MU_MAX]`.
pub fn mu_minus(c: &Cone, tol: f64) -> MuMinus {
    let inside = |t: f64| c.defining(&probe(c.n, t)) >= 0.0;
    if inside(0.0) {
        return MuMinus::Finite(0.0);
    }
    if !inside(MU_MAX) {
        return MuMinus::Unbounded;
    }
    let (mut lo, mut hi) = (0.0, MU_MAX);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if inside(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    MuMinus::Finite(0.5 * (lo + hi))
}

/// `λ* = (1, -1, …, -1)`.
pub fn lambda_star(n: usize) -> Vec<f64> {
    probe(n, 1.0)
}

/// `e_n` sorted: `(1, 0, …, 0)`.
pub fn e_n_sorted(n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[0] = 1.0;
    v
}

#[derive(Debug, Clone, Serialize)]
pub struct ConeConstants {
    pub mu_minus: MuMinus,
    pub lambda_star_in_closure: bool,
    pub e_n_on_boundary: bool,
    pub lambda_star_status: Status,
    pub e_n_status: Status,
    /// Closed-form `μ_Γ⁻` when the cone has one.
    pub mu_closed_form: Option<MuMinus>,
    /// Direct status checks agree with the flags derived from `μ_Γ⁻`.
    pub consistent: bool,
}

pub fn cone_constants(c: &Cone) -> ConeConstants {
    let mu = mu_minus(c, MU_TOL);
    let tol = 1e-8;
    let lambda_star_in_closure = mu.value() <= 1.0 + tol;
    let e_n_on_boundary = mu.is_unbounded();
    let ls = cone_status(c, &lambda_star(c.n), MEMBERSHIP_TOL).expect("sorted probe");
    let es = cone_status(c, &e_n_sorted(c.n), MEMBERSHIP_TOL).expect("sorted probe");
    let closed = c.closed_form_mu();
    let closed_ok = match (closed, mu) {
        (None, _) => true,
        (Some(MuMinus::Unbounded), MuMinus::Unbounded) => true,
        (Some(MuMinus::Finite(a)), MuMinus::Finite(b)) => (a - b).abs() <= tol,
        _ => false,
    };
    let consistent = closed_ok
        && lambda_star_in_closure == (ls != Status::Exterior)
        && e_n_on_boundary == (es == Status::Boundary);
    ConeConstants {
        mu_minus: mu,
        lambda_star_in_closure,
        e_n_on_boundary,
        lambda_star_status: ls,
        e_n_status: es,
        mu_closed_form: closed,
        consistent,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FuncKind {
    SigmaK(usize),
    Gp(usize),
    /// `min_i(λ_i + μ/(n-1) Σ_{j≠i} λ_j)`.
    MinMu(f64),
    /// `MinMu(μ) + 1`.
    MinMuShifted(f64),
    /// `λ_(1) + s λ_(2)`.
    Affine(f64),
    Custom {
        expr: Expr,
        degree: Option<f64>,
    },
}

/// Symmetric function of the eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct SymFunc {
    n: usize,
    kind: FuncKind,
}

impl SymFunc {
    pub fn new(n: usize, kind: FuncKind) -> Result<Self> {
        check_dim(n)?;
        match &kind {
            FuncKind::SigmaK(k) if !(1..=n).contains(k) => {
                return Err(Error::Parameter(format!(
                    "sigma_k needs 1 <= k <= n, got {k}"
                )))
            }
            FuncKind::Gp(p) if !(1..n).contains(p) => {
                return Err(Error::Parameter(format!(
                    "g_p needs 1 <= p <= n-1, got {p}"
                )))
            }
            FuncKind::MinMu(m) | FuncKind::MinMuShifted(m) if !m.is_finite() => {
                return Err(Error::Parameter("mu must be finite".into()))
            }
            FuncKind::Affine(s) if !(*s >= 0.0 && s.is_finite()) => {
                return Err(Error::Parameter(format!("affine needs s >= 0, got {s}")))
            }
            FuncKind::Custom { expr, .. } if expr.dim() != n => {
                return Err(Error::Parameter(
                    "expression dimension does not match n".into(),
                ))
            }
            _ => {}
        }
        Ok(Self { n, kind })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &FuncKind {
        &self.kind
    }

    pub fn name(&self) -> String {
        match &self.kind {
            FuncKind::SigmaK(k) => format!("sigma_k:{k}"),
            FuncKind::Gp(p) => format!("g_p:{p}"),
            FuncKind::MinMu(m) => format!("min_mu:{m}"),
            FuncKind::MinMuShifted(m) => format!("min_mu_shifted:{m}"),
            FuncKind::Affine(s) => format!("affine:{s}"),
            FuncKind::Custom { expr, .. } => format!("custom:{}", expr.source()),
        }
    }

    /// Declared homogeneity degree.
    pub fn degree(&self) -> Option<f64> {
        match &self.kind {
            FuncKind::SigmaK(k) => Some(*k as f64),
            FuncKind::Gp(_) | FuncKind::MinMu(_) | FuncKind::Affine(_) => Some(1.0),
            FuncKind::MinMuShifted(_) => None,
            FuncKind::Custom { degree, .. } => *degree,
        }
    }

    /// Value on any ordering; no cone check.
    pub fn eval(&self, lams: &[f64]) -> f64 {
        let s = sorted_desc(lams);
        let k = |mu: f64| mu / (self.n as f64 - 1.0);
        match &self.kind {
            FuncKind::SigmaK(k) => sigma(&s, *k),
            FuncKind::Gp(p) => g_p(&s, *p),
            FuncKind::MinMu(mu) => min_type(&s, k(*mu)),
            FuncKind::MinMuShifted(mu) => min_type(&s, k(*mu)) + 1.0,
            FuncKind::Affine(a) => s[0] + a * s[1],
            FuncKind::Custom { expr, .. } => expr.eval(&s),
        }
    }
}

/// `f(λ)` for `λ` in the closure of `cone`.
pub fn f_eval(f: &SymFunc, cone: &Cone, lams: &[f64]) -> Result<f64> {
    if lams.len() != f.n {
        return Err(Error::Input(format!(
            "expected {} eigenvalues, got {}",
            f.n,
            lams.len()
        )));
    }
    let sorted = sorted_desc(lams);
    if cone_status(cone, &sorted, MEMBERSHIP_TOL)? == Status::Exterior {
        return Err(Error::Domain(format!(
            "{sorted:?} is outside {}",
            cone.name()
        )));
    }
    Ok(f.eval(&sorted))
}

/// Sampled falsifier for monotonicity, `0 ∉ closure(f⁻¹(1))`, homogeneity and separation of the
/// level set from `∂Γ`.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionsReport {
    pub seed: u64,
    pub sample_count: usize,
    pub accepted_samples: usize,
    pub min_partial: f64,
    pub max_partial: f64,
    pub level_points: usize,
    pub min_level_norm: Option<f64>,
    pub degree: Option<f64>,
    pub degree_spread: Option<f64>,
    pub min_level_boundary_distance: Option<f64>,
    pub partials_positive: bool,
    pub level_away_from_origin: bool,
}

/// Central finite-difference gradient of `f` at `λ`.
pub fn fd_partials(f: &SymFunc, lams: &[f64]) -> Vec<f64> {
    let mut y = lams.to_vec();
    (0..lams.len())
        .map(|i| {
            let h = 1e-6 * lams[i].abs().max(1.0);
            y[i] = lams[i] + h;
            let up = f.eval(&y);
            y[i] = lams[i] - h;
            let dn = f.eval(&y);
            y[i] = lams[i];
            (up - dn) / (2.0 * h)
        })
        .collect()
}

/// Draws a point of `Γ` with `|λ| ∈ [0.5, 2]`.
fn sample_in_cone(c: &Cone, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    for _ in 0..10_000 {
        let t: f64 = rng.gen_range(0.0..1.5);
        let lam: Vec<f64> = (0..c.n).map(|_| t + rng.gen_range(-1.0..1.0)).collect();
        let nrm = norm(&lam);
        if nrm < 1e-3 || c.margin(&lam) <= 1e-6 {
            continue;
        }
        let rho: f64 = rng.gen_range(0.5..2.0);
        return Some(lam.iter().map(|x| x * rho / nrm).collect());
    }
    None
}

/// Distance along a ray from `λ ∈ Γ` until `g` reaches 0, capped at `cap`.
fn exit_distance(c: &Cone, lam: &[f64], dir: &[f64], cap: f64) -> f64 {
    let at = |t: f64| -> Vec<f64> { lam.iter().zip(dir).map(|(a, d)| a + t * d).collect() };
    if c.g(&at(cap)) > 0.0 {
        return cap;
    }
    let (mut lo, mut hi) = (0.0, cap);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if c.g(&at(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn check_conditions(
    f: &SymFunc,
    c: &Cone,
    sample_count: usize,
    seed: u64,
) -> Result<ConditionsReport> {
    if sample_count < 1 {
        return Err(Error::Precondition("sample_count must be >= 1".into()));
    }
    if f.n != c.n {
        return Err(Error::Input("function and cone dimensions differ".into()));
    }
    let n = c.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(sample_count);
    for _ in 0..sample_count {
        match sample_in_cone(c, &mut rng) {
            Some(s) => samples.push(s),
            None => break,
        }
    }
    let mut min_partial = f64::INFINITY;
    let mut max_partial = f64::NEG_INFINITY;
    for s in &samples {
        for d in fd_partials(f, s) {
            min_partial = min_partial.min(d);
            max_partial = max_partial.max(d);
        }
    }

    // homogeneity: slope of log f(tλ)/f(λ) against log t
    let ts: Vec<f64> = (0..9).map(|i| 0.5 * 4f64.powf(i as f64 / 8.0)).collect();
    let mut slopes = Vec::new();
    let mut homogeneous = true;
    for s in &samples {
        let f0 = f.eval(s);
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for &t in &ts {
            let ft = f.eval(&s.iter().map(|x| t * x).collect::<Vec<_>>());
            let ratio = ft / f0;
            if !(ratio > 0.0 && ratio.is_finite()) {
                homogeneous = false;
                break;
            }
            sxy += t.ln() * ratio.ln();
            sxx += t.ln() * t.ln();
        }
        if !homogeneous {
            break;
        }
        slopes.push(sxy / sxx);
    }
    let (degree, degree_spread) = if homogeneous && !slopes.is_empty() {
        let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
        let spread = slopes.iter().map(|s| (s - mean).abs()).fold(0.0, f64::max);
        (Some(mean), Some(spread))
    } else {
        (None, None)
    };

    // level set f = 1 along rays through the samples
    let mut min_level_norm: Option<f64> = None;
    let mut level = Vec::new();
    let grid: Vec<f64> = (0..=83).map(|k| 1e-4 * 1.25f64.powi(k)).collect();
    for s in &samples {
        let at = |t: f64| -> Vec<f64> { s.iter().map(|x| t * x).collect() };
        let vals: Vec<f64> = grid.iter().map(|&t| f.eval(&at(t)) - 1.0).collect();
        for (k, &t) in grid.iter().enumerate() {
            if vals[k].abs() <= 0.01 {
                let nr = t * norm(s);
                min_level_norm = Some(min_level_norm.map_or(nr, |m| m.min(nr)));
            }
            if k + 1 < grid.len() && vals[k].signum() != vals[k + 1].signum() && vals[k].is_finite()
            {
                let (mut lo, mut hi) = (t, grid[k + 1]);
                let lo_sign = vals[k].signum();
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if (f.eval(&at(mid)) - 1.0).signum() == lo_sign {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let p = at(0.5 * (lo + hi));
                let nr = norm(&p);
                min_level_norm = Some(min_level_norm.map_or(nr, |m| m.min(nr)));
                level.push(p);
                break;
            }
        }
    }

    // distance from level points to the cone boundary, probed along fixed and random rays
    let mut dirs: Vec<Vec<f64>> = vec![vec![-1.0 / (n as f64).sqrt(); n]];
    for i in 0..n {
        let mut d = vec![0.0; n];
        d[i] = -1.0;
        dirs.push(d);
    }
    for _ in 0..16 {
        let d: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let nd = norm(&d);
        dirs.push(d.iter().map(|x| x / nd).collect());
    }
    let mut min_dist: Option<f64> = None;
    for p in &level {
        let cap = 10.0 * norm(p).max(1.0);
        for d in &dirs {
            let dist = exit_distance(c, p, d, cap);
            min_dist = Some(min_dist.map_or(dist, |m| m.min(dist)));
        }
    }

    Ok(ConditionsReport {
        seed,
        sample_count,
        accepted_samples: samples.len(),
        min_partial,
        max_partial,
        level_points: level.len(),
        min_level_norm,
        degree,
        degree_spread,
        min_level_boundary_distance: min_dist,
        partials_positive: min_partial > 0.0,
        level_away_from_origin: min_level_norm.is_none_or(|m| m > 1e-3),
    })
}

/// For degree-one `f`: the ranges `p ∈ [0, μ+1)` and `p ∈ [0, μ+1]` that the two growth
/// conditions reduce to. `None` when `f` is not degree one.
pub fn homogeneous_p_ranges(degree: Option<f64>, mu: MuMinus, p: f64) -> Option<(bool, bool)> {
    match degree {
        Some(d) if (d - 1.0).abs() <= 1e-6 => {
            let top = mu.value() + 1.0;
            Some((p >= 0.0 && p < top, p >= 0.0 && p <= top))
        }
        _ => None,
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomFile {
    n: Option<usize>,
    expr: String,
    degree: Option<f64>,
}

fn read_custom(path: &Path, n: usize) -> Result<(Expr, Option<f64>)> {
    let text = std::fs::read_to_string(path)?;
    let file: CustomFile = serde_json::from_str(&text)?;
    if let Some(m) = file.n {
        if m != n {
            return Err(Error::Input(format!(
                "custom file is for n = {m}, requested n = {n}"
            )));
        }
    }
    Ok((Expr::parse(&file.expr, 'l', n)?, file.degree))
}

fn split_name(name: &str) -> Result<(&str, &str)> {
    name.split_once(':')
        .ok_or_else(|| Error::Input(format!("catalog name '{name}' must look like kind:<param>")))
}

fn parse_num<T: std::str::FromStr>(s: &str, name: &str) -> Result<T> {
    s.parse::<T>()
        .map_err(|_| Error::Input(format!("bad parameter '{s}' in '{name}'")))
}

/// `gamma_k:<k>`, `g_p:<p>`, `min_mu:<μ>`, `affine:<s>`, `custom:<file>`.
pub fn parse_cone(name: &str, n: usize) -> Result<Cone> {
    let (kind, arg) = split_name(name)?;
    match kind {
        "gamma_k" => Cone::gamma_k(n, parse_num(arg, name)?),
        "g_p" => Cone::g_p(n, parse_num(arg, name)?),
        "min_mu" => Cone::min_mu(n, parse_num(arg, name)?),
        "affine" => Cone::affine(n, parse_num(arg, name)?),
        "custom" => Cone::custom(n, read_custom(Path::new(arg), n)?.0),
        _ => Err(Error::Input(format!("unknown cone kind '{kind}'"))),
    }
}

/// `sigma_k:<k>`, `g_p:<p>`, `min_mu:<μ>`, `min_mu_shifted:<μ>`, `affine:<s>`, `custom:<file>`.
pub fn parse_func(name: &str, n: usize) -> Result<SymFunc> {
    let (kind, arg) = split_name(name)?;
    let k = match kind {
        "sigma_k" => FuncKind::SigmaK(parse_num(arg, name)?),
        "g_p" => FuncKind::Gp(parse_num(arg, name)?),
        "min_mu" => FuncKind::MinMu(parse_num(arg, name)?),
        "min_mu_shifted" => FuncKind::MinMuShifted(parse_num(arg, name)?),
        "affine" => FuncKind::Affine(parse_num(arg, name)?),
        "custom" => {
            let (expr, degree) = read_custom(Path::new(arg), n)?;
            FuncKind::Custom { expr, degree }
        }
        _ => return Err(Error::Input(format!("unknown function kind '{kind}'"))),
    };
    SymFunc::new(n, k)
}

/// Every named cone in dimension `n` used by the consistency sweeps.
pub fn catalog(n: usize) -> Vec<Cone> {
    let mut out = Vec::new();
    for k in 1..=n {
        out.push(Cone::gamma_k(n, k).expect("valid k"));
    }
    for p in 1..n {
        out.push(Cone::g_p(n, p).expect("valid p"));
    }
    for mu in [0.5, 1.0, 2.0, 3.0, 5.0] {
        out.push(Cone::min_mu(n, mu).expect("valid mu"));
    }
    for s in [0.0, 0.5, 1.0, 1.5, 3.0] {
        out.push(Cone::affine(n, s).expect("valid s"));
    }
    out
}
