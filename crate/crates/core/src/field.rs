//! Conformal factors `v: R^n -> R` with value, gradient and Hessian jets.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::linalg::{dist, dot, norm_sq, SymMatrix};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::fmt;
use std::sync::Arc;

/// Guard radius around singular points (origin of log fields, Kelvin centers).
pub const R_MIN: f64 = 1e-8;

/// Finite point of `R^n`, `n >= 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::Input(format!(
                "points need dimension >= 2, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Input("point has non-finite coordinates".into()));
        }
        Ok(Self(coords))
    }

    /// Parses `"0,0,1"`.
    pub fn parse(s: &str) -> Result<Self> {
        let coords = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Input(format!("bad coordinate '{t}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

impl std::ops::Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Second-order jet of a field at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet<T = f64> {
    pub point: Vec<T>,
    pub value: T,
    pub gradient: Vec<T>,
    pub hessian: SymMatrix<T>,
}

impl<T: Scalar> Jet<T> {
    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.gradient.iter().all(|g| g.is_finite())
            && self.hessian.as_slice().iter().all(|h| h.is_finite())
    }

    /// Jet of a function of `x_n` alone.
    pub fn one_var(point: Vec<T>, v: T, v1: T, v2: T) -> Self {
        let n = point.len();
        let mut gradient = vec![T::zero(); n];
        gradient[n - 1] = v1;
        let mut hessian = SymMatrix::zeros(n);
        hessian.set(n - 1, n - 1, v2);
        Self {
            point,
            value: v,
            gradient,
            hessian,
        }
    }

    /// Jet of `w(|x - center|)` given `w, w', w''` at `r = |x - center| > 0`.
    pub fn radial(point: Vec<T>, center: &[T], r: T, w: T, w1: T, w2: T) -> Self {
        let n = point.len();
        let d: Vec<T> = point.iter().zip(center).map(|(&x, &c)| x - c).collect();
        let gradient = d.iter().map(|&di| w1 * di / r).collect();
        let radial_part = (w2 - w1 / r) / (r * r);
        let tangential = w1 / r;
        let hessian = SymMatrix::from_fn(n, |i, j| {
            let delta = if i == j { tangential } else { T::zero() };
            radial_part * d[i] * d[j] + delta
        });
        Self {
            point,
            value: w,
            gradient,
            hessian,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JetMethod {
    /// Closed-form or chain-rule jets; fails for fields without them.
    Analytic,
    FiniteDifference,
    /// Analytic when available, otherwise finite differences.
    Auto,
}

/// Implemented by every field representation.
pub trait Field: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> Result<f64>;
    fn has_analytic_jet(&self) -> bool {
        false
    }
    fn analytic_jet(&self, x: &[f64]) -> Result<Jet> {
        let _ = x;
        Err(Error::Input("field has no analytic jets".into()))
    }
    /// Lower bound on the distance from `x` to the excluded set; finite-difference
    /// stencils must stay inside it.
    fn domain_margin(&self, x: &[f64]) -> f64 {
        let _ = x;
        f64::INFINITY
    }
    /// Serializable description, when the field came from one.
    fn spec(&self) -> Option<FieldSpec> {
        None
    }
}

/// Shared, immutable handle to a field.
#[derive(Clone)]
pub struct ScalarField(Arc<dyn Field>);

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl ScalarField {
    pub fn new(field: impl Field + 'static) -> Self {
        Self(Arc::new(field))
    }

    /// Field given by a value-only callback; jets come from finite differences.
    pub fn from_fn<F>(n: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::new(Callback { n, f: Box::new(f) })
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn spec(&self) -> Option<FieldSpec> {
        self.0.spec()
    }

    pub fn has_analytic_jet(&self) -> bool {
        self.0.has_analytic_jet()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Input(format!(
                "point has dimension {}, field has {}",
                x.len(),
                self.dim()
            )));
        }
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("non-finite point".into()));
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        self.0.value(x)
    }

    pub fn jet(&self, x: &[f64], method: JetMethod) -> Result<Jet> {
        self.check_dim(x)?;
        match method {
            JetMethod::Analytic => self.0.analytic_jet(x),
            JetMethod::FiniteDifference => fd_jet(&*self.0, x),
            JetMethod::Auto if self.0.has_analytic_jet() => self.0.analytic_jet(x),
            JetMethod::Auto => fd_jet(&*self.0, x),
        }
    }

    pub(crate) fn inner(&self) -> &dyn Field {
        &*self.0
    }
}

/// Per-coordinate gradient step `max(1, |x_i|) * eps^(1/3)`.
pub fn fd_gradient_step(xi: f64) -> f64 {
    xi.abs().max(1.0) * f64::EPSILON.cbrt()
}

/// Per-coordinate Hessian step `max(1, |x_i|) * eps^(1/6)`, balancing the fourth-order
/// truncation error of the stencils against rounding.
pub fn fd_hessian_step(xi: f64) -> f64 {
    xi.abs().max(1.0) * f64::EPSILON.powf(1.0 / 6.0)
}

/// Outer radius of every stencil used by [`fd_jet`] around `x`.
pub fn fd_stencil_radius(x: &[f64]) -> f64 {
    let s: f64 = x
        .iter()
        .map(|&xi| (2.0 * fd_hessian_step(xi)).powi(2))
        .sum();
    s.sqrt()
}

fn fd_jet(field: &dyn Field, x: &[f64]) -> Result<Jet> {
    let n = x.len();
    let value = field.value(x)?;
    let radius = fd_stencil_radius(x);
    let margin = field.domain_margin(x);
    if radius >= margin {
        return Err(Error::Stencil(format!(
            "stencil radius {radius:.3e} exceeds the distance {margin:.3e} to the excluded set"
        )));
    }
    let mut y = x.to_vec();
    let eval = |y: &[f64]| -> Result<f64> {
        field.value(y).map_err(|e| match e {
            Error::Domain(m) => Error::Stencil(m),
            other => other,
        })
    };
    let mut gradient = vec![0.0; n];
    for i in 0..n {
        let h = fd_gradient_step(x[i]);
        let mut f = [0.0; 4];
        for (k, s) in [2.0, 1.0, -1.0, -2.0].iter().enumerate() {
            y[i] = x[i] + s * h;
            f[k] = eval(&y)?;
        }
        y[i] = x[i];
        gradient[i] = (-f[0] + 8.0 * f[1] - 8.0 * f[2] + f[3]) / (12.0 * h);
    }
    let hs: Vec<f64> = x.iter().map(|&xi| fd_hessian_step(xi)).collect();
    let mut hessian = SymMatrix::zeros(n);
    for i in 0..n {
        let h = hs[i];
        let mut f = [0.0; 4];
        for (k, s) in [2.0, 1.0, -1.0, -2.0].iter().enumerate() {
            y[i] = x[i] + s * h;
            f[k] = eval(&y)?;
        }
        y[i] = x[i];
        let d2 = (-f[0] + 16.0 * f[1] - 30.0 * value + 16.0 * f[2] - f[3]) / (12.0 * h * h);
        hessian.set(i, i, d2);
    }
    // Mixed partials: tensor product of the fourth-order first-derivative stencil.
    const OFFS: [(f64, f64); 4] = [(2.0, -1.0), (1.0, 8.0), (-1.0, -8.0), (-2.0, 1.0)];
    for i in 0..n {
        for j in (i + 1)..n {
            let mut acc = 0.0;
            for &(si, wi) in &OFFS {
                for &(sj, wj) in &OFFS {
                    y[i] = x[i] + si * hs[i];
                    y[j] = x[j] + sj * hs[j];
                    acc += wi * wj * eval(&y)?;
                }
            }
            y[i] = x[i];
            y[j] = x[j];
            hessian.set(i, j, acc / (144.0 * hs[i] * hs[j]));
        }
    }
    Ok(Jet {
        point: x.to_vec(),
        value,
        gradient,
        hessian,
    })
}

type ValueFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

struct Callback {
    n: usize,
    f: ValueFn,
}

impl fmt::Debug for Callback {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Callback(n={})", self.n)
    }
}

impl Field for Callback {
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        let v = (self.f)(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("callback returned {v} at {x:?}")))
        }
    }
}

/// `(a, b, xbar)` of `log(a / (1 + b|x - xbar|^2))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BubbleParams {
    pub a: f64,
    pub b: f64,
    pub xbar: Vec<f64>,
}

impl BubbleParams {
    pub fn new(a: f64, b: f64, xbar: Vec<f64>) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::Parameter(format!(
                "bubble needs a, b > 0 (a={a}, b={b})"
            )));
        }
        if xbar.len() < 2 || xbar.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parameter(
                "bubble center must be a finite point, n >= 2".into(),
            ));
        }
        Ok(Self { a, b, xbar })
    }

    /// Constant eigenvalue `2 b / a^2` of the Mobius Hessian.
    pub fn eigenvalue(&self) -> f64 {
        2.0 * self.b / (self.a * self.a)
    }

    /// `e^{-v} dv/dx_n` on the boundary, `2 b xbar_n / a`.
    pub fn neumann(&self) -> f64 {
        2.0 * self.b * self.xbar[self.xbar.len() - 1] / self.a
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let r2: f64 = x
            .iter()
            .zip(&self.xbar)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        self.a.ln() - (1.0 + self.b * r2).ln()
    }
}

/// Serializable field description: `{"kind": .., "n": .., "params": {..}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct FieldSpec {
    pub n: usize,
    pub kind: FieldKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum FieldKind {
    Constant {
        value: f64,
    },
    Linear {
        offset: f64,
        gradient: Vec<f64>,
    },
    Bubble {
        a: f64,
        b: f64,
        xbar: Vec<f64>,
    },
    LogPower {
        alpha: f64,
    },
    /// `alpha log|x| + 2c x_n - 10c^2 |x|^2`.
    LogPowerDrift {
        alpha: f64,
        c: f64,
    },
    /// `alpha log|x| + d x_n + (5 d^2 / 2)|x|^2` with `d = delta_tilde`.
    AuxSubsolution {
        alpha: f64,
        delta_tilde: f64,
    },
    BarrierWDelta {
        mu: f64,
        delta: f64,
        eps: f64,
    },
    OneVarTabulated {
        t: Vec<f64>,
        v: Vec<f64>,
        slope_start: f64,
        slope_end: f64,
    },
    OneVarMinF {
        mu: f64,
        c: f64,
    },
    /// Expression over `x1..xn`.
    Custom {
        expr: String,
    },
}

impl FieldKind {
    pub fn name(&self) -> &'static str {
        match self {
            FieldKind::Constant { .. } => "constant",
            FieldKind::Linear { .. } => "linear",
            FieldKind::Bubble { .. } => "bubble",
            FieldKind::LogPower { .. } => "log_power",
            FieldKind::LogPowerDrift { .. } => "log_power_drift",
            FieldKind::AuxSubsolution { .. } => "aux_subsolution",
            FieldKind::BarrierWDelta { .. } => "barrier_w_delta",
            FieldKind::OneVarTabulated { .. } => "one_var_tabulated",
            FieldKind::OneVarMinF { .. } => "one_var_min_f",
            FieldKind::Custom { .. } => "custom",
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    kind: String,
    n: usize,
    params: Value,
}

impl TryFrom<RawSpec> for FieldSpec {
    type Error = serde_json::Error;
    fn try_from(raw: RawSpec) -> std::result::Result<Self, Self::Error> {
        let kind: FieldKind =
            serde_json::from_value(json!({"kind": raw.kind, "params": raw.params}))?;
        Ok(FieldSpec { n: raw.n, kind })
    }
}

impl From<FieldSpec> for RawSpec {
    fn from(spec: FieldSpec) -> Self {
        let mut v = serde_json::to_value(&spec.kind).expect("field kinds serialize");
        let params = v
            .get_mut("params")
            .map(Value::take)
            .unwrap_or(Value::Object(Default::default()));
        RawSpec {
            kind: spec.kind.name().to_string(),
            n: spec.n,
            params,
        }
    }
}

impl FieldSpec {
    pub fn new(n: usize, kind: FieldKind) -> Self {
        Self { n, kind }
    }

    pub fn bubble(p: &BubbleParams) -> Self {
        Self::new(
            p.xbar.len(),
            FieldKind::Bubble {
                a: p.a,
                b: p.b,
                xbar: p.xbar.clone(),
            },
        )
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("field specs serialize")
    }
}

/// Builds the field described by `spec`, validating parameters.
pub fn make_field(spec: &FieldSpec) -> Result<ScalarField> {
    let n = spec.n;
    if n < 2 {
        return Err(Error::Parameter(format!("dimension must be >= 2, got {n}")));
    }
    let finite = |name: &str, x: f64| -> Result<()> {
        if x.is_finite() {
            Ok(())
        } else {
            Err(Error::Parameter(format!("{name} must be finite")))
        }
    };
    let form = match &spec.kind {
        FieldKind::Constant { value } => {
            finite("value", *value)?;
            Form::Constant(*value)
        }
        FieldKind::Linear { offset, gradient } => {
            finite("offset", *offset)?;
            if gradient.len() != n || gradient.iter().any(|g| !g.is_finite()) {
                return Err(Error::Parameter(
                    "gradient must be a finite n-vector".into(),
                ));
            }
            Form::Linear(*offset, gradient.clone())
        }
        FieldKind::Bubble { a, b, xbar } => {
            if xbar.len() != n {
                return Err(Error::Parameter(
                    "bubble center has the wrong dimension".into(),
                ));
            }
            Form::Bubble(BubbleParams::new(*a, *b, xbar.clone())?)
        }
        FieldKind::LogPower { alpha } => {
            finite("alpha", *alpha)?;
            Form::LogQuadratic {
                alpha: *alpha,
                lin: 0.0,
                quad: 0.0,
            }
        }
        FieldKind::LogPowerDrift { alpha, c } => {
            finite("alpha", *alpha)?;
            finite("c", *c)?;
            Form::LogQuadratic {
                alpha: *alpha,
                lin: 2.0 * c,
                quad: -20.0 * c * c,
            }
        }
        FieldKind::AuxSubsolution { alpha, delta_tilde } => {
            finite("alpha", *alpha)?;
            finite("delta_tilde", *delta_tilde)?;
            Form::LogQuadratic {
                alpha: *alpha,
                lin: *delta_tilde,
                quad: 5.0 * delta_tilde * delta_tilde,
            }
        }
        FieldKind::BarrierWDelta { mu, delta, eps } => {
            if !(*mu > 1.0 && *delta > 0.0 && *eps > 0.0)
                || !(mu.is_finite() && delta.is_finite() && eps.is_finite())
            {
                return Err(Error::Parameter(format!(
                    "barrier needs mu > 1, delta > 0, eps > 0 (mu={mu}, delta={delta}, eps={eps})"
                )));
            }
            Form::Barrier {
                mu: *mu,
                delta: *delta,
                eps: *eps,
            }
        }
        FieldKind::OneVarTabulated {
            t,
            v,
            slope_start,
            slope_end,
        } => Form::Spline(Spline::new(t.clone(), v.clone(), *slope_start, *slope_end)?),
        FieldKind::OneVarMinF { mu, c } => {
            if !(*mu > 0.0) || *mu == 1.0 || !mu.is_finite() {
                return Err(Error::Parameter(format!(
                    "one_var_min_f needs mu > 0, mu != 1 (mu={mu})"
                )));
            }
            finite("c", *c)?;
            Form::OneVarMinF { mu: *mu, c: *c }
        }
        FieldKind::Custom { expr } => Form::Custom(Expr::parse(expr, 'x', n)?),
    };
    Ok(ScalarField::new(SpecField {
        spec: spec.clone(),
        form,
    }))
}

#[derive(Debug)]
struct SpecField {
    spec: FieldSpec,
    form: Form,
}

#[derive(Debug)]
enum Form {
    Constant(f64),
    Linear(f64, Vec<f64>),
    Bubble(BubbleParams),
    /// `alpha log|x| + lin x_n + (quad / 2)|x|^2`.
    LogQuadratic {
        alpha: f64,
        lin: f64,
        quad: f64,
    },
    Barrier {
        mu: f64,
        delta: f64,
        eps: f64,
    },
    Spline(Spline),
    OneVarMinF {
        mu: f64,
        c: f64,
    },
    Custom(Expr),
}

impl SpecField {
    fn n(&self) -> usize {
        self.spec.n
    }

    fn log_radius(&self, x: &[f64], alpha: f64) -> Result<f64> {
        let r2 = norm_sq(x);
        if alpha != 0.0 && r2.sqrt() < R_MIN {
            return Err(Error::Domain(format!(
                "|x| < {R_MIN} for a logarithmic field"
            )));
        }
        Ok(r2)
    }

    /// `(w, w', w'')` of the barrier profile at `r = |x - e_n|`.
    fn barrier_profile(
        &self,
        x: &[f64],
        mu: f64,
        delta: f64,
        eps: f64,
    ) -> Result<(f64, f64, f64, f64)> {
        let n = self.n();
        let mut d = x.to_vec();
        d[n - 1] -= 1.0;
        let r = norm_sq(&d).sqrt();
        if r < R_MIN {
            return Err(Error::Domain("barrier evaluated at its center e_n".into()));
        }
        // u = r^{1-mu} - delta = r^{1-mu} (1 - delta r^{mu-1})
        let gap = 1.0 - delta * r.powf(mu - 1.0);
        if gap <= R_MIN {
            return Err(Error::Domain(format!(
                "barrier needs |x - e_n| < delta^(-1/(mu-1)) = {}",
                delta.powf(-1.0 / (mu - 1.0))
            )));
        }
        let u = r.powf(1.0 - mu) - delta;
        let w = 2.0 / (mu - 1.0) * (eps * u).ln();
        let rm = r.powf(-mu);
        let w1 = -2.0 * rm / u;
        let w2 = 2.0 * mu * rm / (r * u) - 2.0 * (mu - 1.0) * rm * rm / (u * u);
        Ok((r, w, w1, w2))
    }

    fn min_f_profile(&self, xn: f64, mu: f64, c: f64) -> Result<(f64, f64, f64)> {
        let k = 0.5 * (mu - 1.0) * c;
        let s = 1.0 + k * xn;
        if s <= R_MIN {
            return Err(Error::Domain(format!(
                "1 + (mu-1) c x_n / 2 = {s} is not positive"
            )));
        }
        Ok((2.0 / (mu - 1.0) * s.ln(), c / s, -c * k / (s * s)))
    }
}

impl Field for SpecField {
    fn dim(&self) -> usize {
        self.n()
    }

    fn spec(&self) -> Option<FieldSpec> {
        Some(self.spec.clone())
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        let n = self.n();
        Ok(match &self.form {
            Form::Constant(c) => *c,
            Form::Linear(c, g) => c + dot(g, x),
            Form::Bubble(p) => p.value(x),
            Form::LogQuadratic { alpha, lin, quad } => {
                let r2 = self.log_radius(x, *alpha)?;
                let log_part = if *alpha == 0.0 {
                    0.0
                } else {
                    0.5 * alpha * r2.ln()
                };
                log_part + lin * x[n - 1] + 0.5 * quad * r2
            }
            Form::Barrier { mu, delta, eps } => self.barrier_profile(x, *mu, *delta, *eps)?.1,
            Form::Spline(s) => s.eval(x[n - 1])?.0,
            Form::OneVarMinF { mu, c } => self.min_f_profile(x[n - 1], *mu, *c)?.0,
            Form::Custom(e) => {
                let v = e.eval(x);
                if !v.is_finite() {
                    return Err(Error::Domain(format!("expression is {v} at {x:?}")));
                }
                v
            }
        })
    }

    fn has_analytic_jet(&self) -> bool {
        !matches!(self.form, Form::Custom(_))
    }

    fn domain_margin(&self, x: &[f64]) -> f64 {
        let n = self.n();
        match &self.form {
            Form::LogQuadratic { alpha, .. } if *alpha != 0.0 => norm_sq(x).sqrt() - R_MIN,
            Form::Barrier { mu, delta, .. } => {
                let mut d = x.to_vec();
                d[n - 1] -= 1.0;
                let r = norm_sq(&d).sqrt();
                let outer = delta.powf(-1.0 / (mu - 1.0));
                (r - R_MIN).min(outer - r)
            }
            Form::Spline(s) => {
                let (lo, hi) = s.domain();
                (x[n - 1] - lo).min(hi - x[n - 1])
            }
            Form::OneVarMinF { mu, c } => {
                let k = 0.5 * (mu - 1.0) * c;
                if k == 0.0 {
                    f64::INFINITY
                } else {
                    (1.0 + k * x[n - 1] - R_MIN) / k.abs()
                }
            }
            _ => f64::INFINITY,
        }
    }

    fn analytic_jet(&self, x: &[f64]) -> Result<Jet> {
        let n = self.n();
        let point = x.to_vec();
        match &self.form {
            Form::Constant(c) => Ok(Jet {
                point,
                value: *c,
                gradient: vec![0.0; n],
                hessian: SymMatrix::zeros(n),
            }),
            Form::Linear(c, g) => Ok(Jet {
                point,
                value: c + dot(g, x),
                gradient: g.clone(),
                hessian: SymMatrix::zeros(n),
            }),
            Form::Bubble(p) => {
                let d: Vec<f64> = x.iter().zip(&p.xbar).map(|(a, b)| a - b).collect();
                let s = 1.0 + p.b * norm_sq(&d);
                let b = p.b;
                Ok(Jet {
                    point,
                    value: p.a.ln() - s.ln(),
                    gradient: d.iter().map(|di| -2.0 * b * di / s).collect(),
                    hessian: SymMatrix::from_fn(n, |i, j| {
                        let diag = if i == j { -2.0 * b / s } else { 0.0 };
                        diag + 4.0 * b * b * d[i] * d[j] / (s * s)
                    }),
                })
            }
            Form::LogQuadratic { alpha, lin, quad } => {
                let r2 = self.log_radius(x, *alpha)?;
                let (alpha, lin, quad) = (*alpha, *lin, *quad);
                let (log_part, ar2) = if alpha == 0.0 {
                    (0.0, 0.0)
                } else {
                    (0.5 * alpha * r2.ln(), alpha / r2)
                };
                let mut gradient: Vec<f64> = x.iter().map(|xi| (ar2 + quad) * xi).collect();
                gradient[n - 1] += lin;
                let hessian = SymMatrix::from_fn(n, |i, j| {
                    let diag = if i == j { quad + ar2 } else { 0.0 };
                    diag - 2.0 * ar2 * x[i] * x[j] / r2.max(f64::MIN_POSITIVE)
                });
                Ok(Jet {
                    point,
                    value: log_part + lin * x[n - 1] + 0.5 * quad * r2,
                    gradient,
                    hessian,
                })
            }
            Form::Barrier { mu, delta, eps } => {
                let (r, w, w1, w2) = self.barrier_profile(x, *mu, *delta, *eps)?;
                let mut center = vec![0.0; n];
                center[n - 1] = 1.0;
                Ok(Jet::radial(point, &center, r, w, w1, w2))
            }
            Form::Spline(s) => {
                let (v, v1, v2) = s.eval(x[n - 1])?;
                Ok(Jet::one_var(point, v, v1, v2))
            }
            Form::OneVarMinF { mu, c } => {
                let (v, v1, v2) = self.min_f_profile(x[n - 1], *mu, *c)?;
                Ok(Jet::one_var(point, v, v1, v2))
            }
            Form::Custom(_) => Err(Error::Input("custom fields have no analytic jets".into())),
        }
    }
}

/// Clamped cubic spline through `(t_i, v_i)` with prescribed end slopes.
#[derive(Debug, Clone)]
pub struct Spline {
    t: Vec<f64>,
    v: Vec<f64>,
    m: Vec<f64>,
}

impl Spline {
    pub fn new(t: Vec<f64>, v: Vec<f64>, slope_start: f64, slope_end: f64) -> Result<Self> {
        let k = t.len();
        if k < 2 || v.len() != k {
            return Err(Error::Parameter(
                "spline needs >= 2 knots and matching values".into(),
            ));
        }
        if t.iter().chain(&v).any(|x| !x.is_finite())
            || !slope_start.is_finite()
            || !slope_end.is_finite()
        {
            return Err(Error::Parameter("spline data must be finite".into()));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parameter(
                "spline knots must be strictly increasing".into(),
            ));
        }
        let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
        let slope: Vec<f64> = (0..k - 1).map(|i| (v[i + 1] - v[i]) / h[i]).collect();
        // Tridiagonal system for the knot second derivatives.
        let mut sub = vec![0.0; k];
        let mut diag = vec![0.0; k];
        let mut sup = vec![0.0; k];
        let mut rhs = vec![0.0; k];
        diag[0] = 2.0 * h[0];
        sup[0] = h[0];
        rhs[0] = 6.0 * (slope[0] - slope_start);
        for i in 1..k - 1 {
            sub[i] = h[i - 1];
            diag[i] = 2.0 * (h[i - 1] + h[i]);
            sup[i] = h[i];
            rhs[i] = 6.0 * (slope[i] - slope[i - 1]);
        }
        sub[k - 1] = h[k - 2];
        diag[k - 1] = 2.0 * h[k - 2];
        rhs[k - 1] = 6.0 * (slope_end - slope[k - 2]);
        for i in 1..k {
            let w = sub[i] / diag[i - 1];
            diag[i] -= w * sup[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut m = vec![0.0; k];
        m[k - 1] = rhs[k - 1] / diag[k - 1];
        for i in (0..k - 1).rev() {
            m[i] = (rhs[i] - sup[i] * m[i + 1]) / diag[i];
        }
        Ok(Self { t, v, m })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.t[0], self.t[self.t.len() - 1])
    }

    /// Value, first and second derivative at `x`.
    pub fn eval(&self, x: f64) -> Result<(f64, f64, f64)> {
        let (lo, hi) = self.domain();
        let slack = 1e-12 * (hi - lo).max(1.0);
        if !(x >= lo - slack && x <= hi + slack) {
            return Err(Error::Domain(format!(
                "x_n = {x} outside the tabulated range [{lo}, {hi}]"
            )));
        }
        let i = match self.t.partition_point(|&ti| ti <= x) {
            0 => 0,
            p => (p - 1).min(self.t.len() - 2),
        };
        let h = self.t[i + 1] - self.t[i];
        let a = (self.t[i + 1] - x) / h;
        let b = (x - self.t[i]) / h;
        let (mi, mj) = (self.m[i], self.m[i + 1]);
        let v = a * self.v[i]
            + b * self.v[i + 1]
            + ((a * a * a - a) * mi + (b * b * b - b) * mj) * h * h / 6.0;
        let v1 = (self.v[i + 1] - self.v[i]) / h - (3.0 * a * a - 1.0) / 6.0 * h * mi
            + (3.0 * b * b - 1.0) / 6.0 * h * mj;
        let v2 = a * mi + b * mj;
        Ok((v, v1, v2))
    }
}

/// Distance from `x` to the closest of `centers`.
pub fn distance_to(x: &[f64], centers: &[Vec<f64>]) -> f64 {
    centers
        .iter()
        .map(|c| dist(x, c))
        .fold(f64::INFINITY, f64::min)
}
