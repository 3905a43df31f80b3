//! One-variable reductions: solutions `v(xₙ)` of `f(λ(A[v])) = e^{-pv}` on `[0, ∞)`.
//!
//! The model equation `v'' + θ v'² + e^{(2-p)v} = 0` is integrated in the variables
//! `(v, w = v')`; `φ = e^v` is reported alongside.

use crate::cones::{Cone, Status, SymFunc, MEMBERSHIP_TOL};
use crate::error::{Error, Result};
use crate::field::{JetMethod, ScalarField};
use serde::Serialize;
use std::io::Write;

pub const RTOL: f64 = 1e-10;
pub const ATOL: f64 = 1e-12;
/// Blow-up is only declared once the state is this extreme...
pub const W_BLOWUP: f64 = 1e8;
pub const PHI_LOW: f64 = 1e-12;
pub const PHI_HIGH: f64 = 1e12;
/// ...and the step has shrunk below this multiple of `max(1, t)`.
pub const H_MIN_REL: f64 = 1e-12;
/// Also a blow-up when `|w| h` exceeds this at underflow: `v` then moves on the scale of a step.
pub const W_STEP_BLOWUP: f64 = 1e-3;
const MAX_STEPS: usize = 5_000_000;
const MAX_DOUBLINGS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeParams {
    pub mu: f64,
    pub p_exp: f64,
    pub theta: f64,
    pub q_exp: f64,
}

impl OdeParams {
    pub fn new(mu: f64, p_exp: f64) -> Result<Self> {
        if !(mu > 1.0 && mu.is_finite()) {
            return Err(Error::Parameter(format!("mu must be > 1, got {mu}")));
        }
        if !p_exp.is_finite() {
            return Err(Error::Parameter("p must be finite".into()));
        }
        Ok(Self {
            mu,
            p_exp,
            theta: (mu - 1.0) / 2.0,
            q_exp: (p_exp - 2.0) / 2.0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeState {
    pub t: f64,
    pub phi: f64,
    pub w: f64,
}

impl OdeState {
    pub fn v(&self) -> f64 {
        self.phi.ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classification {
    Global,
    /// `T₊` lies at or just beyond `t_hi`; `t_lo` is the previous accepted time.
    Blowup {
        t_lo: f64,
        t_hi: f64,
    },
}

impl Classification {
    pub fn is_blowup(&self) -> bool {
        matches!(self, Classification::Blowup { .. })
    }
}

/// Cone bookkeeping recorded by the general integrator.
#[derive(Debug, Clone, Serialize)]
pub struct ConeTrace {
    pub cone: String,
    pub margins: Vec<f64>,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// First sample time with exterior status.
    pub exit_time: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OdeTrajectory {
    pub samples: Vec<OdeState>,
    /// `v''` at each sample.
    pub accel: Vec<f64>,
    pub classification: Classification,
    /// Largest relative first-integral drift; zero when no first integral applies.
    pub max_drift: f64,
    pub drifts: Vec<f64>,
    pub params: Option<OdeParams>,
    pub trace: Option<ConeTrace>,
}

impl OdeTrajectory {
    /// Samples a one-variable field along `(0, …, 0, t)`.
    pub fn from_field(field: &ScalarField, ts: &[f64]) -> Result<Self> {
        let n = field.dim();
        let mut samples = Vec::with_capacity(ts.len());
        let mut accel = Vec::with_capacity(ts.len());
        for (i, &t) in ts.iter().enumerate() {
            if i > 0 && t <= ts[i - 1] {
                return Err(Error::Input("sample times must increase".into()));
            }
            let mut x = vec![0.0; n];
            x[n - 1] = t;
            let jet = field.jet(&x, JetMethod::Auto)?;
            samples.push(OdeState {
                t,
                phi: jet.value.exp(),
                w: jet.gradient[n - 1],
            });
            accel.push(jet.hessian.get(n - 1, n - 1));
        }
        Ok(Self {
            drifts: vec![0.0; samples.len()],
            samples,
            accel,
            classification: Classification::Global,
            max_drift: 0.0,
            params: None,
            trace: None,
        })
    }

    pub fn t_end(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    /// Cubic Hermite interpolation of `(v, w)`.
    pub fn interpolate(&self, t: f64) -> Option<(f64, f64)> {
        let s = &self.samples;
        if s.is_empty() || t < s[0].t || t > self.t_end() {
            return None;
        }
        let i = match s.binary_search_by(|x| x.t.partial_cmp(&t).expect("finite times")) {
            Ok(i) => return Some((s[i].v(), s[i].w)),
            Err(i) => i - 1,
        };
        let (a, b) = (&s[i], &s[i + 1]);
        let h = b.t - a.t;
        let u = (t - a.t) / h;
        let herm = |y0: f64, d0: f64, y1: f64, d1: f64| {
            let h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
            let h10 = u * (1.0 - u) * (1.0 - u);
            let h01 = u * u * (3.0 - 2.0 * u);
            let h11 = u * u * (u - 1.0);
            h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
        };
        Some((
            herm(a.v(), a.w, b.v(), b.w),
            herm(a.w, self.accel[i], b.w, self.accel[i + 1]),
        ))
    }

    /// Whether the run reached `t_max` with every recorded spectrum in the closed cone.
    pub fn reached_in_cone(&self, t_max: f64) -> bool {
        let reached = !self.classification.is_blowup() && self.t_end() >= t_max * (1.0 - 1e-12);
        let in_cone = self.trace.as_ref().is_none_or(|tr| tr.exit_time.is_none());
        reached && in_cone
    }

    /// CSV with header `t,v,w,phi,I,drift,cone_margin`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(out);
        wr.write_record(["t", "v", "w", "phi", "I", "drift", "cone_margin"])?;
        for (k, s) in self.samples.iter().enumerate() {
            let inv = match &self.params {
                Some(p) => first_integral(p, s)
                    .map(|x| x.to_string())
                    .unwrap_or_default(),
                None => String::new(),
            };
            let margin = self
                .trace
                .as_ref()
                .map(|t| t.margins[k].to_string())
                .unwrap_or_default();
            wr.write_record([
                s.t.to_string(),
                s.v().to_string(),
                s.w.to_string(),
                s.phi.to_string(),
                inv,
                self.drifts[k].to_string(),
                margin,
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Everything except the samples, for a JSON sidecar.
    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "classification": self.classification,
            "max_drift": self.max_drift,
            "params": self.params,
            "samples": self.samples.len(),
            "t_end": self.t_end(),
            "cone": self.trace.as_ref().map(|t| serde_json::json!({
                "name": t.cone,
                "max_residual": t.max_residual,
                "exit_time": t.exit_time,
                "min_margin": t.margins.iter().cloned().fold(f64::INFINITY, f64::min),
            })),
        })
    }
}

/// `I = φ^{2θ} w² − φ^{−2(q−θ)}/(q−θ)`, and `φ^{2θ} w² + 2 ln φ` when `q = θ`.
pub fn first_integral(params: &OdeParams, s: &OdeState) -> Result<f64> {
    let (a, b) = integral_terms(params, s)?;
    Ok(a + b)
}

fn integral_terms(params: &OdeParams, s: &OdeState) -> Result<(f64, f64)> {
    if !(s.phi > 0.0) {
        return Err(Error::Domain(format!(
            "phi must be positive, got {}",
            s.phi
        )));
    }
    let d = params.q_exp - params.theta;
    let a = s.phi.powf(2.0 * params.theta) * s.w * s.w;
    let b = if d.abs() < 1e-14 {
        2.0 * s.phi.ln()
    } else {
        -s.phi.powf(-2.0 * d) / d
    };
    Ok((a, b))
}

/// `√2 (p − μ − 1)^{−1/2} e^{−(p−2) v₀/2}`.
pub fn threshold_w0(mu: f64, p: f64, v0: f64) -> Result<f64> {
    if !(mu > 1.0) {
        return Err(Error::Domain(format!("threshold needs mu > 1, got {mu}")));
    }
    if !(p > mu + 1.0) {
        return Err(Error::Domain(format!(
            "threshold needs p > mu + 1, got p={p}, mu={mu}"
        )));
    }
    Ok(2f64.sqrt() / (p - mu - 1.0).sqrt() * (-(p - 2.0) * v0 / 2.0).exp())
}

/// Blow-up predicted by the sign of the data: `w₀ ≤ 0` or `I₀ < 0`.
pub fn predicts_blowup(params: &OdeParams, v0: f64, w0: f64) -> Result<bool> {
    let i0 = first_integral(
        params,
        &OdeState {
            t: 0.0,
            phi: v0.exp(),
            w: w0,
        },
    )?;
    Ok(w0 <= 0.0 || i0 < 0.0)
}

struct Outcome {
    classification: Classification,
}

/// Dormand–Prince 5(4) on `y = (v, w)`; `on_accept(t, y, y')` sees every accepted point,
/// including the initial one.
fn dopri<F, A>(mut rhs: F, y0: [f64; 2], t_max: f64, mut on_accept: A) -> Result<Outcome>
where
    F: FnMut([f64; 2]) -> Result<[f64; 2]>,
    A: FnMut(f64, [f64; 2], [f64; 2]),
{
    const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    const A2: [f64; 1] = [1.0 / 5.0];
    const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
    const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
    const A5: [f64; 4] = [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
    ];
    const A6: [f64; 5] = [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
    ];
    const B: [f64; 6] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ];
    const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    let _ = C;

    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::Parameter(format!(
            "t_max must be positive, got {t_max}"
        )));
    }
    let finite = |y: &[f64; 2]| y[0].is_finite() && y[1].is_finite();
    let mut t = 0.0;
    let mut t_prev = 0.0;
    let mut y = y0;
    let mut k1 = rhs(y)?;
    if !finite(&y) || !finite(&k1) {
        return Err(Error::Integration("initial state is not finite".into()));
    }
    on_accept(t, y, k1);
    let danger =
        |y: &[f64; 2]| y[1].abs() > W_BLOWUP || y[0] < PHI_LOW.ln() || y[0] > PHI_HIGH.ln();
    let mut h = 1e-3_f64.min(t_max);
    let comb = |y: &[f64; 2], h: f64, ks: &[[f64; 2]], a: &[f64]| -> [f64; 2] {
        let mut out = *y;
        for (k, c) in ks.iter().zip(a) {
            out[0] += h * c * k[0];
            out[1] += h * c * k[1];
        }
        out
    };
    for _ in 0..MAX_STEPS {
        let remaining = t_max - t;
        if remaining <= 1e-14 * t_max.max(1.0) {
            return Ok(Outcome {
                classification: Classification::Global,
            });
        }
        if h < H_MIN_REL * t.max(1.0) {
            if danger(&y) || y[1].abs() * h >= W_STEP_BLOWUP {
                return Ok(Outcome {
                    classification: Classification::Blowup {
                        t_lo: t_prev,
                        t_hi: t,
                    },
                });
            }
            return Err(Error::Integration(format!(
                "step size underflow at t = {t} without a blow-up certificate (v = {}, w = {})",
                y[0], y[1]
            )));
        }
        let hs = h.min(remaining);
        let mut ks: Vec<[f64; 2]> = Vec::with_capacity(7);
        ks.push(k1);
        let mut ok = true;
        for a in [&A2[..], &A3[..], &A4[..], &A5[..], &A6[..]] {
            let yi = comb(&y, hs, &ks, a);
            if !finite(&yi) {
                ok = false;
                break;
            }
            let k = rhs(yi)?;
            if !finite(&k) {
                ok = false;
                break;
            }
            ks.push(k);
        }
        let y5 = if ok {
            comb(&y, hs, &ks, &B)
        } else {
            [f64::NAN; 2]
        };
        let k7 = if ok && finite(&y5) {
            rhs(y5)?
        } else {
            [f64::NAN; 2]
        };
        if !finite(&y5) || !finite(&k7) {
            h = hs * 0.25;
            continue;
        }
        ks.push(k7);
        let mut err = 0.0;
        for c in 0..2 {
            let e: f64 = ks.iter().zip(&E).map(|(k, e)| e * k[c]).sum::<f64>() * hs;
            let sc = ATOL + RTOL * y[c].abs().max(y5[c].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / 2.0).sqrt();
        if err <= 1.0 {
            t_prev = t;
            t = if hs == remaining { t_max } else { t + hs };
            y = y5;
            k1 = k7;
            on_accept(t, y, k1);
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = hs * fac;
        } else {
            h = hs * (0.9 * err.powf(-0.2)).max(0.2);
        }
    }
    Err(Error::Integration(format!(
        "step budget exhausted at t = {t}"
    )))
}

/// Relative drift `|I − I₀| / (1 + |I₀| + |φ^{2θ}w²| + |second term|)`.
///
/// The two terms of `I` grow without bound near a blow-up while their sum stays fixed, so the
/// drift is measured against the size of the terms being cancelled as well as against `I₀`.
pub fn relative_drift(params: &OdeParams, i0: f64, s: &OdeState) -> Result<f64> {
    let (a, b) = integral_terms(params, s)?;
    Ok(((a + b) - i0).abs() / (1.0 + i0.abs() + a.abs() + b.abs()))
}

pub fn integrate_model(params: &OdeParams, v0: f64, w0: f64, t_max: f64) -> Result<OdeTrajectory> {
    let (theta, q) = (params.theta, params.q_exp);
    let s0 = OdeState {
        t: 0.0,
        phi: v0.exp(),
        w: w0,
    };
    let i0 = first_integral(params, &s0)?;
    let mut samples = Vec::new();
    let mut accel = Vec::new();
    let mut drifts = Vec::new();
    let rhs = |y: [f64; 2]| Ok([y[1], -theta * y[1] * y[1] - (-2.0 * q * y[0]).exp()]);
    let outcome = dopri(rhs, [v0, w0], t_max, |t, y, dy| {
        let s = OdeState {
            t,
            phi: y[0].exp(),
            w: y[1],
        };
        drifts.push(relative_drift(params, i0, &s).unwrap_or(f64::INFINITY));
        samples.push(s);
        accel.push(dy[1]);
    })?;
    let max_drift = drifts.iter().cloned().fold(0.0, f64::max);
    Ok(OdeTrajectory {
        samples,
        accel,
        classification: outcome.classification,
        max_drift,
        drifts,
        params: Some(*params),
        trace: None,
    })
}

/// Solves `f(λ₁, λ₂, …, λ₂) = target` for `λ₁` by bisection.
pub fn invert_lambda1(f: &SymFunc, lambda2: f64, target: f64) -> Result<f64> {
    let n = f.dim();
    let eval = |l1: f64| {
        let mut l = vec![lambda2; n];
        l[0] = l1;
        f.eval(&l) - target
    };
    // start at the scale of the data so huge |λ₂| still bracket
    let mut w = 1.0f64.max(lambda2.abs()).max(target.abs());
    let (mut lo, mut hi);
    let mut doublings = 0;
    loop {
        lo = lambda2 - w;
        hi = lambda2 + w;
        let (a, b) = (eval(lo), eval(hi));
        if a <= 0.0 && b >= 0.0 {
            break;
        }
        if doublings == MAX_DOUBLINGS {
            return Err(Error::Inversion(format!(
                "f(., {lambda2}, ...) = {target} not bracketed within width {w}"
            )));
        }
        w *= 2.0;
        doublings += 1;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if eval(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Integrates `f(λ(A[v])) = e^{−pv}` with `v(0) = v₀`, `v'(0) = bc·e^{v₀}`.
pub fn integrate_general(
    f: &SymFunc,
    c: &Cone,
    p: f64,
    bc: f64,
    v0: f64,
    t_max: f64,
) -> Result<OdeTrajectory> {
    if f.dim() != c.dim() {
        return Err(Error::Input("function and cone dimensions differ".into()));
    }
    let n = f.dim();
    let spectrum = |y: [f64; 2]| -> Result<(f64, f64, f64)> {
        let lam2 = -0.5 * y[1] * y[1] * (-2.0 * y[0]).exp();
        let target = (-p * y[0]).exp();
        if !lam2.is_finite() || !target.is_finite() {
            return Ok((f64::NAN, f64::NAN, f64::NAN));
        }
        Ok((invert_lambda1(f, lam2, target)?, lam2, target))
    };
    let rhs = |y: [f64; 2]| -> Result<[f64; 2]> {
        let (l1, _, _) = spectrum(y)?;
        Ok([y[1], 0.5 * y[1] * y[1] - l1 * (2.0 * y[0]).exp()])
    };
    let mut samples = Vec::new();
    let mut accel = Vec::new();
    let mut margins = Vec::new();
    let mut residuals = Vec::new();
    let mut exit_time = None;
    let mut failure = None;
    let outcome = dopri(rhs, [v0, bc * v0.exp()], t_max, |t, y, dy| {
        samples.push(OdeState {
            t,
            phi: y[0].exp(),
            w: y[1],
        });
        accel.push(dy[1]);
        match spectrum(y) {
            Ok((l1, l2, target)) => {
                let mut lam = vec![l2; n];
                lam[0] = l1;
                // relative to the eigenvalues as well: near blow-up f is a cancellation of huge terms
                let scale = crate::linalg::norm(&lam).max(1.0);
                residuals.push((f.eval(&lam) - target).abs() / (target.abs() + scale));
                margins.push(c.margin(&lam));
                if exit_time.is_none() && c.g(&lam) <= -MEMBERSHIP_TOL * scale {
                    exit_time = Some(t);
                }
            }
            Err(e) => {
                failure.get_or_insert(e);
                residuals.push(f64::NAN);
                margins.push(f64::NAN);
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let max_residual = residuals.iter().cloned().fold(0.0, f64::max);
    Ok(OdeTrajectory {
        drifts: vec![0.0; samples.len()],
        samples,
        accel,
        classification: outcome.classification,
        max_drift: 0.0,
        params: None,
        trace: Some(ConeTrace {
            cone: c.name(),
            margins,
            residuals,
            max_residual,
            exit_time,
        }),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvexityReport {
    /// `θ e^{θv}` when `μ ≠ 1`, `v` otherwise.
    pub quantity: String,
    pub times: Vec<f64>,
    /// Discrete second differences at interior samples.
    pub second_differences: Vec<f64>,
    /// −1, 0 or +1; 0 inside the rounding band.
    pub signs: Vec<i8>,
    /// Cone status at the same samples, when the trajectory carries a cone trace.
    pub statuses: Option<Vec<Status>>,
    pub all_negative: bool,
    pub all_nonpositive: bool,
}

pub fn convexity_check(mu: f64, traj: &OdeTrajectory) -> Result<ConvexityReport> {
    let s = &traj.samples;
    if s.len() < 5 {
        return Err(Error::Input(format!(
            "need at least 5 samples, got {}",
            s.len()
        )));
    }
    let theta = (mu - 1.0) / 2.0;
    let use_exp = (mu - 1.0).abs() > 1e-12;
    let y: Vec<f64> = s
        .iter()
        .map(|x| {
            if use_exp {
                theta * (theta * x.v()).exp()
            } else {
                x.v()
            }
        })
        .collect();
    let mut times = Vec::new();
    let mut d2 = Vec::new();
    let mut signs = Vec::new();
    let mut statuses = traj.trace.as_ref().map(|_| Vec::new());
    for i in 1..s.len() - 1 {
        let (hm, hp) = (s[i].t - s[i - 1].t, s[i + 1].t - s[i].t);
        let d = 2.0 * ((y[i + 1] - y[i]) / hp - (y[i] - y[i - 1]) / hm) / (hp + hm);
        let mag = y[i - 1].abs().max(y[i].abs()).max(y[i + 1].abs());
        let band = 64.0 * f64::EPSILON * mag * (1.0 / (hp * hm) + 1.0 / (hp * (hp + hm)));
        times.push(s[i].t);
        d2.push(d);
        signs.push(if d > band {
            1
        } else if d < -band {
            -1
        } else {
            0
        });
        if let (Some(st), Some(tr)) = (statuses.as_mut(), traj.trace.as_ref()) {
            let m = tr.margins[i];
            st.push(if m >= MEMBERSHIP_TOL {
                Status::Interior
            } else if m <= -MEMBERSHIP_TOL {
                Status::Exterior
            } else {
                Status::Boundary
            });
        }
    }
    Ok(ConvexityReport {
        quantity: if use_exp {
            format!("{theta} * exp({theta} v)")
        } else {
            "v".into()
        },
        all_negative: signs.iter().all(|&x| x < 0),
        all_nonpositive: signs.iter().all(|&x| x <= 0),
        times,
        second_differences: d2,
        signs,
        statuses,
    })
}
