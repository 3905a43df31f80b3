//! Mobius maps of `R^n ∪ {∞}`, conformal pushforward `v^φ = v∘φ + (1/n) log|J_φ|`, Kelvin
//! transforms and the boundary gradient-normalizing map.

use crate::error::{Error, Result};
use crate::field::{Field, FieldSpec, Jet, ScalarField, R_MIN};
use crate::linalg::{dot, matmul, norm_sq, transpose, SymMatrix};
use serde::{Deserialize, Serialize};

/// One building block of a Mobius map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Atom {
    Translation(Vec<f64>),
    Dilation(f64),
    /// Row-major orthogonal matrix, `O[i][j]`.
    Orthogonal(Vec<Vec<f64>>),
    Inversion {
        center: Vec<f64>,
        radius: f64,
    },
}

/// Point of the compactified space.
#[derive(Debug, Clone, PartialEq)]
pub enum ExtPoint {
    Finite(Vec<f64>),
    Infinity,
}

impl ExtPoint {
    pub fn finite(&self) -> Option<&[f64]> {
        match self {
            ExtPoint::Finite(p) => Some(p),
            ExtPoint::Infinity => None,
        }
    }
}

const ORTHO_TOL: f64 = 1e-12;

impl Atom {
    fn dim(&self) -> Option<usize> {
        match self {
            Atom::Translation(t) => Some(t.len()),
            Atom::Dilation(_) => None,
            Atom::Orthogonal(o) => Some(o.len()),
            Atom::Inversion { center, .. } => Some(center.len()),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Atom::Translation(t) => {
                if t.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Parameter("translation must be finite".into()));
                }
            }
            Atom::Dilation(s) => {
                if !(*s > 0.0 && s.is_finite()) {
                    return Err(Error::Parameter(format!(
                        "dilation factor must be positive, got {s}"
                    )));
                }
            }
            Atom::Orthogonal(o) => check_orthogonal(o)?,
            Atom::Inversion { center, radius } => {
                if !(*radius > 0.0 && radius.is_finite()) || center.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Parameter(format!(
                        "inversion needs a finite center and positive radius, got {radius}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn inverse(&self) -> Atom {
        match self {
            Atom::Translation(t) => Atom::Translation(t.iter().map(|x| -x).collect()),
            Atom::Dilation(s) => Atom::Dilation(1.0 / s),
            Atom::Orthogonal(o) => {
                let n = o.len();
                Atom::Orthogonal((0..n).map(|i| (0..n).map(|j| o[j][i]).collect()).collect())
            }
            inv @ Atom::Inversion { .. } => inv.clone(),
        }
    }

    fn apply(&self, x: &ExtPoint) -> ExtPoint {
        match (self, x) {
            (Atom::Inversion { center, .. }, ExtPoint::Infinity) => {
                ExtPoint::Finite(center.clone())
            }
            (_, ExtPoint::Infinity) => ExtPoint::Infinity,
            (Atom::Translation(t), ExtPoint::Finite(p)) => {
                ExtPoint::Finite(p.iter().zip(t).map(|(a, b)| a + b).collect())
            }
            (Atom::Dilation(s), ExtPoint::Finite(p)) => {
                ExtPoint::Finite(p.iter().map(|a| s * a).collect())
            }
            (Atom::Orthogonal(o), ExtPoint::Finite(p)) => {
                ExtPoint::Finite(o.iter().map(|row| dot(row, p)).collect())
            }
            (Atom::Inversion { center, radius }, ExtPoint::Finite(p)) => {
                let d: Vec<f64> = p.iter().zip(center).map(|(a, c)| a - c).collect();
                let r2 = norm_sq(&d);
                if r2 == 0.0 {
                    return ExtPoint::Infinity;
                }
                let k = radius * radius / r2;
                ExtPoint::Finite(center.iter().zip(&d).map(|(c, di)| c + k * di).collect())
            }
        }
    }
}

fn check_orthogonal(o: &[Vec<f64>]) -> Result<()> {
    let n = o.len();
    if n == 0 || o.iter().any(|row| row.len() != n) {
        return Err(Error::Parameter(
            "orthogonal atom must be a square matrix".into(),
        ));
    }
    for i in 0..n {
        for j in 0..n {
            let s: f64 = (0..n).map(|k| o[k][i] * o[k][j]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            if !((s - target).abs() <= ORTHO_TOL) {
                return Err(Error::Parameter(format!(
                    "matrix is not orthogonal: (O^T O)[{i}][{j}] = {s}"
                )));
            }
        }
    }
    Ok(())
}

/// Finite composition of atoms, applied in list order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<Atom>", into = "Vec<Atom>")]
pub struct MobiusMap {
    atoms: Vec<Atom>,
}

impl TryFrom<Vec<Atom>> for MobiusMap {
    type Error = Error;
    fn try_from(atoms: Vec<Atom>) -> Result<Self> {
        Self::new(atoms)
    }
}

impl From<MobiusMap> for Vec<Atom> {
    fn from(m: MobiusMap) -> Self {
        m.atoms
    }
}

/// Derivatives of a map and of its log-factor `σ = (1/n) log|J|`, pulled back to `y`.
#[derive(Debug, Clone)]
pub struct MapJet {
    pub image: Vec<f64>,
    /// Row-major `d image_k / d y_j`.
    pub jacobian: Vec<f64>,
    /// `D^2 image_k` for each output component `k`.
    pub second: Vec<SymMatrix>,
    pub log_factor: f64,
    pub log_gradient: Vec<f64>,
    pub log_hessian: SymMatrix,
}

impl MobiusMap {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        let mut n = None;
        for a in &atoms {
            a.validate()?;
            if let Some(d) = a.dim() {
                if *n.get_or_insert(d) != d {
                    return Err(Error::Parameter(
                        "atoms have inconsistent dimensions".into(),
                    ));
                }
            }
        }
        if matches!(n, Some(d) if d < 2) {
            return Err(Error::Parameter("maps act on R^n with n >= 2".into()));
        }
        Ok(Self { atoms })
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Dimension fixed by the atoms, if any atom carries one.
    pub fn dim(&self) -> Option<usize> {
        self.atoms.iter().find_map(Atom::dim)
    }

    fn check_point(&self, n: usize) -> Result<()> {
        match self.dim() {
            Some(d) if d != n => Err(Error::Input(format!(
                "map acts on R^{d}, point is in R^{n}"
            ))),
            _ => Ok(()),
        }
    }

    /// `f.compose(g)` is `f∘g`: `g` acts first.
    pub fn compose(&self, inner: &MobiusMap) -> Result<MobiusMap> {
        let mut atoms = inner.atoms.clone();
        atoms.extend(self.atoms.iter().cloned());
        Self::new(atoms)
    }

    pub fn inverse(&self) -> MobiusMap {
        Self {
            atoms: self.atoms.iter().rev().map(Atom::inverse).collect(),
        }
    }

    pub fn apply(&self, x: &ExtPoint) -> Result<ExtPoint> {
        if let ExtPoint::Finite(p) = x {
            self.check_point(p.len())?;
        }
        Ok(self.atoms.iter().fold(x.clone(), |acc, a| a.apply(&acc)))
    }

    /// Image of a finite point that must stay finite.
    pub fn apply_finite(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self.apply(&ExtPoint::Finite(x.to_vec()))? {
            ExtPoint::Finite(p) => Ok(p),
            ExtPoint::Infinity => Err(Error::Domain(format!("{x:?} is mapped to infinity"))),
        }
    }

    /// `(1/n) log|J_φ(x)|`.
    pub fn jacobian_log_det(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x.len())?;
        let mut p = x.to_vec();
        let mut total = 0.0;
        for a in &self.atoms {
            match a {
                Atom::Dilation(s) => total += s.ln(),
                Atom::Inversion { center, radius } => {
                    let r = inversion_distance(&p, center)?;
                    total += 2.0 * (radius / r).ln();
                }
                _ => {}
            }
            p = match a.apply(&ExtPoint::Finite(p)) {
                ExtPoint::Finite(q) => q,
                ExtPoint::Infinity => unreachable!("guarded by inversion_distance"),
            };
        }
        Ok(total)
    }

    /// Exact first and second derivatives of the map and its log-factor at `y`.
    pub fn map_jet(&self, y: &[f64]) -> Result<MapJet> {
        let n = y.len();
        self.check_point(n)?;
        let mut p = y.to_vec();
        let mut jac: Vec<f64> = SymMatrix::<f64>::identity(n).as_slice().to_vec();
        let mut second = vec![SymMatrix::zeros(n); n];
        let mut ell = 0.0;
        let mut ell_grad = vec![0.0; n];
        let mut ell_hess = SymMatrix::zeros(n);
        for a in &self.atoms {
            match a {
                Atom::Translation(t) => {
                    p.iter_mut().zip(t).for_each(|(x, ti)| *x += ti);
                }
                Atom::Dilation(s) => {
                    p.iter_mut().for_each(|x| *x *= s);
                    jac.iter_mut().for_each(|x| *x *= s);
                    second = second.iter().map(|h| h.scaled(*s)).collect();
                    ell += s.ln();
                }
                Atom::Orthogonal(o) => {
                    let flat: Vec<f64> = o.iter().flatten().copied().collect();
                    p = o.iter().map(|row| dot(row, &p)).collect();
                    jac = matmul(n, &flat, &jac);
                    second = (0..n)
                        .map(|k| {
                            SymMatrix::from_fn(n, |i, j| {
                                (0..n).map(|m| o[k][m] * second[m].get(i, j)).sum()
                            })
                        })
                        .collect();
                }
                Atom::Inversion { center, radius } => {
                    let r = inversion_distance(&p, center)?;
                    let d: Vec<f64> = p.iter().zip(center).map(|(a, c)| a - c).collect();
                    let r2 = r * r;
                    let r4 = r2 * r2;
                    let rho2 = radius * radius;
                    let da: Vec<f64> = (0..n * n)
                        .map(|ij| {
                            let (i, j) = (ij / n, ij % n);
                            let id = if i == j { 1.0 } else { 0.0 };
                            rho2 / r2 * (id - 2.0 * d[i] * d[j] / r2)
                        })
                        .collect();
                    // pulled-back second derivatives of a_k: J^T D^2 a_k J
                    let jt = transpose(n, &jac);
                    let new_second: Vec<SymMatrix> = (0..n)
                        .map(|k| {
                            let d2a: Vec<f64> = (0..n * n)
                                .map(|ij| {
                                    let (i, j) = (ij / n, ij % n);
                                    let dki = if k == i { 1.0 } else { 0.0 };
                                    let dkj = if k == j { 1.0 } else { 0.0 };
                                    let dij = if i == j { 1.0 } else { 0.0 };
                                    rho2 * (-2.0 * (dkj * d[i] + dki * d[j] + d[k] * dij)) / r4
                                        + 8.0 * rho2 * d[k] * d[i] * d[j] / (r4 * r2)
                                })
                                .collect();
                            let pulled = matmul(n, &jt, &matmul(n, &d2a, &jac));
                            SymMatrix::from_fn(n, |i, j| {
                                let chain: f64 =
                                    (0..n).map(|m| da[k * n + m] * second[m].get(i, j)).sum();
                                chain + pulled[i * n + j]
                            })
                        })
                        .collect();
                    let grad_sigma: Vec<f64> = d.iter().map(|di| -2.0 * di / r2).collect();
                    let hess_sigma: Vec<f64> = (0..n * n)
                        .map(|ij| {
                            let (i, j) = (ij / n, ij % n);
                            let id = if i == j { 1.0 } else { 0.0 };
                            -2.0 * (id / r2 - 2.0 * d[i] * d[j] / r4)
                        })
                        .collect();
                    ell += 2.0 * (radius / r).ln();
                    for (j, g) in ell_grad.iter_mut().enumerate() {
                        *g += (0..n).map(|m| jac[m * n + j] * grad_sigma[m]).sum::<f64>();
                    }
                    let pulled = matmul(n, &jt, &matmul(n, &hess_sigma, &jac));
                    ell_hess = SymMatrix::from_fn(n, |i, j| {
                        let chain: f64 = (0..n).map(|m| grad_sigma[m] * second[m].get(i, j)).sum();
                        ell_hess.get(i, j) + pulled[i * n + j] + chain
                    });
                    jac = matmul(n, &da, &jac);
                    second = new_second;
                    let k = rho2 / r2;
                    p = center.iter().zip(&d).map(|(c, di)| c + k * di).collect();
                }
            }
        }
        Ok(MapJet {
            image: p,
            jacobian: jac,
            second,
            log_factor: ell,
            log_gradient: ell_grad,
            log_hessian: ell_hess,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("maps serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn inversion_distance(p: &[f64], center: &[f64]) -> Result<f64> {
    let r = norm_sq(&p.iter().zip(center).map(|(a, c)| a - c).collect::<Vec<_>>()).sqrt();
    if r < R_MIN {
        return Err(Error::Domain(format!(
            "point within {R_MIN} of an inversion center"
        )));
    }
    Ok(r)
}

#[derive(Debug)]
struct Pushforward {
    base: ScalarField,
    map: MobiusMap,
}

impl Field for Pushforward {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn value(&self, y: &[f64]) -> Result<f64> {
        let ell = self.map.jacobian_log_det(y)?;
        let p = self.map.apply_finite(y)?;
        Ok(self.base.value(&p)? + ell)
    }

    fn has_analytic_jet(&self) -> bool {
        self.base.has_analytic_jet()
    }

    fn analytic_jet(&self, y: &[f64]) -> Result<Jet> {
        let n = y.len();
        let mj = self.map.map_jet(y)?;
        let base = self.base.inner().analytic_jet(&mj.image)?;
        let j = &mj.jacobian;
        let gradient: Vec<f64> = (0..n)
            .map(|c| {
                (0..n).map(|k| base.gradient[k] * j[k * n + c]).sum::<f64>() + mj.log_gradient[c]
            })
            .collect();
        let hv = base.hessian.as_slice();
        let pulled = matmul(n, &transpose(n, j), &matmul(n, hv, j));
        let hessian = SymMatrix::from_fn(n, |a, b| {
            let chain: f64 = (0..n)
                .map(|k| base.gradient[k] * mj.second[k].get(a, b))
                .sum();
            pulled[a * n + b] + chain + mj.log_hessian.get(a, b)
        });
        Ok(Jet {
            point: y.to_vec(),
            value: base.value + mj.log_factor,
            gradient,
            hessian,
        })
    }

    fn spec(&self) -> Option<FieldSpec> {
        None
    }
}

/// `v^φ = v∘φ + (1/n) log|J_φ|`.
pub fn pushforward(v: &ScalarField, map: &MobiusMap) -> Result<ScalarField> {
    if let Some(d) = map.dim() {
        if d != v.dim() {
            return Err(Error::Input(format!(
                "map acts on R^{d}, field on R^{}",
                v.dim()
            )));
        }
    }
    Ok(ScalarField::new(Pushforward {
        base: v.clone(),
        map: map.clone(),
    }))
}

/// Kelvin transform `v^{x,λ}(y) = v(x + λ²(y-x)/|y-x|²) + 2 log(λ/|y-x|)` about a boundary point.
pub fn kelvin(v: &ScalarField, x: &[f64], lam: f64) -> Result<ScalarField> {
    let n = v.dim();
    if x.len() != n {
        return Err(Error::Input("Kelvin center has the wrong dimension".into()));
    }
    if !(lam > 0.0 && lam.is_finite()) {
        return Err(Error::Parameter(format!(
            "Kelvin radius must be positive, got {lam}"
        )));
    }
    if x[n - 1].abs() > 1e-12 {
        return Err(Error::Precondition(format!(
            "Kelvin center must lie on x_n = 0, got x_n = {}",
            x[n - 1]
        )));
    }
    let mut center = x.to_vec();
    center[n - 1] = 0.0;
    pushforward(v, &kelvin_map(&center, lam)?)
}

pub fn kelvin_map(x: &[f64], lam: f64) -> Result<MobiusMap> {
    MobiusMap::new(vec![Atom::Inversion {
        center: x.to_vec(),
        radius: lam,
    }])
}

/// Map `ψ(x) = O(λ²(x - x̄)/|x - x̄|² + λ² x̄/|x̄|²)` with `x̄ = (λ²/2) Oᵀ(q, 0)` and
/// `O = diag(O', 1)`. It fixes 0 and the half-space and removes the tangential gradient
/// `q` of any field at the origin.
pub fn normalize_gradient_map(q: &[f64], lam: f64, oprime: &[Vec<f64>]) -> Result<MobiusMap> {
    let m = q.len();
    if m < 1 {
        return Err(Error::Input(
            "tangential gradient must have n - 1 >= 1 entries".into(),
        ));
    }
    if q.iter().all(|&x| x == 0.0) {
        return Err(Error::Precondition(
            "tangential gradient is zero; nothing to normalize".into(),
        ));
    }
    if !(lam != 0.0 && lam.is_finite()) {
        return Err(Error::Parameter(format!("lam must be nonzero, got {lam}")));
    }
    if oprime.len() != m {
        return Err(Error::Input("O' must be (n-1)x(n-1)".into()));
    }
    check_orthogonal(oprime)?;
    let n = m + 1;
    let mut xbar = vec![0.0; n];
    for i in 0..m {
        // (O'^T q)_i
        xbar[i] = 0.5 * lam * lam * (0..m).map(|k| oprime[k][i] * q[k]).sum::<f64>();
    }
    let xb2 = norm_sq(&xbar);
    let shift: Vec<f64> = xbar.iter().map(|x| lam * lam * x / xb2 - x).collect();
    let mut o = vec![vec![0.0; n]; n];
    for i in 0..m {
        o[i][..m].copy_from_slice(&oprime[i]);
    }
    o[m][m] = 1.0;
    MobiusMap::new(vec![
        Atom::Inversion {
            center: xbar,
            radius: lam.abs(),
        },
        Atom::Translation(shift),
        Atom::Orthogonal(o),
    ])
}
