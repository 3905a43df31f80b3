//! Mobius Hessian `A[v] = e^{-2v}(-D^2 v + Dv (x) Dv - |Dv|^2 I / 2)`, its spectrum, closed-form
//! spectra of radial and one-variable fields, boundary data and the Ricci/Schouten map.

use crate::error::{Error, Result};
use crate::field::Jet;
use crate::linalg::{symmetric_eigen, EigList, SymMatrix};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

/// `W[v] = e^{2v} A[v]`.
pub fn w_tensor<T: Scalar>(j: &Jet<T>) -> SymMatrix<T> {
    let n = j.dim();
    let g = &j.gradient;
    let half_sq = g.iter().fold(T::zero(), |acc, &x| acc + x * x) * T::lit(0.5);
    SymMatrix::from_fn(n, |i, k| {
        let diag = if i == k { half_sq } else { T::zero() };
        -j.hessian.get(i, k) + g[i] * g[k] - diag
    })
}

pub fn conformal_hessian<T: Scalar>(j: &Jet<T>) -> SymMatrix<T> {
    w_tensor(j).scaled((T::lit(-2.0) * j.value).exp())
}

/// Descending spectrum of a symmetric matrix.
pub fn eigenvalues<T: Scalar>(m: &SymMatrix<T>) -> Result<EigList<T>> {
    Ok(symmetric_eigen(m)?.values)
}

/// `lambda(A[v])` at the jet's point.
pub fn spectrum<T: Scalar>(j: &Jet<T>) -> Result<EigList<T>> {
    eigenvalues(&conformal_hessian(j))
}

/// `(lambda_1, lambda_2)` for `v = v(x_n)`; `lambda_2` has multiplicity `n - 1`.
pub fn one_var_eigenvalues<T: Scalar>(v: T, v1: T, v2: T) -> (T, T) {
    let e = (T::lit(-2.0) * v).exp();
    let half = T::lit(0.5);
    ((-v2 + half * v1 * v1) * e, -half * v1 * v1 * e)
}

/// Full sorted spectrum of a one-variable field in dimension `n`.
pub fn one_var_spectrum<T: Scalar>(n: usize, v: T, v1: T, v2: T) -> EigList<T> {
    let (l1, l2) = one_var_eigenvalues(v, v1, v2);
    let mut out = vec![l2; n];
    out[0] = l1;
    EigList::from_unsorted(out)
}

/// Spectrum of a radial field `v(r)` in dimension `n`: one radial eigenvalue and `n - 1`
/// tangential ones.
pub fn radial_eigenvalues<T: Scalar>(n: usize, r: T, v: T, v1: T, v2: T) -> Result<EigList<T>> {
    if !(r > T::zero()) {
        return Err(Error::Domain(format!(
            "radial formula needs r > 0, got {r}"
        )));
    }
    let e = (T::lit(-2.0) * v).exp();
    let half = T::lit(0.5);
    let radial = e * (-v2 + half * v1 * v1);
    let tangential = e * (-v1 / r - half * v1 * v1);
    let mut out = vec![tangential; n];
    out[0] = radial;
    Ok(EigList::from_unsorted(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryConvention {
    /// `c` in `dv/dx_n = c e^v`.
    Neumann,
    /// Mean curvature `h = -e^{-v} dv/dx_n`.
    Geometric,
}

/// Boundary datum at a point of `{x_n = 0}`.
pub fn boundary_values<T: Scalar>(j: &Jet<T>, convention: BoundaryConvention) -> Result<T> {
    let n = j.dim();
    let xn = j.point[n - 1];
    if xn.abs() > T::lit(1e-12) {
        return Err(Error::Domain(format!(
            "x_n = {xn} is not on the boundary hyperplane"
        )));
    }
    let c = (-j.value).exp() * j.gradient[n - 1];
    Ok(match convention {
        BoundaryConvention::Neumann => c,
        BoundaryConvention::Geometric => -c,
    })
}

/// `T = (n - 2) I + e (x) e` sending Schouten eigenvalues to Ricci eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RicciMap {
    n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RicciDirection {
    SchoutenToRicci,
    RicciToSchouten,
}

impl RicciMap {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Domain(format!(
                "the Ricci map needs n >= 3, got {n}"
            )));
        }
        Ok(Self { n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matrix<T: Scalar>(&self) -> SymMatrix<T> {
        let d = T::lit((self.n - 2) as f64);
        SymMatrix::from_fn(self.n, |i, j| if i == j { d + T::one() } else { T::one() })
    }

    /// `T^{-1} = (I - e (x) e / (2n - 2)) / (n - 2)`.
    pub fn inverse_matrix<T: Scalar>(&self) -> SymMatrix<T> {
        let d = T::lit((self.n - 2) as f64);
        let k = T::lit((2 * self.n - 2) as f64);
        SymMatrix::from_fn(self.n, |i, j| {
            let id = if i == j { T::one() } else { T::zero() };
            (id - T::one() / k) / d
        })
    }

    pub fn apply<T: Scalar>(&self, lams: &[T]) -> Vec<T> {
        let d = T::lit((self.n - 2) as f64);
        let s = lams.iter().fold(T::zero(), |a, &x| a + x);
        lams.iter().map(|&x| d * x + s).collect()
    }

    pub fn apply_inverse<T: Scalar>(&self, lams: &[T]) -> Vec<T> {
        let d = T::lit((self.n - 2) as f64);
        let s = lams.iter().fold(T::zero(), |a, &x| a + x) / T::lit((2 * self.n - 2) as f64);
        lams.iter().map(|&x| (x - s) / d).collect()
    }
}

pub fn ricci_transform<T: Scalar>(lams: &EigList<T>, dir: RicciDirection) -> Result<EigList<T>> {
    let map = RicciMap::new(lams.len())?;
    let out = match dir {
        RicciDirection::SchoutenToRicci => map.apply(lams.as_slice()),
        RicciDirection::RicciToSchouten => map.apply_inverse(lams.as_slice()),
    };
    Ok(EigList::from_unsorted(out))
}
