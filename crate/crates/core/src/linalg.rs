//! Small dense symmetric matrices and a cyclic Jacobi eigensolver.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// Square matrix stored row-major. Constructors that take a generator mirror the upper
/// triangle, so matrices built here are exactly symmetric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix<T = f64> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> SymMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn diagonal(d: &[T]) -> Self {
        Self::from_fn(d.len(), |i, j| if i == j { d[i] } else { T::zero() })
    }

    /// Builds from `f(i, j)` evaluated on `i <= j` only.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    /// Raw row-major data; symmetry is not enforced here (see [`SymMatrix::max_asymmetry`]).
    pub fn from_row_major(n: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Input(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                data.len()
            )));
        }
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    /// Writes both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn max_asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn frobenius(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, &x| acc + x * x)
            .sqrt()
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| (0..self.n).fold(T::zero(), |acc, j| acc + self.get(i, j) * x[j]))
            .collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }
}

/// Spectrum sorted descending, ties adjacent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EigList<T = f64>(Vec<T>);

fn desc<T: Scalar>(a: &T, b: &T) -> Ordering {
    b.partial_cmp(a).unwrap_or(Ordering::Equal)
}

impl<T: Scalar> EigList<T> {
    pub fn from_unsorted(mut v: Vec<T>) -> Self {
        v.sort_by(desc);
        Self(v)
    }

    /// Rejects input that is not already descending.
    pub fn from_sorted(v: Vec<T>) -> Result<Self> {
        if v.iter().any(|x| x.is_nan()) {
            return Err(Error::Input("eigenvalue list contains NaN".into()));
        }
        if v.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Input(
                "eigenvalue list is not sorted descending".into(),
            ));
        }
        Ok(Self(v))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> T {
        norm(&self.0)
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.0
            .iter()
            .zip(&other.0)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }
}

impl<T> std::ops::Index<usize> for EigList<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

/// Eigenpairs, values descending; `vectors[k]` belongs to `values[k]`.
#[derive(Debug, Clone)]
pub struct SymEigen<T = f64> {
    pub values: EigList<T>,
    pub vectors: Vec<Vec<T>>,
}

const MAX_SWEEPS: usize = 64;

/// Cyclic Jacobi with row-by-row sweep order.
pub fn symmetric_eigen<T: Scalar>(m: &SymMatrix<T>) -> Result<SymEigen<T>> {
    let n = m.dim();
    let scale = T::one().max(m.frobenius());
    if !scale.is_finite() {
        return Err(Error::Input("matrix has non-finite entries".into()));
    }
    let sym_tol = T::lit(1e-12).max(T::epsilon() * T::lit(16.0)) * scale;
    if m.max_asymmetry() > sym_tol {
        return Err(Error::Input(format!(
            "matrix asymmetry {} exceeds {}",
            m.max_asymmetry(),
            sym_tol
        )));
    }
    let mut a: Vec<Vec<T>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (m.get(i, j) + m.get(j, i)) * T::lit(0.5))
                .collect()
        })
        .collect();
    let mut v: Vec<Vec<T>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { T::one() } else { T::zero() })
                .collect()
        })
        .collect();
    let stop = T::epsilon() * scale;
    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for (i, row) in a.iter().enumerate() {
            for &x in &row[(i + 1)..] {
                off = off + x * x;
            }
        }
        if off.sqrt() <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                a[p][q] = T::zero();
                a[q][p] = T::zero();
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| desc(&a[i][i], &a[j][j]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&i| (0..n).map(|k| v[k][i]).collect())
        .collect();
    Ok(SymEigen {
        values: EigList(values),
        vectors,
    })
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Dense row-major `n x n` product `a * b`.
pub fn matmul(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

pub fn transpose(n: usize, a: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = a[i * n + j];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(m: &SymMatrix<f64>, e: &SymEigen<f64>) -> f64 {
        let mut worst: f64 = 0.0;
        for (lam, q) in e.values.as_slice().iter().zip(&e.vectors) {
            let mq = m.mul_vec(q);
            let r: f64 = mq
                .iter()
                .zip(q)
                .map(|(a, b)| (a - lam * b).powi(2))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(r);
        }
        worst
    }

    #[test]
    fn identity_multiple() {
        let e = symmetric_eigen(&SymMatrix::<f64>::identity(4).scaled(2.0)).unwrap();
        assert_eq!(e.values.as_slice(), &[2.0; 4]);
    }

    #[test]
    fn diagonal_is_sorted() {
        let e = symmetric_eigen(&SymMatrix::diagonal(&[-1.0, 1.0, -1.0])).unwrap();
        assert_eq!(e.values.as_slice(), &[1.0, -1.0, -1.0]);
    }

    #[test]
    fn known_2x2() {
        // [[2,1],[1,2]] has spectrum {3, 1}
        let m = SymMatrix::<f64>::from_fn(2, |i, j| if i == j { 2.0 } else { 1.0 });
        let e = symmetric_eigen(&m).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-15);
        assert!((e.values[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn trace_and_residual_random() {
        let mut seed = 7u64;
        let mut next = || {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        for n in 2..=8 {
            let m = SymMatrix::from_fn(n, |_, _| 3.0 * next());
            let e = symmetric_eigen(&m).unwrap();
            let tr: f64 = (0..n).map(|i| m.get(i, i)).sum();
            let s: f64 = e.values.as_slice().iter().sum();
            assert!((tr - s).abs() < 1e-12);
            assert!(residual(&m, &e) <= 1e-10 * m.frobenius());
        }
    }

    #[test]
    fn asymmetric_rejected() {
        let m = SymMatrix::from_row_major(2, vec![1.0, 2.0, 0.0, 1.0]).unwrap();
        assert!(matches!(symmetric_eigen(&m), Err(Error::Input(_))));
    }

    #[test]
    fn single_precision() {
        let m = SymMatrix::<f32>::from_fn(3, |i, j| if i == j { 2.0 } else { 0.5 });
        let e = symmetric_eigen(&m).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-5);
        assert!((e.values[2] - 1.5).abs() < 1e-5);
    }

    #[test]
    fn eiglist_sorted_check() {
        assert!(EigList::from_sorted(vec![1.0, 2.0]).is_err());
        assert!(EigList::from_sorted(vec![2.0, 2.0, -1.0]).is_ok());
    }
}
