//! Numerical toolkit for conformally invariant fully nonlinear equations on the half-space:
//! Mobius Hessians, symmetric eigenvalue cones, Kelvin transforms, one-variable ODE
//! reductions and moving-sphere rigidity checks.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod cones;
pub mod error;
pub mod expr;
pub mod field;
pub mod hessian;
pub mod linalg;
pub mod liouville;
pub mod mobius;
pub mod ode;
pub mod scalar;

pub use error::{Error, Result};
pub use field::{
    make_field, BubbleParams, FieldKind, FieldSpec, Jet, JetMethod, Point, ScalarField,
};
pub use linalg::{EigList, SymMatrix};
pub use scalar::Scalar;

pub type Jet64 = Jet<f64>;
pub type Jet32 = Jet<f32>;
pub type SymMatrix64 = SymMatrix<f64>;
pub type SymMatrix32 = SymMatrix<f32>;
pub type EigList64 = EigList<f64>;
pub type EigList32 = EigList<f32>;
