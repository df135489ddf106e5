//! Constant mean curvature surfaces in hyperbolic 3-space from holomorphic loop-algebra
//! potentials: loop arithmetic, Birkhoff and Iwasawa factorizations, frame integration,
//! Sym formulas and geometric diagnostics, and mesh/report export.

// `!(x <= tol)` is deliberate: NaN must fail a check
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod export;
pub mod expr;
pub mod factorize;
pub mod frameflow;
pub mod geometry;
pub mod linalg;
pub mod loopcore;
pub mod potential;

pub use error::{Error, Result};
pub use loopcore::{Matrix2, MatrixLoop};
pub use num_complex::Complex64 as C64;
