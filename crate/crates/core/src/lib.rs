//! Detection under training-data covariance mismatch.
//!
//! The linear algebra, the statistics and the mismatch decomposition are
//! generic over [`Real`] (`f32` or `f64`); random generation and the Monte
//! Carlo engine run in `f64`. Aliases below fix the scalar to `f64`.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detect;
pub mod error;
pub mod gof;
pub mod matkit;
pub mod mcengine;
pub mod mismatch;
pub mod randkit;
pub mod report;
pub mod scalar;
pub mod scenario;
pub mod storep;
pub mod validate;

pub use error::{Error, Result};
pub use scalar::{Cx, Real};

pub use num_complex::Complex64;

/// `f64` complex matrix.
pub type CMat = matkit::CMatrix<f64>;
/// `f64` complex vector.
pub type CVec = Vec<Complex64>;
/// `f64` lower Cholesky factor.
pub type Factor = matkit::LowerFactor<f64>;
/// `(β, t̃)` in `f64`.
pub type Point = detect::MisPoint<f64>;
/// `f64` mismatch decomposition.
pub type Omega = mismatch::OmegaSummary<f64>;
/// `f32` complex matrix.
pub type CMat32 = matkit::CMatrix<f32>;
