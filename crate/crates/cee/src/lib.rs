//! Degree-constrained analytic interpolation and rational covariance
//! extension via the covariance extension equation, a nonstandard
//! Riccati-type matrix equation solved by homotopy continuation.
//!
//! The crate is organized bottom-up:
//!
//! * [`poly`] — polynomial, truncated power series and matrix-polynomial
//!   arithmetic,
//! * [`numerics`] — Stein/Lyapunov solves, numerical rank, the
//!   predictor-corrector homotopy driver,
//! * [`interp`] — interpolation problem data model, normalization and the
//!   generalized Pick feasibility test,
//! * [`scalar`] — the scalar covariance extension equation solver,
//! * [`matrix`] — the matrix-valued solver in observer canonical form,
//! * [`apps`] — spectral estimation, sensitivity shaping and model
//!   reduction workflows built on the solvers.

pub mod apps;
pub mod error;
pub mod interp;
pub mod matrix;
pub mod numerics;
pub mod poly;
pub mod scalar;

pub use error::{Error, Result};
pub mod oracles;
