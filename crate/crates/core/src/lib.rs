//! Recovery of low-rank matrices with effectively sparse, possibly
//! non-orthogonal factors `X = U V^T` from incomplete noisy linear
//! measurements `y = A(X) + eta`.
//!
//! The reconstruction minimizes a multi-penalty objective combining the
//! measurement misfit with elastic-net penalties on both factors, by
//! alternating minimization (with inner proximal gradient descent) or by
//! proximal alternating linearized minimization. The crate also ships the
//! random measurement ensembles the analysis covers, Monte-Carlo
//! injectivity diagnostics, parameter tuning rules, and a deterministic
//! experiment harness with CSV output.
//!
//! Numeric code is generic over the scalar type through [`Float`];
//! concrete `f64` aliases for the main types live at the crate root and
//! the harness runs in `f64`.

pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod measure;
pub mod model;
pub mod objective;
pub mod scalar;
pub mod seeding;
pub mod solvers;
pub mod tuning;

pub use error::{Error, Result};
pub use scalar::Float;

/// `f64` instantiations of the core types.
pub type Factorization64 = model::Factorization<f64>;
pub type SignalClassSpec64 = model::SignalClassSpec<f64>;
pub type MeasurementOperator64 = measure::MeasurementOperator<f64>;
pub type RegularizationParams64 = objective::RegularizationParams<f64>;
pub type SolveConfig64 = solvers::SolveConfig<f64>;
pub type SolveResult64 = solvers::SolveResult<f64>;

/// `f32` instantiations for callers that trade precision for memory.
pub type Factorization32 = model::Factorization<f32>;
pub type MeasurementOperator32 = measure::MeasurementOperator<f32>;
