//! Low-rank matrix recovery with the smoothed rank function (SRF).
//!
//! The crate recovers a low-rank matrix `X` from linear measurements
//! `A(X) = b` by maximizing `F_δ(X) = Σ f_δ(σ_i(X))` over the affine feasible
//! set for a decreasing sequence of smoothing widths `δ`
//! (graduated non-convexity), with a gradient-projection inner loop.
//!
//! Besides the solver it ships the pieces needed to study it:
//!
//! * [`surrogate`]: the delta-approximating families and the matrix
//!   functional with its closed-form gradient.
//! * [`projection`]: orthogonal projection onto `{X : A(X) = b}`.
//! * [`nnm`]: a minimal nuclear-norm baseline.
//! * [`ssp`]: spherical-section ratios and the recovery-bound checkers.
//! * [`experiments`]: seeded problem generators and single-trial driver.
//!
//! The crate is `no_std` (with `alloc`). Enable the `std` feature for faster
//! dense kernels; IO, the CLI and parallel experiment runners live in
//! `srf-lab`.

#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod error;
pub mod experiments;
pub mod math;
pub mod matrix;
pub mod nnm;
pub mod operator;
pub mod projection;
pub mod random;
pub mod solver;
pub mod ssp;
pub mod surrogate;
pub mod svd;

pub use error::{Error, Result};
pub use matrix::DenseMatrix;
pub use operator::{AffineOperator, MeasurementVector};
pub use projection::AffineProjector;
pub use solver::{SolveReport, SolverConfig, StageRecord};
pub use surrogate::SurrogateFamily;
pub use svd::SvdTriple;

/// Relative threshold used for numeric rank everywhere in the crate:
/// singular values above `RANK_TOL * σ_max` count.
pub const RANK_TOL: f64 = 1e-9;
