//! A minimal nuclear-norm minimization baseline.
//!
//! Approximates `min ‖X‖_* s.t. A(X) = b` by alternating singular value
//! soft-thresholding with projection onto the feasible set, with a
//! diminishing threshold `τ_k = shrink_tau / k`. It is a plain heuristic
//! stand-in for nuclear-norm solvers, used only as a comparison point; it is
//! not tuned and makes no claim to match dedicated NNM implementations.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::DenseMatrix;
use crate::operator::{AffineOperator, MeasurementVector};
use crate::projection::AffineProjector;
use crate::solver::{Clock, NoClock, SolveReport, StageRecord};
use crate::svd;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NnmConfig {
    /// Relaxation of the shrinkage step: `X ← X + step (shrink(X) − X)`.
    pub step: f64,
    /// Threshold scale relative to `σ_max(X̃)`; iteration `k` shrinks by
    /// `shrink_tau · σ_max(X̃) / k`.
    pub shrink_tau: f64,
    pub max_iters: usize,
    /// Stop once `‖X_k − X_{k−1}‖_F / √(n1 n2) ≤ tol`.
    pub tol: f64,
}

impl Default for NnmConfig {
    fn default() -> Self {
        Self {
            step: 1.0,
            shrink_tau: 0.5,
            max_iters: 5000,
            tol: 1e-7,
        }
    }
}

impl NnmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::invalid(alloc::format!("step must be positive, got {}", self.step)));
        }
        if !(self.shrink_tau > 0.0 && self.shrink_tau.is_finite()) {
            return Err(Error::invalid(alloc::format!(
                "shrink_tau must be positive, got {}",
                self.shrink_tau
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::invalid(alloc::format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Singular value soft-thresholding `U diag(max(σ_i − τ, 0)) Vᵀ`.
pub fn sv_shrink(x: &DenseMatrix, tau: f64) -> Result<DenseMatrix> {
    if !(tau >= 0.0) {
        return Err(Error::invalid(alloc::format!("tau must be non-negative, got {tau}")));
    }
    let decomposition = svd::svd(x)?;
    Ok(DenseMatrix::wrap(
        decomposition.map_singular_values(|s| (s - tau).max(0.0)),
    ))
}

/// Runs the baseline against a prepared projector.
///
/// Trace records carry `τ_k` in `delta` and the nuclear norm of the shrunk
/// iterate in `f_delta`. A step whose shrinkage annihilates the iterate
/// never counts as converged.
pub fn run_nnm(p: &AffineProjector, cfg: &NnmConfig, clock: &dyn Clock) -> Result<SolveReport> {
    cfg.validate()?;
    let (n1, n2) = p.shape();
    let scale = math::sqrt((n1 * n2) as f64);
    let mut x = p.min_frobenius_solution().into_inner();
    let sigma0 = svd::singular_values_raw(&x)?.first().copied().unwrap_or(0.0);
    let mut trace = Vec::new();
    let mut converged = false;

    for k in 1..=cfg.max_iters {
        let started = clock.now_ms();
        let tau = cfg.shrink_tau * sigma0 / k as f64;
        let decomposition = svd::svd_raw(&x).map_err(|e| Error::Solve {
            outer: k,
            inner: 0,
            source: alloc::boxed::Box::new(e),
        })?;
        let shrunk_sigma: Vec<f64> = decomposition.sigma.iter().map(|&s| (s - tau).max(0.0)).collect();
        let shrunk = decomposition.recompose_with(&shrunk_sigma);
        let relaxed = &x + (shrunk - &x) * cfg.step;
        let next = p.project_raw(&relaxed);
        let d = (&next - &x).norm() / scale;
        let survived = shrunk_sigma.iter().any(|&s| s > 0.0) || sigma0 == 0.0;
        x = next;
        trace.push(StageRecord {
            delta: tau,
            d,
            f_delta: shrunk_sigma.iter().sum(),
            numeric_rank: svd::svd_rank_of(&shrunk_sigma, crate::RANK_TOL),
            wall_ms: clock.now_ms() - started,
        });
        if d <= cfg.tol && survived {
            converged = true;
            break;
        }
    }

    let total = trace.len();
    Ok(SolveReport {
        solution: DenseMatrix::wrap(x),
        outer_trace: trace,
        converged,
        total_inner_steps: total,
        ill_conditioned: p.ill_conditioned(),
    })
}

/// Builds the projector for `(op, b)` and runs the baseline.
pub fn solve_nnm(op: &AffineOperator, b: &MeasurementVector, cfg: &NnmConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let projector = AffineProjector::new(op.clone(), b.clone())?;
    run_nnm(&projector, cfg, &NoClock)
}
