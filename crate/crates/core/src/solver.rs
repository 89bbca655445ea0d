//! The SRF solver.
//!
//! Starting from the minimum-Frobenius-norm feasible point `X̂₀`, the solver
//! maximizes `F_δ` over `{X : A(X) = b}` for `δ_j = c^{j−1} δ₁` with
//! `δ₁ = delta1_factor · σ_max(X̂₀)`. Each stage runs exactly `L`
//! gradient-projection steps
//!
//! ```text
//! X ← P( X + μ δ² ∇F_δ(X) )
//! ```
//!
//! warm-started from the previous stage, and the run stops once
//! `d = ‖X̂_j − X̂_{j−1}‖_F / √(n1 n2) ≤ ε`. For the Gaussian family the
//! scaled step reduces to `X − μ U diag(σ_i e^{−σ_i²/2δ²}) Vᵀ`.
//!
//! The solver does not check any uniqueness condition on the operator; see
//! [`crate::ssp`] for the diagnostics.

use alloc::boxed::Box;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::DenseMatrix;
use crate::operator::{AffineOperator, MeasurementVector};
use crate::projection::AffineProjector;
use crate::surrogate::{self, SurrogateFamily};
use crate::svd::{self, SvdTriple};

/// RSNR reported when the reconstruction is exact.
pub const RSNR_CAP_DB: f64 = 300.0;

/// Tuning parameters of the SRF solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Step constant `μ`; the stage step size is `μ δ²`.
    pub mu: f64,
    /// Decay rate of `δ`, in `(0, 1)`.
    pub c: f64,
    /// Gradient-projection steps per stage (`L`).
    pub inner_iters: usize,
    /// Stopping threshold on `d`.
    pub epsilon: f64,
    /// `δ₁` as a multiple of the largest singular value of `X̂₀`.
    pub delta1_factor: f64,
    pub max_outer_iters: usize,
    pub family: SurrogateFamily,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mu: 1.0,
            c: 0.9,
            inner_iters: 8,
            epsilon: 1e-5,
            delta1_factor: 2.0,
            max_outer_iters: 1000,
            family: SurrogateFamily::Gaussian,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::invalid(alloc::format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(Error::invalid(alloc::format!("c must be in (0,1), got {}", self.c)));
        }
        if self.inner_iters == 0 {
            return Err(Error::invalid("inner_iters must be at least 1"));
        }
        // ε = 0 is accepted: it disables the stopping rule and leaves only the cap.
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(alloc::format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            )));
        }
        if !(self.delta1_factor > 0.0 && self.delta1_factor.is_finite()) {
            return Err(Error::invalid(alloc::format!(
                "delta1_factor must be positive, got {}",
                self.delta1_factor
            )));
        }
        if self.max_outer_iters == 0 {
            return Err(Error::invalid("max_outer_iters must be at least 1"));
        }
        Ok(())
    }
}

/// One outer stage of a solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub delta: f64,
    /// `‖X̂_j − X̂_{j−1}‖_F / √(n1 n2)`.
    pub d: f64,
    /// `F_δ(X̂_j)` at this stage's `δ`.
    pub f_delta: f64,
    pub numeric_rank: usize,
    /// Wall time of the stage in milliseconds (zero without a clock).
    pub wall_ms: f64,
}

/// Result of a solve, with the full per-stage trace.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub solution: DenseMatrix,
    pub outer_trace: Vec<StageRecord>,
    /// `true` if the stopping rule fired before the iteration cap.
    pub converged: bool,
    pub total_inner_steps: usize,
    /// Set when the projector's Gram matrix is badly conditioned.
    pub ill_conditioned: bool,
}

impl SolveReport {
    pub fn outer_iters(&self) -> usize {
        self.outer_trace.len()
    }
}

/// Monotonic millisecond clock used to time stages.
pub trait Clock {
    fn now_ms(&self) -> f64;
}

/// A clock that always reads zero; the `no_std` default.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now_ms(&self) -> f64 {
        0.0
    }
}

#[cfg(feature = "std")]
/// Wall clock backed by [`std::time::Instant`].
#[derive(Clone, Copy, Debug)]
pub struct StdClock(std::time::Instant);

#[cfg(feature = "std")]
impl Default for StdClock {
    fn default() -> Self {
        Self(std::time::Instant::now())
    }
}

#[cfg(feature = "std")]
impl Clock for StdClock {
    fn now_ms(&self) -> f64 {
        self.0.elapsed().as_secs_f64() * 1e3
    }
}

/// Mutable state carried across outer stages.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub x_current: DenseMatrix,
    pub x_previous: DenseMatrix,
    pub delta: f64,
    /// Number of completed stages.
    pub outer_index: usize,
    pub trace: Vec<StageRecord>,
    /// `true` when `X̂₀ = 0`, which is already feasible and of rank zero.
    pub finished: bool,
}

/// `X̂₀ = X̃` and `δ₁ = delta1_factor · σ_max(X̃)` (or `delta1_factor` when
/// `X̃ = 0`).
pub fn initialize(p: &AffineProjector, config: &SolverConfig) -> Result<SolverState> {
    let x0 = p.min_frobenius_solution();
    let sigma_max = svd::singular_values(&x0)?.first().copied().unwrap_or(0.0);
    let finished = sigma_max == 0.0;
    let delta = if finished {
        config.delta1_factor
    } else {
        config.delta1_factor * sigma_max
    };
    Ok(SolverState {
        x_previous: x0.clone(),
        x_current: x0,
        delta,
        outer_index: 0,
        trace: Vec::new(),
        finished,
    })
}

/// Gaussian step with `μ_j = μ δ²`: `X − μ U diag(σ_i e^{−σ_i²/2δ²}) Vᵀ`.
pub fn reduced_gaussian_step(x: &DMatrix<f64>, svd: &SvdTriple, delta: f64, mu: f64) -> DMatrix<f64> {
    let inv = 1.0 / (2.0 * delta * delta);
    let weights: Vec<f64> = svd
        .sigma
        .iter()
        .map(|&s| -mu * s * math::exp(-s * s * inv))
        .collect();
    x + svd.recompose_with(&weights)
}

/// Generic step `X + μ δ² ∇F_δ(X)`, valid for every family.
pub fn scaled_gradient_step(
    x: &DMatrix<f64>,
    svd: &SvdTriple,
    delta: f64,
    mu: f64,
    family: SurrogateFamily,
) -> DMatrix<f64> {
    let step = mu * delta * delta;
    let weights: Vec<f64> = surrogate::gradient_weights(&svd.sigma, delta, family)
        .into_iter()
        .map(|t| step * t)
        .collect();
    x + svd.recompose_with(&weights)
}

fn ascent_step(x: &DMatrix<f64>, delta: f64, config: &SolverConfig) -> Result<DMatrix<f64>> {
    let decomposition = svd::svd_raw(x)?;
    Ok(match config.family {
        SurrogateFamily::Gaussian => reduced_gaussian_step(x, &decomposition, delta, config.mu),
        family => scaled_gradient_step(x, &decomposition, delta, config.mu, family),
    })
}

fn inner_loop_raw(
    x: &DMatrix<f64>,
    delta: f64,
    p: &AffineProjector,
    config: &SolverConfig,
    outer: usize,
) -> Result<DMatrix<f64>> {
    let mut current = x.clone();
    for inner in 0..config.inner_iters {
        let stepped = ascent_step(&current, delta, config).map_err(|e| Error::Solve {
            outer,
            inner,
            source: Box::new(e),
        })?;
        current = p.project_raw(&stepped);
    }
    Ok(current)
}

/// Exactly `config.inner_iters` gradient-projection steps at a fixed `δ`.
pub fn inner_gp_loop(
    x: &DenseMatrix,
    delta: f64,
    p: &AffineProjector,
    config: &SolverConfig,
) -> Result<DenseMatrix> {
    x.ensure_shape(p.shape())?;
    if !(delta > 0.0) {
        return Err(Error::invalid("delta must be positive"));
    }
    Ok(DenseMatrix::wrap(inner_loop_raw(x.inner(), delta, p, config, 0)?))
}

fn stage_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let n = (a.nrows() * a.ncols()) as f64;
    (a - b).norm() / math::sqrt(n)
}

/// SRF bound to one projector.
pub struct SrfSolver<'a> {
    projector: &'a AffineProjector,
    config: SolverConfig,
}

impl<'a> SrfSolver<'a> {
    pub fn new(projector: &'a AffineProjector, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { projector, config })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn run(&self) -> Result<SolveReport> {
        self.run_with(&NoClock, &mut |_, _| {})
    }

    /// Runs the solve, timing stages with `clock` and handing every completed
    /// stage and its iterate to `observer`.
    pub fn run_with(
        &self,
        clock: &dyn Clock,
        observer: &mut dyn FnMut(&StageRecord, &DenseMatrix),
    ) -> Result<SolveReport> {
        let p = self.projector;
        let config = &self.config;
        let mut state = initialize(p, config)?;
        let mut total_inner_steps = 0;
        let mut converged = state.finished;

        while !state.finished {
            let started = clock.now_ms();
            let stage = state.outer_index + 1;
            let next = inner_loop_raw(state.x_current.inner(), state.delta, p, config, stage)?;
            total_inner_steps += config.inner_iters;

            let d = stage_distance(&next, state.x_current.inner());
            let sigma = svd::singular_values_raw(&next).map_err(|e| Error::Solve {
                outer: stage,
                inner: config.inner_iters,
                source: Box::new(e),
            })?;
            let next = DenseMatrix::wrap(next);
            let record = StageRecord {
                delta: state.delta,
                d,
                f_delta: surrogate::big_f_of_sigma(&sigma, state.delta, config.family),
                numeric_rank: svd::svd_rank_of(&sigma, crate::RANK_TOL),
                wall_ms: clock.now_ms() - started,
            };
            observer(&record, &next);
            state.trace.push(record);
            state.x_previous = core::mem::replace(&mut state.x_current, next);
            state.outer_index = stage;

            if d <= config.epsilon {
                converged = true;
                state.finished = true;
            } else if stage >= config.max_outer_iters {
                state.finished = true;
            } else {
                state.delta *= config.c;
            }
        }

        Ok(SolveReport {
            solution: state.x_current,
            outer_trace: state.trace,
            converged,
            total_inner_steps,
            ill_conditioned: p.ill_conditioned(),
        })
    }
}

/// Builds the projector for `(op, b)` and runs SRF.
pub fn solve(op: &AffineOperator, b: &MeasurementVector, config: &SolverConfig) -> Result<SolveReport> {
    config.validate()?;
    let projector = AffineProjector::new(op.clone(), b.clone())?;
    SrfSolver::new(&projector, config.clone())?.run()
}

/// Reconstruction SNR `20 log₁₀(‖X‖_F / ‖X − X̂‖_F)` in dB, capped at
/// [`RSNR_CAP_DB`].
pub fn rsnr(x_true: &DenseMatrix, x_hat: &DenseMatrix) -> Result<f64> {
    x_hat.ensure_shape(x_true.shape())?;
    let signal = x_true.frobenius_norm();
    if signal == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let error = (x_true.inner() - x_hat.inner()).norm();
    if error == 0.0 {
        return Ok(RSNR_CAP_DB);
    }
    Ok((20.0 * math::log10(signal / error)).min(RSNR_CAP_DB))
}
