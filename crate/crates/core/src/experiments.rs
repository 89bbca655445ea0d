//! Seeded problem generators and the single-trial driver.
//!
//! A trial draws `X = X_L X_R` with standard normal factors, an operator
//! (dense Gaussian for affine rank minimization, a uniform entry mask for
//! matrix completion), measures `b = A(X)`, solves, and scores the result by
//! RSNR against the 60 dB recovery threshold. Everything is a pure function
//! of the trial seed; sweeps and grids built on top of this live in
//! `srf-lab`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::nnm::{self, NnmConfig};
use crate::operator::AffineOperator;
use crate::projection::AffineProjector;
use crate::random::{derive_seed, gaussian_matrix, seeded_rng};
use crate::solver::{self, Clock, SolverConfig, SrfSolver};
use crate::svd;

/// Default recovery threshold in dB.
pub const RECOVERY_THRESHOLD_DB: f64 = 60.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    /// Dense Gaussian measurements.
    Arm,
    /// Uniformly sampled entries.
    Mc,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    #[default]
    Srf,
    Nnm,
}

impl SolverKind {
    pub fn id(self) -> &'static str {
        match self {
            Self::Srf => "srf",
            Self::Nnm => "nnm",
        }
    }
}

impl ProblemKind {
    pub fn id(self) -> &'static str {
        match self {
            Self::Arm => "arm",
            Self::Mc => "mc",
        }
    }
}

/// `d_r = r (n1 + n2 − r)`, the parameter count of a rank-`r` matrix.
pub fn degrees_of_freedom(n1: usize, n2: usize, r: usize) -> Result<usize> {
    if r > n1.min(n2) {
        return Err(Error::invalid(alloc::format!(
            "rank {r} exceeds min({n1}, {n2})"
        )));
    }
    Ok(r * (n1 + n2 - r))
}

/// `X_L X_R` with i.i.d. standard normal `X_L (n1×r)` and `X_R (r×n2)`.
pub fn gen_lowrank(n1: usize, n2: usize, r: usize, seed: u64) -> Result<DenseMatrix> {
    if r == 0 || r > n1.min(n2) {
        return Err(Error::invalid(alloc::format!(
            "rank must be in 1..={}, got {r}",
            n1.min(n2)
        )));
    }
    let mut rng = seeded_rng(seed);
    let left = gaussian_matrix(n1, r, &mut rng);
    let right = gaussian_matrix(r, n2, &mut rng);
    DenseMatrix::from_inner(left * right)
}

/// Dense operator with i.i.d. standard normal entries.
pub fn gen_gaussian_operator(m: usize, n1: usize, n2: usize, seed: u64) -> Result<AffineOperator> {
    if m == 0 || m > n1 * n2 {
        return Err(Error::invalid(alloc::format!(
            "m must be in 1..={}, got {m}",
            n1 * n2
        )));
    }
    let mut rng = seeded_rng(seed);
    AffineOperator::general_dense(gaussian_matrix(m, n1 * n2, &mut rng), n1, n2)
}

/// Entry sampling over a uniformly random `m`-subset of the grid, listed in
/// column-stacking order.
pub fn gen_mask(n1: usize, n2: usize, m: usize, seed: u64) -> Result<AffineOperator> {
    let total = n1 * n2;
    if m == 0 || m > total {
        return Err(Error::invalid(alloc::format!("m must be in 1..={total}, got {m}")));
    }
    let mut rng = seeded_rng(seed);
    let mut picked: Vec<usize> = index::sample(&mut rng, total, m).into_vec();
    picked.sort_unstable();
    let omega = picked.into_iter().map(|k| (k % n1, k / n1)).collect();
    AffineOperator::entry_sampling(omega, n1, n2)
}

/// Everything needed to reproduce one randomized recovery trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub problem: ProblemKind,
    pub n1: usize,
    pub n2: usize,
    pub rank: usize,
    pub m: usize,
    pub solver: SolverKind,
    #[serde(default)]
    pub srf: SolverConfig,
    #[serde(default)]
    pub nnm: NnmConfig,
    pub seed: u64,
    #[serde(default = "default_threshold")]
    pub recovery_threshold_db: f64,
}

fn default_threshold() -> f64 {
    RECOVERY_THRESHOLD_DB
}

impl TrialSpec {
    /// A spec with default solver settings.
    pub fn new(problem: ProblemKind, n: usize, rank: usize, m: usize, solver: SolverKind, seed: u64) -> Self {
        Self {
            problem,
            n1: n,
            n2: n,
            rank,
            m,
            solver,
            srf: SolverConfig::default(),
            nnm: NnmConfig::default(),
            seed,
            recovery_threshold_db: RECOVERY_THRESHOLD_DB,
        }
    }

    pub fn degrees_of_freedom(&self) -> usize {
        self.rank * (self.n1 + self.n2).saturating_sub(self.rank)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.n2 == 0 {
            return Err(Error::EmptyShape(self.n1, self.n2));
        }
        if self.rank == 0 || self.rank > self.n1.min(self.n2) {
            return Err(Error::invalid(alloc::format!(
                "rank must be in 1..={}, got {}",
                self.n1.min(self.n2),
                self.rank
            )));
        }
        let dof = self.degrees_of_freedom();
        if self.m < dof || self.m > self.n1 * self.n2 {
            return Err(Error::invalid(alloc::format!(
                "m must be in {dof}..={} (d_r to n1*n2), got {}",
                self.n1 * self.n2,
                self.m
            )));
        }
        self.srf.validate()?;
        self.nnm.validate()
    }

    /// The same spec with another seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

/// Ground truth, operator and measurements of a trial.
#[derive(Clone, Debug)]
pub struct TrialProblem {
    pub truth: DenseMatrix,
    pub operator: AffineOperator,
    pub projector: AffineProjector,
}

/// Draws the trial's matrix and operator: the matrix from stream 0 of the
/// seed, the operator from stream 1.
pub fn generate_problem(spec: &TrialSpec) -> Result<TrialProblem> {
    spec.validate()?;
    let truth = gen_lowrank(spec.n1, spec.n2, spec.rank, derive_seed(spec.seed, 0))?;
    let op_seed = derive_seed(spec.seed, 1);
    let operator = match spec.problem {
        ProblemKind::Arm => gen_gaussian_operator(spec.m, spec.n1, spec.n2, op_seed)?,
        ProblemKind::Mc => gen_mask(spec.n1, spec.n2, spec.m, op_seed)?,
    };
    let b = operator.apply(&truth)?;
    let projector = AffineProjector::new(operator.clone(), b)?;
    Ok(TrialProblem {
        truth,
        operator,
        projector,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub spec: TrialSpec,
    /// RSNR in dB; `0` when the trial failed.
    pub rsnr_db: f64,
    pub recovered: bool,
    pub wall_ms: f64,
    pub outer_iters: usize,
    /// Why the trial failed, if it did.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// Runs one trial. Solver and generator errors become failed results
/// rather than errors; only an invalid spec is an `Err`.
pub fn run_trial(spec: &TrialSpec, clock: &dyn Clock) -> Result<TrialResult> {
    spec.validate()?;
    let started = clock.now_ms();
    let outcome = generate_problem(spec).and_then(|problem| {
        let report = match spec.solver {
            SolverKind::Srf => SrfSolver::new(&problem.projector, spec.srf.clone())?.run()?,
            SolverKind::Nnm => nnm::run_nnm(&problem.projector, &spec.nnm, &solver::NoClock)?,
        };
        let rsnr = solver::rsnr(&problem.truth, &report.solution)?;
        Ok((rsnr, report.outer_iters()))
    });
    let wall_ms = clock.now_ms() - started;
    Ok(match outcome {
        Ok((rsnr_db, outer_iters)) => TrialResult {
            spec: spec.clone(),
            rsnr_db,
            recovered: rsnr_db >= spec.recovery_threshold_db,
            wall_ms,
            outer_iters,
            failure: None,
        },
        Err(e) => TrialResult {
            spec: spec.clone(),
            rsnr_db: 0.0,
            recovered: false,
            wall_ms,
            outer_iters: 0,
            failure: Some(e.to_string()),
        },
    })
}

/// Numeric rank of a generated matrix, for sanity checks on `gen_lowrank`.
pub fn generated_rank(x: &DenseMatrix) -> Result<usize> {
    svd::numeric_rank(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::NoClock;

    #[test]
    fn degrees_of_freedom_values() {
        assert_eq!(degrees_of_freedom(30, 30, 3).unwrap(), 171);
        assert_eq!(degrees_of_freedom(7, 9, 0).unwrap(), 0);
        assert_eq!(degrees_of_freedom(100, 100, 32).unwrap(), 5376);
        assert!(degrees_of_freedom(3, 5, 4).is_err());
    }

    #[test]
    fn lowrank_has_requested_rank() {
        for (n1, n2, r) in [(6, 6, 6), (8, 5, 1), (10, 12, 3)] {
            let x = gen_lowrank(n1, n2, r, 42).unwrap();
            assert_eq!(generated_rank(&x).unwrap(), r);
        }
        assert!(gen_lowrank(4, 4, 0, 1).is_err());
        assert!(gen_lowrank(4, 4, 5, 1).is_err());
    }

    #[test]
    fn rank_one_minors_vanish() {
        let x = gen_lowrank(5, 4, 1, 3).unwrap();
        let scale = x.frobenius_norm().powi(2);
        for i in 0..4 {
            for j in 0..3 {
                let g = |a, b| x.get(a, b).unwrap();
                let minor = g(i, j) * g(i + 1, j + 1) - g(i, j + 1) * g(i + 1, j);
                assert!(minor.abs() <= 1e-9 * scale);
            }
        }
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(gen_lowrank(5, 7, 2, 9).unwrap(), gen_lowrank(5, 7, 2, 9).unwrap());
        assert_ne!(gen_lowrank(5, 7, 2, 9).unwrap(), gen_lowrank(5, 7, 2, 10).unwrap());
        assert_eq!(gen_gaussian_operator(4, 3, 3, 5).unwrap(), gen_gaussian_operator(4, 3, 3, 5).unwrap());
        assert_eq!(gen_mask(4, 4, 7, 5).unwrap(), gen_mask(4, 4, 7, 5).unwrap());
    }

    #[test]
    fn operator_generator_bounds() {
        let full = gen_gaussian_operator(9, 3, 3, 1).unwrap();
        assert_eq!(full.m(), 9);
        let single = gen_gaussian_operator(1, 3, 3, 1).unwrap();
        assert_eq!(single.m(), 1);
        assert!(gen_gaussian_operator(10, 3, 3, 1).is_err());
        assert!(gen_gaussian_operator(0, 3, 3, 1).is_err());
    }

    #[test]
    fn mask_bounds() {
        let full = gen_mask(3, 4, 12, 0).unwrap();
        assert_eq!(full.m(), 12);
        assert!(gen_mask(3, 4, 0, 0).is_err());
        assert!(gen_mask(3, 4, 13, 0).is_err());
    }

    #[test]
    fn spec_validation() {
        let ok = TrialSpec::new(ProblemKind::Arm, 10, 2, 40, SolverKind::Srf, 0);
        assert!(ok.validate().is_ok());
        let below = TrialSpec { m: 35, ..ok.clone() };
        assert!(below.validate().is_err());
        let zero_rank = TrialSpec { rank: 0, ..ok.clone() };
        assert!(zero_rank.validate().is_err());
        let too_many = TrialSpec { m: 101, ..ok };
        assert!(too_many.validate().is_err());
    }

    #[test]
    fn trial_is_reproducible() {
        let spec = TrialSpec::new(ProblemKind::Mc, 8, 1, 40, SolverKind::Srf, 77);
        let a = run_trial(&spec, &NoClock).unwrap();
        let b = run_trial(&spec, &NoClock).unwrap();
        assert_eq!(a, b);
        assert!(a.failure.is_none());
    }
}
