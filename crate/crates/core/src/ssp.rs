//! Spherical-section ratios and the recovery inequalities built on them.
//!
//! Every check works with the ratio `Δ_Z = ‖Z‖_*² / ‖Z‖_F²` of the element
//! under test rather than the operator constant `Δ(A)`, which would need a
//! global non-convex minimization. [`estimate_ssp`] only ever produces an
//! upper bound on `Δ(A)`.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::DenseMatrix;
use crate::projection::AffineProjector;
use crate::surrogate::{self, SurrogateFamily};
use crate::svd;

/// Slack used by all inequality checks.
pub const CHECK_SLACK: f64 = 1e-10;

/// Smallest ratio found over sampled null-space elements.
#[derive(Clone, Debug, PartialEq)]
pub struct SspEstimate {
    /// Upper bound on `Δ(A)`.
    pub delta_upper: f64,
    /// Unit-norm null-space element attaining `delta_upper`.
    pub witness: DenseMatrix,
    pub samples_used: usize,
}

fn ratio_of(sigma: &[f64]) -> Result<f64> {
    let nuclear: f64 = sigma.iter().sum();
    let fro2: f64 = sigma.iter().map(|s| s * s).sum();
    if !(fro2 > 0.0) {
        return Err(Error::ZeroMatrix);
    }
    Ok(nuclear * nuclear / fro2)
}

/// `‖Z‖_*² / ‖Z‖_F²`.
pub fn spherical_ratio(z: &DenseMatrix) -> Result<f64> {
    if z.is_zero() {
        return Err(Error::ZeroMatrix);
    }
    ratio_of(&svd::singular_values(z)?)
}

/// Gradient of the ratio at a unit-norm `z` (`2N (U_+ V_+ᵀ − N z)`),
/// restricted to the nonzero singular directions.
fn ratio_gradient(z: &DMatrix<f64>) -> Result<(f64, DMatrix<f64>)> {
    let decomposition = svd::svd_raw(z)?;
    let ratio = ratio_of(&decomposition.sigma)?;
    let nuclear: f64 = decomposition.sigma.iter().sum();
    let cutoff = crate::RANK_TOL * decomposition.sigma_max();
    let ones: Vec<f64> = decomposition
        .sigma
        .iter()
        .map(|&s| if s > cutoff { 1.0 } else { 0.0 })
        .collect();
    let polar = decomposition.recompose_with(&ones);
    Ok((ratio, (polar - z * nuclear) * (2.0 * nuclear)))
}

fn normalized(z: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let norm = z.norm();
    if !(norm > 0.0) {
        return Err(Error::ZeroMatrix);
    }
    Ok(z / norm)
}

/// Backtracking projected descent on the ratio inside `null(A)`.
fn refine(p: &AffineProjector, start: DMatrix<f64>, steps: usize) -> Result<(f64, DMatrix<f64>)> {
    let mut z = normalized(start)?;
    let (mut ratio, mut grad) = ratio_gradient(&z)?;
    let mut eta = 0.25;
    for _ in 0..steps {
        let direction = p.remove_row_space(&grad);
        let len = direction.norm();
        if !(len > 0.0) {
            break;
        }
        let mut improved = false;
        for _ in 0..30 {
            let trial = p.remove_row_space(&(&z - &direction * (eta / len)));
            let Ok(trial) = normalized(trial) else {
                eta *= 0.5;
                continue;
            };
            let (trial_ratio, trial_grad) = ratio_gradient(&trial)?;
            if trial_ratio < ratio {
                z = trial;
                ratio = trial_ratio;
                grad = trial_grad;
                eta = (eta * 1.5).min(1.0);
                improved = true;
                break;
            }
            eta *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Ok((ratio, z))
}

/// Samples `num_samples` null-space elements (sample `i` seeded with
/// `seed + i`), refines each for `descent_steps` steps and keeps the
/// smallest ratio.
pub fn estimate_ssp(
    p: &AffineProjector,
    num_samples: usize,
    descent_steps: usize,
    seed: u64,
) -> Result<SspEstimate> {
    if num_samples == 0 {
        return Err(Error::invalid("num_samples must be at least 1"));
    }
    let mut best: Option<(f64, DMatrix<f64>)> = None;
    for i in 0..num_samples {
        let sample = p.null_space_sample(seed.wrapping_add(i as u64))?;
        let (ratio, z) = refine(p, sample.into_inner(), descent_steps)?;
        if best.as_ref().is_none_or(|(r, _)| ratio < *r) {
            best = Some((ratio, z));
        }
    }
    let (_, witness) = best.expect("at least one sample");
    let witness = DenseMatrix::wrap(witness);
    // Recompute from the stored witness so the two agree exactly.
    let delta_upper = spherical_ratio(&witness)?;
    Ok(SspEstimate {
        delta_upper,
        witness,
        samples_used: num_samples,
    })
}

/// `r0 < Δ/2`.
pub fn check_uniqueness_condition(r0: usize, delta: f64) -> Result<bool> {
    if !(delta >= 1.0) || !delta.is_finite() {
        return Err(Error::invalid(alloc::format!("delta must be at least 1, got {delta}")));
    }
    Ok((r0 as f64) < delta / 2.0)
}

/// Outcome of an inequality `lhs ≥ rhs` (up to [`CHECK_SLACK`]).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl InequalityCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            holds: lhs >= rhs - CHECK_SLACK,
        }
    }
}

/// Rank versus ratio: `rank(Z) ≥ Δ_Z`, hence `rank(Z) ≥ ⌈Δ_Z⌉`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankCheck {
    pub rank: usize,
    pub delta_z: f64,
    pub holds: bool,
}

pub fn check_rank_lower_bound(z: &DenseMatrix) -> Result<RankCheck> {
    if z.is_zero() {
        return Err(Error::ZeroMatrix);
    }
    let sigma = svd::singular_values(z)?;
    let delta_z = ratio_of(&sigma)?;
    let rank = svd::svd_rank_of(&sigma, crate::RANK_TOL);
    // Singular values dropped by the rank cutoff can lift Δ_Z a hair above
    // the numeric rank, hence the looser nudge here.
    let relaxed = delta_z - 1e-9;
    let holds = rank as f64 >= relaxed && rank as f64 >= math::ceil(relaxed);
    Ok(RankCheck { rank, delta_z, holds })
}

/// `Σ_{i∈I} σ_i / ‖Z‖_F ≥ √Δ_Z − √(n − |I|)`.
///
/// `index_set` holds zero-based positions into the descending singular
/// values; repeats and out-of-range positions are rejected.
pub fn check_lemma2(z: &DenseMatrix, index_set: &[usize]) -> Result<InequalityCheck> {
    if z.is_zero() {
        return Err(Error::ZeroMatrix);
    }
    let sigma = svd::singular_values(z)?;
    let n = sigma.len();
    let mut seen = alloc::vec![false; n];
    for &i in index_set {
        if i >= n {
            return Err(Error::invalid(alloc::format!("index {i} out of range for {n} singular values")));
        }
        if core::mem::replace(&mut seen[i], true) {
            return Err(Error::invalid(alloc::format!("index {i} repeated")));
        }
    }
    let fro = math::sqrt(sigma.iter().map(|s| s * s).sum());
    let delta_z = ratio_of(&sigma)?;
    let lhs = index_set.iter().map(|&i| sigma[i]).sum::<f64>() / fro;
    let rhs = math::sqrt(delta_z) - math::sqrt((n - index_set.len()) as f64);
    Ok(InequalityCheck::new(lhs, rhs))
}

/// Why a bound could not be claimed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "reason")]
pub enum NotApplicable {
    /// More than `⌈Δ−1⌉` singular values exceed `α`.
    HypothesisFailed { exceeding: usize, allowed: usize },
    /// `√Δ − √⌈Δ−1⌉ ≤ 0`.
    NonPositiveDenominator,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum BoundCheck {
    Applicable { bound: f64, norm: f64, holds: bool },
    NotApplicable(NotApplicable),
}

impl BoundCheck {
    /// `false` only for an applicable bound that is violated.
    pub fn passes(&self) -> bool {
        !matches!(self, Self::Applicable { holds: false, .. })
    }

    pub fn is_applicable(&self) -> bool {
        matches!(self, Self::Applicable { .. })
    }
}

/// `⌈Δ − 1⌉` with the boundary nudge.
pub fn ceil_term(delta: f64) -> usize {
    let k = math::ceil_nudged(delta - 1.0);
    if k > 0.0 {
        k as usize
    } else {
        0
    }
}

fn ssp_denominator(delta: f64) -> Option<f64> {
    let den = math::sqrt(delta) - math::sqrt(ceil_term(delta) as f64);
    (den > 0.0).then_some(den)
}

fn bound_from_sigma(sigma: &[f64], alpha: f64, delta_z: f64) -> BoundCheck {
    let allowed = ceil_term(delta_z);
    let exceeding = sigma.iter().filter(|&&s| s > alpha).count();
    if exceeding > allowed {
        return BoundCheck::NotApplicable(NotApplicable::HypothesisFailed { exceeding, allowed });
    }
    let Some(den) = ssp_denominator(delta_z) else {
        return BoundCheck::NotApplicable(NotApplicable::NonPositiveDenominator);
    };
    let bound = sigma.len() as f64 * alpha / den;
    let norm = math::sqrt(sigma.iter().map(|s| s * s).sum());
    BoundCheck::Applicable {
        bound,
        norm,
        holds: norm <= bound + CHECK_SLACK,
    }
}

/// `‖Z‖_F ≤ n α / (√Δ_Z − √⌈Δ_Z−1⌉)`, provided at most `⌈Δ_Z−1⌉` singular
/// values exceed `α`.
pub fn corollary3_bound(z: &DenseMatrix, alpha: f64) -> Result<BoundCheck> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::invalid(alloc::format!("alpha must be non-negative, got {alpha}")));
    }
    if z.is_zero() {
        return Err(Error::ZeroMatrix);
    }
    let sigma = svd::singular_values(z)?;
    let delta_z = ratio_of(&sigma)?;
    Ok(bound_from_sigma(&sigma, alpha, delta_z))
}

/// `n δ √(2 ln n) / (√Δ − √⌈Δ−1⌉)`; `None` when the denominator is not
/// positive.
pub fn corollary4_error_bound(n: usize, delta_param: f64, ssp_delta: f64) -> Result<Option<f64>> {
    if n < 2 {
        return Err(Error::invalid(alloc::format!("n must be at least 2, got {n}")));
    }
    if !(delta_param >= 0.0) || !delta_param.is_finite() {
        return Err(Error::invalid(alloc::format!("delta must be non-negative, got {delta_param}")));
    }
    if !(ssp_delta >= 1.0) || !ssp_delta.is_finite() {
        return Err(Error::invalid(alloc::format!("ssp delta must be at least 1, got {ssp_delta}")));
    }
    let nf = n as f64;
    Ok(ssp_denominator(ssp_delta).map(|den| nf * delta_param * math::sqrt(2.0 * math::ln(nf)) / den))
}

/// Every intermediate quantity of the post-solve error certificate for
/// `Z = X₀ − X̂`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    pub n: usize,
    pub delta: f64,
    pub family: SurrogateFamily,
    /// Numeric rank of `X₀`.
    pub r0: usize,
    pub error_norm: f64,
    /// `Δ_Z`; absent when `X̂ = X₀`.
    pub delta_z: Option<f64>,
    /// `⌈Δ_Z − 1⌉`.
    pub ceil_term: Option<usize>,
    pub f_x0: f64,
    pub f_x_hat: f64,
    /// `F_δ(X̂) − F_δ(X₀)`.
    pub gain: f64,
    pub alpha: f64,
    /// `σ_{r0+1}(X₀)`, zero when `r0 = n`.
    pub sigma_tail: f64,
    /// `F_δ(X₀) ≥ n − r0`.
    pub lower_bound_holds: bool,
    /// `r0 < Δ_Z / 2`.
    pub uniqueness: bool,
    /// `F_δ(X̂) ≥ n − r0`.
    pub premise: bool,
    /// `F_δ(X̂) ≥ n − (⌈Δ_Z−1⌉ − r0)`.
    pub hypothesis: bool,
    /// `premise ∧ uniqueness ⇒ hypothesis`.
    pub implication_holds: bool,
    /// Singular values of `X̂` above `α`.
    pub count_above_alpha: usize,
    /// `count_above_alpha ≤ ⌈Δ_Z−1⌉ − r0`, when the hypothesis holds.
    pub count_holds: Option<bool>,
    /// Singular values of `Z` above `α + σ_{r0+1}(X₀)`.
    pub z_count: usize,
    /// `z_count ≤ ⌈Δ_Z−1⌉`, when the hypothesis holds.
    pub z_count_holds: Option<bool>,
    /// `n (α + σ_{r0+1}(X₀)) / (√Δ_Z − √⌈Δ_Z−1⌉)`, when the hypothesis holds.
    pub bound: Option<f64>,
    pub bound_holds: Option<bool>,
}

impl ChainDiagnostics {
    pub fn all_pass(&self) -> bool {
        self.lower_bound_holds
            && self.implication_holds
            && self.count_holds != Some(false)
            && self.z_count_holds != Some(false)
            && self.bound_holds != Some(false)
    }
}

/// Checks the chain from `F_δ(X̂)` to the error bound on `‖X₀ − X̂‖_F`.
///
/// The gate is the hypothesis on `F_δ(X̂)`. When it holds, at most
/// `⌈Δ_Z−1⌉ − r0` singular values of `X̂` exceed `α_δ`, so by Weyl's
/// inequality at most `⌈Δ_Z−1⌉` singular values of `Z` exceed
/// `α_δ + σ_{r0+1}(X₀)`, and the norm bound follows. The `σ_{r0+1}(X₀)`
/// term accounts for `X₀` being only numerically of rank `r0`.
pub fn check_lemma3_chain(
    x0: &DenseMatrix,
    x_hat: &DenseMatrix,
    delta: f64,
    family: SurrogateFamily,
) -> Result<ChainDiagnostics> {
    x_hat.ensure_shape(x0.shape())?;
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::invalid(alloc::format!("delta must be positive, got {delta}")));
    }
    let n = x0.min_dim();
    let sigma0 = svd::singular_values(x0)?;
    let sigma_hat = svd::singular_values(x_hat)?;
    let r0 = svd::svd_rank_of(&sigma0, crate::RANK_TOL);
    let sigma_tail = sigma0.get(r0).copied().unwrap_or(0.0);
    let f_x0 = surrogate::big_f_of_sigma(&sigma0, delta, family);
    let f_x_hat = surrogate::big_f_of_sigma(&sigma_hat, delta, family);
    let alpha = if n >= 2 {
        surrogate::alpha_delta(family, delta, n)?.value()
    } else {
        0.0
    };
    let nf = n as f64;
    let lower_bound_holds = f_x0 >= nf - r0 as f64 - CHECK_SLACK;
    let premise = f_x_hat >= nf - r0 as f64 - CHECK_SLACK;
    let count_above_alpha = sigma_hat.iter().filter(|&&s| s > alpha).count();

    let z = x0 - x_hat;
    let mut diag = ChainDiagnostics {
        n,
        delta,
        family,
        r0,
        error_norm: z.frobenius_norm(),
        delta_z: None,
        ceil_term: None,
        f_x0,
        f_x_hat,
        gain: f_x_hat - f_x0,
        alpha,
        sigma_tail,
        lower_bound_holds,
        uniqueness: true,
        premise,
        hypothesis: true,
        implication_holds: true,
        count_above_alpha,
        count_holds: None,
        z_count: 0,
        z_count_holds: None,
        bound: None,
        bound_holds: None,
    };
    if z.is_zero() {
        return Ok(diag);
    }

    let sigma_z = svd::singular_values(&z)?;
    let delta_z = ratio_of(&sigma_z)?;
    let k = ceil_term(delta_z);
    diag.delta_z = Some(delta_z);
    diag.ceil_term = Some(k);
    diag.uniqueness = check_uniqueness_condition(r0, delta_z.max(1.0))?;
    diag.hypothesis = k >= r0 && f_x_hat >= nf - (k - r0) as f64 - CHECK_SLACK;
    diag.implication_holds = !(premise && diag.uniqueness) || diag.hypothesis;
    let alpha_z = alpha + sigma_tail;
    diag.z_count = sigma_z.iter().filter(|&&s| s > alpha_z).count();
    if diag.hypothesis {
        diag.count_holds = Some(count_above_alpha + r0 <= k);
        diag.z_count_holds = Some(diag.z_count <= k);
        if let BoundCheck::Applicable { bound, holds, .. } = bound_from_sigma(&sigma_z, alpha_z, delta_z) {
            diag.bound = Some(bound);
            diag.bound_holds = Some(holds);
        }
    }
    Ok(diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{AffineOperator, MeasurementVector};

    fn diag3(a: f64, b: f64, c: f64) -> DenseMatrix {
        DenseMatrix::from_row_slice(3, 3, &[a, 0.0, 0.0, 0.0, b, 0.0, 0.0, 0.0, c]).unwrap()
    }

    #[test]
    fn ratio_examples() {
        let rank1 = DenseMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]).unwrap();
        assert!((spherical_ratio(&rank1).unwrap() - 1.0).abs() < 1e-12);
        let id = DenseMatrix::identity(5).unwrap();
        assert!((spherical_ratio(&id).unwrap() - 5.0).abs() < 1e-12);
        assert!((spherical_ratio(&diag3(1.0, 1.0, 0.0)).unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(
            spherical_ratio(&DenseMatrix::zeros(2, 2).unwrap()),
            Err(Error::ZeroMatrix)
        ));
    }

    #[test]
    fn uniqueness_examples() {
        assert!(check_uniqueness_condition(1, 3.0).unwrap());
        assert!(!check_uniqueness_condition(2, 4.0).unwrap());
        assert!(check_uniqueness_condition(0, 1.0).unwrap());
        assert!(check_uniqueness_condition(0, 0.5).is_err());
    }

    #[test]
    fn lemma2_examples() {
        let z = diag3(1.0, 1.0, 0.0);
        let check = check_lemma2(&z, &[0]).unwrap();
        assert!((check.lhs - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!(check.rhs.abs() < 1e-12);
        assert!(check.holds);

        let z = diag3(3.0, 2.0, 0.5);
        let full = check_lemma2(&z, &[0, 1, 2]).unwrap();
        assert!((full.lhs - full.rhs).abs() < 1e-12);
        assert!(full.holds);

        assert!(check_lemma2(&z, &[3]).is_err());
        assert!(check_lemma2(&z, &[1, 1]).is_err());
    }

    #[test]
    fn corollary3_examples() {
        let z = diag3(0.3, 0.2, 0.1);
        let check = corollary3_bound(&z, 0.3).unwrap();
        assert!(check.is_applicable() && check.passes());

        // Δ_Z = 3 for equal singular values, so ⌈Δ−1⌉ = 2 < 3 exceeding.
        let z = diag3(1.0, 1.0, 1.0);
        assert_eq!(
            corollary3_bound(&z, 0.5).unwrap(),
            BoundCheck::NotApplicable(NotApplicable::HypothesisFailed { exceeding: 3, allowed: 2 })
        );
    }

    #[test]
    fn corollary4_examples() {
        assert_eq!(corollary4_error_bound(2, 0.0, 1.7).unwrap(), Some(0.0));
        let expected = 4.0 * (2.0 * 4f64.ln()).sqrt() / (2.5f64.sqrt() - 2f64.sqrt());
        let value = corollary4_error_bound(4, 1.0, 2.5).unwrap().unwrap();
        assert!((value - expected).abs() < 1e-12);
        assert!((value - 39.90071114212087).abs() < 1e-9);
        let doubled = corollary4_error_bound(4, 2.0, 2.5).unwrap().unwrap();
        assert!((doubled - 2.0 * value).abs() < 1e-12);
        assert!(corollary4_error_bound(1, 1.0, 2.5).is_err());
    }

    #[test]
    fn ceil_term_nudges_integers() {
        assert_eq!(ceil_term(3.0), 2);
        assert_eq!(ceil_term(3.0 + 1e-14), 2);
        assert_eq!(ceil_term(2.5), 2);
        assert_eq!(ceil_term(1.0), 0);
    }

    #[test]
    fn chain_identical_inputs_pass() {
        let x = DenseMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]).unwrap();
        let diag = check_lemma3_chain(&x, &x, 0.5, SurrogateFamily::Gaussian).unwrap();
        assert!(diag.all_pass());
        assert_eq!(diag.error_norm, 0.0);
        assert_eq!(diag.r0, 1);
    }

    #[test]
    fn chain_gate_blocks_far_estimate() {
        let x0 = diag3(1.0, 0.0, 0.0);
        let x_hat = diag3(1.0, 5.0, 5.0);
        let diag = check_lemma3_chain(&x0, &x_hat, 0.1, SurrogateFamily::Gaussian).unwrap();
        assert!(!diag.hypothesis);
        assert!(diag.bound.is_none());
        assert!(diag.all_pass());
    }

    #[test]
    fn one_free_entry_gives_unit_ratio() {
        let mut omega = Vec::new();
        for j in 0..3 {
            for i in 0..3 {
                if (i, j) != (1, 2) {
                    omega.push((i, j));
                }
            }
        }
        let op = AffineOperator::entry_sampling(omega, 3, 3).unwrap();
        let p = AffineProjector::new(op, MeasurementVector::zeros(8)).unwrap();
        let est = estimate_ssp(&p, 3, 5, 7).unwrap();
        assert!((est.delta_upper - 1.0).abs() < 1e-12);
        assert_eq!(est.samples_used, 3);
    }
}
