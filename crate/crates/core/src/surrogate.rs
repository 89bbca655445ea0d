//! Delta-approximating function families and the smoothed rank functional.
//!
//! A family is a one-dimensional `f: ℝ → [0, 1]` with `f(0) = 1`, symmetric,
//! non-increasing on `[0, ∞)`, strictly concave at the mode and decaying to
//! zero. Scaling gives `f_δ(x) = f(x / δ)`, which tends to the Kronecker delta
//! as `δ → 0`. Applied to singular values it yields
//!
//! ```text
//! F_δ(X) = Σ_i f_δ(σ_i(X)),      rank(X) ≈ n − F_δ(X)
//! ```
//!
//! whose gradient is `U diag(θ) Vᵀ` with `θ_i = f'(σ_i / δ) / δ`.

use core::fmt;
use core::str::FromStr;

use alloc::vec::Vec;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::DenseMatrix;
use crate::svd::{self, SvdTriple};

/// The unscaled profile of a delta-approximating family.
///
/// Implement this to run a new compiled-in family through
/// [`validate_family`].
pub trait DeltaProfile {
    /// `f(x)`.
    fn value(&self, x: f64) -> f64;

    /// `f'(x)`.
    fn derivative(&self, x: f64) -> f64;

    /// A radius beyond which `f(x) < 1e-6`.
    fn decay_horizon(&self) -> f64;

    /// The non-negative `x` with `f(x) = y`, for `y ∈ (0, 1]`.
    fn inverse_on_unit(&self, y: f64) -> f64 {
        bisect_inverse(self, y)
    }
}

/// Solves `f(x) = y` for `x ≥ 0` by bisection on `[0, decay_horizon]`,
/// doubling the bracket when `y` is below `f(horizon)`.
pub fn bisect_inverse<P: DeltaProfile + ?Sized>(profile: &P, y: f64) -> f64 {
    if y >= 1.0 {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = profile.decay_horizon();
    while profile.value(hi) > y {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if profile.value(mid) > y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The built-in families.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateFamily {
    /// `exp(−x²/2)`.
    #[default]
    Gaussian,
    /// `1 − tanh(x²/2)`.
    #[serde(alias = "tanh_family")]
    Tanh,
    /// `1 / (1 + x²)`, i.e. `δ² / (x² + δ²)` after scaling.
    Rational,
}

impl SurrogateFamily {
    pub const ALL: [SurrogateFamily; 3] = [Self::Gaussian, Self::Tanh, Self::Rational];

    pub fn id(self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::Tanh => "tanh",
            Self::Rational => "rational",
        }
    }

    /// `f_δ(x) = f(x / δ)` without argument checks.
    #[inline]
    pub fn scaled(self, x: f64, delta: f64) -> f64 {
        self.value(x / delta)
    }
}

impl fmt::Display for SurrogateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for SurrogateFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "tanh" | "tanh_family" => Ok(Self::Tanh),
            "rational" => Ok(Self::Rational),
            other => Err(Error::invalid(alloc::format!(
                "unknown family {other:?}; expected gaussian, tanh or rational"
            ))),
        }
    }
}

impl DeltaProfile for SurrogateFamily {
    #[inline]
    fn value(&self, x: f64) -> f64 {
        let t = x * x;
        match self {
            Self::Gaussian => math::exp(-0.5 * t),
            Self::Tanh => 1.0 - math::tanh(0.5 * t),
            Self::Rational => 1.0 / (1.0 + t),
        }
    }

    #[inline]
    fn derivative(&self, x: f64) -> f64 {
        let t = x * x;
        match self {
            Self::Gaussian => -x * math::exp(-0.5 * t),
            Self::Tanh => {
                let c = math::cosh(0.5 * t);
                if c.is_finite() {
                    -x / (c * c)
                } else {
                    0.0
                }
            }
            Self::Rational => {
                let d = 1.0 + t;
                -2.0 * x / (d * d)
            }
        }
    }

    fn decay_horizon(&self) -> f64 {
        match self {
            Self::Gaussian => 6.0,
            Self::Tanh => 5.0,
            Self::Rational => 1001.0,
        }
    }

    fn inverse_on_unit(&self, y: f64) -> f64 {
        if y >= 1.0 {
            return 0.0;
        }
        match self {
            Self::Gaussian => math::sqrt(-2.0 * math::ln(y)),
            Self::Rational => math::sqrt(1.0 / y - 1.0),
            Self::Tanh => bisect_inverse(self, y),
        }
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::invalid(alloc::format!(
            "delta must be positive and finite, got {delta}"
        )));
    }
    Ok(())
}

/// `f_δ(x)` for a built-in family.
pub fn f_eval(family: SurrogateFamily, x: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(family.scaled(x, delta))
}

/// `F_δ` evaluated on a list of singular values.
pub fn big_f_of_sigma(sigma: &[f64], delta: f64, family: SurrogateFamily) -> f64 {
    sigma.iter().map(|&s| family.scaled(s, delta)).sum()
}

/// `F_δ(X) = Σ_{i ≤ min(n1,n2)} f_δ(σ_i(X))`, a value in `[0, n]`.
pub fn big_f(x: &DenseMatrix, delta: f64, family: SurrogateFamily) -> Result<f64> {
    check_delta(delta)?;
    let sigma = svd::singular_values(x)?;
    Ok(big_f_of_sigma(&sigma, delta, family))
}

/// Gradient weights `θ_i = f'(σ_i / δ) / δ`. Zero singular values give zero
/// weight since the mode of `f` is flat.
pub fn gradient_weights(sigma: &[f64], delta: f64, family: SurrogateFamily) -> Vec<f64> {
    sigma
        .iter()
        .map(|&s| family.derivative(s / delta) / delta)
        .collect()
}

pub(crate) fn grad_from_svd(svd: &SvdTriple, delta: f64, family: SurrogateFamily) -> DMatrix<f64> {
    svd.recompose_with(&gradient_weights(&svd.sigma, delta, family))
}

/// `∇F_δ(X) = U diag(θ) Vᵀ`.
pub fn grad_big_f(x: &DenseMatrix, delta: f64, family: SurrogateFamily) -> Result<DenseMatrix> {
    check_delta(delta)?;
    let decomposition = svd::svd(x)?;
    Ok(DenseMatrix::wrap(grad_from_svd(&decomposition, delta, family)))
}

/// `α_δ = |f_δ⁻¹(1/n)|`: the singular-value level at which a single term of
/// `F_δ` drops to `1/n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlphaDelta(f64);

impl AlphaDelta {
    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn alpha_delta(family: SurrogateFamily, delta: f64, n: usize) -> Result<AlphaDelta> {
    check_delta(delta)?;
    if n < 2 {
        return Err(Error::invalid(alloc::format!("alpha_delta needs n >= 2, got {n}")));
    }
    Ok(AlphaDelta(delta * family.inverse_on_unit(1.0 / n as f64)))
}

/// Outcome of [`validate_family`], one flag per clause.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FamilyReport {
    /// `f(x) = f(−x)` on the grid.
    pub symmetric: bool,
    /// Non-increasing on `[0, ∞)` along the grid.
    pub unimodal: bool,
    /// `f(0) = 1` and `f(x) < 1` away from zero.
    pub unique_mode: bool,
    /// Negative second central difference at zero.
    pub concave_at_mode: bool,
    /// `f(x) < 1e-6` beyond the decay horizon.
    pub decays: bool,
    /// All sampled values in `[0, 1]`.
    pub in_range: bool,
}

impl FamilyReport {
    pub fn all_pass(&self) -> bool {
        self.symmetric
            && self.unimodal
            && self.unique_mode
            && self.concave_at_mode
            && self.decays
            && self.in_range
    }
}

const GRID_POINTS: usize = 10_000;
const GRID_RADIUS: f64 = 50.0;

/// Numerically checks each clause of the family contract on a deterministic
/// grid over `[−50, 50]`, plus a decay probe past the family's horizon.
pub fn validate_family<P: DeltaProfile + ?Sized>(profile: &P) -> FamilyReport {
    let step = 2.0 * GRID_RADIUS / (GRID_POINTS - 1) as f64;
    let grid = (0..GRID_POINTS).map(|k| -GRID_RADIUS + step * k as f64);

    let mut symmetric = true;
    let mut in_range = true;
    let mut below_one = true;
    for x in grid {
        let fx = profile.value(x);
        if !(0.0..=1.0).contains(&fx) || !fx.is_finite() {
            in_range = false;
        }
        if (fx - profile.value(-x)).abs() > 1e-14 {
            symmetric = false;
        }
        if x.abs() > 1e-9 && !(fx < 1.0) {
            below_one = false;
        }
    }
    // Points just off zero are where "strictly below one" is hardest to meet.
    for &x in &[1e-3, 1e-2, 0.1] {
        if !(profile.value(x) < 1.0) {
            below_one = false;
        }
    }

    let half = GRID_POINTS / 2;
    let half_step = GRID_RADIUS / half as f64;
    let mut unimodal = true;
    let mut prev = profile.value(0.0);
    for k in 1..=half {
        let fx = profile.value(half_step * k as f64);
        if fx > prev {
            unimodal = false;
        }
        prev = fx;
    }

    let h = 1e-3;
    let second_difference = (profile.value(h) - 2.0 * profile.value(0.0) + profile.value(-h)) / (h * h);

    let horizon = profile.decay_horizon();
    let decays = horizon.is_finite()
        && (0..=100).all(|k| {
            let x = horizon * (1.0 + k as f64);
            profile.value(x) < 1e-6 && profile.value(-x) < 1e-6
        });

    FamilyReport {
        symmetric,
        unimodal,
        unique_mode: profile.value(0.0) == 1.0 && below_one,
        concave_at_mode: second_difference < 0.0,
        decays,
        in_range,
    }
}
