//! Thin singular value decomposition.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::RANK_TOL;

const SVD_MAX_ITERS: usize = 10_000;

/// Economy SVD `X = U diag(σ) Vᵀ` with `n = min(rows, cols)` components,
/// singular values sorted in descending order.
#[derive(Clone, Debug)]
pub struct SvdTriple {
    /// `rows × n`, orthonormal columns.
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    /// `cols × n`, orthonormal columns.
    pub v: DMatrix<f64>,
}

impl SvdTriple {
    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma.first().copied().unwrap_or(0.0)
    }

    /// Number of singular values above `tol * σ_max`.
    pub fn numeric_rank_with(&self, tol: f64) -> usize {
        let cutoff = tol * self.sigma_max();
        self.sigma.iter().filter(|&&s| s > cutoff && s > 0.0).count()
    }

    pub fn numeric_rank(&self) -> usize {
        self.numeric_rank_with(RANK_TOL)
    }

    /// `U diag(weights) Vᵀ` for per-component weights.
    pub fn recompose_with(&self, weights: &[f64]) -> DMatrix<f64> {
        debug_assert_eq!(weights.len(), self.sigma.len());
        let mut scaled_u = self.u.clone();
        for (k, mut col) in scaled_u.column_iter_mut().enumerate() {
            col *= weights[k];
        }
        scaled_u * self.v.transpose()
    }

    /// Applies `g` to every singular value and recomposes: `U diag(g(σ_i)) Vᵀ`.
    pub fn map_singular_values(&self, mut g: impl FnMut(f64) -> f64) -> DMatrix<f64> {
        let weights: Vec<f64> = self.sigma.iter().map(|&s| g(s)).collect();
        self.recompose_with(&weights)
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.recompose_with(&self.sigma)
    }

    pub fn nuclear_norm(&self) -> f64 {
        self.sigma.iter().sum()
    }
}

/// Thin SVD of a dense matrix.
pub fn svd(x: &DenseMatrix) -> Result<SvdTriple> {
    svd_raw(x.inner())
}

pub(crate) fn svd_raw(x: &DMatrix<f64>) -> Result<SvdTriple> {
    let decomposition = SVD::try_new(x.clone(), true, true, f64::EPSILON, SVD_MAX_ITERS)
        .ok_or(Error::SvdFailed)?;
    let SVD {
        u,
        v_t,
        singular_values,
    } = decomposition;
    let (u, v_t) = match (u, v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::SvdFailed),
    };
    let n = singular_values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| singular_values[b].total_cmp(&singular_values[a]));
    let sigma = order.iter().map(|&k| singular_values[k].max(0.0)).collect();
    let u = DMatrix::from_fn(u.nrows(), n, |i, k| u[(i, order[k])]);
    let v = DMatrix::from_fn(v_t.ncols(), n, |j, k| v_t[(order[k], j)]);
    Ok(SvdTriple { u, sigma, v })
}

fn sorted_descending(values: &DVector<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Singular values only, descending.
pub fn singular_values(x: &DenseMatrix) -> Result<Vec<f64>> {
    singular_values_raw(x.inner())
}

pub(crate) fn singular_values_raw(x: &DMatrix<f64>) -> Result<Vec<f64>> {
    let decomposition = SVD::try_new(x.clone(), false, false, f64::EPSILON, SVD_MAX_ITERS)
        .ok_or(Error::SvdFailed)?;
    Ok(sorted_descending(&decomposition.singular_values)
        .into_iter()
        .map(|s| s.max(0.0))
        .collect())
}

/// Numeric rank with the crate-wide relative threshold.
pub fn numeric_rank(x: &DenseMatrix) -> Result<usize> {
    Ok(svd_rank_of(&singular_values(x)?, RANK_TOL))
}

pub(crate) fn svd_rank_of(sigma: &[f64], tol: f64) -> usize {
    let cutoff = tol * sigma.first().copied().unwrap_or(0.0);
    sigma.iter().filter(|&&s| s > cutoff && s > 0.0).count()
}
