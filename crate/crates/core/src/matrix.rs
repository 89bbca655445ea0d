//! Dense real matrices.
//!
//! Storage is column-major, so the column-stacking vectorization
//! `vec(X)` is the raw storage order: entry `(i, j)` sits at `j * rows + i`.

use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A real `rows × cols` matrix with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix(DMatrix<f64>);

fn check_shape(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyShape(rows, cols));
    }
    Ok(())
}

fn check_finite(data: &[f64]) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(k) => Err(Error::NonFinite(k)),
        None => Ok(()),
    }
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        check_shape(rows, cols)?;
        Ok(Self(DMatrix::zeros(rows, cols)))
    }

    pub fn identity(n: usize) -> Result<Self> {
        check_shape(n, n)?;
        Ok(Self(DMatrix::identity(n, n)))
    }

    /// Builds a matrix from entries listed row by row.
    pub fn from_row_slice(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        check_shape(rows, cols)?;
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        check_finite(data)?;
        Ok(Self(DMatrix::from_row_slice(rows, cols, data)))
    }

    /// Builds a matrix from entries listed column by column.
    pub fn from_column_slice(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        check_shape(rows, cols)?;
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        check_finite(data)?;
        Ok(Self(DMatrix::from_column_slice(rows, cols, data)))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        check_shape(rows, cols)?;
        Self::from_inner(DMatrix::from_fn(rows, cols, f))
    }

    /// Wraps an nalgebra matrix, validating shape and finiteness.
    pub fn from_inner(inner: DMatrix<f64>) -> Result<Self> {
        check_shape(inner.nrows(), inner.ncols())?;
        check_finite(inner.as_slice())?;
        Ok(Self(inner))
    }

    /// Wraps a matrix produced by internal arithmetic on finite inputs.
    pub(crate) fn wrap(inner: DMatrix<f64>) -> Self {
        debug_assert!(inner.nrows() > 0 && inner.ncols() > 0);
        Self(inner)
    }

    pub fn inner(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    /// `min(rows, cols)`, the number of singular values.
    pub fn min_dim(&self) -> usize {
        self.rows().min(self.cols())
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.0.get((i, j)).copied()
    }

    /// Entries in column-stacking order.
    pub fn as_column_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    /// `vec(X)`: columns stacked on top of one another.
    pub fn vectorize(&self) -> Vec<f64> {
        self.0.as_slice().to_vec()
    }

    /// Inverse of [`DenseMatrix::vectorize`].
    pub fn unvectorize(v: &[f64], rows: usize, cols: usize) -> Result<Self> {
        Self::from_column_slice(rows, cols, v)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// Frobenius inner product `⟨X, Y⟩ = tr(XᵀY)`.
    pub fn dot(&self, other: &Self) -> Result<f64> {
        self.ensure_shape(other.shape())?;
        Ok(self.0.dot(&other.0))
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    pub(crate) fn ensure_shape(&self, shape: (usize, usize)) -> Result<()> {
        if self.shape() != shape {
            return Err(Error::ShapeMismatch {
                expected: shape,
                found: self.shape(),
            });
        }
        Ok(())
    }

    /// Rows of the matrix as owned vectors, for writers that emit row-major text.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.0[(i, j)]).collect())
            .collect()
    }
}

/// Free-function form of [`DenseMatrix::vectorize`].
pub fn vectorize(x: &DenseMatrix) -> Vec<f64> {
    x.vectorize()
}

/// Free-function form of [`DenseMatrix::unvectorize`].
pub fn unvectorize(v: &[f64], rows: usize, cols: usize) -> Result<DenseMatrix> {
    DenseMatrix::unvectorize(v, rows, cols)
}

impl Add for &DenseMatrix {
    type Output = DenseMatrix;

    /// Panics on shape mismatch, like the underlying nalgebra operator.
    fn add(self, rhs: &DenseMatrix) -> DenseMatrix {
        DenseMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &DenseMatrix {
    type Output = DenseMatrix;

    fn sub(self, rhs: &DenseMatrix) -> DenseMatrix {
        DenseMatrix(&self.0 - &rhs.0)
    }
}

impl Mul<f64> for &DenseMatrix {
    type Output = DenseMatrix;

    fn mul(self, rhs: f64) -> DenseMatrix {
        DenseMatrix(&self.0 * rhs)
    }
}

impl Mul for &DenseMatrix {
    type Output = DenseMatrix;

    fn mul(self, rhs: &DenseMatrix) -> DenseMatrix {
        DenseMatrix(&self.0 * &rhs.0)
    }
}
