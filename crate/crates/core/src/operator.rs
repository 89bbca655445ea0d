//! Linear measurement operators `A: ℝ^{n1×n2} → ℝ^m`.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Measurements `b = A(X)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementVector(Vec<f64>);

impl MeasurementVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(k));
        }
        Ok(Self(values))
    }

    pub fn zeros(m: usize) -> Self {
        Self(alloc::vec![0.0; m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        crate::math::sqrt(self.0.iter().map(|v| v * v).sum())
    }

    pub fn dot(&self, other: &Self) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum())
    }

    pub(crate) fn to_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.0)
    }
}

/// The two supported operator representations.
#[derive(Clone, Debug, PartialEq)]
pub enum AffineOperator {
    /// `A(X) = a_matrix · vec(X)` with `a_matrix` of shape `m × (n1·n2)`.
    GeneralDense {
        a_matrix: DMatrix<f64>,
        shape: (usize, usize),
    },
    /// `A(X)_k = X[omega[k]]`: entry sampling for matrix completion.
    EntrySampling {
        omega: Vec<(usize, usize)>,
        shape: (usize, usize),
    },
}

impl AffineOperator {
    /// Dense operator from an `m × (n1·n2)` matrix acting on `vec(X)`.
    pub fn general_dense(a_matrix: DMatrix<f64>, n1: usize, n2: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::EmptyShape(n1, n2));
        }
        if a_matrix.ncols() != n1 * n2 {
            return Err(Error::LengthMismatch {
                expected: n1 * n2,
                found: a_matrix.ncols(),
            });
        }
        let m = a_matrix.nrows();
        if m == 0 {
            return Err(Error::invalid("operator needs at least one measurement"));
        }
        if m > n1 * n2 {
            return Err(Error::invalid(alloc::format!(
                "m = {m} exceeds n1*n2 = {}",
                n1 * n2
            )));
        }
        if let Some(k) = a_matrix.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(k));
        }
        Ok(Self::GeneralDense {
            a_matrix,
            shape: (n1, n2),
        })
    }

    /// Entry-sampling operator; `omega` keeps its given order.
    pub fn entry_sampling(omega: Vec<(usize, usize)>, n1: usize, n2: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::EmptyShape(n1, n2));
        }
        if omega.is_empty() {
            return Err(Error::invalid("sampling set must not be empty"));
        }
        let mut seen = BTreeSet::new();
        for &(i, j) in &omega {
            if i >= n1 || j >= n2 {
                return Err(Error::IndexOutOfBounds(i, j, n1, n2));
            }
            if !seen.insert((i, j)) {
                return Err(Error::DuplicateIndex(i, j));
            }
        }
        Ok(Self::EntrySampling {
            omega,
            shape: (n1, n2),
        })
    }

    /// Domain shape `(n1, n2)`.
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Self::GeneralDense { shape, .. } | Self::EntrySampling { shape, .. } => *shape,
        }
    }

    /// Number of measurements `m`.
    pub fn m(&self) -> usize {
        match self {
            Self::GeneralDense { a_matrix, .. } => a_matrix.nrows(),
            Self::EntrySampling { omega, .. } => omega.len(),
        }
    }

    /// `n1 · n2`.
    pub fn domain_dim(&self) -> usize {
        let (n1, n2) = self.shape();
        n1 * n2
    }

    pub fn apply(&self, x: &DenseMatrix) -> Result<MeasurementVector> {
        x.ensure_shape(self.shape())?;
        Ok(MeasurementVector(self.apply_raw(x.inner()).as_slice().to_vec()))
    }

    pub(crate) fn apply_raw(&self, x: &DMatrix<f64>) -> DVector<f64> {
        match self {
            Self::GeneralDense { a_matrix, .. } => {
                let v = DVector::from_column_slice(x.as_slice());
                a_matrix * v
            }
            Self::EntrySampling { omega, .. } => {
                DVector::from_iterator(omega.len(), omega.iter().map(|&(i, j)| x[(i, j)]))
            }
        }
    }

    /// The adjoint `A*(y)`, satisfying `⟨A(X), y⟩ = ⟨X, A*(y)⟩`.
    pub fn adjoint(&self, y: &MeasurementVector) -> Result<DenseMatrix> {
        if y.len() != self.m() {
            return Err(Error::LengthMismatch {
                expected: self.m(),
                found: y.len(),
            });
        }
        Ok(DenseMatrix::wrap(self.adjoint_raw(&y.to_dvector())))
    }

    pub(crate) fn adjoint_raw(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let (n1, n2) = self.shape();
        match self {
            Self::GeneralDense { a_matrix, .. } => {
                let v = a_matrix.tr_mul(y);
                DMatrix::from_column_slice(n1, n2, v.as_slice())
            }
            Self::EntrySampling { omega, .. } => {
                let mut out = DMatrix::zeros(n1, n2);
                for (k, &(i, j)) in omega.iter().enumerate() {
                    out[(i, j)] = y[k];
                }
                out
            }
        }
    }

    /// The `m × (n1·n2)` matrix form of the operator. For entry sampling this
    /// is the 0/1 row-selection matrix.
    pub fn to_dense_matrix(&self) -> DMatrix<f64> {
        match self {
            Self::GeneralDense { a_matrix, .. } => a_matrix.clone(),
            Self::EntrySampling { omega, shape } => {
                let mut a = DMatrix::zeros(omega.len(), shape.0 * shape.1);
                for (k, &(i, j)) in omega.iter().enumerate() {
                    a[(k, j * shape.0 + i)] = 1.0;
                }
                a
            }
        }
    }

    /// The same operator in [`AffineOperator::GeneralDense`] form.
    pub fn to_general_dense(&self) -> Self {
        let (n1, n2) = self.shape();
        Self::GeneralDense {
            a_matrix: self.to_dense_matrix(),
            shape: (n1, n2),
        }
    }
}

/// Free-function form of [`AffineOperator::apply`].
pub fn apply_operator(op: &AffineOperator, x: &DenseMatrix) -> Result<MeasurementVector> {
    op.apply(x)
}

/// Free-function form of [`AffineOperator::adjoint`].
pub fn adjoint_operator(op: &AffineOperator, y: &MeasurementVector) -> Result<DenseMatrix> {
    op.adjoint(y)
}
