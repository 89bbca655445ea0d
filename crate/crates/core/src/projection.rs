//! Orthogonal projection onto the affine feasible set `{X : A(X) = b}`.
//!
//! For a dense operator the projection is
//!
//! ```text
//! P(X) = mat( A†b + (I − A†A) vec(X) ),    A† = Aᵀ (A Aᵀ)⁻¹
//! ```
//!
//! `A†` is never formed. The Cholesky factor of the `m × m` Gram matrix
//! `A Aᵀ` is computed once and `A†b` (the minimum-Frobenius-norm feasible
//! point) is cached, so each projection costs two matrix-vector products and
//! two triangular solves. Entry-sampling operators skip all of this: the
//! projection overwrites the sampled entries.

use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::operator::{AffineOperator, MeasurementVector};
use crate::random::{gaussian_matrix, seeded_rng};

/// Gram condition estimates above this trigger [`AffineProjector::ill_conditioned`].
pub const CONDITION_WARNING: f64 = 1e12;

#[derive(Clone, Debug)]
enum Factor {
    Dense { gram: Cholesky<f64, Dyn> },
    Sampling,
}

/// Cached projector for one `(A, b)` pair. Immutable once built.
#[derive(Clone, Debug)]
pub struct AffineProjector {
    op: AffineOperator,
    b: MeasurementVector,
    factor: Factor,
    min_norm: DMatrix<f64>,
    condition_estimate: f64,
}

impl AffineProjector {
    /// Factors `A Aᵀ` and caches `A†b`.
    ///
    /// A dense operator without full row rank is rejected with the offending
    /// Cholesky pivot.
    pub fn new(op: AffineOperator, b: MeasurementVector) -> Result<Self> {
        if b.len() != op.m() {
            return Err(Error::LengthMismatch {
                expected: op.m(),
                found: b.len(),
            });
        }
        let (n1, n2) = op.shape();
        match &op {
            AffineOperator::EntrySampling { omega, .. } => {
                let mut min_norm = DMatrix::zeros(n1, n2);
                for (k, &(i, j)) in omega.iter().enumerate() {
                    min_norm[(i, j)] = b.as_slice()[k];
                }
                Ok(Self {
                    op,
                    b,
                    factor: Factor::Sampling,
                    min_norm,
                    condition_estimate: 1.0,
                })
            }
            AffineOperator::GeneralDense { a_matrix, .. } => {
                let (gram, condition_estimate) = factor_gram(a_matrix)?;
                let w = gram.solve(&b.to_dvector());
                let min_norm = DMatrix::from_column_slice(n1, n2, a_matrix.tr_mul(&w).as_slice());
                Ok(Self {
                    op,
                    b,
                    factor: Factor::Dense { gram },
                    min_norm,
                    condition_estimate,
                })
            }
        }
    }

    pub fn operator(&self) -> &AffineOperator {
        &self.op
    }

    pub fn measurements(&self) -> &MeasurementVector {
        &self.b
    }

    pub fn shape(&self) -> (usize, usize) {
        self.op.shape()
    }

    /// `(max L_ii / min L_ii)²` from the Gram Cholesky factor; `1` for sampling.
    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    pub fn ill_conditioned(&self) -> bool {
        self.condition_estimate > CONDITION_WARNING
    }

    /// The closest feasible matrix to `x` in Frobenius norm.
    pub fn project(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        x.ensure_shape(self.shape())?;
        Ok(DenseMatrix::wrap(self.project_raw(x.inner())))
    }

    pub(crate) fn project_raw(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.factor {
            Factor::Sampling => {
                let mut out = x.clone();
                if let AffineOperator::EntrySampling { omega, .. } = &self.op {
                    for (k, &(i, j)) in omega.iter().enumerate() {
                        out[(i, j)] = self.b.as_slice()[k];
                    }
                }
                out
            }
            Factor::Dense { .. } => {
                // (x − A†A x) + A†b, evaluated in this order so that sampled
                // entries come out bit-exact when A is a selection matrix.
                let mut out = self.remove_row_space(x);
                out += &self.min_norm;
                out
            }
        }
    }

    /// `x − A†A x`: the component of `x` in the null space of `A`.
    pub(crate) fn remove_row_space(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.factor {
            Factor::Sampling => {
                let mut out = x.clone();
                if let AffineOperator::EntrySampling { omega, .. } = &self.op {
                    for &(i, j) in omega {
                        out[(i, j)] = 0.0;
                    }
                }
                out
            }
            Factor::Dense { gram } => {
                let AffineOperator::GeneralDense { a_matrix, .. } = &self.op else {
                    unreachable!("dense factor with sampling operator")
                };
                let ax = a_matrix * DVector::from_column_slice(x.as_slice());
                let w = gram.solve(&ax);
                let correction = a_matrix.tr_mul(&w);
                let mut out = x.clone();
                for (o, c) in out.iter_mut().zip(correction.iter()) {
                    *o -= c;
                }
                out
            }
        }
    }

    /// `X̃ = argmin { ‖X‖_F : A(X) = b }`, equal to `project(0)`.
    pub fn min_frobenius_solution(&self) -> DenseMatrix {
        DenseMatrix::wrap(self.min_norm.clone())
    }

    /// Projection onto the null space `{Z : A(Z) = 0}`.
    pub fn project_to_null_space(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        x.ensure_shape(self.shape())?;
        Ok(DenseMatrix::wrap(self.remove_row_space(x.inner())))
    }

    /// A nonzero element of `null(A)`: a seeded Gaussian matrix with its
    /// row-space component removed.
    pub fn null_space_sample(&self, seed: u64) -> Result<DenseMatrix> {
        if self.op.m() >= self.op.domain_dim() {
            return Err(Error::TrivialNullSpace);
        }
        let (n1, n2) = self.shape();
        let mut rng = seeded_rng(seed);
        loop {
            let g = gaussian_matrix(n1, n2, &mut rng);
            let z = self.remove_row_space(&g);
            if z.norm() > 1e-8 * g.norm() {
                return Ok(DenseMatrix::wrap(z));
            }
        }
    }

    /// `‖A(X) − b‖₂`.
    pub fn residual(&self, x: &DenseMatrix) -> Result<f64> {
        x.ensure_shape(self.shape())?;
        Ok(self.residual_raw(x.inner()))
    }

    pub(crate) fn residual_raw(&self, x: &DMatrix<f64>) -> f64 {
        let ax = self.op.apply_raw(x);
        let sq: f64 = ax
            .iter()
            .zip(self.b.as_slice())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        crate::math::sqrt(sq)
    }
}

fn factor_gram(a: &DMatrix<f64>) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let m = a.nrows();
    let gram = a * a.transpose();
    let max_diag = gram.diagonal().iter().fold(0.0f64, |acc, &v| acc.max(v));
    if !(max_diag > 0.0) {
        return Err(Error::NotFullRowRank { pivot: 0, value: 0.0 });
    }
    let chol = Cholesky::new_with_substitute(gram, f64::MIN_POSITIVE).ok_or(Error::NotFullRowRank {
        pivot: 0,
        value: 0.0,
    })?;
    let pivots: Vec<f64> = chol.l_dirty().diagonal().iter().map(|&l| l * l).collect();
    let threshold = (m as f64) * f64::EPSILON * max_diag;
    let (worst, &smallest) = pivots
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("m >= 1");
    if !(smallest > threshold) {
        return Err(Error::NotFullRowRank {
            pivot: worst,
            value: smallest / max_diag,
        });
    }
    let largest = pivots.iter().fold(0.0f64, |acc, &v| acc.max(v));
    Ok((chol, largest / smallest))
}

/// Free-function form of [`AffineProjector::new`].
pub fn build_projector(op: AffineOperator, b: MeasurementVector) -> Result<AffineProjector> {
    AffineProjector::new(op, b)
}

/// Free-function form of [`AffineProjector::project`].
pub fn project(p: &AffineProjector, x: &DenseMatrix) -> Result<DenseMatrix> {
    p.project(x)
}

/// Free-function form of [`AffineProjector::min_frobenius_solution`].
pub fn min_frobenius_solution(p: &AffineProjector) -> DenseMatrix {
    p.min_frobenius_solution()
}

/// Free-function form of [`AffineProjector::null_space_sample`].
pub fn null_space_sample(p: &AffineProjector, seed: u64) -> Result<DenseMatrix> {
    p.null_space_sample(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn mv(values: &[f64]) -> MeasurementVector {
        MeasurementVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn sampling_projector_bookkeeping() {
        let omega = vec![(0, 0), (1, 2), (2, 1), (0, 2)];
        let op = AffineOperator::entry_sampling(omega, 3, 3).unwrap();
        let p = AffineProjector::new(op, mv(&[1.0, 2.0, 3.0, 4.0])).unwrap();
        let x0 = p.min_frobenius_solution();
        assert_eq!(x0.get(0, 0), Some(1.0));
        assert_eq!(x0.get(1, 2), Some(2.0));
        assert_eq!(x0.get(2, 1), Some(3.0));
        assert_eq!(x0.get(0, 2), Some(4.0));
        assert_eq!(x0.frobenius_norm(), 30f64.sqrt());
    }

    #[test]
    fn sampling_overwrites() {
        let op = AffineOperator::entry_sampling(vec![(0, 0)], 2, 2).unwrap();
        let p = AffineProjector::new(op, mv(&[5.0])).unwrap();
        let x = DenseMatrix::from_row_slice(2, 2, &[1.0; 4]).unwrap();
        let projected = p.project(&x).unwrap();
        assert_eq!(projected, DenseMatrix::from_row_slice(2, 2, &[5.0, 1.0, 1.0, 1.0]).unwrap());
    }

    #[test]
    fn corollary_zero_fill() {
        let op = AffineOperator::entry_sampling(vec![(0, 1)], 2, 2).unwrap();
        let p = AffineProjector::new(op, mv(&[7.0])).unwrap();
        assert_eq!(
            p.min_frobenius_solution(),
            DenseMatrix::from_row_slice(2, 2, &[0.0, 7.0, 0.0, 0.0]).unwrap()
        );
    }

    #[test]
    fn single_sum_constraint_spreads_evenly() {
        // The minimum-norm matrix with entry sum 4 is all ones.
        let op = AffineOperator::general_dense(DMatrix::from_element(1, 4, 1.0), 2, 2).unwrap();
        let p = AffineProjector::new(op, mv(&[4.0])).unwrap();
        let x = p.project(&DenseMatrix::zeros(2, 2).unwrap()).unwrap();
        for v in x.as_column_slice() {
            assert!((v - 1.0).abs() < 1e-15);
        }
        let ones = AffineOperator::general_dense(DMatrix::from_element(1, 4, 1.0), 2, 2).unwrap();
        let p = AffineProjector::new(ones, mv(&[1.0])).unwrap();
        for v in p.min_frobenius_solution().as_column_slice() {
            assert!((v - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_operator_pins_every_entry() {
        let op = AffineOperator::general_dense(DMatrix::identity(4, 4), 2, 2).unwrap();
        let b = [1.0, -2.0, 3.5, 0.25];
        let p = AffineProjector::new(op, mv(&b)).unwrap();
        assert_eq!(p.min_frobenius_solution().vectorize(), b.to_vec());
        assert!(p.null_space_sample(1).unwrap_err() == Error::TrivialNullSpace);
    }

    #[test]
    fn duplicated_rows_are_rejected() {
        let a = DMatrix::from_row_slice(3, 4, &[
            1.0, 2.0, 0.0, 1.0, //
            0.5, -1.0, 3.0, 2.0, //
            1.0, 2.0, 0.0, 1.0,
        ]);
        let op = AffineOperator::general_dense(a, 2, 2).unwrap();
        let err = AffineProjector::new(op, mv(&[1.0, 2.0, 1.0])).unwrap_err();
        assert!(matches!(err, Error::NotFullRowRank { pivot: 2, .. }), "{err:?}");
    }

    #[test]
    fn measurement_length_checked() {
        let op = AffineOperator::entry_sampling(vec![(0, 0)], 2, 2).unwrap();
        assert!(AffineProjector::new(op, mv(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn single_free_entry_null_space() {
        let omega: Vec<(usize, usize)> = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .filter(|&p| p != (1, 1))
            .collect();
        let op = AffineOperator::entry_sampling(omega, 2, 2).unwrap();
        let p = AffineProjector::new(op, mv(&[1.0, 2.0, 3.0])).unwrap();
        let z = p.null_space_sample(9).unwrap();
        assert_eq!(z.get(0, 0), Some(0.0));
        assert_eq!(z.get(0, 1), Some(0.0));
        assert_eq!(z.get(1, 0), Some(0.0));
        assert_ne!(z.get(1, 1), Some(0.0));
    }
}
