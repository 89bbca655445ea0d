use nalgebra::DMatrix;
use proptest::prelude::*;
use srf_core::experiments::{gen_gaussian_operator, gen_mask};
use srf_core::random::{gaussian_matrix, seeded_rng};
use srf_core::{AffineOperator, AffineProjector, DenseMatrix, MeasurementVector};

fn random_matrix(n1: usize, n2: usize, seed: u64) -> DenseMatrix {
    DenseMatrix::from_inner(gaussian_matrix(n1, n2, &mut seeded_rng(seed))).unwrap()
}

fn random_b(m: usize, seed: u64) -> MeasurementVector {
    MeasurementVector::new(gaussian_matrix(m, 1, &mut seeded_rng(seed)).as_slice().to_vec()).unwrap()
}

fn operator(kind: bool, n1: usize, n2: usize, m: usize, seed: u64) -> AffineOperator {
    if kind {
        gen_gaussian_operator(m, n1, n2, seed).unwrap()
    } else {
        gen_mask(n1, n2, m, seed).unwrap()
    }
}

fn rel(a: f64, scale: f64) -> f64 {
    a / scale.max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjoint_identity(kind: bool, n1 in 1usize..7, n2 in 1usize..7, frac in 0.05f64..1.0, seed: u64) {
        let m = ((frac * (n1 * n2) as f64).ceil() as usize).clamp(1, n1 * n2);
        let op = operator(kind, n1, n2, m, seed);
        let x = random_matrix(n1, n2, seed ^ 1);
        let y = random_b(m, seed ^ 2);
        let lhs = op.apply(&x).unwrap().dot(&y).unwrap();
        let rhs = x.dot(&op.adjoint(&y).unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn projection_properties(kind: bool, n1 in 1usize..7, n2 in 1usize..7, frac in 0.05f64..0.95, seed: u64) {
        let m = ((frac * (n1 * n2) as f64).ceil() as usize).clamp(1, n1 * n2);
        let op = operator(kind, n1, n2, m, seed);
        let b = random_b(m, seed ^ 3);
        let p = AffineProjector::new(op.clone(), b.clone()).unwrap();
        let x = random_matrix(n1, n2, seed ^ 4);
        let px = p.project(&x).unwrap();
        let ppx = p.project(&px).unwrap();

        // Idempotent and feasible.
        prop_assert!(rel((&ppx - &px).frobenius_norm(), px.frobenius_norm()) <= 1e-8);
        prop_assert!(rel(p.residual(&px).unwrap(), b.norm()) <= 1e-8);

        // X − P(X) is orthogonal to every null-space direction.
        let z = p.project_to_null_space(&random_matrix(n1, n2, seed ^ 5)).unwrap();
        let diff = &x - &px;
        let inner = diff.dot(&z).unwrap();
        prop_assert!(inner.abs() <= 1e-8 * (1.0 + diff.frobenius_norm() * z.frobenius_norm()));
        prop_assert!(rel(op.apply(&z).unwrap().norm(), z.frobenius_norm()) <= 1e-8);

        // Pythagoras against any feasible point.
        let feasible = p.project(&random_matrix(n1, n2, seed ^ 6)).unwrap();
        let lhs = (&x - &feasible).frobenius_norm().powi(2);
        let rhs = diff.frobenius_norm().powi(2) + (&px - &feasible).frobenius_norm().powi(2);
        prop_assert!((lhs - rhs).abs() <= 1e-8 * (1.0 + lhs));
    }

    #[test]
    fn sampling_agrees_with_dense_form(n1 in 1usize..9, n2 in 1usize..9, frac in 0.05f64..1.0, seed: u64) {
        prop_assume!(n1 * n2 <= 64);
        let m = ((frac * (n1 * n2) as f64).ceil() as usize).clamp(1, n1 * n2);
        let sampling = gen_mask(n1, n2, m, seed).unwrap();
        let dense = sampling.to_general_dense();
        let b = random_b(m, seed ^ 7);
        let ps = AffineProjector::new(sampling, b.clone()).unwrap();
        let pd = AffineProjector::new(dense, b).unwrap();
        let x = random_matrix(n1, n2, seed ^ 8);
        let a = ps.project(&x).unwrap();
        let d = pd.project(&x).unwrap();
        prop_assert_eq!(a.as_column_slice(), d.as_column_slice());
        prop_assert_eq!(ps.min_frobenius_solution(), pd.min_frobenius_solution());
    }
}

#[test]
fn min_norm_solution_is_feasible_and_in_row_space() {
    let op = gen_gaussian_operator(10, 4, 5, 3).unwrap();
    let b = random_b(10, 4);
    let p = AffineProjector::new(op, b.clone()).unwrap();
    let x = p.min_frobenius_solution();
    assert!(p.residual(&x).unwrap() <= 1e-10 * b.norm());
    assert!(p.project_to_null_space(&x).unwrap().frobenius_norm() <= 1e-10 * x.frobenius_norm());
}

#[test]
fn measurements_of_wrong_length_are_rejected() {
    let op = gen_mask(3, 3, 4, 1).unwrap();
    assert!(AffineProjector::new(op, MeasurementVector::zeros(5)).is_err());
}

#[test]
fn full_sampling_projects_to_data() {
    let op = gen_mask(3, 2, 6, 9).unwrap();
    let truth = random_matrix(3, 2, 2);
    let p = AffineProjector::new(op.clone(), op.apply(&truth).unwrap()).unwrap();
    let any = DenseMatrix::from_inner(DMatrix::from_element(3, 2, 7.0)).unwrap();
    assert_eq!(p.project(&any).unwrap(), truth);
}
