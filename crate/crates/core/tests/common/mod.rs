#![allow(dead_code)]

use circle_coact::coaction::LinearObject;
use circle_coact::matrix::{c64, hermitian_eig, ComplexMatrix};
use circle_coact::solver::sample_classical;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let x = random_matrix(rng, n, n);
    (&x + &x.adjoint()).scale_real(0.5)
}

pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    hermitian_eig(&random_hermitian(rng, n)).unwrap().vectors
}

/// Orthogonal projection of the given rank onto a random subspace.
pub fn random_projection(rng: &mut ChaCha8Rng, n: usize, rank: usize) -> ComplexMatrix {
    let w = random_unitary(rng, n);
    let diag: Vec<_> = (0..n).map(|k| if k < rank { c64(1.0, 0.0) } else { c64(0.0, 0.0) }).collect();
    &w * ComplexMatrix::from_diag(&diag) * w.adjoint()
}

/// `A = UP`, `B = U(I - P)`: a valid object that in general does not commute.
pub fn valid_object(n: usize, seed: u64) -> LinearObject {
    let mut rng = rng(seed);
    let u = random_unitary(&mut rng, n);
    let rank = rng.random_range(0..=n);
    let p = random_projection(&mut rng, n, rank);
    let i = ComplexMatrix::identity(n);
    LinearObject::new(&u * &p, &u * (&i - &p)).unwrap()
}

pub fn classical_object(n: usize, seed: u64) -> LinearObject {
    sample_classical(n, seed).object().clone()
}

pub fn perturb(m: &ComplexMatrix, rng: &mut ChaCha8Rng, eps: f64) -> ComplexMatrix {
    m + &random_matrix(rng, m.rows(), m.cols()).scale_real(eps)
}

pub fn matrix_strategy(rows: usize, cols: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), rows * cols).prop_map(move |v| {
        ComplexMatrix::from_row_major(rows, cols, v.into_iter().map(|(re, im)| c64(re, im)).collect())
            .unwrap()
    })
}

pub fn square_strategy(max_n: usize) -> impl Strategy<Value = ComplexMatrix> {
    (1..=max_n).prop_flat_map(|n| matrix_strategy(n, n))
}
