#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::CsrMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wrom::linalg::spmv;
use wrom::fem::{assemble_affine, AffineOperatorSet, Lame, TruthSpace};

pub fn elasticity(n_sub: usize) -> (TruthSpace, AffineOperatorSet) {
    let space = TruthSpace::elasticity(n_sub).unwrap();
    let ops = assemble_affine(&space, Lame::benchmark()).unwrap();
    (space, ops)
}

pub fn dense(a: &CsrMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from(a)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

/// X-orthogonal projection of `v` onto the span of the X-orthonormal columns of `z`.
pub fn project_x(x: &CsrMatrix<f64>, z: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    let xv = spmv(x, v);
    z * z.tr_mul(&xv)
}

pub fn x_norm_sq(x: &CsrMatrix<f64>, v: &DVector<f64>) -> f64 {
    v.dot(&spmv(x, v))
}
