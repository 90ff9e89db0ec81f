//! Online stage: reduced Galerkin solves, reconstruction and Monte-Carlo error statistics.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RomError};
use crate::fem::{solve_truth, AffineOperatorSet, TruthSpace};
use crate::param::{ParameterDistribution, ParameterVector};
use crate::rb::ReducedBasis;

/// Condition estimate `λ_max/λ_min` of a symmetric matrix (infinite when not positive definite).
pub fn condition_estimate(a: &DMatrix<f64>) -> f64 {
    let ev = a.clone().symmetric_eigenvalues();
    let (lo, hi) = ev.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), &v| (lo.min(v), hi.max(v.abs())));
    if lo > 0.0 { hi / lo } else { f64::INFINITY }
}

/// Solves `(Σ_q θ_q(y) A^N_q) u_N = Σ_q θ_q(y) f^N_q`.
pub fn reduced_solve(rb: &ReducedBasis, y: &[f64]) -> Result<DVector<f64>> {
    let n = rb.n();
    if n == 0 {
        return Err(RomError::EmptyBasis);
    }
    if y.len() != rb.n_params {
        return Err(RomError::DimensionMismatch { expected: rb.n_params, found: y.len() });
    }
    let f = rb.reduced_load(y);
    if f.iter().all(|&v| v == 0.0) {
        return Ok(DVector::zeros(n));
    }
    let a = rb.reduced_operator(y);
    let a = (&a + a.transpose()) * 0.5;
    let singular = |cond: f64| RomError::SingularReducedSystem { n, y: y.to_vec(), cond };
    let cond = condition_estimate(&a);
    if !(cond <= rb.cond_limit) {
        return Err(singular(cond));
    }
    let chol = a.cholesky().ok_or_else(|| singular(cond))?;
    Ok(chol.solve(&f))
}

/// `Z u_N`.
pub fn reconstruct(rb: &ReducedBasis, u_n: &DVector<f64>) -> Result<DVector<f64>> {
    if u_n.len() != rb.n() {
        return Err(RomError::DimensionMismatch { expected: rb.n(), found: u_n.len() });
    }
    Ok(&rb.basis * u_n)
}

/// Aggregates over a test set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    /// `(1/M) Σ ‖u_δ − u_N‖²_V`.
    pub mean_sq: f64,
    /// `max ‖u_δ − u_N‖²_V`.
    pub max_sq: f64,
    /// `(1/M) Σ η_N²`, when the basis carries estimator data.
    pub estimator_mean_sq: Option<f64>,
}

/// Error of one test point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointError {
    pub error_sq: f64,
    pub estimate: Option<f64>,
}

/// Test parameters drawn from `ρ` together with their truth solutions, computed once.
#[derive(Debug, Clone)]
pub struct TestSet {
    pub samples: Vec<ParameterVector>,
    pub truths: Vec<DVector<f64>>,
    pub seed: u64,
}

impl TestSet {
    pub fn draw(
        ops: &AffineOperatorSet,
        space: &TruthSpace,
        dist: &ParameterDistribution,
        m: usize,
        seed: u64,
    ) -> Result<Self> {
        if m == 0 {
            return Err(RomError::InvalidArgument("test set needs M ≥ 1".into()));
        }
        Self::from_samples(ops, space, dist.sample(m, seed), seed)
    }

    pub fn from_samples(
        ops: &AffineOperatorSet,
        space: &TruthSpace,
        samples: Vec<ParameterVector>,
        seed: u64,
    ) -> Result<Self> {
        let truths = samples
            .par_iter()
            .map(|y| solve_truth(ops, space, y).map(|s| s.coeffs))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { samples, truths, seed })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Per-point squared errors (and estimates), in sample order.
    pub fn point_errors(&self, rb: &ReducedBasis, space: &TruthSpace) -> Result<Vec<PointError>> {
        self.samples
            .par_iter()
            .zip(&self.truths)
            .map(|(y, u)| {
                let (u_n, diff) = if rb.n() == 0 {
                    (DVector::zeros(0), u.clone())
                } else {
                    let u_n = reduced_solve(rb, y)?;
                    let diff = u - &rb.basis * &u_n;
                    (u_n, diff)
                };
                let error_sq = space.v_inner(&diff, &diff)?.max(0.0);
                let estimate = rb.estimator.as_ref().map(|e| e.estimate(y, &u_n));
                Ok(PointError { error_sq, estimate })
            })
            .collect()
    }

    pub fn errors(&self, rb: &ReducedBasis, space: &TruthSpace) -> Result<ErrorStats> {
        let pts = self.point_errors(rb, space)?;
        let m = pts.len() as f64;
        let mean_sq = pts.iter().map(|p| p.error_sq).sum::<f64>() / m;
        let max_sq = pts.iter().map(|p| p.error_sq).fold(0.0, f64::max);
        let estimator_mean_sq = rb
            .estimator
            .as_ref()
            .map(|_| pts.iter().map(|p| p.estimate.unwrap_or(0.0).powi(2)).sum::<f64>() / m);
        Ok(ErrorStats { mean_sq, max_sq, estimator_mean_sq })
    }
}

/// Monte-Carlo estimate of `E[‖u_δ − u_N‖²_V]` over `m` draws from `dist` with `seed`.
pub fn mean_square_error(
    rb: &ReducedBasis,
    ops: &AffineOperatorSet,
    space: &TruthSpace,
    dist: &ParameterDistribution,
    m: usize,
    seed: u64,
) -> Result<ErrorStats> {
    TestSet::draw(ops, space, dist, m, seed)?.errors(rb, space)
}

/// Monte-Carlo estimate of `E[s(u_N)]` for the compliance `s(u) = f(y)ᵀu = f_N(y)ᵀu_N`.
pub fn expected_output(rb: &ReducedBasis, dist: &ParameterDistribution, m: usize, seed: u64) -> Result<f64> {
    if m == 0 {
        return Err(RomError::InvalidArgument("Monte-Carlo mean needs M ≥ 1".into()));
    }
    let samples = dist.sample(m, seed);
    let outs = samples
        .par_iter()
        .map(|y| reduced_solve(rb, y).map(|u_n| rb.reduced_load(y).dot(&u_n)))
        .collect::<Result<Vec<_>>>()?;
    Ok(outs.iter().sum::<f64>() / m as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_affine, Lame, Theta};
    use crate::linalg::XOrthonormalizer;

    fn setup() -> (TruthSpace, AffineOperatorSet, ParameterDistribution) {
        let space = TruthSpace::elasticity(8).unwrap();
        let ops = assemble_affine(&space, Lame::benchmark()).unwrap();
        (space, ops, ParameterDistribution::benchmark(10.0, 10.0))
    }

    fn snapshot_basis(ops: &AffineOperatorSet, space: &TruthSpace, ys: &[ParameterVector]) -> ReducedBasis {
        let mut orth = XOrthonormalizer::new(&space.x);
        for y in ys {
            orth.try_push(&solve_truth(ops, space, y).unwrap().coeffs, 1e-10).unwrap();
        }
        let mut rb = ReducedBasis::from_basis(ops, orth.into_matrix(space.n_dof)).unwrap();
        rb.selected = ys.to_vec();
        rb
    }

    #[test]
    fn reconstruct_is_an_isometry() {
        let (space, ops, dist) = setup();
        let rb = snapshot_basis(&ops, &space, &dist.sample(3, 1));
        for k in 0..3 {
            let mut e = DVector::zeros(3);
            e[k] = 1.0;
            assert_eq!(reconstruct(&rb, &e).unwrap(), rb.basis.column(k).into_owned());
        }
        let v = DVector::from_vec(vec![0.3, -1.2, 2.0]);
        let r = reconstruct(&rb, &v).unwrap();
        assert!((space.v_norm(&r).unwrap() - v.norm()).abs() < 1e-10);
        assert_eq!(reconstruct(&rb, &DVector::zeros(3)).unwrap(), DVector::zeros(space.n_dof));
        assert!(reconstruct(&rb, &DVector::zeros(2)).is_err());
    }

    #[test]
    fn snapshots_are_reproduced() {
        let (space, ops, dist) = setup();
        let ys = dist.sample(4, 2);
        let rb = snapshot_basis(&ops, &space, &ys);
        for y in &ys {
            let u = solve_truth(&ops, &space, y).unwrap().coeffs;
            let u_n = reduced_solve(&rb, y).unwrap();
            let diff = &u - reconstruct(&rb, &u_n).unwrap();
            assert!(space.v_norm(&diff).unwrap() <= 1e-9 * space.v_norm(&u).unwrap());
            // Coefficients equal the X-projection coordinates ZᵀXu.
            let proj = rb.basis.tr_mul(&crate::linalg::spmv(&space.x, &u));
            assert!((proj - u_n).norm() <= 1e-9 * space.v_norm(&u).unwrap());
        }
    }

    #[test]
    fn zero_load_gives_zero() {
        let (space, ops, dist) = setup();
        let mut rb = snapshot_basis(&ops, &space, &dist.sample(2, 2));
        rb.f_theta = vec![Theta::Constant(0.0); 2];
        assert_eq!(reduced_solve(&rb, &[2.0; 6]).unwrap(), DVector::zeros(2));
        assert_eq!(expected_output(&rb, &dist, 5, 1).unwrap(), 0.0);
    }

    #[test]
    fn empty_basis_is_rejected() {
        let (space, ops, _) = setup();
        let rb = ReducedBasis::from_basis(&ops, DMatrix::zeros(space.n_dof, 0)).unwrap();
        assert!(matches!(reduced_solve(&rb, &[2.0; 6]), Err(RomError::EmptyBasis)));
    }

    #[test]
    fn full_snapshot_span_has_no_error() {
        let (space, ops, dist) = setup();
        let ys = dist.sample(3, 9);
        let rb = snapshot_basis(&ops, &space, &ys);
        let test = TestSet::from_samples(&ops, &space, ys, 9).unwrap();
        let s = test.errors(&rb, &space).unwrap();
        assert!(s.mean_sq <= 1e-16, "{:e}", s.mean_sq);
    }

    #[test]
    fn errors_decrease_along_prefixes_and_match_a_plain_loop() {
        let (space, ops, dist) = setup();
        let rb = snapshot_basis(&ops, &space, &dist.sample(6, 4));
        let test = TestSet::draw(&ops, &space, &dist, 15, 77).unwrap();
        let mut prev = f64::INFINITY;
        for n in 1..=6 {
            let sub = rb.truncated(n).unwrap();
            let e = test.errors(&sub, &space).unwrap().mean_sq;
            assert!(e <= prev * (1.0 + 1e-10));
            prev = e;
        }
        let mut acc = 0.0;
        for y in dist.sample(15, 77) {
            let u = solve_truth(&ops, &space, &y).unwrap().coeffs;
            let a = ops.operator(&y);
            let mut dense = DMatrix::zeros(6, 6);
            let az = crate::linalg::apply_columns(&a, &rb.basis);
            dense += rb.basis.transpose() * az;
            let u_n = dense.cholesky().unwrap().solve(&rb.basis.tr_mul(&ops.load(&y)));
            let d = u - &rb.basis * u_n;
            acc += space.v_inner(&d, &d).unwrap();
        }
        let direct = mean_square_error(&rb, &ops, &space, &dist, 15, 77).unwrap().mean_sq;
        assert!((acc / 15.0 - direct).abs() <= 1e-8 * direct);
    }

    #[test]
    fn compliance_scales_quadratically_with_load() {
        let (space, ops, dist) = setup();
        let rb = snapshot_basis(&ops, &space, &dist.sample(4, 3));
        let base = expected_output(&rb, &dist, 20, 5).unwrap();
        let mut doubled = rb.clone();
        for f in &mut doubled.reduced_f {
            *f *= 2.0;
        }
        let d = expected_output(&doubled, &dist, 20, 5).unwrap();
        assert!((d - 4.0 * base).abs() <= 1e-12 * d.abs());
    }
}
