//! Residual-based error bound `η_N(y) = ‖r(y)‖_{V'} / α_LB(y)` with an offline/online split of
//! the residual dual norm through Riesz representers.

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::CsrMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RomError};
use crate::fem::{AffineOperatorSet, Theta, TruthSpace};
use crate::linalg::{largest_generalized_eigenvalue, smallest_generalized_eigenvalue, spmv, SpdSolver};
use crate::param::{ParameterDistribution, WeightFunction};

use super::ReducedBasis;

/// Tolerance on `ZᵀXZ = I` accepted by [`prepare_estimator`].
const ORTHONORMAL_TOL: f64 = 1e-8;

/// Coercivity and continuity constants of the reference operator `Σ_q θ_q(ȳ) A_q` in the
/// X inner product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoercivityData {
    /// Smallest eigenvalue `ᾱ` of `A(ȳ) u = λ X u`.
    pub alpha_bar: f64,
    /// Largest eigenvalue `γ̄` of the same pencil.
    pub gamma_bar: f64,
}

impl CoercivityData {
    /// `α_LB(y) = min_q θ_q(y)/θ_q(ȳ) · ᾱ`.
    pub fn alpha_lb(&self, a_theta: &[Theta], y: &[f64]) -> f64 {
        let ratio = a_theta.iter().map(|t| t.eval(y) / t.reference()).fold(f64::INFINITY, f64::min);
        ratio * self.alpha_bar
    }

    /// `γ_UB(y) = max_q θ_q(y)/θ_q(ȳ) · γ̄`.
    pub fn gamma_ub(&self, a_theta: &[Theta], y: &[f64]) -> f64 {
        let ratio = a_theta.iter().map(|t| t.eval(y) / t.reference()).fold(f64::NEG_INFINITY, f64::max);
        ratio * self.gamma_bar
    }
}

pub fn coercivity_constants(ops: &AffineOperatorSet, space: &TruthSpace) -> Result<CoercivityData> {
    if ops.a_theta.iter().any(|t| !(t.reference() > 0.0)) {
        return Err(RomError::InvalidArgument("min-theta bound needs positive reference coefficients".into()));
    }
    let a = ops.reference_operator();
    let alpha_bar = smallest_generalized_eigenvalue(&a, &space.x, 1e-12, 2000).map_err(RomError::EigenFailure)?;
    if !(alpha_bar > 0.0) {
        return Err(RomError::EigenFailure(format!(
            "non-positive coercivity constant {alpha_bar:e}; the operator assembly is not coercive"
        )));
    }
    let gamma_bar = largest_generalized_eigenvalue(&a, &space.x, 1e-10, 5000).map_err(RomError::EigenFailure)?;
    Ok(CoercivityData { alpha_bar, gamma_bar })
}

/// Gram blocks of the Riesz representers `r_f^q = X⁻¹ f_q` and `r_a^{q,n} = −X⁻¹ A_q ξ_n`.
///
/// Column index of `(q, n)` in `g_fa`/`g_aa` is `n·Q_a + q`, so a basis prefix of size `N`
/// corresponds to a leading block.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorData {
    pub coercivity: CoercivityData,
    pub a_theta: Vec<Theta>,
    pub f_theta: Vec<Theta>,
    pub g_ff: DMatrix<f64>,
    pub g_fa: DMatrix<f64>,
    pub g_aa: DMatrix<f64>,
}

impl EstimatorData {
    pub fn qa(&self) -> usize {
        self.a_theta.len()
    }

    pub fn n(&self) -> usize {
        self.g_fa.ncols() / self.qa()
    }

    pub fn truncated(&self, n: usize) -> Self {
        let m = n * self.qa();
        Self {
            coercivity: self.coercivity,
            a_theta: self.a_theta.clone(),
            f_theta: self.f_theta.clone(),
            g_ff: self.g_ff.clone(),
            g_fa: self.g_fa.columns(0, m).into_owned(),
            g_aa: self.g_aa.view((0, 0), (m, m)).into_owned(),
        }
    }

    /// `‖r(y; u_N)‖²_{V'}` from the blocks, clamped at zero.
    pub fn dual_norm_sq(&self, y: &[f64], u_n: &DVector<f64>) -> f64 {
        let qa = self.qa();
        assert_eq!(u_n.len(), self.n(), "reduced coefficient length");
        let cf = DVector::from_iterator(self.f_theta.len(), self.f_theta.iter().map(|t| t.eval(y)));
        let ta: Vec<f64> = self.a_theta.iter().map(|t| t.eval(y)).collect();
        let ca = DVector::from_fn(qa * u_n.len(), |k, _| ta[k % qa] * u_n[k / qa]);
        let v = cf.dot(&(&self.g_ff * &cf)) + 2.0 * cf.dot(&(&self.g_fa * &ca)) + ca.dot(&(&self.g_aa * &ca));
        v.max(0.0)
    }

    /// `η_N(y)`.
    pub fn estimate(&self, y: &[f64], u_n: &DVector<f64>) -> f64 {
        self.dual_norm_sq(y, u_n).sqrt() / self.coercivity.alpha_lb(&self.a_theta, y)
    }

    /// `w(y) η_N(y)`.
    pub fn weighted_estimate(
        &self,
        y: &[f64],
        u_n: &DVector<f64>,
        w: WeightFunction,
        dist: &ParameterDistribution,
    ) -> f64 {
        w.eval(dist, y) * self.estimate(y, u_n)
    }

    /// Upper bound `γ_UB(y)/α_LB(y)` on the effectivity `η_N/e_N`.
    pub fn effectivity_bound(&self, y: &[f64]) -> f64 {
        self.coercivity.gamma_ub(&self.a_theta, y) / self.coercivity.alpha_lb(&self.a_theta, y)
    }
}

/// Incrementally extended estimator blocks; holds the X factorization and representers.
pub struct EstimatorBuilder<'a> {
    x: &'a CsrMatrix<f64>,
    x_solver: SpdSolver,
    a_terms: &'a [CsrMatrix<f64>],
    r_f: Vec<DVector<f64>>,
    r_a: Vec<DVector<f64>>,
    data: EstimatorData,
}

impl<'a> EstimatorBuilder<'a> {
    pub fn new(ops: &'a AffineOperatorSet, space: &'a TruthSpace, coercivity: CoercivityData) -> Result<Self> {
        let x_solver = SpdSolver::new(&space.x).map_err(|reason| RomError::SolverBreakdown { y: Vec::new(), reason })?;
        let r_f: Vec<_> = ops.f_terms.iter().map(|f| x_solver.solve(f)).collect();
        let qf = r_f.len();
        let g_ff = DMatrix::from_fn(qf, qf, |i, j| ops.f_terms[i].dot(&r_f[j]));
        let g_ff = (&g_ff + g_ff.transpose()) * 0.5;
        Ok(Self {
            x: &space.x,
            x_solver,
            a_terms: &ops.a_terms,
            r_f,
            r_a: Vec::new(),
            data: EstimatorData {
                coercivity,
                a_theta: ops.a_theta.clone(),
                f_theta: ops.f_theta.clone(),
                g_ff,
                g_fa: DMatrix::zeros(qf, 0),
                g_aa: DMatrix::zeros(0, 0),
            },
        })
    }

    /// Appends the representers of a new basis function `ξ`.
    pub fn push(&mut self, xi: &DVector<f64>) {
        let qa = self.a_terms.len();
        let old = self.r_a.len();
        for a in self.a_terms {
            let rhs = -spmv(a, xi);
            self.r_a.push(self.x_solver.solve(&rhs));
        }
        let m = old + qa;
        let x_new: Vec<DVector<f64>> = self.r_a[old..].iter().map(|r| spmv(self.x, r)).collect();
        let qf = self.r_f.len();
        let mut g_fa = self.data.g_fa.clone().resize_horizontally(m, 0.0);
        for (k, xr) in x_new.iter().enumerate() {
            for i in 0..qf {
                g_fa[(i, old + k)] = self.r_f[i].dot(xr);
            }
        }
        let mut g_aa = self.data.g_aa.clone().resize(m, m, 0.0);
        for (k, xr) in x_new.iter().enumerate() {
            for j in 0..m {
                let v = self.r_a[j].dot(xr);
                g_aa[(old + k, j)] = v;
                g_aa[(j, old + k)] = v;
            }
        }
        // Symmetrize the new diagonal block exactly.
        for k in 0..qa {
            for l in 0..k {
                let v = 0.5 * (g_aa[(old + k, old + l)] + g_aa[(old + l, old + k)]);
                g_aa[(old + k, old + l)] = v;
                g_aa[(old + l, old + k)] = v;
            }
        }
        self.data.g_fa = g_fa;
        self.data.g_aa = g_aa;
    }

    pub fn data(&self) -> &EstimatorData {
        &self.data
    }

    pub fn into_data(self) -> EstimatorData {
        self.data
    }

    pub fn x_solver(&self) -> &SpdSolver {
        &self.x_solver
    }
}

/// Estimator blocks for an existing basis. The basis must be X-orthonormal.
pub fn prepare_estimator(
    ops: &AffineOperatorSet,
    space: &TruthSpace,
    rb: &ReducedBasis,
    coercivity: CoercivityData,
) -> Result<EstimatorData> {
    let defect = rb.orthonormality_defect(space);
    if defect > ORTHONORMAL_TOL {
        return Err(RomError::NotOrthonormal(defect));
    }
    let mut builder = EstimatorBuilder::new(ops, space, coercivity)?;
    for c in rb.basis.column_iter() {
        builder.push(&c.into_owned());
    }
    Ok(builder.into_data())
}

/// `‖f(y) − A(y) Z u_N‖_{V'}` computed with a truth-size Riesz solve.
pub fn direct_dual_norm(
    ops: &AffineOperatorSet,
    x_solver: &SpdSolver,
    basis: &DMatrix<f64>,
    y: &[f64],
    u_n: &DVector<f64>,
) -> f64 {
    let u = basis * u_n;
    let r = ops.load(y) - spmv(&ops.operator(y), &u);
    let riesz = x_solver.solve(&r);
    r.dot(&riesz).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_affine, Lame};
    use crate::linalg::{bilinear, XOrthonormalizer};
    use crate::online::reduced_solve;
    use crate::param::ParameterDistribution;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (TruthSpace, AffineOperatorSet, CoercivityData) {
        let space = TruthSpace::elasticity(8).unwrap();
        let ops = assemble_affine(&space, Lame::benchmark()).unwrap();
        let c = coercivity_constants(&ops, &space).unwrap();
        (space, ops, c)
    }

    #[test]
    fn alpha_lb_is_min_theta() {
        let (_, ops, c) = setup();
        let ones = vec![1.0; 6];
        assert_eq!(c.alpha_lb(&ops.a_theta, &ones), c.alpha_bar);
        let y = [1.5, 2.5, 1.2, 2.9, 3.0, 4.0];
        let z: Vec<f64> = y.iter().map(|v| 3.0 * v).collect();
        assert!((c.alpha_lb(&ops.a_theta, &z) - 3.0 * c.alpha_lb(&ops.a_theta, &y)).abs() < 1e-14);
        assert!((c.alpha_lb(&ops.a_theta, &y) - 1.2 * c.alpha_bar).abs() < 1e-15);
        assert!(c.gamma_bar > c.alpha_bar);
    }

    #[test]
    fn coercivity_on_random_vectors() {
        let (space, ops, c) = setup();
        let dist = ParameterDistribution::benchmark(1.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for y in dist.sample(20, 11) {
            let a = ops.operator(&y);
            let lb = c.alpha_lb(&ops.a_theta, &y);
            for _ in 0..100 {
                let v = DVector::from_fn(space.n_dof, |_, _| rng.random::<f64>() - 0.5);
                assert!(bilinear(&a, &v, &v) >= lb * bilinear(&space.x, &v, &v) * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn empty_basis_gives_dual_norm_of_load() {
        let (space, ops, c) = setup();
        let b = EstimatorBuilder::new(&ops, &space, c).unwrap();
        let y = [1.0, 2.0, 1.5, 2.5, 3.0, 5.0];
        let f = ops.load(&y);
        let direct = f.dot(&b.x_solver().solve(&f));
        let blocks = b.data().dual_norm_sq(&y, &DVector::zeros(0));
        assert!((direct - blocks).abs() < 1e-12 * direct);
    }

    #[test]
    fn blocks_match_direct_riesz_solve() {
        let (space, ops, c) = setup();
        let dist = ParameterDistribution::benchmark(10.0, 10.0);
        let mut orth = XOrthonormalizer::new(&space.x);
        for y in dist.sample(3, 2) {
            let u = crate::fem::solve_truth(&ops, &space, &y).unwrap().coeffs;
            orth.try_push(&u, 1e-10).unwrap();
        }
        let z = orth.into_matrix(space.n_dof);
        let mut rb = ReducedBasis::from_basis(&ops, z).unwrap();
        let data = prepare_estimator(&ops, &space, &rb, c).unwrap();
        for i in 0..data.g_aa.nrows() {
            for j in 0..i {
                assert_eq!(data.g_aa[(i, j)], data.g_aa[(j, i)]);
            }
        }
        rb.estimator = Some(data.clone());
        let xs = SpdSolver::new(&space.x).unwrap();
        for y in dist.sample(10, 3) {
            let u_n = reduced_solve(&rb, &y).unwrap();
            let direct = direct_dual_norm(&ops, &xs, &rb.basis, &y, &u_n);
            let blocks = data.dual_norm_sq(&y, &u_n).sqrt();
            assert!((direct - blocks).abs() <= 1e-9 * direct, "{direct:e} vs {blocks:e}");
        }
    }

    #[test]
    fn duplicate_basis_vector_rejected() {
        let (space, ops, c) = setup();
        let u = crate::fem::solve_truth(&ops, &space, &[1.0; 6]).unwrap().coeffs;
        let u = &u / space.v_norm(&u).unwrap();
        let z = DMatrix::from_columns(&[u.clone(), u]);
        let rb = ReducedBasis::from_basis(&ops, z).unwrap();
        assert!(matches!(prepare_estimator(&ops, &space, &rb, c), Err(RomError::NotOrthonormal(_))));
    }

    #[test]
    fn weighted_estimate_scales_with_weight() {
        let (space, ops, c) = setup();
        let dist = ParameterDistribution::benchmark(10.0, 10.0);
        let u = crate::fem::solve_truth(&ops, &space, &[2.0, 2.0, 2.0, 2.0, 4.0, 4.0]).unwrap().coeffs;
        let z = DMatrix::from_columns(&[&u / space.v_norm(&u).unwrap()]);
        let rb = ReducedBasis::from_basis(&ops, z).unwrap();
        let data = prepare_estimator(&ops, &space, &rb, c).unwrap();
        for y in dist.sample(5, 8) {
            let u_n = reduced_solve(&rb, &y).unwrap();
            let e = data.estimate(&y, &u_n);
            assert_eq!(data.weighted_estimate(&y, &u_n, WeightFunction::One, &dist), e);
            let r = data.weighted_estimate(&y, &u_n, WeightFunction::Rho, &dist);
            assert!((r - dist.density(&y) * e).abs() <= 1e-14 * r.abs());
        }
    }
}
