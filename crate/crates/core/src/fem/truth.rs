use nalgebra::DVector;

use super::assembly::AffineOperatorSet;
use super::space::TruthSpace;
use crate::error::{Result, RomError};
use crate::linalg::{spmv, SpdSolver};
use crate::param::ParameterVector;

/// Truth solution at one parameter. Coefficients are on the free DOFs; clamped DOFs are zero
/// in the expanded field.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub coeffs: DVector<f64>,
    pub y: ParameterVector,
}

/// Solves `(Σ_q θ_q(y) A_q) u = Σ_q θ_q(y) f_q` with a sparse Cholesky factorization.
pub fn solve_truth(ops: &AffineOperatorSet, space: &TruthSpace, y: &[f64]) -> Result<Snapshot> {
    ops.check_parameter(y)?;
    if ops.n_dof() != space.n_dof {
        return Err(RomError::DimensionMismatch { expected: space.n_dof, found: ops.n_dof() });
    }
    let f = ops.load(y);
    let y_vec = ParameterVector::from(y);
    let f_norm = f.norm();
    if f_norm == 0.0 {
        return Ok(Snapshot { coeffs: DVector::zeros(space.n_dof), y: y_vec });
    }
    let a = ops.operator(y);
    let solver = SpdSolver::new(&a)
        .map_err(|reason| RomError::SolverBreakdown { y: y.to_vec(), reason })?;
    let u = solver.solve(&f);
    let res = (spmv(&a, &u) - &f).norm();
    if !(res <= 1e-10 * f_norm) {
        return Err(RomError::SolverBreakdown {
            y: y.to_vec(),
            reason: format!("relative residual {:e} above 1e-10", res / f_norm),
        });
    }
    Ok(Snapshot { coeffs: u, y: y_vec })
}

/// Compliance output `s(u; y) = f(y)ᵀ u`.
pub fn evaluate_output(ops: &AffineOperatorSet, y: &[f64], u: &DVector<f64>) -> f64 {
    ops.load(y).dot(u)
}
