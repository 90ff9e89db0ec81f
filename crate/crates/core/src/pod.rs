//! Weighted proper orthogonal decomposition: `C^w = W C` with `C_ij = ⟨φ_i, φ_j⟩_V`.

use log::{info, warn};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RomError};
use crate::fem::{solve_truth, AffineOperatorSet, TruthSpace};
use crate::linalg::{apply_columns, columns_to_matrix, sorted_eigenpairs, SpdSolver, XOrthonormalizer};
use crate::quadrature::TrainingSet;
use crate::rb::{coercivity_constants, prepare_estimator, BuildMeta, ReducedBasis, DEPENDENCE_TOL};

/// Eigenvalues of `C` below this fraction of the largest are treated as zero (range of `C`);
/// in [`weighted_svd`] the same fraction applies to singular values.
pub const RANGE_TOL: f64 = 1e-14;

/// Spectrum of `W C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PodSpectrum {
    /// `λ_1 ≥ … ≥ λ_{n_t}`, zeros included for directions outside the range of `C`.
    pub eigenvalues: Vec<f64>,
    /// Column `k` holds coefficients `a_k` with `ξ_k = Σ_j a_kj φ_j` for the `k`-th positive
    /// eigenvalue; the `ξ_k` are X-orthonormal.
    #[serde(skip, default = "empty_modes")]
    pub modes: DMatrix<f64>,
    /// Retained energy `E_N`, `N = 1..n_t`.
    pub energy: Vec<f64>,
}

fn empty_modes() -> DMatrix<f64> {
    DMatrix::zeros(0, 0)
}

impl PodSpectrum {
    pub fn n_positive(&self) -> usize {
        self.modes.ncols()
    }

    /// Smallest `N ≤ n_max` with `E_N > 1 − eps_tol`, else `n_max` (capped by the number of
    /// positive eigenvalues).
    pub fn truncation(&self, eps_tol: f64, n_max: usize) -> Result<usize> {
        if !(eps_tol > 0.0) {
            return Err(RomError::InvalidArgument("POD tolerance must be positive".into()));
        }
        let cap = n_max.min(self.n_positive());
        Ok((1..=cap).find(|&n| self.energy[n - 1] > 1.0 - eps_tol).unwrap_or(cap))
    }
}

/// `C_ij = φ_iᵀ X φ_j` for snapshot columns `φ_i`.
pub fn correlation_matrix(space: &TruthSpace, snapshots: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if snapshots.nrows() != space.n_dof {
        return Err(RomError::DimensionMismatch { expected: space.n_dof, found: snapshots.nrows() });
    }
    if snapshots.ncols() == 0 {
        return Err(RomError::InvalidArgument("correlation matrix needs at least one snapshot".into()));
    }
    let c = snapshots.tr_mul(&apply_columns(&space.x, snapshots));
    Ok((&c + c.transpose()) * 0.5)
}

/// Eigen-decomposition of `W C` in the scalar product induced by `C`.
///
/// With `C = U Λ Uᵀ` restricted to its range, the nonzero eigenvalues of `WC` are those of the
/// symmetric `S = Λ^{1/2} Uᵀ W U Λ^{1/2}`, which is valid for weights of either sign. Modes are
/// `a_k = U Λ^{-1/2} z_k` for the eigenvectors `z_k` of `S`.
pub fn weighted_eig(c: &DMatrix<f64>, weights: &[f64]) -> Result<PodSpectrum> {
    let nt = c.nrows();
    if c.ncols() != nt || weights.len() != nt {
        return Err(RomError::DimensionMismatch { expected: nt, found: weights.len() });
    }
    if weights.iter().all(|&w| w == 0.0) {
        return Err(RomError::InvalidArgument("all POD weights are zero".into()));
    }
    let cs = (c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(cs, 1e-15, 100_000)
        .ok_or_else(|| RomError::EigenFailure("correlation matrix".into()))?;
    let (lam, u) = sorted_eigenpairs(&eig.eigenvalues, &eig.eigenvectors, false);
    let top = lam.first().copied().unwrap_or(0.0).max(0.0);
    let r = lam.iter().take_while(|&&l| top > 0.0 && l > RANGE_TOL * top).count();
    let mut eigenvalues = vec![0.0; nt];
    let mut modes = DMatrix::zeros(nt, 0);
    if r > 0 {
        let ur = u.columns(0, r).into_owned();
        let sq = DVector::from_iterator(r, lam[..r].iter().map(|l| l.sqrt()));
        let w = DVector::from_column_slice(weights);
        // Λ^{1/2} Uᵀ W U Λ^{1/2}
        let mut wu = ur.clone();
        for (i, mut row) in wu.row_iter_mut().enumerate() {
            row *= w[i];
        }
        let mut s = ur.tr_mul(&wu);
        for i in 0..r {
            for j in 0..r {
                s[(i, j)] *= sq[i] * sq[j];
            }
        }
        let s = (&s + s.transpose()) * 0.5;
        let se = SymmetricEigen::try_new(s, 1e-15, 100_000)
            .ok_or_else(|| RomError::EigenFailure("weighted POD matrix".into()))?;
        let (mu, z) = sorted_eigenpairs(&se.eigenvalues, &se.eigenvectors, false);
        let pos = mu.iter().take_while(|&&m| m > 0.0).count();
        let mut scaled = ur;
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col /= sq[j];
        }
        modes = scaled * z.columns(0, pos);
        eigenvalues[..r].copy_from_slice(&mu);
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
    }
    let energy = retained_energy(&eigenvalues);
    Ok(PodSpectrum { eigenvalues, modes, energy })
}

fn retained_energy(eigenvalues: &[f64]) -> Vec<f64> {
    let total: f64 = eigenvalues.iter().map(|l| l.max(0.0)).sum();
    let mut acc = 0.0;
    eigenvalues
        .iter()
        .map(|l| {
            acc += l.max(0.0);
            if total > 0.0 { (acc / total).min(1.0) } else { 0.0 }
        })
        .collect()
}

/// Spectrum of `W C` for nonnegative weights from the singular values of `Lᵀ Φ W^{1/2}`,
/// `X = L Lᵀ`, without forming `C`. Small eigenvalues keep their relative accuracy.
pub fn weighted_svd(space: &TruthSpace, snapshots: &DMatrix<f64>, weights: &[f64]) -> Result<PodSpectrum> {
    let nt = snapshots.ncols();
    if snapshots.nrows() != space.n_dof {
        return Err(RomError::DimensionMismatch { expected: space.n_dof, found: snapshots.nrows() });
    }
    if weights.len() != nt {
        return Err(RomError::DimensionMismatch { expected: nt, found: weights.len() });
    }
    if weights.iter().any(|&w| !(w >= 0.0)) {
        return Err(RomError::InvalidArgument("square-root POD needs nonnegative weights".into()));
    }
    if weights.iter().all(|&w| w == 0.0) {
        return Err(RomError::InvalidArgument("all POD weights are zero".into()));
    }
    let chol = SpdSolver::new(&space.x).map_err(RomError::EigenFailure)?;
    let sw: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let mut b = chol.factor_transpose_mul(snapshots);
    for (j, mut col) in b.column_iter_mut().enumerate() {
        col *= sw[j];
    }
    let svd = b.try_svd(false, true, 1e-15, 100_000).ok_or_else(|| RomError::EigenFailure("weighted POD SVD".into()))?;
    let vt = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let top = order.first().map(|&i| svd.singular_values[i]).unwrap_or(0.0);
    let mut eigenvalues = vec![0.0; nt];
    let mut cols = Vec::new();
    for (k, &i) in order.iter().enumerate() {
        let s = svd.singular_values[i];
        if !(s > RANGE_TOL * top) {
            break;
        }
        eigenvalues[k] = s * s;
        cols.push(DVector::from_fn(nt, |j, _| sw[j] * vt[(i, j)] / s));
    }
    let modes = columns_to_matrix(&cols, nt);
    let energy = retained_energy(&eigenvalues);
    Ok(PodSpectrum { eigenvalues, modes, energy })
}

/// Truth snapshots at every training node, as columns.
pub fn snapshot_matrix(ops: &AffineOperatorSet, space: &TruthSpace, training: &TrainingSet) -> Result<DMatrix<f64>> {
    let cols = training
        .nodes
        .par_iter()
        .map(|y| solve_truth(ops, space, y).map(|s| s.coeffs))
        .collect::<Result<Vec<_>>>()?;
    let mut phi = DMatrix::zeros(space.n_dof, cols.len());
    for (j, c) in cols.iter().enumerate() {
        phi.set_column(j, c);
    }
    Ok(phi)
}

/// Weighted POD basis from precomputed snapshots.
pub fn pod_from_snapshots(
    ops: &AffineOperatorSet,
    space: &TruthSpace,
    snapshots: &DMatrix<f64>,
    weights: &[f64],
    eps_tol: f64,
    n_max: usize,
) -> Result<ReducedBasis> {
    if !(eps_tol > 0.0) {
        return Err(RomError::InvalidArgument("POD tolerance must be positive".into()));
    }
    let spectrum = if weights.iter().all(|&w| w >= 0.0) {
        weighted_svd(space, snapshots, weights)?
    } else {
        weighted_eig(&correlation_matrix(space, snapshots)?, weights)?
    };
    if spectrum.n_positive() == 0 {
        warn!("POD: zero total energy; returning an empty basis");
        let mut rb = ReducedBasis::from_basis(ops, DMatrix::zeros(space.n_dof, 0))?;
        rb.spectrum = Some(spectrum);
        return Ok(rb);
    }
    let n = spectrum.truncation(eps_tol, n_max)?;
    info!("POD: n_t = {}, N = {n}, E_N = {:e}", weights.len(), spectrum.energy[n - 1]);
    let mut orth = XOrthonormalizer::new(&space.x);
    for k in 0..n {
        let xi = snapshots * spectrum.modes.column(k);
        if orth.try_push(&xi, DEPENDENCE_TOL).is_none() {
            warn!("POD: mode {} is numerically dependent on the previous ones; dropped", k + 1);
        }
    }
    let mut rb = ReducedBasis::from_basis(ops, orth.into_matrix(space.n_dof))?;
    let coercivity = coercivity_constants(ops, space)?;
    rb.estimator = Some(prepare_estimator(ops, space, &rb, coercivity)?);
    rb.spectrum = Some(spectrum);
    rb.meta.eps_tol = eps_tol;
    rb.meta.n_max = n_max;
    Ok(rb)
}

/// Truth solves at every training node, weighted spectrum with the training weights,
/// truncation by retained energy, X-orthonormal modes.
pub fn pod_build(
    ops: &AffineOperatorSet,
    space: &TruthSpace,
    training: &TrainingSet,
    eps_tol: f64,
    n_max: usize,
) -> Result<ReducedBasis> {
    if training.is_empty() {
        return Err(RomError::InvalidArgument("POD needs a nonempty training set".into()));
    }
    let phi = snapshot_matrix(ops, space, training)?;
    let mut rb = pod_from_snapshots(ops, space, &phi, &training.weights, eps_tol, n_max)?;
    rb.meta = BuildMeta {
        method: "pod".into(),
        training: training.provenance.clone(),
        training_size: training.len(),
        ..rb.meta
    };
    Ok(rb)
}
