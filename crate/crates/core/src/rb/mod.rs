//! Reduced bases, their a posteriori error estimator and the weighted greedy offline stage.

mod archive;
mod estimator;
mod greedy;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, RomError};
use crate::fem::{AffineOperatorSet, Theta, TruthSpace};
use crate::linalg::{apply_columns, project};
use crate::param::ParameterVector;
use crate::pod::PodSpectrum;

pub use archive::{read_archive, write_archive, ARCHIVE_MAGIC, ARCHIVE_VERSION};
pub use estimator::{
    coercivity_constants, direct_dual_norm, prepare_estimator, CoercivityData, EstimatorBuilder, EstimatorData,
};
pub use greedy::{greedy_build, FirstPick, GreedyOptions, GreedyOutcome, StopReason, DEPENDENCE_TOL};

/// Default threshold on the condition estimate of a reduced system above which it is
/// reported as singular.
pub const DEFAULT_COND_LIMIT: f64 = 1e12;

/// One greedy iteration: basis size after enrichment, the next parameter chosen by the
/// weighted estimator and the maximum weighted estimator over the training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyStep {
    pub n: usize,
    pub next: ParameterVector,
    pub max_estimate: f64,
}

/// Settings and provenance recorded with a build.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildMeta {
    pub method: String,
    pub weight: String,
    pub eps_tol: f64,
    pub n_max: usize,
    pub training: String,
    pub training_size: usize,
    pub seeds: BTreeMap<String, u64>,
}

/// An X-orthonormal reduced basis with its projected affine operators.
#[derive(Debug, Clone)]
pub struct ReducedBasis {
    /// `n_dof × N`, columns X-orthonormal.
    pub basis: DMatrix<f64>,
    /// Snapshot parameters in order of selection (greedy builds only).
    pub selected: Vec<ParameterVector>,
    /// `A^N_q = Zᵀ A_q Z`.
    pub reduced_a: Vec<DMatrix<f64>>,
    /// `f^N_q = Zᵀ f_q`.
    pub reduced_f: Vec<DVector<f64>>,
    pub a_theta: Vec<Theta>,
    pub f_theta: Vec<Theta>,
    pub n_params: usize,
    pub estimator: Option<EstimatorData>,
    pub spectrum: Option<PodSpectrum>,
    pub history: Vec<GreedyStep>,
    pub meta: BuildMeta,
    pub cond_limit: f64,
}

impl ReducedBasis {
    /// Projects `ops` onto the columns of `basis` (assumed X-orthonormal).
    pub fn from_basis(ops: &AffineOperatorSet, basis: DMatrix<f64>) -> Result<Self> {
        if basis.nrows() != ops.n_dof() {
            return Err(RomError::DimensionMismatch { expected: ops.n_dof(), found: basis.nrows() });
        }
        let reduced_a = ops.a_terms.iter().map(|a| project(a, &basis)).collect();
        let reduced_f = ops.f_terms.iter().map(|f| basis.tr_mul(f)).collect();
        Ok(Self {
            basis,
            selected: Vec::new(),
            reduced_a,
            reduced_f,
            a_theta: ops.a_theta.clone(),
            f_theta: ops.f_theta.clone(),
            n_params: ops.n_params,
            estimator: None,
            spectrum: None,
            history: Vec::new(),
            meta: BuildMeta::default(),
            cond_limit: DEFAULT_COND_LIMIT,
        })
    }

    pub fn n(&self) -> usize {
        self.basis.ncols()
    }

    pub fn n_dof(&self) -> usize {
        self.basis.nrows()
    }

    /// `Σ_q θ_q(y) A^N_q`.
    pub fn reduced_operator(&self, y: &[f64]) -> DMatrix<f64> {
        let n = self.n();
        let mut a = DMatrix::zeros(n, n);
        for (aq, t) in self.reduced_a.iter().zip(&self.a_theta) {
            a += aq * t.eval(y);
        }
        a
    }

    /// `Σ_q θ_q(y) f^N_q`.
    pub fn reduced_load(&self, y: &[f64]) -> DVector<f64> {
        let mut f = DVector::zeros(self.n());
        for (fq, t) in self.reduced_f.iter().zip(&self.f_theta) {
            f.axpy(t.eval(y), fq, 1.0);
        }
        f
    }

    /// The basis made of the first `n` columns, with operators and estimator blocks cut to match.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n > self.n() {
            return Err(RomError::InvalidArgument(format!("cannot truncate N = {} to {n}", self.n())));
        }
        Ok(Self {
            basis: self.basis.columns(0, n).into_owned(),
            selected: self.selected.iter().take(n).cloned().collect(),
            reduced_a: self.reduced_a.iter().map(|a| a.view((0, 0), (n, n)).into_owned()).collect(),
            reduced_f: self.reduced_f.iter().map(|f| f.rows(0, n).into_owned()).collect(),
            a_theta: self.a_theta.clone(),
            f_theta: self.f_theta.clone(),
            n_params: self.n_params,
            estimator: self.estimator.as_ref().map(|e| e.truncated(n)),
            spectrum: self.spectrum.clone(),
            history: self.history.iter().filter(|s| s.n <= n).cloned().collect(),
            meta: self.meta.clone(),
            cond_limit: self.cond_limit,
        })
    }

    /// Largest entry of `|ZᵀXZ − I|`.
    pub fn orthonormality_defect(&self, space: &TruthSpace) -> f64 {
        let g = self.basis.tr_mul(&apply_columns(&space.x, &self.basis));
        let n = self.n();
        (g - DMatrix::<f64>::identity(n, n)).abs().max()
    }
}
