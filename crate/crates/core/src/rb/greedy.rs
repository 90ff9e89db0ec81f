//! Weighted greedy selection of snapshot parameters.

use log::{debug, info, warn};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimator::{coercivity_constants, EstimatorBuilder};
use super::{BuildMeta, GreedyStep, ReducedBasis, DEFAULT_COND_LIMIT};
use crate::error::{Result, RomError};
use crate::fem::{solve_truth, AffineOperatorSet, TruthSpace};
use crate::linalg::{spmv, XOrthonormalizer};
use crate::online::reduced_solve;
use crate::param::{ParameterDistribution, ParameterVector, WeightFunction};
use crate::quadrature::TrainingSet;

/// Relative norm below which an orthogonalized snapshot counts as linearly dependent.
pub const DEPENDENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FirstPick {
    /// First node of the training set.
    FirstNode,
    /// Mode of the parameter distribution.
    DensityMode,
}

#[derive(Debug, Clone)]
pub struct GreedyOptions {
    pub weight: WeightFunction,
    pub eps_tol: f64,
    pub n_max: usize,
    pub first_pick: FirstPick,
    pub cond_limit: f64,
}

impl Default for GreedyOptions {
    fn default() -> Self {
        Self {
            weight: WeightFunction::One,
            eps_tol: 1e-6,
            n_max: 20,
            first_pick: FirstPick::FirstNode,
            cond_limit: DEFAULT_COND_LIMIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StopReason {
    Tolerance,
    MaxSize,
    /// Every remaining training node produced a dependent snapshot.
    Exhausted,
    /// Singular reduced system met at basis size `n`; the returned basis has `n − 1` columns.
    Breakdown { n: usize, y: Vec<f64>, cond: f64 },
}

#[derive(Debug, Clone)]
pub struct GreedyOutcome {
    pub rb: ReducedBasis,
    pub stop: StopReason,
}

impl GreedyOutcome {
    /// The basis, or the breakdown as an error.
    pub fn into_result(self) -> Result<ReducedBasis> {
        match self.stop {
            StopReason::Breakdown { n, y, cond } => Err(RomError::SingularReducedSystem { n, y, cond }),
            _ => Ok(self.rb),
        }
    }
}

/// Weighted greedy: repeatedly adds the truth snapshot at
/// `argmax_{y ∈ Ξ_t} w(y) η_N(y)` until the maximum drops to `eps_tol` or `N = n_max`.
///
/// Training weights are ignored; only the nodes are used.
pub fn greedy_build(
    ops: &AffineOperatorSet,
    space: &TruthSpace,
    training: &TrainingSet,
    dist: &ParameterDistribution,
    opts: &GreedyOptions,
) -> Result<GreedyOutcome> {
    if training.is_empty() {
        return Err(RomError::InvalidArgument("greedy needs a nonempty training set".into()));
    }
    if !(opts.eps_tol > 0.0) {
        return Err(RomError::InvalidArgument("greedy tolerance must be positive".into()));
    }
    if opts.n_max == 0 {
        return Err(RomError::InvalidArgument("greedy needs n_max ≥ 1".into()));
    }
    let coercivity = coercivity_constants(ops, space)?;
    info!(
        "greedy: |Ξ_t| = {}, ᾱ = {:e}, γ̄ = {:e}, weight = {}",
        training.len(),
        coercivity.alpha_bar,
        coercivity.gamma_bar,
        opts.weight.tag()
    );
    let nodes = &training.nodes;
    let weights: Vec<f64> = nodes.iter().map(|y| opts.weight.eval(dist, y)).collect();
    let mut active = vec![true; nodes.len()];

    let mut orth = XOrthonormalizer::new(&space.x);
    let mut estimator = EstimatorBuilder::new(ops, space, coercivity)?;
    let mut a_xi: Vec<Vec<DVector<f64>>> = Vec::new();
    let mut rb = ReducedBasis::from_basis(ops, DMatrix::zeros(space.n_dof, 0))?;
    rb.cond_limit = opts.cond_limit;
    rb.meta = BuildMeta {
        method: "greedy".into(),
        weight: opts.weight.tag().into(),
        eps_tol: opts.eps_tol,
        n_max: opts.n_max,
        training: training.provenance.clone(),
        training_size: training.len(),
        ..BuildMeta::default()
    };

    let (mut next, mut next_index): (ParameterVector, Option<usize>) = match opts.first_pick {
        FirstPick::FirstNode => (nodes[0].clone(), Some(0)),
        FirstPick::DensityMode => (dist.mode(), None),
    };
    loop {
        let snapshot = solve_truth(ops, space, &next)?;
        if orth.try_push(&snapshot.coeffs, DEPENDENCE_TOL).is_some() {
            let xi = orth_last(&orth);
            estimator.push(&xi);
            let axi: Vec<DVector<f64>> = ops.a_terms.iter().map(|a| spmv(a, &xi)).collect();
            a_xi.push(axi);
            extend_reduced(&mut rb, ops, &xi, &a_xi);
            rb.selected.push(next.clone());
            debug!("greedy: N = {} at y = {:?}", rb.n(), next.0);
        } else {
            warn!("greedy: snapshot at {:?} is linearly dependent; removed from the training set", next.0);
            match next_index {
                Some(i) => active[i] = false,
                None => {
                    // The mode is not a training node; fall back to the first node.
                    next = nodes[0].clone();
                    next_index = Some(0);
                    continue;
                }
            }
        }
        rb.estimator = Some(estimator.data().clone());

        // Sweep the weighted estimator over the active training nodes.
        let sweep: Vec<(usize, Result<f64>)> = (0..nodes.len())
            .into_par_iter()
            .filter(|&i| active[i])
            .map(|i| {
                let est = rb.estimator.as_ref().expect("estimator data present");
                let v = if rb.n() == 0 {
                    Ok(est.estimate(&nodes[i], &DVector::zeros(0)))
                } else {
                    reduced_solve(&rb, &nodes[i]).map(|u_n| est.estimate(&nodes[i], &u_n))
                };
                (i, v.map(|e| weights[i] * e))
            })
            .collect();
        if sweep.is_empty() {
            info!("greedy: training set exhausted at N = {}", rb.n());
            return Ok(GreedyOutcome { rb, stop: StopReason::Exhausted });
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, v) in sweep {
            match v {
                Ok(v) => {
                    if !v.is_finite() {
                        return Err(RomError::InvalidArgument(format!(
                            "non-finite weighted estimator at y = {:?}",
                            nodes[i].0
                        )));
                    }
                    if best.is_none_or(|(_, b)| v > b) {
                        best = Some((i, v));
                    }
                }
                Err(RomError::SingularReducedSystem { n, y, cond }) => {
                    warn!("greedy: singular reduced system at N = {n}, y = {y:?} (cond {cond:e})");
                    let rb = rb.truncated(n - 1)?;
                    return Ok(GreedyOutcome { rb, stop: StopReason::Breakdown { n, y, cond } });
                }
                Err(e) => return Err(e),
            }
        }
        let (i, max) = best.expect("nonempty sweep");
        rb.history.push(GreedyStep { n: rb.n(), next: nodes[i].clone(), max_estimate: max });
        info!("greedy: N = {:3}  max w·η = {:e}", rb.n(), max);
        if max <= opts.eps_tol && rb.n() > 0 {
            return Ok(GreedyOutcome { rb, stop: StopReason::Tolerance });
        }
        if rb.n() >= opts.n_max {
            return Ok(GreedyOutcome { rb, stop: StopReason::MaxSize });
        }
        next = nodes[i].clone();
        next_index = Some(i);
    }
}

fn orth_last(orth: &XOrthonormalizer) -> DVector<f64> {
    orth.last().expect("just pushed").clone()
}

/// Appends row/column `N` of every `A^N_q` and entry `N` of every `f^N_q`.
fn extend_reduced(rb: &mut ReducedBasis, ops: &AffineOperatorSet, xi: &DVector<f64>, a_xi: &[Vec<DVector<f64>>]) {
    let n = rb.n() + 1;
    let mut basis = std::mem::replace(&mut rb.basis, DMatrix::zeros(0, 0)).resize_horizontally(n, 0.0);
    basis.set_column(n - 1, xi);
    for (q, aq) in rb.reduced_a.iter_mut().enumerate() {
        let mut m = std::mem::replace(aq, DMatrix::zeros(0, 0)).resize(n, n, 0.0);
        for j in 0..n {
            m[(j, n - 1)] = basis.column(j).dot(&a_xi[n - 1][q]);
            m[(n - 1, j)] = xi.dot(&a_xi[j][q]);
        }
        *aq = m;
    }
    for (fq, f) in rb.reduced_f.iter_mut().zip(&ops.f_terms) {
        let mut v = std::mem::replace(fq, DVector::zeros(0)).resize_vertically(n, 0.0);
        v[n - 1] = xi.dot(f);
        *fq = v;
    }
    rb.basis = basis;
}
