//! Training sets: quadrature nodes in `Γ` with weights approximating expectations under `ρ`.

use std::io::{BufRead, Write};

use super::rule1d::{clenshaw_curtis_1d, gauss_jacobi_1d, gauss_legendre_1d, Measure, Rule1D};
use crate::error::{Result, RomError};
use crate::param::{BetaMarginal, ParameterDistribution, ParameterVector};

/// Upper bound on the number of nodes of a generated grid.
pub const MAX_NODES: usize = 10_000_000;

/// Tolerance (per coordinate) under which nodes are considered identical.
pub const MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub nodes: Vec<ParameterVector>,
    pub weights: Vec<f64>,
    pub provenance: String,
}

impl TrainingSet {
    pub fn new(nodes: Vec<ParameterVector>, weights: Vec<f64>, provenance: impl Into<String>) -> Result<Self> {
        if nodes.len() != weights.len() {
            return Err(RomError::DimensionMismatch { expected: nodes.len(), found: weights.len() });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(RomError::InvalidArgument("training weights must be finite".into()));
        }
        Ok(Self { nodes, weights, provenance: provenance.into() })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ w_i g(y_i)`.
    pub fn integrate(&self, g: impl Fn(&[f64]) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(y, w)| w * g(y)).sum()
    }

    /// CSV with a provenance comment line, then `y_1..y_K,weight`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let k = self.nodes.first().map_or(0, |y| y.len());
        writeln!(w, "# provenance: {}", self.provenance)?;
        let header: Vec<String> = (1..=k).map(|i| format!("y_{i}")).chain(["weight".into()]).collect();
        writeln!(w, "{}", header.join(","))?;
        for (y, wt) in self.nodes.iter().zip(&self.weights) {
            let row: Vec<String> = y.iter().chain([wt]).map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let bad = |m: &str| RomError::Format(format!("training CSV: {m}"));
        let first = lines.next().ok_or_else(|| bad("empty file"))??;
        let provenance = first
            .strip_prefix("# provenance: ")
            .ok_or_else(|| bad("missing provenance line"))?
            .to_string();
        let header = lines.next().ok_or_else(|| bad("missing header"))??;
        let cols = header.split(',').count();
        if cols < 2 || !header.ends_with("weight") {
            return Err(bad("header must be y_1..y_K,weight"));
        }
        let (mut nodes, mut weights) = (Vec::new(), Vec::new());
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|e| bad(&e.to_string())))
                .collect::<Result<_>>()?;
            if vals.len() != cols {
                return Err(bad("ragged row"));
            }
            weights.push(vals[cols - 1]);
            nodes.push(ParameterVector(vals[..cols - 1].to_vec()));
        }
        Self::new(nodes, weights, provenance)
    }
}

/// Weights of `rule` re-targeted to the law of `marginal`, with nodes mapped to its support.
/// When the rule's native measure differs from the marginal's Beta law, each weight is
/// multiplied by the density ratio so the rule integrates against the marginal.
fn adapt_rule(rule: &Rule1D, marginal: &BetaMarginal) -> (Vec<f64>, Vec<f64>) {
    let target = Measure::of_shape(marginal.alpha, marginal.beta);
    let nodes = rule.nodes.iter().map(|&t| marginal.from_unit(t)).collect();
    let weights = if target == rule.measure {
        rule.weights.clone()
    } else {
        rule.nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&t, &w)| w * target.density(t) / rule.measure.density(t))
            .collect()
    };
    (nodes, weights)
}

fn tensor_product(
    comps: &[(Vec<f64>, Vec<f64>)],
    scale: f64,
    nodes: &mut Vec<ParameterVector>,
    weights: &mut Vec<f64>,
) {
    let k = comps.len();
    let mut idx = vec![0usize; k];
    loop {
        let y: Vec<f64> = (0..k).map(|d| comps[d].0[idx[d]]).collect();
        let w: f64 = (0..k).map(|d| comps[d].1[idx[d]]).product();
        nodes.push(ParameterVector(y));
        weights.push(scale * w);
        // Odometer, last component fastest.
        let mut d = k;
        loop {
            if d == 0 {
                return;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < comps[d].0.len() {
                break;
            }
            idx[d] = 0;
        }
    }
}

/// Full tensor product of one rule per component, mapped to each component's support.
pub fn tensor_rule(rules: &[Rule1D], dist: &ParameterDistribution) -> Result<TrainingSet> {
    if rules.len() != dist.dim() {
        return Err(RomError::DimensionMismatch { expected: dist.dim(), found: rules.len() });
    }
    let count = rules.iter().try_fold(1usize, |acc, r| acc.checked_mul(r.len()));
    match count {
        Some(c) if c <= MAX_NODES => {}
        _ => return Err(RomError::InvalidArgument(format!("tensor grid exceeds {MAX_NODES} nodes"))),
    }
    let comps: Vec<_> = rules.iter().zip(&dist.marginals).map(|(r, m)| adapt_rule(r, m)).collect();
    let (mut nodes, mut weights) = (Vec::new(), Vec::new());
    tensor_product(&comps, 1.0, &mut nodes, &mut weights);
    let tags: Vec<String> = rules.iter().map(|r| format!("{:?}", r.family)).collect();
    TrainingSet::new(nodes, weights, format!("tensor[{}]", tags.join(" x ")))
}

/// 1-D families available to the sparse construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SparseFamily {
    /// Nested, `2^{l−1}+1` nodes at level `l ≥ 2`.
    ClenshawCurtis,
    /// `l` nodes at level `l`, uniform measure.
    GaussLegendre,
    /// `l` nodes at level `l`, Gauss rule of each component's own Beta law.
    GaussJacobi,
    MonteCarlo,
}

impl SparseFamily {
    fn rule(&self, level: usize, marginal: &BetaMarginal) -> Result<Rule1D> {
        match self {
            SparseFamily::ClenshawCurtis => clenshaw_curtis_1d(level),
            SparseFamily::GaussLegendre => Ok(gauss_legendre_1d(level)),
            SparseFamily::GaussJacobi => gauss_jacobi_1d(level, marginal.alpha, marginal.beta),
            SparseFamily::MonteCarlo => Err(RomError::InvalidArgument(
                "Monte-Carlo points have no level hierarchy for a sparse construction".into(),
            )),
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Smolyak sparse rule whose finest 1-D level is `level`: the combination technique
///
/// `Σ_{q ≤ |l|₁ ≤ q+K−1} (−1)^{q+K−1−|l|₁} C(K−1, q+K−1−|l|₁) ⊗_i U^{l_i}`
///
/// with duplicate nodes merged (weights summed). Weights may be negative.
pub fn smolyak_rule(level: usize, family: SparseFamily, dist: &ParameterDistribution) -> Result<TrainingSet> {
    if level == 0 {
        return Err(RomError::InvalidArgument("Smolyak level starts at 1".into()));
    }
    let k = dist.dim();
    let top = level + k - 1;
    // 1-D rules per component and level.
    let mut cache: Vec<Vec<(Vec<f64>, Vec<f64>)>> = Vec::with_capacity(k);
    for m in &dist.marginals {
        let mut per_level = Vec::with_capacity(level);
        for l in 1..=level {
            per_level.push(adapt_rule(&family.rule(l, m)?, m));
        }
        cache.push(per_level);
    }
    let (mut nodes, mut weights) = (Vec::new(), Vec::new());
    let mut multi = vec![1usize; k];
    loop {
        let s: usize = multi.iter().sum();
        if s >= level && s <= top {
            let gap = top - s;
            let coeff = if gap.is_multiple_of(2) { 1.0 } else { -1.0 } * binomial(k - 1, gap);
            let comps: Vec<_> = multi.iter().enumerate().map(|(d, &l)| cache[d][l - 1].clone()).collect();
            tensor_product(&comps, coeff, &mut nodes, &mut weights);
            if nodes.len() > MAX_NODES {
                return Err(RomError::InvalidArgument(format!("sparse grid exceeds {MAX_NODES} nodes")));
            }
        }
        // Next multi-index in [1, level]^K.
        let mut d = k;
        loop {
            if d == 0 {
                let (nodes, weights) = merge_duplicates(&nodes, &weights, MERGE_TOL);
                return TrainingSet::new(nodes, weights, format!("smolyak[{family:?},level={level},K={k}]"));
            }
            d -= 1;
            multi[d] += 1;
            if multi[d] <= level {
                break;
            }
            multi[d] = 1;
        }
    }
}

/// Merges nodes that agree within `tol` in every coordinate, summing their weights.
/// Output is sorted lexicographically.
pub fn merge_duplicates(
    nodes: &[ParameterVector],
    weights: &[f64],
    tol: f64,
) -> (Vec<ParameterVector>, Vec<f64>) {
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&a, &b| {
        nodes[a]
            .iter()
            .zip(nodes[b].iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out_nodes: Vec<ParameterVector> = Vec::new();
    let mut out_weights: Vec<f64> = Vec::new();
    'next: for i in order {
        let y = &nodes[i];
        for j in (0..out_nodes.len()).rev() {
            let z = &out_nodes[j];
            if y[0] - z[0] > tol {
                break;
            }
            if y.iter().zip(z.iter()).all(|(a, b)| (a - b).abs() <= tol) {
                out_weights[j] += weights[i];
                continue 'next;
            }
        }
        out_nodes.push(y.clone());
        out_weights.push(weights[i]);
    }
    (out_nodes, out_weights)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McWeighting {
    /// Nodes drawn from `ρ`, weights `1/n`.
    Plain,
    /// Nodes drawn uniformly on `Γ`, weights `ρ(y_i)|Γ|/n`.
    DensityReweighted,
}

pub fn monte_carlo_rule(
    dist: &ParameterDistribution,
    n: usize,
    seed: u64,
    weighting: McWeighting,
) -> Result<TrainingSet> {
    if n == 0 {
        return Err(RomError::InvalidArgument("Monte-Carlo rule needs n ≥ 1".into()));
    }
    let nf = n as f64;
    match weighting {
        McWeighting::Plain => {
            let nodes = dist.sample(n, seed);
            TrainingSet::new(nodes, vec![1.0 / nf; n], format!("monte_carlo[plain,n={n},seed={seed}]"))
        }
        McWeighting::DensityReweighted => {
            let nodes = dist.uniform_on_support().sample(n, seed);
            let vol = dist.volume();
            let weights = nodes.iter().map(|y| dist.density(y) * vol / nf).collect();
            TrainingSet::new(nodes, weights, format!("monte_carlo[density_reweighted,n={n},seed={seed}]"))
        }
    }
}
