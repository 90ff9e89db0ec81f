//! One-dimensional rules on the reference interval `[0, 1]`, with weights normalized
//! against a probability measure on that interval.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Result, RomError};
use crate::special::beta_pdf;

/// Probability measure on `[0, 1]` that a rule's weights integrate against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Measure {
    Uniform,
    Beta { alpha: f64, beta: f64 },
}

impl Measure {
    pub fn density(&self, t: f64) -> f64 {
        match *self {
            Measure::Uniform => {
                if (0.0..=1.0).contains(&t) { 1.0 } else { 0.0 }
            }
            Measure::Beta { alpha, beta } => beta_pdf(alpha, beta, t),
        }
    }

    pub fn of_shape(alpha: f64, beta: f64) -> Self {
        if alpha == 1.0 && beta == 1.0 {
            Measure::Uniform
        } else {
            Measure::Beta { alpha, beta }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RuleFamily {
    GaussLegendre { n: usize },
    GaussJacobi { n: usize, alpha: f64, beta: f64 },
    ClenshawCurtis { level: usize },
    MonteCarlo { n: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule1D {
    /// Ascending nodes in `[0, 1]`.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub family: RuleFamily,
    pub measure: Measure,
}

impl Rule1D {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// `n`-point Gauss–Legendre rule for the uniform probability measure on `[0, 1]`, computed by
/// Newton iteration on the Legendre polynomial `P_n`.
pub fn gauss_legendre_1d(n: usize) -> Rule1D {
    assert!(n >= 1, "a rule needs at least one node");
    let legendre = |x: f64| {
        // Returns (P_n(x), P_n'(x)).
        let (mut p0, mut p1) = (1.0, x);
        if n == 1 {
            return (p1, 1.0);
        }
        for k in 2..=n {
            let k = k as f64;
            let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        (p1, dp)
    };
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        if n % 2 == 1 && i == n / 2 {
            x = 0.0;
        }
        let (_, dp) = legendre(x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Map [-1, 1] → [0, 1] and halve for the probability measure.
        nodes[i] = 0.5 - 0.5 * x;
        nodes[n - 1 - i] = 0.5 + 0.5 * x;
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    Rule1D { nodes, weights, family: RuleFamily::GaussLegendre { n }, measure: Measure::Uniform }
}

/// Three-term recurrence coefficients `(a_k, b_k)` of the monic orthogonal polynomials for
/// Beta(alpha, beta) on `[0, 1]`, for `k = 0..=n`. `b_0` is unused.
fn beta_recurrence(n: usize, alpha: f64, beta: f64) -> (Vec<f64>, Vec<f64>) {
    // Jacobi weight (1-x)^a (1+x)^b on [-1, 1] with t = (1 + x)/2.
    let (a, b) = (beta - 1.0, alpha - 1.0);
    let ab = a + b;
    let mut diag = Vec::with_capacity(n + 1);
    let mut off = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let kf = k as f64;
        let ak = if k == 0 {
            (b - a) / (ab + 2.0)
        } else {
            (b * b - a * a) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        let bk = match k {
            0 => 0.0,
            1 => 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab)),
            _ => {
                let s = 2.0 * kf + ab;
                4.0 * kf * (kf + a) * (kf + b) * (kf + ab) / (s * s * (s + 1.0) * (s - 1.0))
            }
        };
        diag.push(0.5 * (1.0 + ak));
        off.push(0.25 * bk);
    }
    (diag, off)
}

/// Orthonormal polynomials `p_0..p_n` and derivative of `p_n` at `t`.
fn orthonormal_values(t: f64, diag: &[f64], off: &[f64], n: usize) -> (Vec<f64>, f64) {
    let mut p = vec![0.0; n + 1];
    let mut dp = vec![0.0; n + 1];
    p[0] = 1.0;
    for k in 0..n {
        let sb_next = off[k + 1].sqrt();
        let prev = if k > 0 { p[k - 1] } else { 0.0 };
        let dprev = if k > 0 { dp[k - 1] } else { 0.0 };
        let sb = if k > 0 { off[k].sqrt() } else { 0.0 };
        p[k + 1] = ((t - diag[k]) * p[k] - sb * prev) / sb_next;
        dp[k + 1] = (p[k] + (t - diag[k]) * dp[k] - sb * dprev) / sb_next;
    }
    (p, dp[n])
}

/// `n`-point Gauss rule for the Beta(alpha, beta) probability measure on `[0, 1]`
/// (Gauss–Jacobi with exponents `a = beta − 1`, `b = alpha − 1`), via the Golub–Welsch
/// eigenvalue construction. Nodes are polished by Newton steps on the orthonormal
/// polynomial and weights taken from the Christoffel function.
pub fn gauss_jacobi_1d(n: usize, alpha: f64, beta: f64) -> Result<Rule1D> {
    if n == 0 {
        return Err(RomError::InvalidArgument("a rule needs at least one node".into()));
    }
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(RomError::InvalidArgument(format!("Beta shapes must be positive, got ({alpha}, {beta})")));
    }
    let (diag, off) = beta_recurrence(n, alpha, beta);
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diag[i]
        } else if i + 1 == j {
            off[j].sqrt()
        } else if j + 1 == i {
            off[i].sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::try_new(jacobi, 1e-16, 100_000)
        .ok_or_else(|| RomError::EigenFailure(format!("Jacobi matrix of order {n}")))?;
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(f64::total_cmp);
    let mut weights = Vec::with_capacity(n);
    for t in nodes.iter_mut() {
        for _ in 0..3 {
            let (p, dpn) = orthonormal_values(*t, &diag, &off, n);
            let step = p[n] / dpn;
            if !step.is_finite() || step.abs() > 1e-6 {
                break;
            }
            *t -= step;
            if step.abs() < 1e-17 {
                break;
            }
        }
        let (p, _) = orthonormal_values(*t, &diag, &off, n);
        let s: f64 = p[..n].iter().map(|v| v * v).sum();
        weights.push(1.0 / s);
    }
    if alpha == beta && n % 2 == 1 {
        nodes[n / 2] = 0.5;
    }
    Ok(Rule1D {
        nodes,
        weights,
        family: RuleFamily::GaussJacobi { n, alpha, beta },
        measure: Measure::of_shape(alpha, beta),
    })
}

/// Number of nodes of the nested Clenshaw–Curtis rule at `level` (`1 → 1`, `l → 2^{l−1}+1`).
pub fn clenshaw_curtis_size(level: usize) -> usize {
    if level <= 1 { 1 } else { (1 << (level - 1)) + 1 }
}

/// Nested Clenshaw–Curtis rule for the uniform probability measure on `[0, 1]`.
pub fn clenshaw_curtis_1d(level: usize) -> Result<Rule1D> {
    if level == 0 {
        return Err(RomError::InvalidArgument("Clenshaw–Curtis level starts at 1".into()));
    }
    let family = RuleFamily::ClenshawCurtis { level };
    if level == 1 {
        return Ok(Rule1D { nodes: vec![0.5], weights: vec![1.0], family, measure: Measure::Uniform });
    }
    let m = clenshaw_curtis_size(level) - 1;
    let mf = m as f64;
    let mut pairs: Vec<(f64, f64)> = (0..=m)
        .map(|j| {
            // sin form keeps the center exactly at 0 and nested levels bitwise equal.
            let x = (((m as i64 - 2 * j as i64) as f64) * PI / (2.0 * mf)).sin();
            let c = if j == 0 || j == m { 1.0 } else { 2.0 };
            let mut s = 0.0;
            for k in 1..=m / 2 {
                let b = if 2 * k == m { 1.0 } else { 2.0 };
                s += b / (4.0 * (k * k) as f64 - 1.0) * (2.0 * PI * (k * j) as f64 / mf).cos();
            }
            (0.5 + 0.5 * x, 0.5 * c / mf * (1.0 - s))
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(Rule1D {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
        family,
        measure: Measure::Uniform,
    })
}
