//! Parameter space: independent shifted-scaled Beta marginals, densities, samplers and the
//! weight functions used by the weighted offline stages.

use std::ops::Deref;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::special::{beta_inc, beta_inc_inv, beta_pdf, ln_beta};

/// A realization `y = (y₁, …, y_K)` of the random input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector(pub Vec<f64>);

impl Deref for ParameterVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ParameterVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl From<&[f64]> for ParameterVector {
    fn from(v: &[f64]) -> Self {
        Self(v.to_vec())
    }
}

/// `(y − lo)/(hi − lo) ∼ Beta(alpha, beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaMarginal {
    pub alpha: f64,
    pub beta: f64,
    pub lo: f64,
    pub hi: f64,
}

impl BetaMarginal {
    pub fn new(alpha: f64, beta: f64, lo: f64, hi: f64) -> Self {
        assert!(alpha > 0.0 && beta > 0.0, "Beta shapes must be positive");
        assert!(hi > lo, "empty support");
        Self { alpha, beta, lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_uniform(&self) -> bool {
        self.alpha == 1.0 && self.beta == 1.0
    }

    pub fn to_unit(&self, y: f64) -> f64 {
        (y - self.lo) / self.width()
    }

    pub fn from_unit(&self, t: f64) -> f64 {
        self.lo + self.width() * t
    }

    pub fn pdf(&self, y: f64) -> f64 {
        if y < self.lo || y > self.hi {
            return 0.0;
        }
        beta_pdf(self.alpha, self.beta, self.to_unit(y)) / self.width()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        beta_inc(self.alpha, self.beta, self.to_unit(y))
    }

    pub fn quantile(&self, p: f64) -> f64 {
        self.from_unit(beta_inc_inv(self.alpha, self.beta, p))
    }

    pub fn mean(&self) -> f64 {
        self.from_unit(self.alpha / (self.alpha + self.beta))
    }

    /// Location of the density maximum (midpoint when the density is flat).
    pub fn mode(&self) -> f64 {
        let (a, b) = (self.alpha, self.beta);
        if a > 1.0 && b > 1.0 {
            self.from_unit((a - 1.0) / (a + b - 2.0))
        } else {
            self.from_unit(0.5)
        }
    }

    /// `ln B(α, β)`, exposed for callers that work in log space.
    pub fn ln_normalizer(&self) -> f64 {
        ln_beta(self.alpha, self.beta) + self.width().ln()
    }
}

/// Product of independent marginals; the support is `Γ = Π_i [lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterDistribution {
    pub marginals: Vec<BetaMarginal>,
}

impl ParameterDistribution {
    pub fn new(marginals: Vec<BetaMarginal>) -> Self {
        Self { marginals }
    }

    /// Six-parameter elasticity benchmark: `(yⁱ−1)/2 ∼ Beta(α,β)` for `i ≤ 4` and
    /// `(yⁱ−2)/4 ∼ Beta(α,β)` for `i = 5, 6`.
    pub fn benchmark(alpha: f64, beta: f64) -> Self {
        let mut m = vec![BetaMarginal::new(alpha, beta, 1.0, 3.0); 4];
        m.extend([BetaMarginal::new(alpha, beta, 2.0, 6.0); 2]);
        Self::new(m)
    }

    /// Uniform law on the same support.
    pub fn uniform_on_support(&self) -> Self {
        Self::new(self.marginals.iter().map(|m| BetaMarginal::new(1.0, 1.0, m.lo, m.hi)).collect())
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    /// `|Γ|`.
    pub fn volume(&self) -> f64 {
        self.marginals.iter().map(BetaMarginal::width).product()
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        y.len() == self.dim() && self.marginals.iter().zip(y).all(|(m, &v)| v >= m.lo && v <= m.hi)
    }

    /// `ρ(y) = Π_i ρ_i(y_i)`, zero outside `Γ`.
    pub fn density(&self, y: &[f64]) -> f64 {
        if !self.contains(y) {
            return 0.0;
        }
        self.marginals.iter().zip(y).map(|(m, &v)| m.pdf(v)).product()
    }

    pub fn mode(&self) -> ParameterVector {
        self.marginals.iter().map(BetaMarginal::mode).collect::<Vec<_>>().into()
    }

    /// `n` i.i.d. draws by per-component inverse-CDF sampling.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<ParameterVector> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                self.marginals
                    .iter()
                    .map(|m| m.quantile(open_unit(&mut rng)))
                    .collect::<Vec<_>>()
                    .into()
            })
            .collect()
    }
}

/// Uniform draw in the open interval `(0, 1)` with 53 random bits.
fn open_unit(rng: &mut impl Rng) -> f64 {
    ((rng.random::<u64>() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

/// Weight function `w(y)` for the weighted greedy estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightFunction {
    One,
    SqrtRho,
    Rho,
}

impl WeightFunction {
    pub fn eval(&self, dist: &ParameterDistribution, y: &[f64]) -> f64 {
        match self {
            WeightFunction::One => weight_one(y),
            WeightFunction::SqrtRho => weight_sqrt_rho(dist, y),
            WeightFunction::Rho => weight_rho(dist, y),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            WeightFunction::One => "one",
            WeightFunction::SqrtRho => "sqrt_rho",
            WeightFunction::Rho => "rho",
        }
    }
}

pub fn weight_one(_y: &[f64]) -> f64 {
    1.0
}

pub fn weight_sqrt_rho(dist: &ParameterDistribution, y: &[f64]) -> f64 {
    dist.density(y).sqrt()
}

pub fn weight_rho(dist: &ParameterDistribution, y: &[f64]) -> f64 {
    dist.density(y)
}
