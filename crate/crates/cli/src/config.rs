//! Experiment configuration: a flat TOML document.
//!
//! ```toml
//! version = 1
//! n_sub = 16
//! alpha = 10.0
//! beta = 10.0
//! method = "pod_mc"
//! training_size = 100
//! training_seed = 1
//! test_size = 100
//! test_seed = 12345
//! eps_tol = 1e-12
//! n_max = 15
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use wrom::param::{ParameterDistribution, WeightFunction};
use wrom::quadrature::{
    gauss_legendre_1d, monte_carlo_rule, smolyak_rule, tensor_rule, McWeighting, SparseFamily, TrainingSet,
};
use wrom::rb::FirstPick;

use crate::CliError;

pub const CONFIG_VERSION: u32 = 1;

/// Training-set sizes used with `--full-scale`.
pub const FULL_SCALE_TRAINING_SIZE: usize = 500;
pub const FULL_SCALE_TENSOR_POINTS: usize = 3;
pub const FULL_SCALE_SMOLYAK_LEVEL: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    GreedyStandard,
    GreedyWeighted,
    PodStandard,
    PodUniformMc,
    PodMc,
    PodGaussLegendre,
    PodSparseGaussJacobi,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::GreedyStandard => "greedy_standard",
            Method::GreedyWeighted => "greedy_weighted",
            Method::PodStandard => "pod_standard",
            Method::PodUniformMc => "pod_uniform_mc",
            Method::PodMc => "pod_mc",
            Method::PodGaussLegendre => "pod_gauss_legendre",
            Method::PodSparseGaussJacobi => "pod_sparse_gauss_jacobi",
        }
    }

    pub fn is_greedy(&self) -> bool {
        matches!(self, Method::GreedyStandard | Method::GreedyWeighted)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    Uniform,
    Rho,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    /// `H¹` inner product.
    H1,
    /// Energy product of the reference operator.
    Energy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default = "defaults::n_sub")]
    pub n_sub: usize,
    pub alpha: f64,
    pub beta: f64,
    pub method: Method,
    /// Greedy training-node law; POD methods fix it.
    #[serde(default)]
    pub sampling: Option<Sampling>,
    /// Weight function; POD methods fix it and only accept the matching tag.
    #[serde(default)]
    pub weight: Option<WeightFunction>,
    #[serde(default = "defaults::training_size")]
    pub training_size: usize,
    #[serde(default = "defaults::tensor_points")]
    pub tensor_points: usize,
    #[serde(default = "defaults::smolyak_level")]
    pub smolyak_level: usize,
    #[serde(default = "defaults::training_seed")]
    pub training_seed: u64,
    #[serde(default = "defaults::eps_tol")]
    pub eps_tol: f64,
    #[serde(default = "defaults::n_max")]
    pub n_max: usize,
    #[serde(default = "defaults::first_pick")]
    pub first_pick: FirstPick,
    #[serde(default = "defaults::test_size")]
    pub test_size: usize,
    #[serde(default = "defaults::test_seed")]
    pub test_seed: u64,
    #[serde(default = "defaults::singular_cond_limit")]
    pub singular_cond_limit: f64,
    #[serde(default = "defaults::norm")]
    pub norm: Norm,
}

mod defaults {
    use super::*;

    pub fn n_sub() -> usize {
        16
    }
    pub fn training_size() -> usize {
        100
    }
    pub fn tensor_points() -> usize {
        3
    }
    pub fn smolyak_level() -> usize {
        4
    }
    pub fn training_seed() -> u64 {
        1
    }
    pub fn eps_tol() -> f64 {
        1e-12
    }
    pub fn n_max() -> usize {
        15
    }
    pub fn first_pick() -> FirstPick {
        FirstPick::FirstNode
    }
    pub fn test_size() -> usize {
        100
    }
    pub fn test_seed() -> u64 {
        12345
    }
    pub fn singular_cond_limit() -> f64 {
        wrom::rb::DEFAULT_COND_LIMIT
    }
    pub fn norm() -> Norm {
        Norm::H1
    }
}

/// Resolved training-set recipe.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPlan {
    pub sampling: Sampling,
    pub weight: WeightFunction,
}

fn reject(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| reject(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| reject(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Applies `--seed` and `--full-scale`.
    pub fn with_overrides(mut self, seed: Option<u64>, full_scale: bool) -> Self {
        if let Some(s) = seed {
            self.training_seed = s;
        }
        if full_scale {
            self.training_size = FULL_SCALE_TRAINING_SIZE;
            self.tensor_points = FULL_SCALE_TENSOR_POINTS;
            self.smolyak_level = FULL_SCALE_SMOLYAK_LEVEL;
        }
        self
    }

    pub fn distribution(&self) -> ParameterDistribution {
        ParameterDistribution::benchmark(self.alpha, self.beta)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.version != CONFIG_VERSION {
            return Err(reject(format!("unsupported config version {} (expected {CONFIG_VERSION})", self.version)));
        }
        if self.n_sub < 2 || !self.n_sub.is_multiple_of(2) {
            return Err(reject("n_sub must be even and at least 2"));
        }
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(reject("alpha and beta must be positive"));
        }
        if !(self.eps_tol > 0.0) {
            return Err(reject("eps_tol must be positive"));
        }
        if self.n_max == 0 || self.test_size == 0 || self.training_size == 0 {
            return Err(reject("n_max, test_size and training_size must be at least 1"));
        }
        if self.tensor_points == 0 || self.smolyak_level == 0 {
            return Err(reject("tensor_points and smolyak_level must be at least 1"));
        }
        if !(self.singular_cond_limit >= 1.0) {
            return Err(reject("singular_cond_limit must be at least 1"));
        }
        self.plan().map(|_| ())
    }

    /// Sampling and weighting implied by the method, checked against explicit settings.
    pub fn plan(&self) -> Result<TrainingPlan, CliError> {
        use Method::*;
        let (sampling, weight) = match self.method {
            GreedyStandard => {
                if let Some(w) = self.weight.filter(|w| *w != WeightFunction::One) {
                    return Err(reject(format!(
                        "greedy_standard is unweighted; weight '{}' needs method greedy_weighted",
                        w.tag()
                    )));
                }
                (self.sampling.unwrap_or(Sampling::Uniform), WeightFunction::One)
            }
            GreedyWeighted => {
                let w = self.weight.unwrap_or(WeightFunction::SqrtRho);
                if w == WeightFunction::One {
                    return Err(reject("greedy_weighted needs weight sqrt_rho or rho; use greedy_standard for 'one'"));
                }
                (self.sampling.unwrap_or(Sampling::Rho), w)
            }
            PodStandard => (Sampling::Uniform, WeightFunction::One),
            PodUniformMc => (Sampling::Uniform, WeightFunction::Rho),
            PodMc => {
                if self.weight == Some(WeightFunction::Rho) {
                    return Err(reject(
                        "pod_mc with rho weighting is rejected: nodes sampled from rho and weighted by rho \
                         have no interpretation as a quadrature rule for the expectation",
                    ));
                }
                (Sampling::Rho, WeightFunction::One)
            }
            PodGaussLegendre | PodSparseGaussJacobi => (Sampling::Uniform, WeightFunction::Rho),
        };
        if !self.method.is_greedy() {
            if let Some(w) = self.weight.filter(|w| *w != weight) {
                return Err(reject(format!(
                    "{} implies weight '{}', got '{}'",
                    self.method.tag(),
                    weight.tag(),
                    w.tag()
                )));
            }
            if let Some(s) = self.sampling.filter(|s| *s != sampling) {
                return Err(reject(format!("{} fixes its training nodes; sampling '{s:?}' not applicable", self.method.tag())));
            }
        }
        Ok(TrainingPlan { sampling, weight })
    }

    pub fn training_set(&self) -> Result<TrainingSet, CliError> {
        let dist = self.distribution();
        let plan = self.plan()?;
        let n = self.training_size;
        let seed = self.training_seed;
        let set = match self.method {
            Method::GreedyStandard | Method::GreedyWeighted => match plan.sampling {
                Sampling::Uniform => monte_carlo_rule(&dist.uniform_on_support(), n, seed, McWeighting::Plain),
                Sampling::Rho => monte_carlo_rule(&dist, n, seed, McWeighting::Plain),
            },
            Method::PodStandard => monte_carlo_rule(&dist.uniform_on_support(), n, seed, McWeighting::Plain),
            Method::PodUniformMc => monte_carlo_rule(&dist, n, seed, McWeighting::DensityReweighted),
            Method::PodMc => monte_carlo_rule(&dist, n, seed, McWeighting::Plain),
            Method::PodGaussLegendre => {
                let rule = gauss_legendre_1d(self.tensor_points);
                tensor_rule(&vec![rule; dist.dim()], &dist)
            }
            Method::PodSparseGaussJacobi => smolyak_rule(self.smolyak_level, SparseFamily::GaussJacobi, &dist),
        };
        set.map_err(|e| reject(e.to_string()))
    }

    /// Whether the training set depends on `training_seed`.
    pub fn uses_training_seed(&self) -> bool {
        !matches!(self.method, Method::PodGaussLegendre | Method::PodSparseGaussJacobi)
    }
}
