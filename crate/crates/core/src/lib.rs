//! Weighted reduced order methods (weighted greedy reduced basis and weighted POD) for
//! affinely parametrized elliptic problems with random inputs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;
pub mod fem;
pub mod linalg;
pub mod online;
pub mod param;
pub mod pod;
pub mod quadrature;
pub mod rb;
pub mod special;

pub use error::{Result, RomError};
pub use online::{expected_output, mean_square_error, reconstruct, reduced_solve, ErrorStats, TestSet};
pub use param::{ParameterDistribution, ParameterVector, WeightFunction};
pub use pod::{pod_build, PodSpectrum};
pub use rb::{greedy_build, ReducedBasis};
