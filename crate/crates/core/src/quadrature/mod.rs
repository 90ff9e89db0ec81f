//! One-dimensional rules and the training sets built from them.

mod rule1d;
mod training;

pub use rule1d::{
    clenshaw_curtis_1d, clenshaw_curtis_size, gauss_jacobi_1d, gauss_legendre_1d, Measure, Rule1D, RuleFamily,
};
pub use training::{
    merge_duplicates, monte_carlo_rule, smolyak_rule, tensor_rule, McWeighting, SparseFamily, TrainingSet,
    MAX_NODES, MERGE_TOL,
};
