//! P1 finite elements for the parametrized truth problem on the unit square.

pub mod assembly;
pub mod export;
pub mod mesh;
pub mod space;
pub mod truth;

pub use assembly::{assemble_affine, thermal_block, AffineOperatorSet, Lame, Theta};
pub use mesh::{BoundaryTag, Mesh};
pub use space::TruthSpace;
pub use truth::{evaluate_output, solve_truth, Snapshot};

/// Elasticity truth space with elements-per-side `n_sub`.
pub fn build_truth_space(n_sub: usize) -> crate::Result<TruthSpace> {
    TruthSpace::elasticity(n_sub)
}
