use nalgebra::DVector;
use nalgebra_sparse::CsrMatrix;

use super::assembly;
use super::mesh::Mesh;
use crate::error::{Result, RomError};
use crate::linalg::{bilinear, restrict};

/// Discrete space of P1 fields with homogeneous Dirichlet conditions on the top and bottom
/// sides, together with the Gram matrix `X` of its inner product.
///
/// Coefficient vectors live on the free DOFs only (`n_dof` entries). Full-field vectors
/// interleave components per vertex: DOF `components * v + c`.
#[derive(Debug, Clone)]
pub struct TruthSpace {
    pub mesh: Mesh,
    pub components: usize,
    /// Full DOF → free DOF.
    pub free_index: Vec<Option<usize>>,
    /// Full DOF indices that are clamped.
    pub dirichlet: Vec<usize>,
    pub n_dof: usize,
    /// Inner-product matrix on the free DOFs.
    pub x: CsrMatrix<f64>,
}

impl TruthSpace {
    /// Displacement space (two components) with the H¹(D;R²) inner product.
    pub fn elasticity(n_sub: usize) -> Result<Self> {
        Self::with_components(n_sub, 2)
    }

    /// Scalar space with the H¹(D) inner product.
    pub fn scalar(n_sub: usize) -> Result<Self> {
        Self::with_components(n_sub, 1)
    }

    fn with_components(n_sub: usize, components: usize) -> Result<Self> {
        let mesh = Mesh::unit_square(n_sub)?;
        let n_full = components * mesh.n_vertices();
        let mut free_index = vec![None; n_full];
        let mut dirichlet = Vec::new();
        let mut n_dof = 0;
        for v in 0..mesh.n_vertices() {
            for c in 0..components {
                let d = components * v + c;
                if mesh.is_clamped(v) {
                    dirichlet.push(d);
                } else {
                    free_index[d] = Some(n_dof);
                    n_dof += 1;
                }
            }
        }
        let x_full = assembly::h1_gram_full(&mesh, components);
        let x = restrict(&x_full, &free_index, n_dof);
        Ok(Self { mesh, components, free_index, dirichlet, n_dof, x })
    }

    /// Replaces the inner product, e.g. by an energy product `Σ_q A_q`.
    pub fn set_inner_product(&mut self, x: CsrMatrix<f64>) -> Result<()> {
        self.check_len(x.nrows())?;
        self.x = x;
        Ok(())
    }

    pub fn n_full(&self) -> usize {
        self.free_index.len()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n_dof {
            return Err(RomError::DimensionMismatch { expected: self.n_dof, found: len });
        }
        Ok(())
    }

    pub fn v_inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        self.check_len(u.len())?;
        self.check_len(v.len())?;
        Ok(bilinear(&self.x, u, v))
    }

    pub fn v_norm(&self, u: &DVector<f64>) -> Result<f64> {
        Ok(self.v_inner(u, u)?.max(0.0).sqrt())
    }

    /// Expands free-DOF coefficients into a full field with zero Dirichlet values.
    pub fn expand(&self, coeffs: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(coeffs.len())?;
        let mut full = DVector::zeros(self.n_full());
        for (d, k) in self.free_index.iter().enumerate() {
            if let Some(k) = k {
                full[d] = coeffs[*k];
            }
        }
        Ok(full)
    }
}
