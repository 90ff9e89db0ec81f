//! P1 element kernels and global assembly of the affine operator set.

use nalgebra::DVector;
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use serde::{Deserialize, Serialize};

use super::mesh::{BoundaryTag, Mesh};
use super::space::TruthSpace;
use crate::error::{Result, RomError};
use crate::linalg::{combine_same_pattern, on_common_pattern, restrict, restrict_vector};

/// Coefficient map `θ_q(y)` of one affine term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Theta {
    /// `θ(y) = y[i]`.
    Param(usize),
    Constant(f64),
}

impl Theta {
    pub fn eval(&self, y: &[f64]) -> f64 {
        match *self {
            Theta::Param(i) => y[i],
            Theta::Constant(c) => c,
        }
    }

    /// Value at the reference parameter used by the min-theta coercivity bound.
    pub fn reference(&self) -> f64 {
        match *self {
            Theta::Param(_) => 1.0,
            Theta::Constant(c) => c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lame {
    pub lambda: f64,
    pub mu: f64,
}

impl Lame {
    pub fn from_young_poisson(young: f64, poisson: f64) -> Self {
        Self {
            lambda: young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson)),
            mu: young / (2.0 * (1.0 + poisson)),
        }
    }

    /// `E = 1`, `ν = 0.3`.
    pub fn benchmark() -> Self {
        Self::from_young_poisson(1.0, 0.3)
    }
}

/// Parameter-independent operators `{A_q}`, loads `{f_q}` and their coefficient maps, so
/// that `A(y) = Σ_q θ_q(y) A_q` and `f(y) = Σ_q θ_q(y) f_q` on the free DOFs.
#[derive(Debug, Clone)]
pub struct AffineOperatorSet {
    /// Stored on one shared sparsity pattern.
    pub a_terms: Vec<CsrMatrix<f64>>,
    pub a_theta: Vec<Theta>,
    pub f_terms: Vec<DVector<f64>>,
    pub f_theta: Vec<Theta>,
    pub lame: Option<Lame>,
    pub n_params: usize,
}

impl AffineOperatorSet {
    pub fn new(
        a_terms: Vec<CsrMatrix<f64>>,
        a_theta: Vec<Theta>,
        f_terms: Vec<DVector<f64>>,
        f_theta: Vec<Theta>,
        n_params: usize,
    ) -> Result<Self> {
        if a_terms.is_empty() || a_terms.len() != a_theta.len() || f_terms.len() != f_theta.len() {
            return Err(RomError::InvalidArgument(
                "affine terms and coefficient maps must pair up".into(),
            ));
        }
        let n = a_terms[0].nrows();
        for f in &f_terms {
            if f.len() != n {
                return Err(RomError::DimensionMismatch { expected: n, found: f.len() });
            }
        }
        for t in a_theta.iter().chain(&f_theta) {
            if let Theta::Param(i) = t {
                if *i >= n_params {
                    return Err(RomError::InvalidArgument(format!(
                        "coefficient map refers to component {i} of a {n_params}-parameter vector"
                    )));
                }
            }
        }
        Ok(Self {
            a_terms: on_common_pattern(&a_terms),
            a_theta,
            f_terms,
            f_theta,
            lame: None,
            n_params,
        })
    }

    pub fn n_dof(&self) -> usize {
        self.a_terms[0].nrows()
    }

    pub fn theta_a(&self, y: &[f64]) -> Vec<f64> {
        self.a_theta.iter().map(|t| t.eval(y)).collect()
    }

    pub fn theta_f(&self, y: &[f64]) -> Vec<f64> {
        self.f_theta.iter().map(|t| t.eval(y)).collect()
    }

    /// Rejects parameters of the wrong length or with a non-positive operator coefficient.
    pub fn check_parameter(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.n_params {
            return Err(RomError::DimensionMismatch { expected: self.n_params, found: y.len() });
        }
        for t in &self.a_theta {
            let v = t.eval(y);
            if !(v > 0.0) {
                let index = match t {
                    Theta::Param(i) => *i,
                    Theta::Constant(_) => usize::MAX,
                };
                return Err(RomError::NonPositiveParameter { index, value: v, y: y.to_vec() });
            }
        }
        Ok(())
    }

    pub fn operator(&self, y: &[f64]) -> CsrMatrix<f64> {
        combine_same_pattern(&self.a_terms, &self.theta_a(y))
    }

    /// `Σ_q θ_q(ȳ) A_q` at the reference parameter (all parametric coefficients equal to 1).
    pub fn reference_operator(&self) -> CsrMatrix<f64> {
        let c: Vec<f64> = self.a_theta.iter().map(Theta::reference).collect();
        combine_same_pattern(&self.a_terms, &c)
    }

    /// Freezes every parameter not listed in `free` at its value in `base`; the result is
    /// parametrized by `y' = (y[free[0]], y[free[1]], …)`.
    pub fn restrict_parameters(&self, free: &[usize], base: &[f64]) -> Result<Self> {
        if base.len() != self.n_params {
            return Err(RomError::DimensionMismatch { expected: self.n_params, found: base.len() });
        }
        if let Some(&bad) = free.iter().find(|&&i| i >= self.n_params) {
            return Err(RomError::InvalidArgument(format!("parameter index {bad} out of range")));
        }
        let map = |t: &Theta| match *t {
            Theta::Param(i) => match free.iter().position(|&j| j == i) {
                Some(k) => Theta::Param(k),
                None => Theta::Constant(base[i]),
            },
            c => c,
        };
        Ok(Self {
            a_terms: self.a_terms.clone(),
            a_theta: self.a_theta.iter().map(map).collect(),
            f_terms: self.f_terms.clone(),
            f_theta: self.f_theta.iter().map(map).collect(),
            lame: self.lame,
            n_params: free.len(),
        })
    }

    pub fn load(&self, y: &[f64]) -> DVector<f64> {
        let mut f = DVector::zeros(self.n_dof());
        for (fq, t) in self.f_terms.iter().zip(&self.f_theta) {
            f.axpy(t.eval(y), fq, 1.0);
        }
        f
    }
}

/// Barycentric gradients and (positive) area of a P1 triangle.
pub fn p1_gradients(p: [[f64; 2]; 3]) -> ([[f64; 2]; 3], f64) {
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        g[i] = [(p[j][1] - p[k][1]) / det, (p[k][0] - p[j][0]) / det];
    }
    (g, 0.5 * det.abs())
}

/// Element matrix of `∫ λ (∇·u)(∇·v) + 2μ e(u):e(v)`, local DOF order `(node, component)`.
pub fn elasticity_element(p: [[f64; 2]; 3], lame: Lame) -> [[f64; 6]; 6] {
    let (g, area) = p1_gradients(p);
    // grad of φ = N_i e_c has row c equal to ∇N_i.
    let grad = |a: usize| {
        let (i, c) = (a / 2, a % 2);
        let mut m = [[0.0; 2]; 2];
        m[c] = g[i];
        m
    };
    let mut k = [[0.0; 6]; 6];
    for a in 0..6 {
        let ga = grad(a);
        for b in 0..6 {
            let gb = grad(b);
            let div = (ga[0][0] + ga[1][1]) * (gb[0][0] + gb[1][1]);
            let mut ee = 0.0;
            for r in 0..2 {
                for s in 0..2 {
                    let ea = 0.5 * (ga[r][s] + ga[s][r]);
                    let eb = 0.5 * (gb[r][s] + gb[s][r]);
                    ee += ea * eb;
                }
            }
            k[a][b] = area * (lame.lambda * div + 2.0 * lame.mu * ee);
        }
    }
    k
}

pub fn scalar_stiffness_element(p: [[f64; 2]; 3]) -> [[f64; 3]; 3] {
    let (g, area) = p1_gradients(p);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
        }
    }
    k
}

pub fn scalar_mass_element(p: [[f64; 2]; 3]) -> [[f64; 3]; 3] {
    let (_, area) = p1_gradients(p);
    let mut m = [[area / 12.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = area / 6.0;
    }
    m
}

/// Unconstrained elasticity operator with a per-subdomain coefficient.
pub fn elasticity_full(mesh: &Mesh, lame: Lame, coeff: impl Fn(u8) -> f64) -> CsrMatrix<f64> {
    let n = 2 * mesh.n_vertices();
    let mut coo = CooMatrix::new(n, n);
    for t in 0..mesh.triangles.len() {
        let c = coeff(mesh.subdomain[t]);
        let ke = elasticity_element(mesh.triangle_coords(t), lame);
        let tri = mesh.triangles[t];
        for a in 0..6 {
            for b in 0..6 {
                coo.push(2 * tri[a / 2] + a % 2, 2 * tri[b / 2] + b % 2, c * ke[a][b]);
            }
        }
    }
    CsrMatrix::from(&coo)
}

fn scalar_full(
    mesh: &Mesh,
    components: usize,
    element: impl Fn(usize) -> Option<[[f64; 3]; 3]>,
) -> CsrMatrix<f64> {
    let n = components * mesh.n_vertices();
    let mut coo = CooMatrix::new(n, n);
    for t in 0..mesh.triangles.len() {
        let Some(ke) = element(t) else { continue };
        let tri = mesh.triangles[t];
        for c in 0..components {
            for i in 0..3 {
                for j in 0..3 {
                    coo.push(components * tri[i] + c, components * tri[j] + c, ke[i][j]);
                }
            }
        }
    }
    CsrMatrix::from(&coo)
}

pub fn scalar_stiffness_full(mesh: &Mesh) -> CsrMatrix<f64> {
    scalar_full(mesh, 1, |t| Some(scalar_stiffness_element(mesh.triangle_coords(t))))
}

pub fn scalar_mass_full(mesh: &Mesh) -> CsrMatrix<f64> {
    scalar_full(mesh, 1, |t| Some(scalar_mass_element(mesh.triangle_coords(t))))
}

/// Full H¹ Gram matrix (mass plus gradient stiffness), block-diagonal over components.
pub fn h1_gram_full(mesh: &Mesh, components: usize) -> CsrMatrix<f64> {
    scalar_full(mesh, components, |t| {
        let p = mesh.triangle_coords(t);
        let (k, m) = (scalar_stiffness_element(p), scalar_mass_element(p));
        let mut e = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                e[i][j] = k[i][j] + m[i][j];
            }
        }
        Some(e)
    })
}

/// `∫_segment v₂ dx₂` over the boundary edges carrying `tag`, as an unconstrained vector.
pub fn traction_full(mesh: &Mesh, tag: BoundaryTag) -> DVector<f64> {
    let mut f = DVector::zeros(2 * mesh.n_vertices());
    for e in mesh.boundary.iter().filter(|e| e.tag == tag) {
        let [a, b] = e.vertices;
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
        f[2 * a + 1] += 0.5 * len;
        f[2 * b + 1] += 0.5 * len;
    }
    f
}

/// Elasticity operator restricted to the free DOFs with `coeff(subdomain)` scaling.
pub fn elasticity_operator(space: &TruthSpace, lame: Lame, coeff: impl Fn(u8) -> f64) -> CsrMatrix<f64> {
    restrict(&elasticity_full(&space.mesh, lame, coeff), &space.free_index, space.n_dof)
}

/// Affine decomposition of the six-parameter elasticity problem: `θ_a = (y¹..y⁴)` on the
/// four quadrants and `θ_f = (y⁵, y⁶)` on the lower and upper halves of the right side.
pub fn assemble_affine(space: &TruthSpace, lame: Lame) -> Result<AffineOperatorSet> {
    if space.components != 2 {
        return Err(RomError::InvalidArgument("elasticity needs a two-component space".into()));
    }
    let a_terms = (1..=4u8)
        .map(|q| elasticity_operator(space, lame, |s| if s == q { 1.0 } else { 0.0 }))
        .collect();
    let f_terms = [BoundaryTag::RightLower, BoundaryTag::RightUpper]
        .into_iter()
        .map(|tag| restrict_vector(&traction_full(&space.mesh, tag), &space.free_index, space.n_dof))
        .collect();
    let mut ops = AffineOperatorSet::new(
        a_terms,
        (0..4).map(Theta::Param).collect(),
        f_terms,
        vec![Theta::Param(4), Theta::Param(5)],
        6,
    )?;
    ops.lame = Some(lame);
    Ok(ops)
}

/// Two-parameter scalar diffusion with a unit source, one coefficient on the lower-left
/// quadrant and one on the rest: `A(y) = y¹ A_{D1} + y² A_{D2∪D3∪D4}`, `f = ∫ v`.
pub fn thermal_block(space: &TruthSpace) -> Result<AffineOperatorSet> {
    if space.components != 1 {
        return Err(RomError::InvalidArgument("thermal block needs a scalar space".into()));
    }
    let mesh = &space.mesh;
    let block = |outer: bool| {
        let full = scalar_full(mesh, 1, |t| {
            ((mesh.subdomain[t] != 1) == outer).then(|| scalar_stiffness_element(mesh.triangle_coords(t)))
        });
        restrict(&full, &space.free_index, space.n_dof)
    };
    let mut load = DVector::zeros(mesh.n_vertices());
    for t in 0..mesh.triangles.len() {
        let a = mesh.triangle_area(t);
        for v in mesh.triangles[t] {
            load[v] += a / 3.0;
        }
    }
    AffineOperatorSet::new(
        vec![block(false), block(true)],
        vec![Theta::Param(0), Theta::Param(1)],
        vec![restrict_vector(&load, &space.free_index, space.n_dof)],
        vec![Theta::Constant(1.0)],
        2,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::bilinear;
    use nalgebra::DMatrix;

    #[test]
    fn lame_constants() {
        let l = Lame::benchmark();
        assert!((l.lambda - 0.3 / (1.3 * 0.4)).abs() < 1e-15);
        assert!((l.mu - 1.0 / 2.6).abs() < 1e-15);
    }

    #[test]
    fn rigid_translation_has_zero_energy() {
        let mesh = Mesh::unit_square(6).unwrap();
        for q in 1..=4u8 {
            let a = elasticity_full(&mesh, Lame::benchmark(), |s| if s == q { 1.0 } else { 0.0 });
            for comp in 0..2 {
                let u = DVector::from_fn(2 * mesh.n_vertices(), |d, _| if d % 2 == comp { 1.7 } else { 0.0 });
                assert!(bilinear(&a, &u, &u).abs() < 1e-12);
            }
            // Infinitesimal rotation (−x₂, x₁) is strain free too.
            let u = DVector::from_fn(2 * mesh.n_vertices(), |d, _| {
                let p = mesh.vertices[d / 2];
                if d % 2 == 0 { -p[1] } else { p[0] }
            });
            assert!(bilinear(&a, &u, &u).abs() < 1e-12);
        }
    }

    #[test]
    fn traction_support_and_total() {
        let mesh = Mesh::unit_square(8).unwrap();
        let f1 = traction_full(&mesh, BoundaryTag::RightLower);
        let f2 = traction_full(&mesh, BoundaryTag::RightUpper);
        assert!((f1.sum() - 0.5).abs() < 1e-14);
        assert!((f2.sum() - 0.5).abs() < 1e-14);
        for d in 0..f1.len() {
            if f1[d] != 0.0 {
                let p = mesh.vertices[d / 2];
                assert_eq!(d % 2, 1);
                assert!(p[0] == 1.0 && p[1] <= 0.5);
            }
        }
    }

    #[test]
    fn affine_sum_matches_monolithic_assembly() {
        let space = TruthSpace::elasticity(8).unwrap();
        let ops = assemble_affine(&space, Lame::benchmark()).unwrap();
        let mono = elasticity_operator(&space, Lame::benchmark(), |_| 1.0);
        let sum = ops.operator(&[1.0, 1.0, 1.0, 1.0, 0.0, 0.0]);
        let diff = DMatrix::from(&mono) - DMatrix::from(&sum);
        assert!(diff.amax() < 1e-12);
    }

    #[test]
    fn subdomain_operators_are_psd_and_sum_is_pd() {
        let space = TruthSpace::elasticity(4).unwrap();
        let ops = assemble_affine(&space, Lame::benchmark()).unwrap();
        let mut sum = DMatrix::zeros(space.n_dof, space.n_dof);
        for a in &ops.a_terms {
            let d = DMatrix::from(a);
            assert!((&d - d.transpose()).amax() < 1e-13);
            let ev = nalgebra::SymmetricEigen::new(d.clone()).eigenvalues;
            assert!(ev.min() > -1e-12);
            sum += d;
        }
        assert!(nalgebra::SymmetricEigen::new(sum).eigenvalues.min() > 1e-6);
    }

    #[test]
    fn rejects_nonpositive_material() {
        let space = TruthSpace::elasticity(2).unwrap();
        let ops = assemble_affine(&space, Lame::benchmark()).unwrap();
        let err = ops.check_parameter(&[1.0, 0.0, 1.0, 1.0, 1.0, 1.0]).unwrap_err();
        assert!(matches!(err, RomError::NonPositiveParameter { index: 1, .. }));
        assert!(ops.check_parameter(&[1.0; 5]).is_err());
    }
}
