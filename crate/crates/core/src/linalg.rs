//! Sparse and dense linear-algebra helpers shared by the truth and reduced stages.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CsrMatrix};

/// `y = A x` for a CSR matrix.
pub fn spmv(a: &CsrMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    assert_eq!(a.ncols(), x.len(), "spmv: dimension mismatch");
    let (offsets, cols, vals) = a.csr_data();
    DVector::from_iterator(
        a.nrows(),
        offsets.windows(2).map(|w| {
            (w[0]..w[1]).map(|k| vals[k] * x[cols[k]]).sum::<f64>()
        }),
    )
}

/// `uᵀ A v`.
pub fn bilinear(a: &CsrMatrix<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    u.dot(&spmv(a, v))
}

/// Re-expresses every matrix on the union of their sparsity patterns, storing explicit zeros
/// where a matrix has no entry. All returned matrices share one pattern, so a linear
/// combination reduces to an axpy over their value arrays.
pub fn on_common_pattern(mats: &[CsrMatrix<f64>]) -> Vec<CsrMatrix<f64>> {
    let Some(first) = mats.first() else {
        return Vec::new();
    };
    let (nrows, ncols) = (first.nrows(), first.ncols());
    let mut rows: Vec<BTreeMap<usize, ()>> = vec![BTreeMap::new(); nrows];
    for m in mats {
        assert_eq!((m.nrows(), m.ncols()), (nrows, ncols));
        for (i, j, _) in m.triplet_iter() {
            rows[i].insert(j, ());
        }
    }
    let mut offsets = Vec::with_capacity(nrows + 1);
    let mut cols = Vec::new();
    offsets.push(0);
    for r in &rows {
        cols.extend(r.keys().copied());
        offsets.push(cols.len());
    }
    mats.iter()
        .map(|m| {
            let mut vals = vec![0.0; cols.len()];
            for (i, j, v) in m.triplet_iter() {
                let row = &cols[offsets[i]..offsets[i + 1]];
                let k = row.binary_search(&j).expect("entry in union pattern");
                vals[offsets[i] + k] += *v;
            }
            CsrMatrix::try_from_csr_data(nrows, ncols, offsets.clone(), cols.clone(), vals)
                .expect("valid union pattern")
        })
        .collect()
}

/// `Σ c_q M_q` for matrices that share a pattern (see [`on_common_pattern`]).
pub fn combine_same_pattern(mats: &[CsrMatrix<f64>], coeffs: &[f64]) -> CsrMatrix<f64> {
    assert_eq!(mats.len(), coeffs.len());
    assert!(!mats.is_empty());
    let mut out = mats[0].clone();
    for (v, &x) in out.values_mut().iter_mut().zip(mats[0].values()) {
        *v = coeffs[0] * x;
    }
    for (m, &c) in mats.iter().zip(coeffs).skip(1) {
        debug_assert_eq!(m.col_indices(), out.col_indices());
        for (v, &x) in out.values_mut().iter_mut().zip(m.values()) {
            *v += c * x;
        }
    }
    out
}

/// Keeps only the rows and columns listed in `keep` (old index → new index).
pub fn restrict(full: &CsrMatrix<f64>, keep: &[Option<usize>], n: usize) -> CsrMatrix<f64> {
    let mut coo = CooMatrix::new(n, n);
    for (i, j, v) in full.triplet_iter() {
        if let (Some(a), Some(b)) = (keep[i], keep[j]) {
            coo.push(a, b, *v);
        }
    }
    CsrMatrix::from(&coo)
}

pub fn restrict_vector(full: &DVector<f64>, keep: &[Option<usize>], n: usize) -> DVector<f64> {
    let mut out = DVector::zeros(n);
    for (i, k) in keep.iter().enumerate() {
        if let Some(k) = k {
            out[*k] = full[i];
        }
    }
    out
}

/// Sparse Cholesky factorization of a symmetric positive-definite matrix.
pub struct SpdSolver {
    chol: CscCholesky<f64>,
}

impl SpdSolver {
    pub fn new(a: &CsrMatrix<f64>) -> Result<Self, String> {
        // A symmetric CSR matrix reinterpreted as CSC is the same matrix.
        let csc = a.clone().transpose_as_csc();
        CscCholesky::factor(&csc)
            .map(|chol| Self { chol })
            .map_err(|e| format!("sparse Cholesky failed: {e:?}"))
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let x = self.chol.solve(b);
        x.column(0).into_owned()
    }

    pub fn solve_many(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    /// `Lᵀ B` for the factor `A = L Lᵀ`, so that `(LᵀB)ᵀ(LᵀB) = Bᵀ A B`.
    pub fn factor_transpose_mul(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let lt = self.chol.l().transpose();
        &lt * b
    }
}

/// Incremental modified Gram–Schmidt in an inner product `⟨u, v⟩ = uᵀ X v`.
///
/// Each candidate is orthogonalized twice against the accepted columns.
pub struct XOrthonormalizer<'a> {
    x: &'a CsrMatrix<f64>,
    columns: Vec<DVector<f64>>,
    x_columns: Vec<DVector<f64>>,
}

impl<'a> XOrthonormalizer<'a> {
    pub fn new(x: &'a CsrMatrix<f64>) -> Self {
        Self { x, columns: Vec::new(), x_columns: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Orthonormalizes `v` against the current columns. Returns `None` (and leaves the basis
    /// unchanged) when the remaining norm is below `rel_tol` times the original norm.
    pub fn try_push(&mut self, v: &DVector<f64>, rel_tol: f64) -> Option<&DVector<f64>> {
        let pre = bilinear(self.x, v, v).max(0.0).sqrt();
        if pre == 0.0 || !pre.is_finite() {
            return None;
        }
        let mut w = v.clone();
        for _pass in 0..2 {
            for (z, xz) in self.columns.iter().zip(&self.x_columns) {
                let c = xz.dot(&w);
                w.axpy(-c, z, 1.0);
            }
        }
        let xw = spmv(self.x, &w);
        let post = w.dot(&xw).max(0.0).sqrt();
        if post < rel_tol * pre {
            return None;
        }
        w /= post;
        self.x_columns.push(xw / post);
        self.columns.push(w);
        self.columns.last()
    }

    pub fn last(&self) -> Option<&DVector<f64>> {
        self.columns.last()
    }

    pub fn into_matrix(self, n_rows: usize) -> DMatrix<f64> {
        columns_to_matrix(&self.columns, n_rows)
    }
}

pub fn columns_to_matrix(cols: &[DVector<f64>], n_rows: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n_rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}

/// `A Z` column by column.
pub fn apply_columns(a: &CsrMatrix<f64>, z: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), z.ncols());
    for (j, c) in z.column_iter().enumerate() {
        out.set_column(j, &spmv(a, &c.into_owned()));
    }
    out
}

/// `Zᵀ A Z` for sparse `A` and dense `Z`.
pub fn project(a: &CsrMatrix<f64>, z: &DMatrix<f64>) -> DMatrix<f64> {
    if z.ncols() == 0 {
        return DMatrix::zeros(0, 0);
    }
    z.transpose() * apply_columns(a, z)
}

/// Smallest eigenvalue of the symmetric-definite pencil `A u = λ X u` by block inverse
/// subspace iteration with Rayleigh–Ritz. `A` and `X` must both be SPD.
pub fn smallest_generalized_eigenvalue(
    a: &CsrMatrix<f64>,
    x: &CsrMatrix<f64>,
    rel_tol: f64,
    max_iter: usize,
) -> Result<f64, String> {
    let n = a.nrows();
    let solver = SpdSolver::new(a)?;
    let block = n.min(6);
    // Deterministic start block: smooth plus oscillating columns.
    let mut v = DMatrix::from_fn(n, block, |i, j| {
        let t = (i as f64 + 1.0) / (n as f64 + 1.0);
        ((j as f64 + 1.0) * std::f64::consts::PI * t).sin() + 1e-3 * ((i * (j + 3)) % 7) as f64
    });
    let mut last = f64::INFINITY;
    for _ in 0..max_iter {
        let xv = DMatrix::from_columns(
            &v.column_iter().map(|c| spmv(x, &c.into_owned())).collect::<Vec<_>>(),
        );
        let w = solver.solve_many(&xv);
        let aw = project(a, &w);
        let xw = project(x, &w);
        let (vals, vecs) = small_generalized_eig(&aw, &xw)?;
        let theta = vals[0];
        v = &w * vecs;
        // Normalize columns to keep the iteration well scaled.
        for mut c in v.column_iter_mut() {
            let nrm = c.norm();
            if nrm > 0.0 {
                c /= nrm;
            }
        }
        if (last - theta).abs() <= rel_tol * theta.abs() {
            return Ok(theta);
        }
        last = theta;
    }
    Err(format!("inverse subspace iteration did not converge in {max_iter} steps"))
}

/// Largest eigenvalue of `A u = λ X u` by power iteration on `X⁻¹ A`.
pub fn largest_generalized_eigenvalue(
    a: &CsrMatrix<f64>,
    x: &CsrMatrix<f64>,
    rel_tol: f64,
    max_iter: usize,
) -> Result<f64, String> {
    let n = a.nrows();
    let xs = SpdSolver::new(x)?;
    let mut v = DVector::from_fn(n, |i, _| 1.0 + ((i * 7919) % 13) as f64 / 13.0);
    let mut last = 0.0;
    for _ in 0..max_iter {
        let w = xs.solve(&spmv(a, &v));
        let num = bilinear(a, &w, &w);
        let den = bilinear(x, &w, &w);
        let rq = num / den;
        v = &w / den.sqrt();
        if (rq - last).abs() <= rel_tol * rq.abs() {
            return Ok(rq);
        }
        last = rq;
    }
    Ok(last)
}

/// Dense symmetric-definite generalized eigenproblem `A v = λ B v`, eigenvalues ascending,
/// eigenvectors `B`-orthonormal.
pub fn small_generalized_eig(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<(Vec<f64>, DMatrix<f64>), String> {
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| "Rayleigh–Ritz mass matrix is not positive definite".to_string())?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| "singular Cholesky factor".to_string())?;
    let mut c = &linv * a * linv.transpose();
    c = (&c + c.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::try_new(c, 1e-15, 10_000)
        .ok_or_else(|| "dense symmetric eigensolve failed".to_string())?;
    let (vals, vecs) = sorted_eigenpairs(&eig.eigenvalues, &eig.eigenvectors, true);
    Ok((vals, linv.transpose() * vecs))
}

/// Sorts eigenpairs ascending (or descending) by eigenvalue.
pub fn sorted_eigenpairs(
    vals: &DVector<f64>,
    vecs: &DMatrix<f64>,
    ascending: bool,
) -> (Vec<f64>, DMatrix<f64>) {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&i, &j| {
        let o = vals[i].total_cmp(&vals[j]);
        if ascending { o } else { o.reverse() }
    });
    let sorted = idx.iter().map(|&i| vals[i]).collect();
    let cols: Vec<_> = idx.iter().map(|&i| vecs.column(i).into_owned()).collect();
    (sorted, DMatrix::from_columns(&cols))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix<f64> {
        let mut coo = CooMatrix::new(n, n);
        for i in 0..n {
            coo.push(i, i, 2.0);
            if i + 1 < n {
                coo.push(i, i + 1, -1.0);
                coo.push(i + 1, i, -1.0);
            }
        }
        CsrMatrix::from(&coo)
    }

    #[test]
    fn spd_solve_has_small_residual() {
        let a = laplacian_1d(50);
        let b = DVector::from_fn(50, |i, _| (i as f64).sin());
        let x = SpdSolver::new(&a).unwrap().solve(&b);
        assert!((spmv(&a, &x) - &b).norm() < 1e-12 * b.norm());
    }

    #[test]
    fn generalized_extremes_match_dense() {
        let n = 30;
        let a = laplacian_1d(n);
        let mut coo = CooMatrix::new(n, n);
        for i in 0..n {
            coo.push(i, i, 1.0 + i as f64 / n as f64);
        }
        let x = CsrMatrix::from(&coo);
        let ad = DMatrix::from(&a);
        let xd = DMatrix::from(&x);
        let (vals, _) = small_generalized_eig(&ad, &xd).unwrap();
        let lo = smallest_generalized_eigenvalue(&a, &x, 1e-14, 500).unwrap();
        let hi = largest_generalized_eigenvalue(&a, &x, 1e-14, 20_000).unwrap();
        assert!((lo - vals[0]).abs() < 1e-10 * vals[0]);
        assert!((hi - vals[n - 1]).abs() < 1e-6 * vals[n - 1]);
    }

    #[test]
    fn common_pattern_preserves_values() {
        let a = laplacian_1d(5);
        let mut coo = CooMatrix::new(5, 5);
        coo.push(0, 4, 3.0);
        let b = CsrMatrix::from(&coo);
        let both = on_common_pattern(&[a.clone(), b.clone()]);
        assert_eq!(DMatrix::from(&both[0]), DMatrix::from(&a));
        assert_eq!(DMatrix::from(&both[1]), DMatrix::from(&b));
        let s = combine_same_pattern(&both, &[2.0, -1.0]);
        assert_eq!(DMatrix::from(&s), DMatrix::from(&a) * 2.0 - DMatrix::from(&b));
    }

    #[test]
    fn orthonormalizer_rejects_dependent_vectors() {
        let x = laplacian_1d(8);
        let mut g = XOrthonormalizer::new(&x);
        let v = DVector::from_fn(8, |i, _| i as f64 + 1.0);
        assert!(g.try_push(&v, 1e-10).is_some());
        assert!(g.try_push(&(v.clone() * 3.0), 1e-10).is_none());
        let w = DVector::from_fn(8, |i, _| ((i * i) as f64).cos());
        assert!(g.try_push(&w, 1e-10).is_some());
        let z = g.into_matrix(8);
        let gram = z.transpose() * DMatrix::from(&x) * &z;
        assert!((gram - DMatrix::identity(2, 2)).amax() < 1e-12);
    }
}
