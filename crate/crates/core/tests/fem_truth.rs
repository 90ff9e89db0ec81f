mod common;

use std::f64::consts::PI;

use nalgebra::DVector;
use proptest::prelude::*;
use rand::Rng;
use wrom::fem::assembly::{elasticity_operator, scalar_stiffness_full};
use wrom::fem::{evaluate_output, solve_truth, Lame, TruthSpace};
use wrom::linalg::{bilinear, restrict, restrict_vector, SpdSolver};
use wrom::ParameterDistribution;

use common::{dense, elasticity, random_vector, rng};

fn exact(p: [f64; 2]) -> f64 {
    (PI * p[0]).cos() * (PI * p[1]).sin()
}

/// L² error of the P1 solution of `−Δu = 2π²u` with `u = cos(πx)sin(πy)`, clamped at
/// `y ∈ {0, 1}` and natural elsewhere.
fn poisson_l2_error(n_sub: usize) -> f64 {
    let space = TruthSpace::scalar(n_sub).unwrap();
    let mesh = &space.mesh;
    let k = restrict(&scalar_stiffness_full(mesh), &space.free_index, space.n_dof);
    let mut load = DVector::zeros(mesh.n_vertices());
    for t in 0..mesh.triangles.len() {
        let tri = mesh.triangles[t];
        let p = mesh.triangle_coords(t);
        let area = mesh.triangle_area(t);
        // Edge-midpoint rule, exact for quadratics.
        for (a, b) in [(0, 1), (1, 2), (2, 0)] {
            let mid = [(p[a][0] + p[b][0]) / 2.0, (p[a][1] + p[b][1]) / 2.0];
            let f = 2.0 * PI * PI * exact(mid);
            load[tri[a]] += area / 3.0 * f * 0.5;
            load[tri[b]] += area / 3.0 * f * 0.5;
        }
    }
    let f = restrict_vector(&load, &space.free_index, space.n_dof);
    let u = SpdSolver::new(&k).unwrap().solve(&f);
    let uh = space.expand(&u).unwrap();
    let mut err = 0.0;
    for t in 0..mesh.triangles.len() {
        let tri = mesh.triangles[t];
        let p = mesh.triangle_coords(t);
        let area = mesh.triangle_area(t);
        for (a, b) in [(0, 1), (1, 2), (2, 0)] {
            let mid = [(p[a][0] + p[b][0]) / 2.0, (p[a][1] + p[b][1]) / 2.0];
            let e = 0.5 * (uh[tri[a]] + uh[tri[b]]) - exact(mid);
            err += area / 3.0 * e * e;
        }
    }
    err.sqrt()
}

#[test]
fn manufactured_solution_converges_at_second_order() {
    let errs: Vec<f64> = [8, 16, 32].iter().map(|&n| poisson_l2_error(n)).collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.9, "errors {errs:?}, order {order}");
    }
}

#[test]
fn affine_sum_matches_monolithic_assembly() {
    let (space, ops) = elasticity(8);
    let dist = ParameterDistribution::benchmark(1.0, 1.0);
    for y in dist.sample(20, 3) {
        let mono = dense(&elasticity_operator(&space, Lame::benchmark(), |s| y[s as usize - 1]));
        let affine = dense(&ops.operator(&y));
        let scale = mono.amax();
        assert!((mono - affine).amax() <= 1e-12 * scale.max(1.0));
    }
}

#[test]
fn coercivity_by_minimum_coefficient() {
    let (space, ops) = elasticity(8);
    let dist = ParameterDistribution::benchmark(1.0, 1.0);
    let reference = ops.reference_operator();
    let mut r = rng(5);
    for y in dist.sample(20, 4) {
        let a = ops.operator(&y);
        let min_q = y[..4].iter().copied().fold(f64::INFINITY, f64::min);
        for _ in 0..10 {
            let v = random_vector(&mut r, space.n_dof);
            let lhs = bilinear(&a, &v, &v);
            let rhs = min_q * bilinear(&reference, &v, &v);
            assert!(lhs >= rhs * (1.0 - 1e-12), "{lhs} < {rhs}");
        }
    }
}

#[test]
fn compliance_equals_energy_of_truth_solution() {
    let (space, ops) = elasticity(8);
    let dist = ParameterDistribution::benchmark(10.0, 10.0);
    for y in dist.sample(5, 8) {
        let u = solve_truth(&ops, &space, &y).unwrap().coeffs;
        let s = evaluate_output(&ops, &y, &u);
        let energy = bilinear(&ops.operator(&y), &u, &u);
        assert!((s - energy).abs() <= 1e-10 * energy.abs());
    }
}

#[test]
fn truth_is_linear_in_load_and_homogeneous_in_material() {
    let (space, ops) = elasticity(8);
    let y = [1.3, 2.1, 2.7, 1.1, 3.0, 5.0];
    let u = solve_truth(&ops, &space, &y).unwrap().coeffs;
    let mut scaled_load = y;
    scaled_load[4] *= 2.5;
    scaled_load[5] *= 2.5;
    let ul = solve_truth(&ops, &space, &scaled_load).unwrap().coeffs;
    assert!((&ul - &u * 2.5).norm() <= 1e-10 * ul.norm());
    let mut scaled_mat = y;
    for v in &mut scaled_mat[..4] {
        *v *= 2.0;
    }
    let um = solve_truth(&ops, &space, &scaled_mat).unwrap().coeffs;
    assert!((&um - &u * 0.5).norm() <= 1e-10 * um.norm());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inner_product_is_symmetric_and_cauchy_schwarz(seed in any::<u64>(), scale in 1e-3f64..1e3) {
        let space = TruthSpace::elasticity(4).unwrap();
        let mut r = rng(seed);
        let u = random_vector(&mut r, space.n_dof) * scale;
        let v = random_vector(&mut r, space.n_dof);
        let uv = space.v_inner(&u, &v).unwrap();
        let vu = space.v_inner(&v, &u).unwrap();
        prop_assert!((uv - vu).abs() <= 1e-13 * uv.abs().max(scale));
        let bound = space.v_norm(&u).unwrap() * space.v_norm(&v).unwrap();
        prop_assert!(uv.abs() <= bound * (1.0 + 1e-12));
        let shift = r.random_range(-1.0..1.0);
        let w = &u + &v * shift;
        prop_assert!(space.v_norm(&w).unwrap() <= space.v_norm(&u).unwrap() + shift.abs() * space.v_norm(&v).unwrap() + 1e-12 * scale);
    }
}
