mod common;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use wrom::fem::AffineOperatorSet;
use wrom::linalg::XOrthonormalizer;
use wrom::param::BetaMarginal;
use wrom::pod::{correlation_matrix, pod_from_snapshots, snapshot_matrix, weighted_eig};
use wrom::quadrature::{monte_carlo_rule, McWeighting};
use wrom::rb::DEPENDENCE_TOL;
use wrom::ParameterDistribution;

use common::{elasticity, project_x, rng, x_norm_sq};

struct Miniature {
    space: wrom::fem::TruthSpace,
    ops: AffineOperatorSet,
    snapshots: DMatrix<f64>,
    weights: Vec<f64>,
}

/// Two free parameters (quadrant 1 stiffness, lower traction), the rest at the mode.
fn miniature(n_t: usize) -> Miniature {
    let (space, full) = elasticity(8);
    let bench = ParameterDistribution::benchmark(10.0, 10.0);
    let ops = full.restrict_parameters(&[0, 4], &bench.mode()).unwrap();
    let dist = ParameterDistribution::new(vec![
        BetaMarginal::new(1.0, 1.0, 1.0, 3.0),
        BetaMarginal::new(1.0, 1.0, 2.0, 6.0),
    ]);
    let training = monte_carlo_rule(&dist, n_t, 21, McWeighting::Plain).unwrap();
    let snapshots = snapshot_matrix(&ops, &space, &training).unwrap();
    let mut r = rng(2);
    let weights = (0..n_t).map(|_| r.random_range(0.1..1.0)).collect();
    Miniature { space, ops, snapshots, weights }
}

fn weighted_projection_error(m: &Miniature, z: &DMatrix<f64>) -> f64 {
    m.snapshots
        .column_iter()
        .zip(&m.weights)
        .map(|(phi, w)| {
            let phi = phi.into_owned();
            let r = &phi - project_x(&m.space.x, z, &phi);
            w * x_norm_sq(&m.space.x, &r)
        })
        .sum()
}

#[test]
fn energy_identity_and_optimality() {
    let mut m = miniature(30);
    let mut r = rng(9);
    let random_weights = std::mem::replace(&mut m.weights, vec![1.0 / 30.0; 30]);
    for n in (1..=5).chain(101..=105) {
        if n == 101 {
            m.weights = random_weights.clone();
        }
        let n = n % 100;
        let rb = pod_from_snapshots(&m.ops, &m.space, &m.snapshots, &m.weights, 1e-300, n).unwrap();
        assert_eq!(rb.n(), n);
        let spec = rb.spectrum.as_ref().unwrap();
        let tail: f64 = spec.eigenvalues[n..].iter().sum();
        let err = weighted_projection_error(&m, &rb.basis);
        assert!((err.sqrt() - tail.sqrt()).abs() <= 1e-8 * tail.sqrt(), "N={n}: {err} vs {tail}");
        for _ in 0..20 {
            let mut orth = XOrthonormalizer::new(&m.space.x);
            while orth.len() < n {
                let c = DVector::from_fn(m.snapshots.ncols(), |_, _| r.random_range(-1.0..1.0));
                orth.try_push(&(&m.snapshots * c), DEPENDENCE_TOL);
            }
            let z = orth.into_matrix(m.space.n_dof);
            let e = weighted_projection_error(&m, &z);
            assert!(err <= e * (1.0 + 1e-12), "N={n}: POD {err} worse than random {e}");
        }
    }
}

#[test]
fn spectrum_is_permutation_invariant() {
    let m = miniature(30);
    let c = correlation_matrix(&m.space, &m.snapshots).unwrap();
    let base = weighted_eig(&c, &m.weights).unwrap().eigenvalues;
    let mut r = rng(4);
    let mut perm: Vec<usize> = (0..30).collect();
    for i in (1..30).rev() {
        perm.swap(i, r.random_range(0..=i));
    }
    let pc = DMatrix::from_fn(30, 30, |i, j| c[(perm[i], perm[j])]);
    let pw: Vec<f64> = perm.iter().map(|&i| m.weights[i]).collect();
    let permuted = weighted_eig(&pc, &pw).unwrap().eigenvalues;
    for (a, b) in base.iter().zip(&permuted) {
        assert!((a - b).abs() <= 1e-10 * base[0]);
    }
}

/// Real parts of the eigenvalues of `W C` by a nonsymmetric Schur decomposition, descending.
fn schur_oracle(c: &DMatrix<f64>, w: &[f64]) -> Vec<f64> {
    let wc = DMatrix::from_fn(c.nrows(), c.ncols(), |i, j| w[i] * c[(i, j)]);
    let ev = wc.complex_eigenvalues();
    let scale = ev.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for z in ev.iter() {
        assert!(z.im.abs() <= 1e-9 * scale, "complex eigenvalue {z}");
    }
    let mut re: Vec<f64> = ev.iter().map(|z| z.re).collect();
    re.sort_by(|a, b| b.total_cmp(a));
    re
}

fn assert_matches_oracle(c: &DMatrix<f64>, w: &[f64]) {
    let got = weighted_eig(c, w).unwrap().eigenvalues;
    let want = schur_oracle(c, w);
    let scale = want.iter().map(|v| v.abs()).fold(0.0, f64::max);
    for (g, o) in got.iter().zip(&want) {
        assert!((g - o).abs() <= 1e-9 * scale, "{got:?}\nvs\n{want:?}");
    }
}

#[test]
fn weighted_spectrum_matches_nonsymmetric_eigensolve() {
    let mut r = rng(17);
    for case in 0..20 {
        let n = 20;
        let b = DMatrix::from_fn(n, n + 3, |_, _| r.random_range(-1.0..1.0));
        let c = &b * b.transpose();
        let w: Vec<f64> = if case % 2 == 0 {
            (0..n).map(|_| r.random_range(0.01..1.0)).collect()
        } else {
            (0..n).map(|_| r.random_range(-0.5..1.0)).collect()
        };
        assert_matches_oracle(&c, &w);
    }
}

#[test]
fn weighted_spectrum_matches_oracle_on_snapshots() {
    let m = miniature(20);
    let c = correlation_matrix(&m.space, &m.snapshots).unwrap();
    let got = weighted_eig(&c, &m.weights).unwrap().eigenvalues;
    let want = schur_oracle(&c, &m.weights);
    // Rank-deficient C: compare the resolved part of the spectrum.
    for (g, o) in got.iter().zip(&want).take(5) {
        assert!((g - o).abs() <= 1e-9 * want[0], "{g} vs {o}");
    }
}

#[test]
fn correlation_matrix_is_psd_with_norm_diagonal() {
    let m = miniature(30);
    let c = correlation_matrix(&m.space, &m.snapshots).unwrap();
    let eig = c.clone().symmetric_eigen();
    let norm = eig.eigenvalues.amax();
    assert!(eig.eigenvalues.min() >= -1e-10 * norm);
    for (i, phi) in m.snapshots.column_iter().enumerate() {
        let nsq = x_norm_sq(&m.space.x, &phi.into_owned());
        assert!((c[(i, i)] - nsq).abs() <= 1e-12 * nsq);
    }
}
