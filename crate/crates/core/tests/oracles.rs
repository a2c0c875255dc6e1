//! Fast paths against independent references: brute-force transport,
//! finite differences and dense quadrature.

mod common;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

use lagrange_bdf::basis::{assemble_closed_form, assemble_quadrature, wasserstein_sq, MassFunctional};
use lagrange_bdf::bdf::{bdf_coefficients, StepProblem};
use lagrange_bdf::diagnostics::variance_u;
use lagrange_bdf::entropy::EntropyModel;
use lagrange_bdf::kkt::kkt_matrix;
use lagrange_bdf::lagrangian::{build_initial, EulerianSamples, WeightVector};
use lagrange_bdf::oracle::{
    fe_density_samples, finite_difference_gradient, finite_difference_hessian, wasserstein_bruteforce,
};

use common::{normalize, random_state, random_weights, rel_diff, rel_diff_vec, rng, symmetric_grid, symmetrize};

fn trig_density(rng: &mut impl Rng, modes: usize) -> impl Fn(f64) -> f64 {
    let coef: Vec<f64> = (0..modes).map(|_| rng.gen_range(-0.6..0.6) / modes as f64).collect();
    move |x| {
        1.0 + coef
            .iter()
            .enumerate()
            .map(|(k, a)| a * (2.0 * std::f64::consts::PI * (k + 1) as f64 * x).cos())
            .sum::<f64>()
    }
}

#[test]
fn both_assemblers_agree_on_random_symmetric_grids() {
    let mut r = rng(11);
    for _ in 0..20 {
        let n = r.gen_range(2..=12);
        let grid = symmetric_grid(&mut r, n, 1.0);
        let a = assemble_closed_form(&grid);
        let b = assemble_quadrature(&grid);
        assert!(rel_diff(&a.entries, &b.entries) < 1e-12);
    }
}

#[test]
fn fe_distance_matches_inverse_cdf_bruteforce() {
    let mut r = rng(13);
    for _ in 0..3 {
        let (grid, g1) = build_initial(&EulerianSamples::uniform(40, trig_density(&mut r, 3)).unwrap()).unwrap();
        let g2 = random_state(&mut r, &grid, 0.1);
        let fe = wasserstein_sq(&assemble_closed_form(&grid), &g1, &g2).unwrap();
        let u1 = fe_density_samples(&grid, &g1, 1_000_000).unwrap();
        let u2 = fe_density_samples(&grid, &g2, 1_000_000).unwrap();
        let brute = wasserstein_bruteforce(&u1, &u2, 200_000).unwrap();
        assert!((fe - brute).abs() < 1e-6 * brute, "{fe} vs {brute}");
    }
}

fn check_derivatives(alpha: f64, seed: u64) {
    let model = EntropyModel::new(alpha).unwrap();
    let mut r = rng(seed);
    let grid = symmetric_grid(&mut r, 7, 1.3);
    let g = random_weights(&mut r, 7, 0.4, 1.8, 0.15);
    let x = g.as_vector().clone();
    let wrap = |v: &DVector<f64>| WeightVector::from_vector(v.clone());
    let s = |v: &DVector<f64>| model.entropy(&grid, &wrap(v)).unwrap();
    let ds = |v: &DVector<f64>| model.gradient(&grid, &wrap(v)).unwrap();
    assert!(rel_diff_vec(&finite_difference_gradient(s, &x, 1e-5), &ds(&x)) < 1e-6);
    assert!(rel_diff(&finite_difference_hessian(ds, &x, 1e-5), &model.hessian(&grid, &g).unwrap()) < 1e-6);

    let mw = assemble_closed_form(&grid);
    for k in 1..=2 {
        let scheme = bdf_coefficients(k).unwrap();
        let history: Vec<WeightVector> = (0..k).map(|_| random_weights(&mut r, 7, 0.4, 1.8, 0.15)).collect();
        let p = StepProblem::new(&scheme, 1e-2, &mw, &model, &grid, &history).unwrap();
        let f = |v: &DVector<f64>| p.value(&wrap(v)).unwrap();
        let df = |v: &DVector<f64>| p.gradient(&wrap(v)).unwrap();
        assert!(rel_diff_vec(&finite_difference_gradient(f, &x, 1e-5), &df(&x)) < 1e-6);
        assert!(rel_diff(&finite_difference_hessian(df, &x, 1e-5), &p.hessian(&g).unwrap()) < 1e-6);
    }
}

#[test]
fn derivatives_match_finite_differences() {
    check_derivatives(-0.5, 21);
    check_derivatives(-1.0, 22);
    check_derivatives(-2.0, 23);
    check_derivatives(-3.5, 24);
}

#[test]
fn movement_term_is_the_weighted_sum_of_distances() {
    let mut r = rng(25);
    let grid = symmetric_grid(&mut r, 8, 1.0);
    let mw = assemble_closed_form(&grid);
    let model = EntropyModel::new(-1.0).unwrap();
    let scheme = bdf_coefficients(2).unwrap();
    let history = [random_state(&mut r, &grid, 0.1), random_state(&mut r, &grid, 0.1)];
    let g = random_state(&mut r, &grid, 0.1);
    let tau = 3e-3;
    let p = StepProblem::new(&scheme, tau, &mw, &model, &grid, &history).unwrap();
    let expected = -(0.5 * wasserstein_sq(&mw, &g, &history[0]).unwrap()
        - 2.0 * wasserstein_sq(&mw, &g, &history[1]).unwrap())
        / (2.0 * tau);
    assert!((p.movement(&g).unwrap() - expected).abs() < 1e-12 * expected.abs());
}

/// Orthonormal basis of `{v : c·v = 0}`.
fn constraint_tangent(c: &DVector<f64>) -> DMatrix<f64> {
    let n = c.len();
    let mut m = DMatrix::identity(n, n);
    m.set_column(0, c);
    let q = m.qr().q();
    q.columns(1, n - 1).into_owned()
}

#[test]
fn step_hessian_is_positive_definite_on_the_constraint_tangent() {
    let mut r = rng(31);
    for alpha in [-0.5, -1.0, -2.0] {
        let model = EntropyModel::new(alpha).unwrap();
        for _ in 0..5 {
            let grid = symmetric_grid(&mut r, 10, 1.0);
            let mw = assemble_closed_form(&grid);
            let mass = MassFunctional::new(&grid);
            let scheme = bdf_coefficients(2).unwrap();
            let history = [random_state(&mut r, &grid, 0.1), random_state(&mut r, &grid, 0.1)];
            let p = StepProblem::new(&scheme, 1e-4, &mw, &model, &grid, &history).unwrap();
            let g = random_state(&mut r, &grid, 0.1);
            let h = p.hessian(&g).unwrap();
            let z = constraint_tangent(&mass.coefficients);
            let reduced = z.transpose() * &h * &z;
            let eig = SymmetricEigen::new(reduced).eigenvalues;
            assert!(eig.min() > 0.0, "alpha {alpha}: min eigenvalue {}", eig.min());
            assert!(kkt_matrix(&h, &mass).unwrap().lu().determinant() != 0.0);
        }
    }
}

#[test]
fn u_variance_matches_dense_quadrature() {
    let mut r = rng(41);
    for _ in 0..3 {
        let (grid, g) = build_initial(&EulerianSamples::uniform(100, trig_density(&mut r, 4)).unwrap()).unwrap();
        let g = normalize(&grid, &symmetrize(&g));
        let dense = fe_density_samples(&grid, &g, 200_000).unwrap();
        let m = grid.mass();
        let integral: f64 = dense
            .x
            .windows(2)
            .zip(dense.u.windows(2))
            .map(|(x, u)| 0.5 * ((u[0] - m).powi(2) + (u[1] - m).powi(2)) * (x[1] - x[0]))
            .sum();
        let var = variance_u(&grid, &g).unwrap();
        assert!((var - integral.sqrt()).abs() < 0.02 * integral.sqrt(), "{var} vs {}", integral.sqrt());
    }
}

#[test]
fn documented_hat_entries_hold_on_nonuniform_grids() {
    let mut r = rng(61);
    for _ in 0..5 {
        let n = 10;
        let mass = r.gen_range(0.5..2.0);
        let grid = symmetric_grid(&mut r, n, mass);
        let mw = assemble_quadrature(&grid).entries;
        let m = grid.mass();
        let w = |j: usize| grid.node(j);
        let d = |j: usize| grid.delta(j);
        let big = |j: usize| 0.5 * (d(j) + d(j + 1));
        let sigma = |j: usize| (w(j - 1) + w(j) + w(j + 1)) / 3.0;
        let scale = mw.amax();
        for j in 1..n - 1 {
            let ajj = big(j).powi(2) * (m - sigma(j)) - big(j) * (12.0 * big(j).powi(2) + d(j).powi(2) + d(j + 1).powi(2)) / 60.0;
            assert!((mw[(j - 1, j - 1)] - ajj).abs() < 1e-13 * scale, "a_jj at {j}");
            if j + 1 < n {
                let next = big(j) * big(j + 1) * (m - sigma(j + 1)) - d(j + 1).powi(3) / 120.0;
                assert!((mw[(j - 1, j)] - next).abs() < 1e-13 * scale, "a_j,j+1 at {j}");
            }
            for k in j + 2..n {
                let far = big(j) * big(k) * (m - sigma(k));
                assert!((mw[(j - 1, k - 1)] - far).abs() < 1e-13 * scale, "a_jk at {j},{k}");
            }
        }
        let tail = 0.5 * (d(n) + d(1));
        assert!((mw[(n - 1, n - 1)] - (m * tail * tail / 4.0 + tail.powi(3) / 10.0)).abs() < 1e-13 * scale);
        for j in 1..n {
            for k in j + 1..=n {
                let c = 4.0 / 9.0 * m * d(j) * d(k) - 2.0 / 9.0 * d(j) * (w(k).powi(2) - w(k - 1).powi(2));
                assert!((mw[(n + j - 1, n + k - 1)] - c).abs() < 1e-13 * scale, "c_jk at {j},{k}");
            }
        }
    }
}
