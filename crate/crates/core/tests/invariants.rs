//! Structural invariants: symmetry, steady state and conservation.

mod common;

use nalgebra::DVector;
use proptest::prelude::*;
use rand::Rng;

use lagrange_bdf::basis::{assemble_closed_form, wasserstein_sq, MassFunctional};
use lagrange_bdf::config::RunConfig;
use lagrange_bdf::entropy::EntropyModel;
use lagrange_bdf::flow::Flow;
use lagrange_bdf::lagrangian::WeightVector;

use common::{random_state, random_weights, rng, symmetric_grid};

/// `v - (c·v / c·c) c`.
fn mass_neutral(c: &DVector<f64>, v: DVector<f64>) -> DVector<f64> {
    let k = c.dot(&v) / c.dot(c);
    v - c * k
}

#[test]
fn wasserstein_form_is_reflection_invariant_on_mass_neutral_vectors() {
    let mut r = rng(51);
    for _ in 0..10 {
        let n = r.gen_range(3..=12);
        let grid = symmetric_grid(&mut r, n, 1.0);
        let mw = assemble_closed_form(&grid);
        let c = MassFunctional::new(&grid).coefficients;
        let v = mass_neutral(&c, random_weights(&mut r, n, -1.0, 1.0, 1.0).into_vector());
        let w = mass_neutral(&c, random_weights(&mut r, n, -1.0, 1.0, 1.0).into_vector());
        let rv = WeightVector::from_vector(v.clone()).reflected().into_vector();
        let rw = WeightVector::from_vector(w.clone()).reflected().into_vector();
        let a = mw.bilinear(&v, &w).unwrap();
        let b = mw.bilinear(&rv, &rw).unwrap();
        assert!((a - b).abs() < 1e-12 * mw.max_abs(), "{a} vs {b}");
    }
}

#[test]
fn entropy_gradient_is_reflection_equivariant() {
    let mut r = rng(52);
    for alpha in [-0.5, -1.0, -2.0] {
        let model = EntropyModel::new(alpha).unwrap();
        let grid = symmetric_grid(&mut r, 9, 1.0);
        let g = random_weights(&mut r, 9, 0.5, 2.0, 0.2);
        let s = model.entropy(&grid, &g).unwrap();
        let s_ref = model.entropy(&grid, &g.reflected()).unwrap();
        assert!((s - s_ref).abs() < 1e-13 * s.abs());
        let grad = WeightVector::from_vector(model.gradient(&grid, &g).unwrap());
        let grad_ref = model.gradient(&grid, &g.reflected()).unwrap();
        assert!((grad.reflected().into_vector() - grad_ref).amax() < 1e-12 * grad.as_vector().amax());
    }
}

#[test]
fn steady_state_gradient_is_parallel_to_mass_functional() {
    let mut r = rng(53);
    for alpha in [-0.5, -1.0, -2.0] {
        let model = EntropyModel::new(alpha).unwrap();
        let grid = symmetric_grid(&mut r, 11, 0.8);
        let c = MassFunctional::new(&grid).coefficients;
        let grad = model.gradient(&grid, &WeightVector::steady_state(&grid)).unwrap();
        let k = grad.dot(&c) / c.dot(&c);
        assert!((&grad - &c * k).amax() < 1e-12 * grad.amax());
    }
}

#[test]
fn symmetric_datum_stays_symmetric() {
    let cfg = RunConfig {
        n_cells: 40,
        t_end: 2e-3,
        ..RunConfig::default()
    };
    let mut flow = Flow::new(&cfg).unwrap();
    for _ in 0..cfg.n_steps() {
        flow.step().unwrap();
    }
    let g = flow.state().current();
    assert!((g.reflected().into_vector() - g.as_vector()).amax() < 1e-10 * g.as_vector().amax());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_is_symmetric_and_non_negative(seed in any::<u64>(), n in 2usize..16) {
        let mut r = rng(seed);
        let grid = symmetric_grid(&mut r, n, 1.0);
        let mw = assemble_closed_form(&grid);
        let a = random_state(&mut r, &grid, 0.2);
        let b = random_state(&mut r, &grid, 0.2);
        let ab = wasserstein_sq(&mw, &a, &b).unwrap();
        let ba = wasserstein_sq(&mw, &b, &a).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() <= 1e-14 * ab.max(1e-300));
        prop_assert_eq!(wasserstein_sq(&mw, &a, &a).unwrap(), 0.0);
    }

    #[test]
    fn constant_weights_integrate_exactly(seed in any::<u64>(), n in 2usize..40, value in 0.1f64..10.0) {
        let mut r = rng(seed);
        let grid = symmetric_grid(&mut r, n, 1.7);
        let c = MassFunctional::new(&grid);
        let g = WeightVector::constant(n, value);
        prop_assert!((c.apply(g.as_vector()) - value * grid.mass()).abs() < 1e-12 * value);
    }

    #[test]
    fn reflection_is_an_involution(seed in any::<u64>(), n in 2usize..20) {
        let mut r = rng(seed);
        let g = random_weights(&mut r, n, -1.0, 1.0, 1.0);
        prop_assert_eq!(g.reflected().reflected(), g);
    }

    #[test]
    fn random_states_are_feasible(seed in any::<u64>(), n in 2usize..30) {
        let mut r = rng(seed);
        let grid = symmetric_grid(&mut r, n, 1.0);
        let g = random_state(&mut r, &grid, 0.2);
        let c = MassFunctional::new(&grid);
        prop_assert!((c.apply(g.as_vector()) - 1.0).abs() < 1e-13);
        prop_assert!(g.lagrangian_map(&grid, grid.mass()) - 1.0 < 1e-12);
    }
}
