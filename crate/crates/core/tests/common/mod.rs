#![allow(dead_code)]

use lagrange_bdf::basis::MassFunctional;
use lagrange_bdf::lagrangian::{LagrangianGrid, WeightVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Point-symmetric grid with `n` cells and widths in `[0.5, 1.5]`, scaled to `mass`.
pub fn symmetric_grid(rng: &mut impl Rng, n: usize, mass: f64) -> LagrangianGrid {
    let mut w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    for j in 0..n / 2 {
        w[n - 1 - j] = w[j];
    }
    let total: f64 = w.iter().sum();
    let widths: Vec<f64> = w.iter().map(|x| x * mass / total).collect();
    LagrangianGrid::from_widths(&widths).unwrap()
}

/// Positive weights with nodal values in `[lo, hi]` and bumps up to `bump` in size.
pub fn random_weights(rng: &mut impl Rng, n: usize, lo: f64, hi: f64, bump: f64) -> WeightVector {
    let lin: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..hi)).collect();
    let quad: Vec<f64> = (0..n).map(|_| rng.gen_range(-bump..bump)).collect();
    WeightVector::new(&lin, &quad).unwrap()
}

/// Symmetrized under `ω ↦ M - ω`.
pub fn symmetrize(g: &WeightVector) -> WeightVector {
    WeightVector::from_vector((g.as_vector() + g.reflected().as_vector()) * 0.5)
}

/// Rescaled so that `∫ g = 1`.
pub fn normalize(grid: &LagrangianGrid, g: &WeightVector) -> WeightVector {
    let c = MassFunctional::new(grid);
    WeightVector::from_vector(g.as_vector() / c.apply(g.as_vector()))
}

/// Random feasible, positive, point-symmetric state.
pub fn random_state(rng: &mut impl Rng, grid: &LagrangianGrid, bump: f64) -> WeightVector {
    let n = grid.n_cells();
    let g = symmetrize(&random_weights(rng, n, 0.5, 2.0, bump));
    normalize(grid, &g)
}

pub fn rel_diff(a: &nalgebra::DMatrix<f64>, b: &nalgebra::DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax().max(f64::MIN_POSITIVE)
}

pub fn rel_diff_vec(a: &nalgebra::DVector<f64>, b: &nalgebra::DVector<f64>) -> f64 {
    (a - b).amax() / b.amax().max(f64::MIN_POSITIVE)
}
