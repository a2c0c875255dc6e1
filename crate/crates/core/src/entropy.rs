//! Discrete entropy `S_N[g] = (α(α-1))⁻¹ ∫_0^M g^{1-α} dω` with derivatives.
//!
//! On a cell of width `h` with end values `a`, `b` and bump amplitude `q`, the
//! local function is `a(1-s) + bs + 4qs(1-s)`. For `α = -1` the entropy is
//! `½∫g²` and every derivative is an exact polynomial:
//!
//! ```text
//! ∂_a = h(a/3 + b/6 + q/3)   ∂_b = h(a/6 + b/3 + q/3)   ∂_q = h((a+b)/3 + 8q/15)
//! ∂²_aa = ∂²_bb = h/3   ∂²_ab = h/6   ∂²_aq = ∂²_bq = h/3   ∂²_qq = 8h/15
//! ```
//!
//! Other exponents use Gauss quadrature on each cell: exact when `1 - α` is an
//! integer, a fixed 8-point rule otherwise.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lagrangian::{check_dims, local_value, LagrangianGrid, WeightVector};
use crate::quadrature::GaussRule;

const FALLBACK_ORDER: usize = 8;
const CHECK_ORDER: usize = 12;

#[derive(Debug, Clone)]
pub struct EntropyModel {
    alpha: f64,
    rule: GaussRule,
}

impl EntropyModel {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha < 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidExponent(alpha));
        }
        let p = 1.0 - alpha;
        let order = if (p - p.round()).abs() < 1e-12 {
            // Integrands have degree at most 2p.
            (p.round() as usize + 1).max(2)
        } else {
            FALLBACK_ORDER
        };
        Ok(EntropyModel {
            alpha,
            rule: GaussRule::new(order),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `α = -1`: quadratic entropy with constant Hessian.
    pub fn is_quadratic(&self) -> bool {
        self.alpha == -1.0
    }

    pub fn quadrature_order(&self) -> usize {
        self.rule.len()
    }

    fn prefactor(&self) -> f64 {
        1.0 / (self.alpha * (self.alpha - 1.0))
    }

    pub fn entropy(&self, grid: &LagrangianGrid, g: &WeightVector) -> Result<f64> {
        check_dims(grid, g)?;
        g.check_positive()?;
        if self.is_quadratic() {
            let mut s = 0.0;
            for j in 1..=grid.n_cells() {
                let (a, b, q) = g.cell_coeffs(j);
                let quad = (a * a + b * b + a * b) / 3.0 + 8.0 * q * q / 15.0 + 2.0 * q * (a + b) / 3.0;
                s += 0.5 * grid.delta(j) * quad;
            }
            Ok(s)
        } else {
            Ok(self.prefactor() * power_integral(&self.rule, grid, g, 1.0 - self.alpha))
        }
    }

    pub fn gradient(&self, grid: &LagrangianGrid, g: &WeightVector) -> Result<DVector<f64>> {
        check_dims(grid, g)?;
        g.check_positive()?;
        let n = grid.n_cells();
        let mut grad = DVector::zeros(2 * n);
        for j in 1..=n {
            let h = grid.delta(j);
            let (a, b, q) = g.cell_coeffs(j);
            let local = if self.is_quadratic() {
                [
                    h * (a / 3.0 + b / 6.0 + q / 3.0),
                    h * (a / 6.0 + b / 3.0 + q / 3.0),
                    h * ((a + b) / 3.0 + 8.0 * q / 15.0),
                ]
            } else {
                // ∂/∂g_i = (1-α)/(α(α-1)) ∫ g^{-α} φ_i = -(1/α) ∫ g^{-α} φ_i
                let mut acc = [0.0; 3];
                for (&s, &w) in self.rule.nodes.iter().zip(&self.rule.weights) {
                    let gv = local_value(a, b, q, s).powf(-self.alpha);
                    let shapes = local_shapes(s);
                    for k in 0..3 {
                        acc[k] += w * gv * shapes[k];
                    }
                }
                acc.map(|v| -h * v / self.alpha)
            };
            for (k, idx) in cell_indices(n, j).into_iter().enumerate() {
                grad[idx] += local[k];
            }
        }
        Ok(grad)
    }

    pub fn hessian(&self, grid: &LagrangianGrid, g: &WeightVector) -> Result<DMatrix<f64>> {
        check_dims(grid, g)?;
        if self.is_quadratic() {
            return Ok(quadratic_hessian(grid));
        }
        g.check_positive()?;
        let n = grid.n_cells();
        let mut hess = DMatrix::zeros(2 * n, 2 * n);
        for j in 1..=n {
            let h = grid.delta(j);
            let (a, b, q) = g.cell_coeffs(j);
            // (1-α)(-α)/(α(α-1)) = 1, so the Hessian is ∫ g^{-1-α} φ_i φ_j.
            let mut local = [[0.0; 3]; 3];
            for (&s, &w) in self.rule.nodes.iter().zip(&self.rule.weights) {
                let gv = local_value(a, b, q, s).powf(-1.0 - self.alpha);
                let shapes = local_shapes(s);
                for r in 0..3 {
                    for c in 0..3 {
                        local[r][c] += w * gv * shapes[r] * shapes[c];
                    }
                }
            }
            scatter(&mut hess, n, j, &local, h);
        }
        Ok(hess)
    }

    /// Relative difference between the working rule and a 12-point rule.
    pub fn quadrature_self_check(&self, grid: &LagrangianGrid, g: &WeightVector) -> Result<f64> {
        check_dims(grid, g)?;
        g.check_positive()?;
        let p = 1.0 - self.alpha;
        let fine = power_integral(&GaussRule::new(CHECK_ORDER), grid, g, p);
        let coarse = power_integral(&self.rule, grid, g, p);
        Ok((fine - coarse).abs() / fine.abs())
    }
}

/// Mass-matrix-like Hessian of `½∫g²`.
fn quadratic_hessian(grid: &LagrangianGrid) -> DMatrix<f64> {
    let n = grid.n_cells();
    let mut hess = DMatrix::zeros(2 * n, 2 * n);
    let local = [
        [1.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0],
        [1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0],
        [1.0 / 3.0, 1.0 / 3.0, 8.0 / 15.0],
    ];
    for j in 1..=n {
        scatter(&mut hess, n, j, &local, grid.delta(j));
    }
    hess
}

fn scatter(hess: &mut DMatrix<f64>, n: usize, cell: usize, local: &[[f64; 3]; 3], h: f64) {
    let idx = cell_indices(n, cell);
    for r in 0..3 {
        for c in 0..3 {
            hess[(idx[r], idx[c])] += h * local[r][c];
        }
    }
}

/// 0-based global indices of `(g_{j-1}, g_j, g_{N+j})`.
fn cell_indices(n: usize, j: usize) -> [usize; 3] {
    let left = if j == 1 { n - 1 } else { j - 2 };
    [left, j - 1, n + j - 1]
}

fn local_shapes(s: f64) -> [f64; 3] {
    [1.0 - s, s, 4.0 * s * (1.0 - s)]
}

fn power_integral(rule: &GaussRule, grid: &LagrangianGrid, g: &WeightVector, p: f64) -> f64 {
    (1..=grid.n_cells())
        .map(|j| {
            let (a, b, q) = g.cell_coeffs(j);
            grid.delta(j) * rule.integrate(|s| local_value(a, b, q, s).powf(p))
        })
        .sum()
}
