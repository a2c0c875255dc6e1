//! Brute-force references for cross-checking the fast paths.
//!
//! Nothing here shares code with the closed-form assembly or the analytic
//! derivatives: the Wasserstein distance is computed from inverted CDFs in
//! physical space, derivatives by central differences, and reference flows by
//! simply running the solver at a finer resolution.

use nalgebra::{DMatrix, DVector};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::flow::{Flow, Snapshot};
use crate::lagrangian::{check_dims, local_primitive, local_value, EulerianSamples, LagrangianGrid, WeightVector};

/// `∫_0^M (G_1 - G_2)²` from two sampled densities.
///
/// Each density is integrated by the trapezoid rule into a piecewise-linear
/// CDF, which is inverted exactly on each segment; the mass integral uses the
/// composite midpoint rule with `resolution` points.
pub fn wasserstein_bruteforce(u1: &EulerianSamples, u2: &EulerianSamples, resolution: usize) -> Result<f64> {
    let c1 = cumulative(u1);
    let c2 = cumulative(u2);
    let (m1, m2) = (c1[c1.len() - 1], c2[c2.len() - 1]);
    if (m1 - m2).abs() > 1e-10 * m1.max(m2).max(1.0) {
        return Err(Error::MassMismatch(m1, m2));
    }
    if resolution == 0 {
        return Err(Error::TooFewPoints { needed: 1, found: 0 });
    }
    let m = 0.5 * (m1 + m2);
    let h = m / resolution as f64;
    let (mut k1, mut k2) = (0, 0);
    let mut acc = 0.0;
    for i in 0..resolution {
        let w = (i as f64 + 0.5) * h;
        let d = invert(&u1.x, &c1, w, &mut k1) - invert(&u2.x, &c2, w, &mut k2);
        acc += d * d;
    }
    Ok(acc * h)
}

fn cumulative(s: &EulerianSamples) -> Vec<f64> {
    let mut c = Vec::with_capacity(s.x.len());
    c.push(0.0);
    for i in 1..s.x.len() {
        let prev = c[i - 1];
        c.push(prev + 0.5 * (s.u[i - 1] + s.u[i]) * (s.x[i] - s.x[i - 1]));
    }
    c
}

// Inverse of the piecewise-linear interpolant of (x, c) at w. `k` is a
// monotone cursor: successive calls must use non-decreasing w.
fn invert(x: &[f64], c: &[f64], w: f64, k: &mut usize) -> f64 {
    let last = c.len() - 2;
    while *k < last && c[*k + 1] < w {
        *k += 1;
    }
    let (c0, c1) = (c[*k], c[*k + 1]);
    let t = if c1 > c0 { ((w - c0) / (c1 - c0)).clamp(0.0, 1.0) } else { 0.0 };
    x[*k] + t * (x[*k + 1] - x[*k])
}

/// Samples the density `u(x) = 1/g(G⁻¹(x))` of an FE state at `points + 1`
/// uniformly spaced positions, inverting `G` cell by cell with bisection.
pub fn fe_density_samples(grid: &LagrangianGrid, g: &WeightVector, points: usize) -> Result<EulerianSamples> {
    check_dims(grid, g)?;
    g.check_positive()?;
    let n = grid.n_cells();
    let mut node_x = vec![0.0; n + 1];
    for j in 1..=n {
        node_x[j] = node_x[j - 1] + g.cell_integral(grid, j);
    }
    let total = node_x[n];
    let mut cell = 1;
    let mut x = Vec::with_capacity(points + 1);
    let mut u = Vec::with_capacity(points + 1);
    for i in 0..=points {
        // The reconstruction spans [0, total]; total = 1 for feasible states.
        let target = total * i as f64 / points as f64;
        while cell < n && node_x[cell] < target {
            cell += 1;
        }
        let (lo, hi) = grid.cell(cell);
        let (ca, cb, cq) = g.cell_coeffs(cell);
        let s = invert_cell(|t| node_x[cell - 1] + (hi - lo) * local_primitive(ca, cb, cq, t) - target, |t| {
            (hi - lo) * local_value(ca, cb, cq, t)
        });
        u.push(1.0 / local_value(ca, cb, cq, s));
        x.push(i as f64 / points as f64);
    }
    EulerianSamples::new(x, u)
}

// Root of the increasing function `f` on [0, 1] by Newton steps, falling back
// to bisection whenever a step leaves the current bracket.
fn invert_cell(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> f64 {
    let (mut a, mut b) = (0.0, 1.0);
    let mut t = 0.5;
    for _ in 0..100 {
        let v = f(t);
        if v == 0.0 {
            return t;
        }
        if v < 0.0 {
            a = t;
        } else {
            b = t;
        }
        let mut next = t - v / df(t);
        if !(next > a && next < b) {
            next = 0.5 * (a + b);
        }
        if (next - t).abs() <= 1e-15 || b - a <= 1e-15 {
            return next;
        }
        t = next;
    }
    t
}

/// Central-difference gradient of `f` at `x`.
pub fn finite_difference_gradient(f: impl Fn(&DVector<f64>) -> f64, x: &DVector<f64>, h: f64) -> DVector<f64> {
    let mut out = DVector::zeros(x.len());
    let mut probe = x.clone();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let fp = f(&probe);
        probe[i] = x[i] - h;
        let fm = f(&probe);
        probe[i] = x[i];
        out[i] = (fp - fm) / (2.0 * h);
    }
    out
}

/// Hessian by central differences of `grad`; column `j` is `∂grad/∂x_j`.
pub fn finite_difference_hessian(
    grad: impl Fn(&DVector<f64>) -> DVector<f64>,
    x: &DVector<f64>,
    h: f64,
) -> DMatrix<f64> {
    let n = x.len();
    let mut out = DMatrix::zeros(n, n);
    let mut probe = x.clone();
    for j in 0..n {
        probe[j] = x[j] + h;
        let gp = grad(&probe);
        probe[j] = x[j] - h;
        let gm = grad(&probe);
        probe[j] = x[j];
        out.set_column(j, &((gp - gm) / (2.0 * h)));
    }
    out
}

/// Runs `config` to its end time and returns the final state.
pub fn reference_flow(config: &RunConfig) -> Result<Snapshot> {
    let mut flow = Flow::new(config)?;
    for _ in 0..config.n_steps() {
        flow.step()?;
    }
    Ok(flow.snapshot())
}

/// Uniform comparison grid `x_i = i/(points-1)` used for cross-grid norms.
pub const COMPARISON_POINTS: usize = 1000;

/// `u` of a snapshot on the comparison grid.
pub fn u_on_comparison_grid(snapshot: &Snapshot) -> Result<Vec<f64>> {
    Ok(snapshot.profile()?.sample_uniform(COMPARISON_POINTS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::InitialDatum;

    #[test]
    fn identical_densities_have_zero_distance() {
        let u = EulerianSamples::uniform(200, |x| 1.2 + (2.0 * std::f64::consts::PI * x).cos()).unwrap();
        assert_eq!(wasserstein_bruteforce(&u, &u, 10_000).unwrap(), 0.0);
        let c = EulerianSamples::uniform(10, |_| 0.7).unwrap();
        let d = EulerianSamples::uniform(37, |_| 0.7).unwrap();
        assert!(wasserstein_bruteforce(&c, &d, 1000).unwrap() < 1e-28);
    }

    #[test]
    fn mass_mismatch_is_rejected() {
        let a = EulerianSamples::uniform(10, |_| 1.0).unwrap();
        let b = EulerianSamples::uniform(10, |_| 1.1).unwrap();
        assert!(matches!(wasserstein_bruteforce(&a, &b, 100), Err(Error::MassMismatch(..))));
    }

    #[test]
    fn midpoint_rule_self_convergence() {
        // G1 - G2 is M-periodic, so the midpoint rule converges at least at
        // second order (here much faster) as the resolution grows.
        let a = EulerianSamples::uniform(20_000, |x| 1.0 + 0.5 * (2.0 * std::f64::consts::PI * x).cos()).unwrap();
        let b = EulerianSamples::uniform(20_000, |x| 1.0 - 0.3 * (4.0 * std::f64::consts::PI * x).cos()).unwrap();
        let w = |r| wasserstein_bruteforce(&a, &b, r).unwrap();
        let fine = w(100_000);
        assert!(fine > 1e-4);
        let (e1, e2) = ((w(50) - fine).abs(), (w(100) - fine).abs());
        assert!(e1 < 1e-8 * fine && e2 <= e1.max(1e-15 * fine) , "{e1} {e2}");
    }

    #[test]
    fn fe_samples_reproduce_nodal_density() {
        let samples = InitialDatum::Cos2 { offset: 0.1 }.samples(20).unwrap();
        let (grid, g) = crate::lagrangian::build_initial(&samples).unwrap();
        let fine = fe_density_samples(&grid, &g, 20).unwrap();
        for (a, b) in fine.u.iter().zip(&samples.u) {
            assert!((a - b).abs() < 1e-12 * b, "{a} vs {b}");
        }
    }

    #[test]
    fn finite_differences_of_a_quadratic() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let f = |x: &DVector<f64>| 0.5 * x.dot(&(&a * x)) + x[0];
        let grad = |x: &DVector<f64>| &a * x + DVector::from_column_slice(&[1.0, 0.0, 0.0]);
        let x = DVector::from_column_slice(&[0.3, -1.2, 2.0]);
        assert!((finite_difference_gradient(f, &x, 1e-4) - grad(&x)).amax() < 1e-8);
        assert!((finite_difference_hessian(grad, &x, 1e-4) - &a).amax() < 1e-8);
    }

    #[test]
    fn constant_reference_stays_constant() {
        let cfg = RunConfig {
            initial: InitialDatum::Const,
            n_cells: 8,
            t_end: 1e-4,
            ..RunConfig::default()
        };
        let snap = reference_flow(&cfg).unwrap();
        assert_eq!(snap.step, 10);
        for u in u_on_comparison_grid(&snap).unwrap() {
            assert!((u - 1.0).abs() < 1e-12);
        }
    }
}
