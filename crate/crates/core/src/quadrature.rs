//! Gauss–Legendre rules on the unit interval.

use std::f64::consts::PI;

/// An `n`-point Gauss–Legendre rule mapped to `[0, 1]`.
///
/// Exact for polynomials of degree `2n - 1`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss rule needs at least one point");
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            // Newton on P_n starting from the Chebyshev-like guess.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes.push(0.5 * (1.0 - x));
            weights.push(0.5 * w);
        }
        GaussRule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Value and derivative of the Legendre polynomial `P_n` at `x`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_monomials_exactly() {
        for n in 1..=12 {
            let rule = GaussRule::new(n);
            for deg in 0..(2 * n) {
                let got = rule.integrate(|x| x.powi(deg as i32));
                let exact = 1.0 / (deg as f64 + 1.0);
                assert!((got - exact).abs() < 1e-14, "n={n} deg={deg}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn weights_sum_to_one() {
        let rule = GaussRule::new(8);
        let s: f64 = rule.weights.iter().sum();
        assert!((s - 1.0).abs() < 1e-15);
        assert!(rule.nodes.iter().all(|&x| x > 0.0 && x < 1.0));
    }
}
