//! BDF-k minimizing-movement objective.
//!
//! Given the last `k` states `g^n, …, g^{n+k-1}`, the next state minimizes
//!
//! ```text
//! Ψ(g) = -(1/2τ) Σ_{ℓ<k} a_ℓ W²(g, g^{n+ℓ}) + S_N[g]
//! ```
//!
//! over the mass-constraint set. With `Σ a_ℓ = 0` its Hessian is `(a_k/τ) M_w + ∇²S_N`.

use nalgebra::{DMatrix, DVector};

use crate::basis::WassersteinMatrix;
use crate::entropy::EntropyModel;
use crate::error::{Error, Result};
use crate::lagrangian::{LagrangianGrid, WeightVector};

/// BDF coefficients `a_0..a_k` acting on `x^n..x^{n+k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BdfScheme {
    coeffs: Vec<f64>,
}

impl BdfScheme {
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `a_k`, the weight of the new state.
    pub fn leading(&self) -> f64 {
        self.coeffs[self.order()]
    }

    /// History weights `a_0..a_{k-1}`.
    pub fn history_coeffs(&self) -> &[f64] {
        &self.coeffs[..self.order()]
    }
}

/// `k = 1`: implicit Euler (JKO); `k = 2`: BDF-2.
pub fn bdf_coefficients(k: usize) -> Result<BdfScheme> {
    let coeffs = match k {
        1 => vec![-1.0, 1.0],
        2 => vec![0.5, -2.0, 1.5],
        _ => return Err(Error::UnsupportedOrder(k)),
    };
    Ok(BdfScheme { coeffs })
}

/// One minimization problem `g^{n+k} = argmin Ψ`.
#[derive(Debug, Clone, Copy)]
pub struct StepProblem<'a> {
    pub scheme: &'a BdfScheme,
    pub tau: f64,
    pub mw: &'a WassersteinMatrix,
    pub model: &'a EntropyModel,
    pub grid: &'a LagrangianGrid,
    pub history: &'a [WeightVector],
}

impl<'a> StepProblem<'a> {
    pub fn new(
        scheme: &'a BdfScheme,
        tau: f64,
        mw: &'a WassersteinMatrix,
        model: &'a EntropyModel,
        grid: &'a LagrangianGrid,
        history: &'a [WeightVector],
    ) -> Result<Self> {
        if history.len() != scheme.order() {
            return Err(Error::HistoryLengthMismatch {
                expected: scheme.order(),
                found: history.len(),
            });
        }
        for h in history {
            if h.n_cells() != grid.n_cells() {
                return Err(Error::DimensionMismatch {
                    expected: grid.dim(),
                    found: 2 * h.n_cells(),
                });
            }
        }
        if mw.dim() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                found: mw.dim(),
            });
        }
        Ok(StepProblem {
            scheme,
            tau,
            mw,
            model,
            grid,
            history,
        })
    }

    /// `Σ_ℓ a_ℓ (g - g^{n+ℓ})`.
    fn weighted_displacement(&self, g: &DVector<f64>) -> DVector<f64> {
        let mut d = DVector::zeros(g.len());
        for (a, h) in self.scheme.history_coeffs().iter().zip(self.history) {
            d.axpy(*a, &(g - h.as_vector()), 1.0);
        }
        d
    }

    fn check(&self, g: &WeightVector) -> Result<()> {
        if g.n_cells() != self.grid.n_cells() {
            return Err(Error::DimensionMismatch {
                expected: self.grid.dim(),
                found: 2 * g.n_cells(),
            });
        }
        Ok(())
    }

    pub fn movement(&self, g: &WeightVector) -> Result<f64> {
        self.check(g)?;
        let mut acc = 0.0;
        for (a, h) in self.scheme.history_coeffs().iter().zip(self.history) {
            let d = g.as_vector() - h.as_vector();
            acc += a * self.mw.bilinear(&d, &d)?;
        }
        Ok(-acc / (2.0 * self.tau))
    }

    pub fn value(&self, g: &WeightVector) -> Result<f64> {
        Ok(self.movement(g)? + self.model.entropy(self.grid, g)?)
    }

    pub fn gradient(&self, g: &WeightVector) -> Result<DVector<f64>> {
        self.check(g)?;
        let d = self.weighted_displacement(g.as_vector());
        let mut grad = self.model.gradient(self.grid, g)?;
        grad.gemv(-1.0 / self.tau, &self.mw.entries, &d, 1.0);
        Ok(grad)
    }

    /// Constant part `(a_k/τ) M_w` of the Hessian.
    pub fn movement_hessian(&self) -> DMatrix<f64> {
        &self.mw.entries * (self.scheme.leading() / self.tau)
    }

    pub fn hessian(&self, g: &WeightVector) -> Result<DMatrix<f64>> {
        self.check(g)?;
        Ok(self.movement_hessian() + self.model.hessian(self.grid, g)?)
    }
}

/// Running state of a flow: the last `k` accepted states, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub step: usize,
    pub time: f64,
    pub multiplier: f64,
    history: Vec<WeightVector>,
    capacity: usize,
}

impl FlowState {
    pub fn new(initial: WeightVector, order: usize) -> Self {
        FlowState {
            step: 0,
            time: 0.0,
            multiplier: 0.0,
            history: vec![initial],
            capacity: order.max(1),
        }
    }

    pub fn history(&self) -> &[WeightVector] {
        &self.history
    }

    pub fn current(&self) -> &WeightVector {
        self.history.last().expect("history is never empty")
    }

    /// State before the current one, if any.
    pub fn previous(&self) -> Option<&WeightVector> {
        let n = self.history.len();
        (n >= 2).then(|| &self.history[n - 2])
    }

    pub fn push(&mut self, g: WeightVector, multiplier: f64, tau: f64) {
        self.history.push(g);
        if self.history.len() > self.capacity {
            self.history.remove(0);
        }
        self.step += 1;
        self.time = self.step as f64 * tau;
        self.multiplier = multiplier;
    }
}
