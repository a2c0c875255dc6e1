//! Newton iteration on the KKT conditions of the mass-constrained step problem.
//!
//! With `L(g, λ) = Ψ(g) + λ (c·g - 1)`, the residual is
//! `G = (∇Ψ(g) + λc, c·g - 1)` and each Newton step solves
//!
//! ```text
//! [ ∇²Ψ  c ] [δg]      [ ∇Ψ + λc ]
//! [ cᵀ   0 ] [δλ] = -  [ c·g - 1 ]
//! ```
//!
//! by a dense LU factorization. For `α = -1` the matrix does not depend on the
//! iterate and its factorization is reused for the whole run.

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::basis::MassFunctional;
use crate::bdf::StepProblem;
use crate::error::{Error, Result};
use crate::lagrangian::WeightVector;

#[derive(Debug, Clone, PartialEq)]
pub struct KktSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonReport {
    pub iterations: usize,
    /// `‖G‖₂` at the returned iterate.
    pub residual_norm: f64,
    /// Relative ℓ∞ size of the last update, `‖δg‖∞ / max(1, ‖g‖∞)`.
    pub update_norm: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-8,
            max_iter: 50,
        }
    }
}

/// `[[H, c], [cᵀ, 0]]`.
pub fn kkt_matrix(hessian: &DMatrix<f64>, mass: &MassFunctional) -> Result<DMatrix<f64>> {
    let n = hessian.nrows();
    if mass.coefficients.len() != n || hessian.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: mass.coefficients.len(),
        });
    }
    let mut k = DMatrix::zeros(n + 1, n + 1);
    k.view_mut((0, 0), (n, n)).copy_from(hessian);
    for i in 0..n {
        k[(i, n)] = mass.coefficients[i];
        k[(n, i)] = mass.coefficients[i];
    }
    Ok(k)
}

/// KKT residual `G(g, λ)`.
pub fn kkt_residual(
    problem: &StepProblem<'_>,
    mass: &MassFunctional,
    g: &WeightVector,
    lambda: f64,
) -> Result<DVector<f64>> {
    let n = problem.grid.dim();
    if mass.coefficients.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: mass.coefficients.len(),
        });
    }
    let grad = problem.gradient(g)?;
    let mut r = DVector::zeros(n + 1);
    r.rows_mut(0, n).copy_from(&grad);
    r.rows_mut(0, n).axpy(lambda, &mass.coefficients, 1.0);
    r[n] = mass.apply(g.as_vector()) - 1.0;
    Ok(r)
}

pub fn kkt_assemble(
    problem: &StepProblem<'_>,
    mass: &MassFunctional,
    g: &WeightVector,
    lambda: f64,
) -> Result<KktSystem> {
    let matrix = kkt_matrix(&problem.hessian(g)?, mass)?;
    let rhs = -kkt_residual(problem, mass, g, lambda)?;
    Ok(KktSystem { matrix, rhs })
}

/// Newton solver with a factorization cache for constant KKT matrices.
#[derive(Default)]
pub struct KktSolver {
    // Keyed by the movement weight a_k/τ; the grid is fixed per solver.
    cached: Vec<(f64, LU<f64, Dyn, Dyn>)>,
}

impl KktSolver {
    pub fn new() -> Self {
        Self::default()
    }

    fn constant_factor(&mut self, problem: &StepProblem<'_>, mass: &MassFunctional, g: &WeightVector) -> Result<usize> {
        let key = problem.scheme.leading() / problem.tau;
        let dim = problem.grid.dim() + 1;
        if let Some(i) = self
            .cached
            .iter()
            .position(|(k, lu)| *k == key && lu.l().nrows() == dim)
        {
            return Ok(i);
        }
        let lu = factor(kkt_matrix(&problem.hessian(g)?, mass)?)?;
        self.cached.push((key, lu));
        Ok(self.cached.len() - 1)
    }

    /// Minimizes the step problem from the warm start `g^(0)`, `λ^(0) = 0`.
    pub fn solve_step(
        &mut self,
        problem: &StepProblem<'_>,
        mass: &MassFunctional,
        warm_start: &WeightVector,
        opts: NewtonOptions,
    ) -> Result<(WeightVector, f64, NewtonReport)> {
        let n = problem.grid.dim();
        let mut g = warm_start.clone();
        let mut lambda = 0.0;
        let mut residual = kkt_residual(problem, mass, &g, lambda)?;
        let quadratic = problem.model.is_quadratic();
        let mut report = NewtonReport {
            iterations: 0,
            residual_norm: residual.norm(),
            update_norm: f64::INFINITY,
            converged: false,
        };
        for it in 1..=opts.max_iter {
            let rhs = -&residual;
            let step = if quadratic {
                let idx = self.constant_factor(problem, mass, &g)?;
                self.cached[idx].1.solve(&rhs)
            } else {
                factor(kkt_matrix(&problem.hessian(&g)?, mass)?)?.solve(&rhs)
            }
            .ok_or(Error::SingularKkt)?;
            if step.iter().any(|v| !v.is_finite()) {
                return Err(Error::SingularKkt);
            }
            let scale = g.as_vector().amax().max(1.0);
            let dg = step.rows(0, n);
            let update = dg.amax() / scale;
            let mut next = g.as_vector().clone();
            next += dg;
            g = WeightVector::from_vector(next);
            lambda += step[n];
            residual = kkt_residual(problem, mass, &g, lambda)?;
            report = NewtonReport {
                iterations: it,
                residual_norm: residual.norm(),
                update_norm: update,
                converged: false,
            };
            if report.residual_norm <= opts.tol && update <= opts.tol {
                report.converged = true;
                break;
            }
        }
        if !report.converged {
            return Err(Error::NoConvergence {
                iterations: report.iterations,
                residual: report.residual_norm,
                update: report.update_norm,
            });
        }
        let (cell, value) = g.min_value();
        if !(value > 0.0) {
            return Err(Error::PositivityLoss { cell, value });
        }
        Ok((g, lambda, report))
    }
}

fn factor(matrix: DMatrix<f64>) -> Result<LU<f64, Dyn, Dyn>> {
    let lu = LU::new(matrix);
    if lu.u().diagonal().iter().any(|d| *d == 0.0 || !d.is_finite()) {
        return Err(Error::SingularKkt);
    }
    Ok(lu)
}
