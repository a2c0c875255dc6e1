//! Time stepping: implicit-Euler bootstrap followed by the configured BDF scheme.

use std::path::Path;

use crate::basis::{MassFunctional, WassersteinMatrix};
use crate::bdf::{bdf_coefficients, BdfScheme, FlowState, StepProblem};
use crate::config::RunConfig;
use crate::entropy::EntropyModel;
use crate::error::{Error, Result};
use crate::kkt::{KktSolver, NewtonOptions, NewtonReport};
use crate::lagrangian::{build_initial, reconstruct_eulerian, EulerianProfile, LagrangianGrid, WeightVector};

/// One flow on a fixed Lagrangian grid.
pub struct Flow {
    grid: LagrangianGrid,
    mw: WassersteinMatrix,
    model: EntropyModel,
    mass: MassFunctional,
    schemes: Vec<BdfScheme>,
    solver: KktSolver,
    options: NewtonOptions,
    tau: f64,
    state: FlowState,
}

impl Flow {
    pub fn new(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let samples = config.initial.samples(config.n_cells)?;
        let (grid, initial) = build_initial(&samples)?;
        Self::from_state(config, grid, initial)
    }

    /// Flow started from an explicit grid and weight vector.
    pub fn from_state(config: &RunConfig, grid: LagrangianGrid, initial: WeightVector) -> Result<Self> {
        let order = config.scheme.order();
        let schemes = (1..=order).map(bdf_coefficients).collect::<Result<Vec<_>>>()?;
        let mw = config.assembler.assemble(&grid);
        let mass = MassFunctional::new(&grid);
        Ok(Flow {
            model: EntropyModel::new(config.alpha)?,
            mw,
            mass,
            schemes,
            solver: KktSolver::new(),
            options: NewtonOptions {
                tol: config.newton_tol,
                max_iter: config.newton_max_iter,
            },
            tau: config.tau,
            state: FlowState::new(initial, order),
            grid,
        })
    }

    pub fn grid(&self) -> &LagrangianGrid {
        &self.grid
    }

    pub fn mw(&self) -> &WassersteinMatrix {
        &self.mw
    }

    pub fn model(&self) -> &EntropyModel {
        &self.model
    }

    pub fn mass(&self) -> &MassFunctional {
        &self.mass
    }

    pub fn state(&self) -> &FlowState {
        &self.state
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            step: self.state.step,
            time: self.state.time,
            grid: self.grid.clone(),
            g: self.state.current().clone(),
        }
    }

    /// Advances one step. While the history is shorter than the scheme order
    /// the lower-order scheme is used, so BDF-2 starts with one Euler step.
    pub fn step(&mut self) -> Result<NewtonReport> {
        let history = self.state.history();
        let scheme = &self.schemes[history.len() - 1];
        let problem = StepProblem::new(scheme, self.tau, &self.mw, &self.model, &self.grid, history)?;
        let (g, lambda, report) = self
            .solver
            .solve_step(&problem, &self.mass, self.state.current(), self.options)?;
        self.state.push(g, lambda, self.tau);
        Ok(report)
    }
}

/// Accepted state at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub grid: LagrangianGrid,
    pub g: WeightVector,
}

impl Snapshot {
    pub fn profile(&self) -> Result<EulerianProfile> {
        reconstruct_eulerian(&self.grid, &self.g)
    }

    /// `g` at the normalized mass coordinate `s ∈ [0, 1]`, i.e. at `ω = sM`.
    pub fn g_at_fraction(&self, s: f64) -> f64 {
        self.g.eval(&self.grid, s * self.grid.mass())
    }

    /// Columns `j, omega_j, g_lin_j, g_quad_j, x_j, u_j`; `g_quad_0 = 0`.
    pub fn write_table(&self, path: &Path) -> Result<()> {
        let profile = self.profile()?;
        let mut out = String::from("j,omega_j,g_lin_j,g_quad_j,x_j,u_j\n");
        for j in 0..=self.grid.n_cells() {
            let quad = if j == 0 { 0.0 } else { self.g.quad()[j - 1] };
            out.push_str(&format!(
                "{j},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                self.grid.node(j),
                self.g.node_value(j),
                quad,
                profile.x[j],
                profile.u[j]
            ));
        }
        write_file(path, &out)
    }

    /// Two-column `(x, u)` text.
    pub fn write_eulerian(&self, path: &Path) -> Result<()> {
        let p = self.profile()?;
        let out: String = p.x.iter().zip(&p.u).map(|(x, u)| format!("{x:.16e} {u:.16e}\n")).collect();
        write_file(path, &out)
    }

    /// Two-column `(ω, g)` text at the grid nodes.
    pub fn write_lagrangian(&self, path: &Path) -> Result<()> {
        let out: String = (0..=self.grid.n_cells())
            .map(|j| format!("{:.16e} {:.16e}\n", self.grid.node(j), self.g.node_value(j)))
            .collect();
        write_file(path, &out)
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
