//! Per-step observables and exponential decay fits.
//!
//! All observables are measured against the constant steady state `g_∞ = 1/M`
//! (no bumps) on the same grid.

use crate::basis::{MassFunctional, WassersteinMatrix};
use crate::entropy::EntropyModel;
use crate::error::{Error, Result};
use crate::kkt::NewtonReport;
use crate::lagrangian::{check_dims, reconstruct_eulerian, EulerianProfile, LagrangianGrid, WeightVector};

/// Fraction of leading steps excluded from automatic fit windows.
pub const BOOTSTRAP_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub time: f64,
    pub entropy_rel: f64,
    pub gnorm_sq_rel: f64,
    pub var_u: f64,
    pub var_g: f64,
    pub mass_error: f64,
    pub newton_iterations: usize,
    pub newton_residual: f64,
    pub newton_update: f64,
    pub min_g: f64,
}

impl DiagnosticsRecord {
    pub const CSV_HEADER: &'static str = "step,time,entropy_rel,gnorm_sq_rel,var_u,var_g,mass_error,\
newton_iterations,newton_residual,newton_update,min_g";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e}",
            self.step,
            self.time,
            self.entropy_rel,
            self.gnorm_sq_rel,
            self.var_u,
            self.var_g,
            self.mass_error,
            self.newton_iterations,
            self.newton_residual,
            self.newton_update,
            self.min_g
        )
    }

    pub fn from_csv_row(row: &str) -> std::result::Result<Self, String> {
        let fields: Vec<&str> = row.trim().split(',').collect();
        if fields.len() != 11 {
            return Err(format!("expected 11 fields, found {}", fields.len()));
        }
        let f = |i: usize| -> std::result::Result<f64, String> {
            fields[i].parse::<f64>().map_err(|e| format!("field {}: {e}", i + 1))
        };
        let n = |i: usize| -> std::result::Result<usize, String> {
            fields[i].parse::<usize>().map_err(|e| format!("field {}: {e}", i + 1))
        };
        Ok(DiagnosticsRecord {
            step: n(0)?,
            time: f(1)?,
            entropy_rel: f(2)?,
            gnorm_sq_rel: f(3)?,
            var_u: f(4)?,
            var_g: f(5)?,
            mass_error: f(6)?,
            newton_iterations: n(7)?,
            newton_residual: f(8)?,
            newton_update: f(9)?,
            min_g: f(10)?,
        })
    }
}

/// `‖(p, q)‖_G² = (5/2) pᵀM p - 2 pᵀM q + ½ qᵀM q`.
pub fn g_norm_sq(mw: &WassersteinMatrix, p: &WeightVector, q: &WeightVector) -> Result<f64> {
    let (p, q) = (p.as_vector(), q.as_vector());
    let mp = mw.bilinear(p, p)?;
    let mq = mw.bilinear(q, q)?;
    let pq = mw.bilinear(p, q)?;
    Ok(2.5 * mp - 2.0 * pq + 0.5 * mq)
}

/// `sqrt(Σ (u_{i-1} - mean)² (x_i - x_{i-1}))` with left-endpoint values.
pub fn profile_variance(profile: &EulerianProfile, mean: f64) -> f64 {
    let sum: f64 = profile
        .x
        .windows(2)
        .zip(&profile.u)
        .map(|(x, u)| (u - mean).powi(2) * (x[1] - x[0]))
        .sum();
    sum.sqrt()
}

/// Spread of `u` around its mean `M` over the moving Eulerian cells.
pub fn variance_u(grid: &LagrangianGrid, g: &WeightVector) -> Result<f64> {
    let profile = reconstruct_eulerian(grid, g)?;
    Ok(profile_variance(&profile, grid.mass()))
}

/// Spread of `g` around `1/M` over the ω-cells, same convention as [`variance_u`].
pub fn variance_g(grid: &LagrangianGrid, g: &WeightVector) -> Result<f64> {
    check_dims(grid, g)?;
    g.check_positive()?;
    let mean = 1.0 / grid.mass();
    let sum: f64 = (1..=grid.n_cells())
        .map(|j| (g.node_value(j - 1) - mean).powi(2) * grid.delta(j))
        .sum();
    Ok(sum.sqrt())
}

/// Reference rate `2(1-2α) / ((1-α) ‖u⁰‖₁^{1-α})`, valid for `-1 ≤ α < 0`.
pub fn theoretical_rate(alpha: f64, l1_mass: f64) -> Result<f64> {
    if !(-1.0..0.0).contains(&alpha) {
        return Err(Error::OutOfValidityRange(alpha));
    }
    if !(l1_mass > 0.0) {
        return Err(Error::NonPositiveMass(l1_mass));
    }
    Ok(2.0 * (1.0 - 2.0 * alpha) / ((1.0 - alpha) * l1_mass.powf(1.0 - alpha)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub window: (f64, f64),
    /// `-d log(value)/dt` from the least-squares line; positive for decay.
    pub rate: f64,
    /// RMS deviation of `log(value)` from the fitted line.
    pub residual: f64,
    /// One-step difference quotient of `-log(value)` at the window midpoint.
    pub diff_quotient: f64,
    pub points: usize,
}

/// Least-squares fit of `log(value)` against `t` over the closed `window`.
pub fn fit_decay_rate(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|(t, _)| *t >= window.0 && *t <= window.1)
        .collect();
    if pts.len() < 2 {
        return Err(Error::EmptyWindow);
    }
    if pts.iter().any(|(_, v)| !(*v > 0.0)) {
        return Err(Error::NonPositiveValues);
    }
    let logs: Vec<(f64, f64)> = pts.iter().map(|(t, v)| (*t, v.ln())).collect();
    let n = logs.len() as f64;
    let tm = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut stt, mut sty) = (0.0, 0.0);
    for (t, y) in &logs {
        stt += (t - tm) * (t - tm);
        sty += (t - tm) * (y - ym);
    }
    if !(stt > 0.0) {
        return Err(Error::EmptyWindow);
    }
    let slope = sty / stt;
    let ss: f64 = logs
        .iter()
        .map(|(t, y)| (y - (ym + slope * (t - tm))).powi(2))
        .sum();
    let mid = 0.5 * (window.0.max(logs[0].0) + window.1.min(logs[logs.len() - 1].0));
    let k = logs
        .partition_point(|p| p.0 < mid)
        .min(logs.len() - 2);
    let diff_quotient = -(logs[k + 1].1 - logs[k].1) / (logs[k + 1].0 - logs[k].0);
    Ok(DecayFit {
        window: (logs[0].0, logs[logs.len() - 1].0),
        rate: -slope,
        residual: (ss / n).sqrt(),
        diff_quotient,
        points: logs.len(),
    })
}

/// Default window: skip the first 5% of samples and stop before the first
/// sample that falls below `floor`.
pub fn auto_window(series: &[(f64, f64)], floor: f64) -> Result<(f64, f64)> {
    let start = (BOOTSTRAP_FRACTION * series.len() as f64).ceil() as usize;
    let tail = series.get(start..).unwrap_or(&[]);
    let end = tail.iter().position(|(_, v)| *v < floor).unwrap_or(tail.len());
    if end < 2 {
        return Err(Error::EmptyWindow);
    }
    Ok((tail[0].0, tail[end - 1].0))
}

/// Observables relative to the steady state on one fixed grid.
#[derive(Debug, Clone)]
pub struct Diagnostics<'a> {
    grid: &'a LagrangianGrid,
    mw: &'a WassersteinMatrix,
    model: &'a EntropyModel,
    mass: &'a MassFunctional,
    steady: WeightVector,
    steady_entropy: f64,
}

impl<'a> Diagnostics<'a> {
    pub fn new(
        grid: &'a LagrangianGrid,
        mw: &'a WassersteinMatrix,
        model: &'a EntropyModel,
        mass: &'a MassFunctional,
    ) -> Result<Self> {
        let steady = WeightVector::steady_state(grid);
        let steady_entropy = model.entropy(grid, &steady)?;
        Ok(Diagnostics {
            grid,
            mw,
            model,
            mass,
            steady,
            steady_entropy,
        })
    }

    pub fn steady_state(&self) -> &WeightVector {
        &self.steady
    }

    pub fn entropy_rel(&self, g: &WeightVector) -> Result<f64> {
        Ok(self.model.entropy(self.grid, g)? - self.steady_entropy)
    }

    /// G-norm of `(g - g_∞, previous - g_∞)`; without a previous state the
    /// pair `(g - g_∞, g - g_∞)` is used.
    pub fn gnorm_sq_rel(&self, g: &WeightVector, previous: Option<&WeightVector>) -> Result<f64> {
        let shift = |v: &WeightVector| WeightVector::from_vector(v.as_vector() - self.steady.as_vector());
        let p = shift(g);
        let q = previous.map(shift).unwrap_or_else(|| p.clone());
        g_norm_sq(self.mw, &p, &q)
    }

    pub fn record(
        &self,
        step: usize,
        time: f64,
        g: &WeightVector,
        previous: Option<&WeightVector>,
        newton: Option<&NewtonReport>,
    ) -> Result<DiagnosticsRecord> {
        Ok(DiagnosticsRecord {
            step,
            time,
            entropy_rel: self.entropy_rel(g)?,
            gnorm_sq_rel: self.gnorm_sq_rel(g, previous)?,
            var_u: variance_u(self.grid, g)?,
            var_g: variance_g(self.grid, g)?,
            mass_error: self.mass.apply(g.as_vector()) - 1.0,
            newton_iterations: newton.map_or(0, |r| r.iterations),
            newton_residual: newton.map_or(0.0, |r| r.residual_norm),
            newton_update: newton.map_or(0.0, |r| r.update_norm),
            min_g: g.min_value().1,
        })
    }
}
