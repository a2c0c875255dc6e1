//! Lagrangian description of a point-symmetric density on the torus.
//!
//! A density `u` on `[0, 1]` with total mass `M` is represented through the
//! derivative `g = ∂_ω G` of its inverse distribution function `G : [0, M] → [0, 1]`.
//! The mass interval is partitioned by a [`LagrangianGrid`] and `g` is expanded in
//! periodic hat functions plus one quadratic bump per cell ([`WeightVector`]).

use std::fmt;
use std::path::{Path, PathBuf};

use nalgebra::DVector;

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-10;
const UNIFORM_TOL: f64 = 1e-12;

/// Density samples `u(x_j)` on `0 = x_0 < … < x_N = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerianSamples {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

impl EulerianSamples {
    pub fn new(x: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        if x.len() != u.len() {
            return Err(Error::InvalidSamples(format!(
                "{} nodes but {} values",
                x.len(),
                u.len()
            )));
        }
        if x.len() < 3 {
            return Err(Error::InvalidSamples("need at least two cells".into()));
        }
        if x[0] != 0.0 || (x[x.len() - 1] - 1.0).abs() > UNIFORM_TOL {
            return Err(Error::InvalidSamples("nodes must span [0, 1]".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSamples("nodes must be strictly increasing".into()));
        }
        Ok(EulerianSamples { x, u })
    }

    /// Samples `f` on the uniform grid `x_j = j / n`.
    pub fn uniform(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let x: Vec<f64> = (0..=n).map(|j| j as f64 / n as f64).collect();
        let u = x.iter().map(|&x| f(x)).collect();
        Self::new(x, u)
    }

    pub fn n_cells(&self) -> usize {
        self.x.len() - 1
    }

    fn is_uniform(&self) -> bool {
        let n = self.n_cells() as f64;
        self.x
            .iter()
            .enumerate()
            .all(|(j, &x)| (x - j as f64 / n).abs() <= UNIFORM_TOL)
    }
}

/// Partition `0 = ω_0 < ω_1 < … < ω_N = M` of the mass interval.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianGrid {
    omega: Vec<f64>,
}

impl LagrangianGrid {
    /// Validates monotonicity and point symmetry `ω_{N-i} = M - ω_i`.
    pub fn new(omega: Vec<f64>) -> Result<Self> {
        if omega.len() < 3 {
            return Err(Error::InvalidGrid("need at least two cells".into()));
        }
        if omega[0] != 0.0 {
            return Err(Error::InvalidGrid("grid must start at 0".into()));
        }
        if omega.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("nodes must be strictly increasing".into()));
        }
        let n = omega.len() - 1;
        let m = omega[n];
        for i in 1..n {
            if (omega[n - i] - (m - omega[i])).abs() > 1e-12 * m {
                return Err(Error::InvalidGrid(format!(
                    "grid is not point-symmetric at node {i}"
                )));
            }
        }
        Ok(LagrangianGrid { omega })
    }

    /// Uniform grid with `n` cells on `[0, mass]`.
    pub fn uniform(n: usize, mass: f64) -> Result<Self> {
        Self::new((0..=n).map(|j| mass * j as f64 / n as f64).collect())
    }

    /// Grid from cell widths `δ_1..δ_N`.
    pub fn from_widths(widths: &[f64]) -> Result<Self> {
        let mut omega = Vec::with_capacity(widths.len() + 1);
        omega.push(0.0);
        let mut acc = 0.0;
        for &w in widths {
            acc += w;
            omega.push(acc);
        }
        Self::new(omega)
    }

    pub fn n_cells(&self) -> usize {
        self.omega.len() - 1
    }

    /// Number of basis functions, `2N`.
    pub fn dim(&self) -> usize {
        2 * self.n_cells()
    }

    pub fn mass(&self) -> f64 {
        self.omega[self.n_cells()]
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    /// `ω_j` for `j = 0..=N`.
    pub fn node(&self, j: usize) -> f64 {
        self.omega[j]
    }

    /// `δ_j = ω_j - ω_{j-1}` for `j = 1..=N+1`, with `δ_{N+1} = δ_1`.
    pub fn delta(&self, j: usize) -> f64 {
        let n = self.n_cells();
        debug_assert!((1..=n + 1).contains(&j));
        let j = if j == n + 1 { 1 } else { j };
        self.omega[j] - self.omega[j - 1]
    }

    /// `Δ_j = (δ_j + δ_{j+1}) / 2`, periodic at `j = N`.
    pub fn half_span(&self, j: usize) -> f64 {
        0.5 * (self.delta(j) + self.delta(j + 1))
    }

    /// `σ_j = (ω_{j-1} + ω_j + ω_{j+1}) / 3` for interior nodes.
    pub fn centroid(&self, j: usize) -> f64 {
        (self.omega[j - 1] + self.omega[j] + self.omega[j + 1]) / 3.0
    }

    /// Cell `j` (1-based) as `(ω_{j-1}, ω_j)`.
    pub fn cell(&self, j: usize) -> (f64, f64) {
        (self.omega[j - 1], self.omega[j])
    }

    /// 1-based index of the cell containing `ω` (right-closed except for the first cell).
    pub fn locate(&self, w: f64) -> usize {
        let n = self.n_cells();
        match self.omega.partition_point(|&x| x < w) {
            0 => 1,
            k if k > n => n,
            k => k,
        }
    }
}

/// Weights `(g_1..g_N, g_{N+1}..g_{2N})`: nodal values followed by bump amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(DVector<f64>);

impl WeightVector {
    pub fn new(lin: &[f64], quad: &[f64]) -> Result<Self> {
        if lin.len() != quad.len() {
            return Err(Error::DimensionMismatch {
                expected: lin.len(),
                found: quad.len(),
            });
        }
        let mut v = DVector::zeros(2 * lin.len());
        v.as_mut_slice()[..lin.len()].copy_from_slice(lin);
        v.as_mut_slice()[lin.len()..].copy_from_slice(quad);
        Ok(WeightVector(v))
    }

    pub fn from_vector(v: DVector<f64>) -> Self {
        assert!(v.len() % 2 == 0, "weight vector must have even length");
        WeightVector(v)
    }

    /// Constant function `value` (all nodal weights equal, no bumps).
    pub fn constant(n: usize, value: f64) -> Self {
        let mut v = DVector::zeros(2 * n);
        v.rows_mut(0, n).fill(value);
        WeightVector(v)
    }

    /// Steady state `g_∞ ≡ 1/M`.
    pub fn steady_state(grid: &LagrangianGrid) -> Self {
        Self::constant(grid.n_cells(), 1.0 / grid.mass())
    }

    pub fn n_cells(&self) -> usize {
        self.0.len() / 2
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }

    pub fn lin(&self) -> &[f64] {
        &self.0.as_slice()[..self.n_cells()]
    }

    pub fn quad(&self) -> &[f64] {
        &self.0.as_slice()[self.n_cells()..]
    }

    /// `g(ω_j)` for `j = 0..=N`, using `g_0 = g_N`.
    pub fn node_value(&self, j: usize) -> f64 {
        let n = self.n_cells();
        if j == 0 {
            self.0[n - 1]
        } else {
            self.0[j - 1]
        }
    }

    /// `(g_{j-1}, g_j, g_{N+j})` for cell `j = 1..=N`.
    pub fn cell_coeffs(&self, j: usize) -> (f64, f64, f64) {
        (self.node_value(j - 1), self.node_value(j), self.0[self.n_cells() + j - 1])
    }

    pub fn eval(&self, grid: &LagrangianGrid, w: f64) -> f64 {
        let j = grid.locate(w);
        let (lo, hi) = grid.cell(j);
        let s = ((w - lo) / (hi - lo)).clamp(0.0, 1.0);
        let (a, b, q) = self.cell_coeffs(j);
        local_value(a, b, q, s)
    }

    /// Smallest value of `g` and the cell where it occurs, checked at nodes,
    /// midpoints and each cell's interior extremum.
    pub fn min_value(&self) -> (usize, f64) {
        let mut best = (1, f64::INFINITY);
        for j in 1..=self.n_cells() {
            let (a, b, q) = self.cell_coeffs(j);
            let mut m = a.min(b).min(local_value(a, b, q, 0.5));
            if q != 0.0 {
                let s = 0.5 + (b - a) / (8.0 * q);
                if s > 0.0 && s < 1.0 {
                    m = m.min(local_value(a, b, q, s));
                }
            }
            if m < best.1 {
                best = (j, m);
            }
        }
        best
    }

    pub fn check_positive(&self) -> Result<()> {
        let (cell, value) = self.min_value();
        if value > 0.0 {
            Ok(())
        } else {
            Err(Error::NonPositiveG { cell, value })
        }
    }

    /// `∫` of `g` over cell `j`.
    pub fn cell_integral(&self, grid: &LagrangianGrid, j: usize) -> f64 {
        let (a, b, q) = self.cell_coeffs(j);
        grid.delta(j) * (0.5 * (a + b) + 2.0 / 3.0 * q)
    }

    /// Lagrangian map `G(ω) = ∫_0^ω g`.
    pub fn lagrangian_map(&self, grid: &LagrangianGrid, w: f64) -> f64 {
        let j = grid.locate(w);
        let below: f64 = (1..j).map(|i| self.cell_integral(grid, i)).sum();
        let (lo, hi) = grid.cell(j);
        let h = hi - lo;
        let s = ((w - lo) / h).clamp(0.0, 1.0);
        let (a, b, q) = self.cell_coeffs(j);
        below + h * local_primitive(a, b, q, s)
    }

    /// Reflection `g(ω) ↦ g(M - ω)` expressed on the weights.
    pub fn reflected(&self) -> Self {
        let n = self.n_cells();
        let mut v = DVector::zeros(2 * n);
        for j in 1..n {
            v[j - 1] = self.0[n - j - 1];
        }
        v[n - 1] = self.0[n - 1];
        for j in 1..=n {
            v[n + j - 1] = self.0[n + (n + 1 - j) - 1];
        }
        WeightVector(v)
    }
}

impl fmt::Display for WeightVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "lin={:?} quad={:?}", self.lin(), self.quad())
    }
}

/// `g` on a cell in the local coordinate `s ∈ [0, 1]`.
pub(crate) fn local_value(a: f64, b: f64, q: f64, s: f64) -> f64 {
    a * (1.0 - s) + b * s + 4.0 * q * s * (1.0 - s)
}

/// `∫_0^s` of [`local_value`] in the local coordinate.
pub(crate) fn local_primitive(a: f64, b: f64, q: f64, s: f64) -> f64 {
    let s2 = s * s;
    a * (s - 0.5 * s2) + b * 0.5 * s2 + 4.0 * q * (0.5 * s2 - s2 * s / 3.0)
}

/// Builds the mass grid and initial weights from samples on the uniform grid.
///
/// The grid follows `ω_{j+1} = ω_j + (2/N) (g_j + g_{j+1})^{-1}` with `g_j = 1/u(x_j)`,
/// which makes every cell carry exactly `1/N` of the unit interval under the
/// piecewise-linear ansatz. Bump weights start at zero.
pub fn build_initial(samples: &EulerianSamples) -> Result<(LagrangianGrid, WeightVector)> {
    let n = samples.n_cells();
    if !samples.is_uniform() {
        return Err(Error::InvalidSamples(
            "initial samples must lie on the uniform grid x_j = j/N".into(),
        ));
    }
    for (j, &u) in samples.u.iter().enumerate() {
        if !(u > 0.0) || !u.is_finite() {
            return Err(Error::NonPositiveDensity { index: j, value: u });
        }
    }
    for j in 0..=n / 2 {
        let (l, r) = (samples.u[j], samples.u[n - j]);
        if (l - r).abs() > SYMMETRY_TOL * l.max(r) {
            return Err(Error::AsymmetricDatum {
                index: j,
                left: l,
                right: r,
            });
        }
    }
    let g0: Vec<f64> = samples.u.iter().map(|u| 1.0 / u).collect();
    let mut omega = Vec::with_capacity(n + 1);
    omega.push(0.0);
    for j in 0..n {
        let next = omega[j] + 2.0 / (n as f64 * (g0[j] + g0[j + 1]));
        omega.push(next);
    }
    let grid = LagrangianGrid::new(omega)?;
    let weights = WeightVector::new(&g0[1..], &vec![0.0; n])?;
    Ok((grid, weights))
}

/// Moving Eulerian mesh `x_j = G(ω_j)` with values `u_j = 1/g(ω_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerianProfile {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

impl EulerianProfile {
    /// Piecewise-linear interpolation of `(x_j, u_j)` at `x ∈ [0, 1]`.
    pub fn interpolate(&self, x: f64) -> f64 {
        let k = self.x.partition_point(|&xi| xi < x);
        if k == 0 {
            return self.u[0];
        }
        if k >= self.x.len() {
            return self.u[self.u.len() - 1];
        }
        let (x0, x1) = (self.x[k - 1], self.x[k]);
        let t = (x - x0) / (x1 - x0);
        self.u[k - 1] * (1.0 - t) + self.u[k] * t
    }

    pub fn sample_uniform(&self, points: usize) -> Vec<f64> {
        (0..points)
            .map(|i| self.interpolate(i as f64 / (points - 1) as f64))
            .collect()
    }
}

pub fn reconstruct_eulerian(grid: &LagrangianGrid, g: &WeightVector) -> Result<EulerianProfile> {
    check_dims(grid, g)?;
    g.check_positive()?;
    let n = grid.n_cells();
    let mut x = Vec::with_capacity(n + 1);
    let mut u = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    x.push(0.0);
    u.push(1.0 / g.node_value(0));
    for j in 1..=n {
        acc += g.cell_integral(grid, j);
        x.push(acc);
        u.push(1.0 / g.node_value(j));
    }
    Ok(EulerianProfile { x, u })
}

/// Particle positions `x_p(t_n) = G^n(ω_p)`, one row per step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySet {
    pub labels: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
}

/// `count` labels evenly spaced at cell midpoints of `[0, M]`.
pub fn default_labels(mass: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|p| mass * (p as f64 + 0.5) / count as f64)
        .collect()
}

pub fn particle_positions(grid: &LagrangianGrid, g: &WeightVector, labels: &[f64]) -> Result<Vec<f64>> {
    check_dims(grid, g)?;
    let m = grid.mass();
    labels
        .iter()
        .map(|&w| {
            if w <= 0.0 || w >= m {
                Err(Error::LabelOutOfRange { label: w, mass: m })
            } else {
                Ok(g.lagrangian_map(grid, w))
            }
        })
        .collect()
}

pub fn trace_particles(
    grid: &LagrangianGrid,
    g_sequence: &[WeightVector],
    labels: &[f64],
) -> Result<TrajectorySet> {
    let positions = g_sequence
        .iter()
        .map(|g| particle_positions(grid, g, labels))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrajectorySet {
        labels: labels.to_vec(),
        positions,
    })
}

pub(crate) fn check_dims(grid: &LagrangianGrid, g: &WeightVector) -> Result<()> {
    if g.n_cells() != grid.n_cells() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            found: 2 * g.n_cells(),
        });
    }
    Ok(())
}

/// Initial datum selector.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialDatum {
    /// `u ≡ 1`.
    Const,
    /// `u = cos(2πx)^2 + offset`; the bare name `cos2` uses offset 0.01.
    Cos2 { offset: f64 },
    /// `u = (|x - 1/2| + 1e-4)^{1/5} - 0.1`.
    Root5,
    /// Two-column text file `(x, u)` on the uniform grid.
    File(PathBuf),
}

impl InitialDatum {
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        match spec {
            "const" => Ok(InitialDatum::Const),
            "cos2" => Ok(InitialDatum::Cos2 { offset: 0.01 }),
            "root5" => Ok(InitialDatum::Root5),
            _ => {
                if let Some(off) = spec.strip_prefix("cos2:") {
                    let offset: f64 = off
                        .parse()
                        .map_err(|_| Error::Config(format!("bad cos2 offset '{off}'")))?;
                    Ok(InitialDatum::Cos2 { offset })
                } else if let Some(path) = spec.strip_prefix("file:") {
                    Ok(InitialDatum::File(PathBuf::from(path)))
                } else {
                    Err(Error::Config(format!(
                        "unknown initial datum '{spec}' (expected const, cos2, cos2:<offset>, root5 or file:<path>)"
                    )))
                }
            }
        }
    }

    pub fn density(&self, x: f64) -> Option<f64> {
        match *self {
            InitialDatum::Const => Some(1.0),
            InitialDatum::Cos2 { offset } => Some((2.0 * std::f64::consts::PI * x).cos().powi(2) + offset),
            InitialDatum::Root5 => Some(((x - 0.5).abs() + 1e-4).powf(0.2) - 0.1),
            InitialDatum::File(_) => None,
        }
    }

    pub fn samples(&self, n_cells: usize) -> Result<EulerianSamples> {
        match self {
            InitialDatum::File(path) => {
                let s = read_samples(path)?;
                if s.n_cells() != n_cells {
                    return Err(Error::Config(format!(
                        "{} has {} cells but n_cells = {n_cells}",
                        path.display(),
                        s.n_cells()
                    )));
                }
                Ok(s)
            }
            other => EulerianSamples::uniform(n_cells, |x| other.density(x).unwrap()),
        }
    }
}

impl fmt::Display for InitialDatum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialDatum::Const => write!(f, "const"),
            InitialDatum::Cos2 { offset } if *offset == 0.01 => write!(f, "cos2"),
            InitialDatum::Cos2 { offset } => write!(f, "cos2:{offset}"),
            InitialDatum::Root5 => write!(f, "root5"),
            InitialDatum::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// Reads whitespace- or comma-separated `(x, u)` rows; `#` starts a comment.
pub fn read_samples(path: &Path) -> Result<EulerianSamples> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut x = Vec::new();
    let mut u = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("not a number: '{s}'"),
            })
        };
        if cols.len() != 2 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("expected 2 columns, found {}", cols.len()),
            });
        }
        x.push(parse(cols[0])?);
        u.push(parse(cols[1])?);
    }
    EulerianSamples::new(x, u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_datum_gives_uniform_grid() {
        let s = EulerianSamples::uniform(4, |_| 1.0).unwrap();
        let (grid, g) = build_initial(&s).unwrap();
        assert_eq!(grid.mass(), 1.0);
        for (j, &w) in grid.omega().iter().enumerate() {
            assert!((w - 0.25 * j as f64).abs() < 1e-15);
        }
        assert_eq!(g.lin(), &[1.0; 4]);
        assert_eq!(g.quad(), &[0.0; 4]);
    }

    #[test]
    fn cos2_datum_mass_and_normalization() {
        let s = InitialDatum::parse("cos2").unwrap().samples(100).unwrap();
        let (grid, g) = build_initial(&s).unwrap();
        // Harmonic-mean quadrature of the exact mass 0.51, second order.
        let err = (grid.mass() - 0.51).abs();
        assert!(err < 2.5e-3, "M = {}", grid.mass());
        let fine = InitialDatum::parse("cos2").unwrap().samples(200).unwrap();
        let err_fine = (build_initial(&fine).unwrap().0.mass() - 0.51).abs();
        assert!(err_fine < err / 3.0, "{err} {err_fine}");
        let total: f64 = (1..=100).map(|j| g.cell_integral(&grid, j)).sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn root5_datum_is_positive() {
        let d = InitialDatum::Root5;
        let min = d.density(0.5).unwrap();
        assert!((min - (1e-4f64.powf(0.2) - 0.1)).abs() < 1e-15);
        assert!((min - 0.0585).abs() < 1e-4);
        let s = d.samples(100).unwrap();
        assert!(build_initial(&s).is_ok());
    }

    #[test]
    fn rejects_bad_data() {
        let s = EulerianSamples::uniform(4, |x| if x == 0.5 { -1.0 } else { 1.0 }).unwrap();
        assert!(matches!(build_initial(&s), Err(Error::NonPositiveDensity { index: 2, .. })));

        let s = EulerianSamples::uniform(4, |x| 1.0 + x).unwrap();
        assert!(matches!(build_initial(&s), Err(Error::AsymmetricDatum { .. })));

        let s = EulerianSamples::new(vec![0.0, 0.2, 0.5, 0.8, 1.0], vec![1.0; 5]).unwrap();
        assert!(matches!(build_initial(&s), Err(Error::InvalidSamples(_))));
    }

    #[test]
    fn reconstruct_constant_two() {
        let grid = LagrangianGrid::uniform(2, 0.5).unwrap();
        let g = WeightVector::new(&[2.0, 2.0], &[0.0, 0.0]).unwrap();
        let p = reconstruct_eulerian(&grid, &g).unwrap();
        assert_eq!(p.x, vec![0.0, 0.5, 1.0]);
        assert_eq!(p.u, vec![0.5, 0.5, 0.5]);
    }

    #[test]
    fn reconstruct_identity() {
        let grid = LagrangianGrid::uniform(8, 1.0).unwrap();
        let g = WeightVector::constant(8, 1.0);
        let p = reconstruct_eulerian(&grid, &g).unwrap();
        for (x, w) in p.x.iter().zip(grid.omega()) {
            assert!((x - w).abs() < 1e-15);
        }
        assert!(p.u.iter().all(|&u| u == 1.0));
    }

    #[test]
    fn reconstruct_rejects_negative_bump() {
        let grid = LagrangianGrid::uniform(4, 1.0).unwrap();
        // Nodes positive, but a deep negative bump dips below zero mid-cell.
        let g = WeightVector::new(&[1.0; 4], &[-1.5, 0.0, 0.0, -1.5]).unwrap();
        assert!(matches!(reconstruct_eulerian(&grid, &g), Err(Error::NonPositiveG { .. })));
    }

    #[test]
    fn min_value_finds_interior_extremum() {
        let g = WeightVector::new(&[1.0, 2.0], &[-0.5, 0.0]).unwrap();
        // Cell 1 goes from g_0 = g_2 = 2 to g_1 = 1 with a downward bump.
        let (cell, v) = g.min_value();
        assert_eq!(cell, 1);
        let s: f64 = 0.5 + (1.0 - 2.0) / (8.0 * -0.5);
        let expect = 2.0 * (1.0 - s) + s - 2.0 * s * (1.0 - s);
        assert!((v - expect).abs() < 1e-15);
        assert!(v < 1.0);
    }

    #[test]
    fn constant_flow_transports_identically() {
        let grid = LagrangianGrid::uniform(10, 2.0).unwrap();
        let g = WeightVector::steady_state(&grid);
        let labels = default_labels(2.0, 7);
        let t = trace_particles(&grid, &[g.clone(), g], &labels).unwrap();
        for row in &t.positions {
            for (x, w) in row.iter().zip(&labels) {
                assert!((x - w / 2.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn median_stays_at_half_for_symmetric_g() {
        let s = InitialDatum::Root5.samples(40).unwrap();
        let (grid, g) = build_initial(&s).unwrap();
        let x = particle_positions(&grid, &g, &[grid.mass() / 2.0]).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn labels_must_be_interior() {
        let grid = LagrangianGrid::uniform(4, 1.0).unwrap();
        let g = WeightVector::constant(4, 1.0);
        assert!(matches!(
            particle_positions(&grid, &g, &[0.0]),
            Err(Error::LabelOutOfRange { .. })
        ));
        assert!(matches!(
            particle_positions(&grid, &g, &[1.0]),
            Err(Error::LabelOutOfRange { .. })
        ));
    }

    #[test]
    fn grid_derived_quantities_wrap() {
        let grid = LagrangianGrid::from_widths(&[0.1, 0.3, 0.3, 0.1]).unwrap();
        assert!((grid.delta(5) - 0.1).abs() < 1e-15);
        assert!((grid.half_span(4) - 0.1).abs() < 1e-15);
        assert!((grid.half_span(2) - 0.3).abs() < 1e-15);
        assert!((grid.centroid(2) - (0.1 + 0.4 + 0.7) / 3.0).abs() < 1e-15);
        assert!(LagrangianGrid::from_widths(&[0.1, 0.3, 0.2, 0.1]).is_err());
    }

    #[test]
    fn reflection_is_involution() {
        let g = WeightVector::new(&[1.0, 2.0, 3.0, 4.0], &[0.1, 0.2, 0.3, 0.4]).unwrap();
        let r = g.reflected();
        assert_eq!(r.lin(), &[3.0, 2.0, 1.0, 4.0]);
        assert_eq!(r.quad(), &[0.4, 0.3, 0.2, 0.1]);
        assert_eq!(r.reflected(), g);
    }

    #[test]
    fn parse_initial_data() {
        assert_eq!(InitialDatum::parse("cos2:0.1").unwrap(), InitialDatum::Cos2 { offset: 0.1 });
        assert_eq!(InitialDatum::parse("const").unwrap(), InitialDatum::Const);
        assert!(InitialDatum::parse("sin").is_err());
        assert_eq!(InitialDatum::parse("cos2:0.1").unwrap().to_string(), "cos2:0.1");
    }

    #[test]
    fn reads_two_column_file() {
        let dir = std::env::temp_dir().join(format!("lbdf-samples-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("u0.txt");
        std::fs::write(&path, "# x u\n0 2\n0.25, 1\n0.5 0.5\n0.75 1\n1 2\n").unwrap();
        let s = InitialDatum::File(path.clone()).samples(4).unwrap();
        assert_eq!(s.u, vec![2.0, 1.0, 0.5, 1.0, 2.0]);
        assert!(InitialDatum::File(path).samples(8).is_err());
    }
}
