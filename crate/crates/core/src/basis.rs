//! Finite-element basis on the mass grid and the Wasserstein quadratic form.
//!
//! For two densities with Lagrangian derivatives `g`, `g*` on the same grid,
//!
//! ```text
//! W² = ∫∫ (M - max(η, η')) (g - g*)(η) (g - g*)(η') dη dη' = (g - g*)ᵀ M_w (g - g*).
//! ```
//!
//! `M_w` is assembled two ways. [`assemble_quadrature`] integrates the kernel
//! numerically on every cell pair, splitting same-cell squares along the diagonal
//! so each piece is polynomial; it is the reference. [`assemble_closed_form`] uses
//! exact per-piece formulas and must agree with it to roundoff.
//!
//! Each basis function is a sum of *pieces*, one local shape on one cell:
//! `L0 = 1 - s`, `L1 = s`, `B = 4s(1 - s)` with `s` the local coordinate. For a
//! piece `p` on `[a, a + h]` let `I_p = ∫p` and `E_p = ∫ηp`. Two pieces on cells
//! `c < d` contribute `I_p (M I_q - E_q)`; two pieces on the same cell contribute
//! `(M - a) I_p I_q - h³ T(p, q)` with `T(p, q) = ∫₀¹∫₀¹ max(s, t) p(s) q(t)`:
//!
//! | T   | L0     | L1    | B      |
//! |-----|--------|-------|--------|
//! | L0  | 7/60   | 7/40  | 17/90  |
//! | L1  | 7/40   | 1/5   | 11/45  |
//! | B   | 17/90  | 11/45 | 88/315 |
//!
//! Expanding these for the hat/hat block reproduces the familiar
//! `a_jj = Δ_j²(M - σ_j) - Δ_j(12Δ_j² + δ_j² + δ_{j+1}²)/60`,
//! `a_{j,j+1} = Δ_jΔ_{j+1}(M - σ_{j+1}) - δ_{j+1}³/120`,
//! `a_jk = Δ_jΔ_k(M - σ_k)` for `k ≥ j + 2`, `a_NN = MΔ_N²/4 + Δ_N³/10` on
//! symmetric grids. In the bump/bump block, `c_jk = (4/9) M δ_j δ_k - (2/9) δ_j (ω_k² - ω_{k-1}²)`
//! for `j < k`.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lagrangian::{check_dims, LagrangianGrid, WeightVector};
use crate::quadrature::GaussRule;

/// Local shape of a basis piece on one cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Falling,
    Rising,
    Bump,
}

impl Shape {
    pub fn eval(self, s: f64) -> f64 {
        match self {
            Shape::Falling => 1.0 - s,
            Shape::Rising => s,
            Shape::Bump => 4.0 * s * (1.0 - s),
        }
    }

    fn integral(self) -> f64 {
        match self {
            Shape::Falling | Shape::Rising => 0.5,
            Shape::Bump => 2.0 / 3.0,
        }
    }

    fn first_moment(self) -> f64 {
        match self {
            Shape::Falling => 1.0 / 6.0,
            Shape::Rising | Shape::Bump => 1.0 / 3.0,
        }
    }

    fn index(self) -> usize {
        match self {
            Shape::Falling => 0,
            Shape::Rising => 1,
            Shape::Bump => 2,
        }
    }
}

/// `T(p, q) = ∫₀¹∫₀¹ max(s, t) p(s) q(t) ds dt` for the local shapes.
const MAX_KERNEL: [[f64; 3]; 3] = [
    [7.0 / 60.0, 7.0 / 40.0, 17.0 / 90.0],
    [7.0 / 40.0, 1.0 / 5.0, 11.0 / 45.0],
    [17.0 / 90.0, 11.0 / 45.0, 88.0 / 315.0],
];

/// The three basis pieces living on cell `j` as `(0-based global index, shape)`.
fn cell_pieces(n: usize, j: usize) -> [(usize, Shape); 3] {
    // Node j-1 falls across cell j, node j rises across it; node 0 is node N.
    let left = if j == 1 { n - 1 } else { j - 2 };
    [(left, Shape::Falling), (j - 1, Shape::Rising), (n + j - 1, Shape::Bump)]
}

/// Basis function `φ_index` (1-based) at `ω ∈ [0, M]`.
pub fn eval_basis(grid: &LagrangianGrid, index: usize, w: f64) -> Result<f64> {
    let n = grid.n_cells();
    if index == 0 || index > 2 * n {
        return Err(Error::IndexOutOfRange { index, max: 2 * n });
    }
    let m = grid.mass();
    if !(0.0..=m).contains(&w) {
        return Ok(0.0);
    }
    let om = grid.omega();
    let v = if index < n {
        let j = index;
        if w >= om[j - 1] && w <= om[j] {
            (w - om[j - 1]) / (om[j] - om[j - 1])
        } else if w > om[j] && w <= om[j + 1] {
            (om[j + 1] - w) / (om[j + 1] - om[j])
        } else {
            0.0
        }
    } else if index == n {
        if w <= om[1] {
            (om[1] - w) / om[1]
        } else if w >= om[n - 1] {
            (w - om[n - 1]) / (m - om[n - 1])
        } else {
            0.0
        }
    } else {
        let j = index - n;
        let (lo, hi) = (om[j - 1], om[j]);
        if w >= lo && w <= hi {
            let s = (w - lo) / (hi - lo);
            4.0 * s * (1.0 - s)
        } else {
            0.0
        }
    };
    Ok(v)
}

/// Coefficients `c` with `c · g = ∫_0^M g`.
#[derive(Debug, Clone, PartialEq)]
pub struct MassFunctional {
    pub coefficients: DVector<f64>,
}

impl MassFunctional {
    pub fn new(grid: &LagrangianGrid) -> Self {
        let n = grid.n_cells();
        let mut c = DVector::zeros(2 * n);
        for j in 1..=n {
            c[j - 1] = grid.half_span(j);
            c[n + j - 1] = 2.0 / 3.0 * grid.delta(j);
        }
        MassFunctional { coefficients: c }
    }

    pub fn apply(&self, g: &DVector<f64>) -> f64 {
        self.coefficients.dot(g)
    }
}

/// `∫_0^M g = Σ_j ((g_{j-1} + g_j)/2 + (2/3) g_{N+j}) δ_j`.
pub fn mass(grid: &LagrangianGrid, g: &WeightVector) -> Result<f64> {
    check_dims(grid, g)?;
    Ok((1..=grid.n_cells()).map(|j| g.cell_integral(grid, j)).sum())
}

/// Symmetric `2N × 2N` matrix of the Wasserstein quadratic form.
#[derive(Debug, Clone, PartialEq)]
pub struct WassersteinMatrix {
    pub entries: DMatrix<f64>,
}

impl WassersteinMatrix {
    // Averaging with the transpose makes the stored matrix exactly symmetric
    // regardless of accumulation order.
    fn symmetric(mat: DMatrix<f64>) -> Self {
        let t = mat.transpose();
        WassersteinMatrix {
            entries: (mat + t) * 0.5,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.amax()
    }

    /// `vᵀ M_w w`.
    pub fn bilinear(&self, v: &DVector<f64>, w: &DVector<f64>) -> Result<f64> {
        for x in [v, w] {
            if x.len() != self.dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.dim(),
                    found: x.len(),
                });
            }
        }
        Ok(v.dot(&(&self.entries * w)))
    }

    /// Row-major dump with 17 significant digits.
    pub fn write_text(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        for i in 0..self.dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|j| format!("{:.16e}", self.entries[(i, j)]))
                .collect();
            writeln!(out, "{}", row.join(" ")).map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

/// Which route builds `M_w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assembler {
    Quadrature,
    ClosedForm,
}

impl Assembler {
    pub fn assemble(self, grid: &LagrangianGrid) -> WassersteinMatrix {
        match self {
            Assembler::Quadrature => assemble_quadrature(grid),
            Assembler::ClosedForm => assemble_closed_form(grid),
        }
    }
}

impl std::str::FromStr for Assembler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadrature" => Ok(Assembler::Quadrature),
            "closed_form" | "closed-form" => Ok(Assembler::ClosedForm),
            _ => Err(Error::Config(format!("unknown assembler '{s}'"))),
        }
    }
}

impl std::fmt::Display for Assembler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Assembler::Quadrature => "quadrature",
            Assembler::ClosedForm => "closed_form",
        })
    }
}

/// Numerical assembly on every cell pair.
///
/// The physical kernel `M - max(η, η')` is evaluated at the quadrature points. On
/// distinct cells it is linear, so a tensor Gauss rule is exact. A same-cell square
/// is split along `η = η'`; each triangle is mapped from the unit square by a
/// collapsed (Duffy) transform, after which the integrand has degree at most 6 per
/// axis and the 4-point rule is exact.
pub fn assemble_quadrature(grid: &LagrangianGrid) -> WassersteinMatrix {
    let n = grid.n_cells();
    let m = grid.mass();
    let dim = 2 * n;
    let rule = GaussRule::new(4);
    let shapes = [Shape::Falling, Shape::Rising, Shape::Bump];

    // Tensor points on the unit square for off-diagonal pairs: (s, t, weight).
    let mut square = Vec::new();
    for (&s, &ws) in rule.nodes.iter().zip(&rule.weights) {
        for (&t, &wt) in rule.nodes.iter().zip(&rule.weights) {
            square.push((s, t, ws * wt));
        }
    }
    // Both triangles of the unit square, collapsed onto it.
    let mut split = Vec::new();
    for (&u, &wu) in rule.nodes.iter().zip(&rule.weights) {
        for (&v, &wv) in rule.nodes.iter().zip(&rule.weights) {
            split.push((u, u * v, wu * wv * u));
            split.push((u * v, u, wu * wv * u));
        }
    }

    let mut mat = DMatrix::zeros(dim, dim);
    for c in 1..=n {
        let (a, b) = grid.cell(c);
        let h = b - a;
        let pc = cell_pieces(n, c);
        for d in 1..=n {
            let (a2, b2) = grid.cell(d);
            let h2 = b2 - a2;
            let pd = cell_pieces(n, d);
            let points = if c == d { &split } else { &square };
            let mut block = [[0.0; 3]; 3];
            for &(s, t, w) in points {
                let eta = a + h * s;
                let eta2 = a2 + h2 * t;
                let k = w * h * h2 * (m - eta.max(eta2));
                for (pi, sp) in shapes.iter().enumerate() {
                    let ps = k * sp.eval(s);
                    for (qi, sq) in shapes.iter().enumerate() {
                        block[pi][qi] += ps * sq.eval(t);
                    }
                }
            }
            for &(gi, sp) in &pc {
                for &(gj, sq) in &pd {
                    mat[(gi, gj)] += block[sp.index()][sq.index()];
                }
            }
        }
    }
    WassersteinMatrix::symmetric(mat)
}

/// Closed-form assembly from exact piece moments and the [`MAX_KERNEL`] table.
pub fn assemble_closed_form(grid: &LagrangianGrid) -> WassersteinMatrix {
    let n = grid.n_cells();
    let m = grid.mass();
    let dim = 2 * n;
    let shapes = [Shape::Falling, Shape::Rising, Shape::Bump];

    let mut integ = vec![[0.0; 3]; n + 1];
    let mut moment = vec![[0.0; 3]; n + 1];
    for j in 1..=n {
        let (a, b) = grid.cell(j);
        let h = b - a;
        for sh in shapes {
            integ[j][sh.index()] = h * sh.integral();
            moment[j][sh.index()] = a * h * sh.integral() + h * h * sh.first_moment();
        }
    }
    // Tail sums R_d[q] = M I_q - E_q are reused for every earlier cell.
    let tail: Vec<[f64; 3]> = (0..=n)
        .map(|j| {
            let mut r = [0.0; 3];
            if j > 0 {
                for k in 0..3 {
                    r[k] = m * integ[j][k] - moment[j][k];
                }
            }
            r
        })
        .collect();

    let mut mat = DMatrix::zeros(dim, dim);
    for c in 1..=n {
        let pc = cell_pieces(n, c);
        let (a, b) = grid.cell(c);
        let h = b - a;
        for &(gi, sp) in &pc {
            let pi = sp.index();
            for &(gj, sq) in &pc {
                let qi = sq.index();
                mat[(gi, gj)] += (m - a) * integ[c][pi] * integ[c][qi] - h * h * h * MAX_KERNEL[pi][qi];
            }
            for d in (c + 1)..=n {
                for &(gj, sq) in &cell_pieces(n, d) {
                    let v = integ[c][pi] * tail[d][sq.index()];
                    mat[(gi, gj)] += v;
                    mat[(gj, gi)] += v;
                }
            }
        }
    }
    WassersteinMatrix::symmetric(mat)
}

/// `(g - g*)ᵀ M_w (g - g*)`.
pub fn wasserstein_sq(mw: &WassersteinMatrix, g: &WeightVector, g_star: &WeightVector) -> Result<f64> {
    if g.n_cells() != g_star.n_cells() {
        return Err(Error::DimensionMismatch {
            expected: 2 * g_star.n_cells(),
            found: 2 * g.n_cells(),
        });
    }
    let d = g.as_vector() - g_star.as_vector();
    mw.bilinear(&d, &d)
}
