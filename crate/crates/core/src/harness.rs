//! Run orchestration, artifact emission and the study drivers.
//!
//! A run writes into its output directory:
//!
//! - `series.csv`: one [`DiagnosticsRecord`] per step, step 0 included;
//! - `snapshot_NNNNNN.csv`: states at the configured cadence plus the first and last;
//! - `trajectories.csv`: particle positions when `particles > 0`;
//! - `summary.txt`: configuration, decay fits and the reference rate.
//!
//! Everything is computed sequentially per run, so identical configurations
//! produce byte-identical files. Studies run their member flows in parallel.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{RunConfig, Scheme};
use crate::diagnostics::{auto_window, fit_decay_rate, theoretical_rate, DecayFit, Diagnostics, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::flow::{write_file, Flow, Snapshot};
use crate::kkt::NewtonReport;
use crate::lagrangian::{default_labels, particle_positions, InitialDatum};
use crate::oracle::{reference_flow, u_on_comparison_grid, COMPARISON_POINTS};

/// Saturation level of the relative entropy, in units of the Newton tolerance.
pub const SATURATION_FACTOR: f64 = 1e3;

/// Diagnostics of the current flow state.
pub fn record_of(flow: &Flow, newton: Option<&NewtonReport>) -> Result<DiagnosticsRecord> {
    let d = Diagnostics::new(flow.grid(), flow.mw(), flow.model(), flow.mass())?;
    let st = flow.state();
    d.record(st.step, st.time, st.current(), st.previous(), newton)
}

/// Advances `flow` by `steps`, calling `observe` after every accepted step.
pub fn drive(
    flow: &mut Flow,
    steps: usize,
    mut observe: impl FnMut(&Flow, &NewtonReport) -> Result<()>,
) -> Result<()> {
    for _ in 0..steps {
        let report = flow.step()?;
        observe(flow, &report)?;
    }
    Ok(())
}

/// Runs `config` and returns one record per step without writing files.
pub fn simulate(config: &RunConfig) -> Result<Vec<DiagnosticsRecord>> {
    let mut flow = Flow::new(config)?;
    let mut records = vec![record_of(&flow, None)?];
    drive(&mut flow, config.n_steps(), |f, rep| {
        records.push(record_of(f, Some(rep))?);
        Ok(())
    })?;
    Ok(records)
}

/// Which observable a series or fit refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    Entropy,
    GNorm,
    VarU,
    VarG,
}

impl Observable {
    pub const ALL: [Observable; 4] = [Observable::Entropy, Observable::GNorm, Observable::VarU, Observable::VarG];

    pub fn name(self) -> &'static str {
        match self {
            Observable::Entropy => "entropy_rel",
            Observable::GNorm => "gnorm_sq_rel",
            Observable::VarU => "var_u",
            Observable::VarG => "var_g",
        }
    }

    pub fn value(self, r: &DiagnosticsRecord) -> f64 {
        match self {
            Observable::Entropy => r.entropy_rel,
            Observable::GNorm => r.gnorm_sq_rel,
            Observable::VarU => r.var_u,
            Observable::VarG => r.var_g,
        }
    }

    pub fn series(self, records: &[DiagnosticsRecord]) -> Vec<(f64, f64)> {
        records.iter().map(|r| (r.time, self.value(r))).collect()
    }
}

/// Decay fits of all observables over a common window.
#[derive(Debug, Clone, PartialEq)]
pub struct FitSet {
    pub window: Option<(f64, f64)>,
    pub fits: Vec<(Observable, Option<DecayFit>)>,
}

impl FitSet {
    pub fn get(&self, o: Observable) -> Option<&DecayFit> {
        self.fits.iter().find(|(k, _)| *k == o).and_then(|(_, f)| f.as_ref())
    }
}

/// Fit window: configured bounds where given, otherwise the automatic window
/// of the entropy series (bootstrap skipped, cut at saturation).
pub fn fit_window(records: &[DiagnosticsRecord], config: &RunConfig) -> Option<(f64, f64)> {
    let auto = auto_window(
        &Observable::Entropy.series(records),
        SATURATION_FACTOR * config.newton_tol,
    )
    .ok();
    match (config.fit_window_start, config.fit_window_end, auto) {
        (Some(a), Some(b), _) => Some((a, b)),
        (Some(a), None, Some((_, b))) => Some((a, b)),
        (None, Some(b), Some((a, _))) => Some((a, b)),
        (None, None, auto) => auto,
        _ => None,
    }
}

pub fn fit_all(records: &[DiagnosticsRecord], config: &RunConfig) -> FitSet {
    let window = fit_window(records, config);
    let fits = Observable::ALL
        .iter()
        .map(|&o| (o, window.and_then(|w| fit_decay_rate(&o.series(records), w).ok())))
        .collect();
    FitSet { window, fits }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub records: Vec<DiagnosticsRecord>,
    pub fits: FitSet,
    /// `‖u⁰‖₁`, the total mass of the discrete initial datum.
    pub mass: f64,
    pub theoretical_rate: Option<f64>,
    pub final_snapshot: Snapshot,
}

fn snapshot_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("snapshot_{step:06}.csv"))
}

fn series_text(records: &[DiagnosticsRecord]) -> String {
    let mut s = String::from(DiagnosticsRecord::CSV_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&r.to_csv_row());
        s.push('\n');
    }
    s
}

/// Executes `config`, writing all artifacts to `out_dir`.
///
/// On a solver failure the series so far and the last accepted state are
/// flushed before the error is returned.
pub fn run(config: &RunConfig, out_dir: &Path) -> Result<RunSummary> {
    config.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut flow = Flow::new(config)?;
    let mass = flow.grid().mass();
    let labels = default_labels(mass, config.particles);
    let mut traj = String::new();
    if config.particles > 0 {
        traj.push_str("step,time");
        for p in 1..=config.particles {
            write!(traj, ",x_{p}").unwrap();
        }
        traj.push('\n');
    }
    let push_traj = |flow: &Flow, traj: &mut String| -> Result<()> {
        if labels.is_empty() {
            return Ok(());
        }
        let st = flow.state();
        let xs = particle_positions(flow.grid(), st.current(), &labels)?;
        write!(traj, "{},{:.16e}", st.step, st.time).unwrap();
        for x in xs {
            write!(traj, ",{x:.16e}").unwrap();
        }
        traj.push('\n');
        Ok(())
    };

    let mut records = vec![record_of(&flow, None)?];
    flow.snapshot().write_table(&snapshot_path(out_dir, 0))?;
    push_traj(&flow, &mut traj)?;
    let steps = config.n_steps();
    let outcome = drive(&mut flow, steps, |f, rep| {
        records.push(record_of(f, Some(rep))?);
        push_traj(f, &mut traj)?;
        let step = f.state().step;
        if config.snapshot_every > 0 && step % config.snapshot_every == 0 && step != steps {
            f.snapshot().write_table(&snapshot_path(out_dir, step))?;
        }
        Ok(())
    });
    let last = flow.snapshot();
    last.write_table(&snapshot_path(out_dir, last.step))?;
    write_file(&out_dir.join("series.csv"), &series_text(&records))?;
    if config.particles > 0 {
        write_file(&out_dir.join("trajectories.csv"), &traj)?;
    }
    outcome?;

    let fits = fit_all(&records, config);
    let theory = theoretical_rate(config.alpha, mass).ok();
    let summary = RunSummary {
        records,
        fits,
        mass,
        theoretical_rate: theory,
        final_snapshot: last,
    };
    write_file(&out_dir.join("summary.txt"), &summary_text(config, &summary))?;
    Ok(summary)
}

fn fmt_fit(fit: Option<&DecayFit>) -> String {
    match fit {
        Some(f) => format!(
            "rate {:.6e}  residual {:.3e}  diff-quotient {:.6e}  points {}",
            f.rate, f.residual, f.diff_quotient, f.points
        ),
        None => "n/a (no usable window)".into(),
    }
}

fn summary_text(config: &RunConfig, s: &RunSummary) -> String {
    let mut out = String::from("# configuration\n");
    out.push_str(&config.to_text());
    let last = s.records.last().expect("records include step 0");
    let newton_max = s.records.iter().map(|r| r.newton_iterations).max().unwrap_or(0);
    let mass_max = s.records.iter().map(|r| r.mass_error.abs()).fold(0.0, f64::max);
    writeln!(out, "\n# run").unwrap();
    writeln!(out, "steps = {}", last.step).unwrap();
    writeln!(out, "final_time = {:.16e}", last.time).unwrap();
    writeln!(out, "initial_mass = {:.16e}", s.mass).unwrap();
    writeln!(out, "max_newton_iterations = {newton_max}").unwrap();
    writeln!(out, "max_abs_mass_error = {mass_max:.3e}").unwrap();
    writeln!(out, "final_entropy_rel = {:.6e}", last.entropy_rel).unwrap();
    writeln!(out, "\n# decay fits").unwrap();
    match s.fits.window {
        Some((a, b)) => writeln!(out, "window = [{a:.6e}, {b:.6e}]").unwrap(),
        None => writeln!(out, "window = none").unwrap(),
    }
    for o in Observable::ALL {
        writeln!(out, "{} : {}", o.name(), fmt_fit(s.fits.get(o))).unwrap();
    }
    match s.theoretical_rate {
        Some(r) => writeln!(out, "reference_rate = {r:.6e}  (continuous entropy bound; not a target for the discrete rate)").unwrap(),
        None => writeln!(out, "reference_rate = n/a (alpha outside [-1, 0))").unwrap(),
    }
    out
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            found: x.len(),
        });
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::NonPositiveValues);
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    Ok(sxy / sxx)
}

/// Errors per parameter value and their log-log slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub parameter: &'static str,
    pub values: Vec<f64>,
    pub err_g: Vec<f64>,
    pub err_u: Vec<f64>,
    /// `None` when every error is at roundoff level.
    pub slope_g: Option<f64>,
    pub slope_u: Option<f64>,
    pub notes: Vec<String>,
}

/// Errors at or below this level make a study degenerate.
pub const DEGENERATE_ERROR: f64 = 1e-10;

impl ConvergenceReport {
    fn finish(parameter: &'static str, values: Vec<f64>, err_g: Vec<f64>, err_u: Vec<f64>, notes: Vec<String>) -> Result<Self> {
        let slope = |err: &[f64]| -> Result<Option<f64>> {
            if err.iter().all(|e| *e <= DEGENERATE_ERROR) {
                Ok(None)
            } else {
                log_log_slope(&values, err).map(Some)
            }
        };
        let slope_g = slope(&err_g)?;
        let slope_u = slope(&err_u)?;
        Ok(ConvergenceReport {
            parameter,
            values,
            err_g,
            err_u,
            slope_g,
            slope_u,
            notes,
        })
    }

    pub fn is_degenerate(&self) -> bool {
        self.slope_g.is_none() && self.slope_u.is_none()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{},err_g,err_u\n", self.parameter);
        for ((v, g), u) in self.values.iter().zip(&self.err_g).zip(&self.err_u) {
            writeln!(out, "{v:.16e},{g:.16e},{u:.16e}").unwrap();
        }
        let fmt = |s: Option<f64>| s.map_or("degenerate".to_string(), |v| format!("{v:.4}"));
        writeln!(out, "# slope_g = {}", fmt(self.slope_g)).unwrap();
        writeln!(out, "# slope_u = {}", fmt(self.slope_u)).unwrap();
        for n in &self.notes {
            writeln!(out, "# {n}").unwrap();
        }
        out
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn rms_diff(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

/// `g` on the reference nodes, located by normalized mass fraction.
fn g_on_fractions(s: &Snapshot, fractions: &[f64]) -> Vec<f64> {
    fractions.iter().map(|&f| s.g_at_fraction(f)).collect()
}

/// Spatial order: ℓ∞ errors at `t_end` against a fine-grid reference.
///
/// `g` is compared at the reference nodes in the normalized mass coordinate
/// `ω/M`, `u` on the fixed comparison grid.
pub fn spatial_convergence_study(base: &RunConfig, n_list: &[usize], reference: &RunConfig) -> Result<ConvergenceReport> {
    if n_list.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            found: n_list.len(),
        });
    }
    let mut configs: Vec<RunConfig> = n_list
        .iter()
        .map(|&n| RunConfig {
            n_cells: n,
            ..base.clone()
        })
        .collect();
    configs.push(reference.clone());
    let snaps: Vec<Snapshot> = configs.par_iter().map(reference_flow).collect::<Result<_>>()?;
    let (refs, runs) = snaps.split_last().expect("reference present");
    let m_ref = refs.grid.mass();
    let fractions: Vec<f64> = refs.grid.omega().iter().map(|w| w / m_ref).collect();
    let g_ref = g_on_fractions(refs, &fractions);
    let u_ref = u_on_comparison_grid(refs)?;
    let mut err_g = Vec::new();
    let mut err_u = Vec::new();
    for s in runs {
        err_g.push(max_abs_diff(&g_on_fractions(s, &fractions), &g_ref));
        err_u.push(max_abs_diff(&u_on_comparison_grid(s)?, &u_ref));
    }
    let notes = vec![format!(
        "reference n_cells = {}, tau = {:e}, t_end = {:e}, initial = {}",
        reference.n_cells, reference.tau, reference.t_end, reference.initial
    )];
    ConvergenceReport::finish("n_cells", n_list.iter().map(|&n| n as f64).collect(), err_g, err_u, notes)
}

/// `u` and `g` on the comparison grids at every multiple of `sample` in `(tau_star, t_end]`.
fn sampled_states(config: &RunConfig, sample: f64, tau_star: f64) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let ratio = sample / config.tau;
    let stride = ratio.round() as usize;
    if stride == 0 || (ratio - stride as f64).abs() > 1e-9 * ratio {
        return Err(Error::Config(format!(
            "time step {:e} does not divide the sampling interval {sample:e}",
            config.tau
        )));
    }
    let fractions: Vec<f64> = (0..COMPARISON_POINTS)
        .map(|i| i as f64 / (COMPARISON_POINTS - 1) as f64)
        .collect();
    let mut flow = Flow::new(config)?;
    let mut out = Vec::new();
    drive(&mut flow, config.n_steps(), |f, _| {
        let st = f.state();
        if st.step % stride == 0 && st.time > tau_star * (1.0 + 1e-12) {
            let snap = f.snapshot();
            out.push((u_on_comparison_grid(&snap)?, g_on_fractions(&snap, &fractions)));
        }
        Ok(())
    })?;
    Ok(out)
}

/// Temporal order: `max_{t ∈ (τ*, T]} ‖u(t) - u_ref(t)‖₂` against a small-step reference.
///
/// States are sampled at multiples of the largest step in `tau_list`; the
/// discrete ℓ² norm is the RMS over the comparison grid.
pub fn temporal_convergence_study(
    base: &RunConfig,
    tau_list: &[f64],
    tau_star: f64,
    reference: &RunConfig,
) -> Result<ConvergenceReport> {
    if !(tau_star < base.t_end) {
        return Err(Error::EmptyWindow);
    }
    if tau_list.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            found: tau_list.len(),
        });
    }
    let sample = tau_list.iter().copied().fold(0.0, f64::max);
    let mut configs: Vec<RunConfig> = tau_list
        .iter()
        .map(|&tau| RunConfig { tau, ..base.clone() })
        .collect();
    configs.push(reference.clone());
    let all: Vec<_> = configs
        .par_iter()
        .map(|c| sampled_states(c, sample, tau_star))
        .collect::<Result<_>>()?;
    let (refs, runs) = all.split_last().expect("reference present");
    if refs.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let mut err_g = Vec::new();
    let mut err_u = Vec::new();
    for states in runs {
        if states.len() != refs.len() {
            return Err(Error::Config("study runs do not share sample times".into()));
        }
        let eu = states.iter().zip(refs).map(|(a, b)| rms_diff(&a.0, &b.0)).fold(0.0, f64::max);
        let eg = states.iter().zip(refs).map(|(a, b)| rms_diff(&a.1, &b.1)).fold(0.0, f64::max);
        err_u.push(eu);
        err_g.push(eg);
    }
    let notes = vec![
        format!("scheme = {}, reference scheme = {}, reference tau = {:e}", base.scheme, reference.scheme, reference.tau),
        format!("window = ({tau_star:e}, {:e}], {} sample times", base.t_end, refs.len()),
    ];
    ConvergenceReport::finish("tau", tau_list.to_vec(), err_g, err_u, notes)
}

/// Swept parameter of a decay study.
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    Cells(Vec<usize>),
    Alpha(Vec<f64>),
    Tau(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayRow {
    pub value: f64,
    pub fits: FitSet,
    pub theoretical_rate: Option<f64>,
}

impl DecayRow {
    pub fn rate(&self, o: Observable) -> Option<f64> {
        self.fits.get(o).map(|f| f.rate)
    }
}

pub fn decay_sweep(template: &RunConfig, sweep: &Sweep) -> Result<Vec<DecayRow>> {
    let configs: Vec<(f64, RunConfig)> = match sweep {
        Sweep::Cells(list) => list
            .iter()
            .map(|&n| (n as f64, RunConfig { n_cells: n, ..template.clone() }))
            .collect(),
        Sweep::Alpha(list) => list
            .iter()
            .map(|&alpha| (alpha, RunConfig { alpha, ..template.clone() }))
            .collect(),
        Sweep::Tau(list) => list
            .iter()
            .map(|&tau| (tau, RunConfig { tau, ..template.clone() }))
            .collect(),
    };
    configs
        .par_iter()
        .map(|(value, cfg)| {
            let records = simulate(cfg)?;
            let mass = Flow::new(cfg)?.grid().mass();
            Ok(DecayRow {
                value: *value,
                fits: fit_all(&records, cfg),
                theoretical_rate: theoretical_rate(cfg.alpha, mass).ok(),
            })
        })
        .collect()
}

pub fn decay_table(sweep: &Sweep, rows: &[DecayRow]) -> String {
    let name = match sweep {
        Sweep::Cells(_) => "n_cells",
        Sweep::Alpha(_) => "alpha",
        Sweep::Tau(_) => "tau",
    };
    let mut out = format!("{name},rate_entropy,rate_gnorm,rate_var_u,rate_var_g,residual_entropy,reference_rate\n");
    let f = |v: Option<f64>| v.map_or("nan".to_string(), |x| format!("{x:.16e}"));
    for r in rows {
        writeln!(
            out,
            "{:e},{},{},{},{},{},{}",
            r.value,
            f(r.rate(Observable::Entropy)),
            f(r.rate(Observable::GNorm)),
            f(r.rate(Observable::VarU)),
            f(r.rate(Observable::VarG)),
            f(r.fits.get(Observable::Entropy).map(|x| x.residual)),
            f(r.theoretical_rate)
        )
        .unwrap();
    }
    out
}

/// Offline re-validation of a `series.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub rows: usize,
    pub failures: Vec<String>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn read_series(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    match lines.next() {
        Some(h) if h.trim() == DiagnosticsRecord::CSV_HEADER => {}
        _ => return Err(parse_err(1, "missing or unexpected header".into())),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| DiagnosticsRecord::from_csv_row(l).map_err(|m| parse_err(i + 2, m)))
        .collect()
}

/// Checks the diagnostics invariants: consecutive steps, mass within `10·tol`,
/// non-negative relative entropy, and monotone entropy and G-norm decay
/// (slack `10·tol`) until the entropy saturates.
pub fn check_series(records: &[DiagnosticsRecord], tol: f64) -> CheckReport {
    let mut failures = Vec::new();
    if records.is_empty() {
        failures.push("series is empty".into());
    }
    let slack = 10.0 * tol;
    let saturation = SATURATION_FACTOR * tol;
    for (i, r) in records.iter().enumerate() {
        if r.step != i {
            failures.push(format!("row {i}: step {} out of sequence", r.step));
        }
        if r.mass_error.abs() > slack {
            failures.push(format!("step {}: mass error {:e}", r.step, r.mass_error));
        }
        if r.entropy_rel < -slack {
            failures.push(format!("step {}: negative relative entropy {:e}", r.step, r.entropy_rel));
        }
        if !(r.min_g > 0.0) {
            failures.push(format!("step {}: min g = {:e}", r.step, r.min_g));
        }
    }
    for w in records.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.entropy_rel < saturation {
            break;
        }
        if b.time <= a.time {
            failures.push(format!("step {}: time does not increase", b.step));
        }
        if b.entropy_rel > a.entropy_rel + slack {
            failures.push(format!("step {}: entropy increased by {:e}", b.step, b.entropy_rel - a.entropy_rel));
        }
        if b.gnorm_sq_rel > a.gnorm_sq_rel + slack {
            failures.push(format!("step {}: G-norm increased by {:e}", b.step, b.gnorm_sq_rel - a.gnorm_sq_rel));
        }
    }
    CheckReport {
        rows: records.len(),
        failures,
    }
}

/// Gnuplot script for a run directory (series and final snapshot).
pub fn plot_script(run_dir: &Path) -> Result<String> {
    let mut snaps: Vec<String> = std::fs::read_dir(run_dir)
        .map_err(|e| Error::io(run_dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("snapshot_") && n.ends_with(".csv"))
        .collect();
    snaps.sort();
    let mut s = String::from("set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo size 900,600\n\n");
    s.push_str("set output 'decay.png'\nset logscale y\nset xlabel 't'\n");
    s.push_str("plot 'series.csv' using 2:3 with lines, '' using 2:4 with lines, '' using 2:5 with lines, '' using 2:6 with lines\n");
    s.push_str("unset logscale y\n\n");
    if !snaps.is_empty() {
        s.push_str("set output 'profiles.png'\nset xlabel 'x'\nset ylabel 'u'\nplot ");
        let parts: Vec<String> = snaps.iter().map(|n| format!("'{n}' using 5:6 with lines title '{n}'")).collect();
        s.push_str(&parts.join(", "));
        s.push('\n');
    }
    if run_dir.join("trajectories.csv").exists() {
        s.push_str("\nset output 'trajectories.png'\nset xlabel 'x'\nset ylabel 't'\n");
        s.push_str("plot for [i=3:*] 'trajectories.csv' using i:2 with lines notitle\n");
    }
    Ok(s)
}

/// A named desk-scale study setup and how it departs from the full-scale protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub base: RunConfig,
    pub reference: RunConfig,
    pub deviation: &'static str,
}

pub const SPATIAL_CELLS: [usize; 4] = [25, 50, 100, 200];
pub const TEMPORAL_TAUS: [f64; 4] = [4e-5, 2e-5, 1e-5, 5e-6];
pub const TAU_STAR: f64 = 1e-4;

/// Spatial study: `cos² + 0.1`, `α = -1`, `T = 0.004`, reference `N = 400`, `τ = 1e-6`.
pub fn spatial_preset() -> Preset {
    let base = RunConfig {
        alpha: -1.0,
        tau: 1e-6,
        t_end: 0.004,
        scheme: Scheme::Bdf2,
        initial: InitialDatum::Cos2 { offset: 0.1 },
        ..RunConfig::default()
    };
    Preset {
        name: "space-desk",
        reference: RunConfig {
            n_cells: 400,
            ..base.clone()
        },
        base,
        deviation: "time step 1e-6 instead of 1e-7 and reference N=400 instead of N=500 (desk scale)",
    }
}

/// Temporal study: `N = 100`, `T = 0.004`, BDF-2 reference at `τ = 6.25e-7`.
pub fn temporal_preset(scheme: Scheme) -> Preset {
    let base = RunConfig {
        alpha: -1.0,
        n_cells: 100,
        t_end: 0.004,
        scheme,
        initial: InitialDatum::Cos2 { offset: 0.1 },
        ..RunConfig::default()
    };
    Preset {
        name: match scheme {
            Scheme::Euler => "time-desk-euler",
            Scheme::Bdf2 => "time-desk",
        },
        reference: RunConfig {
            tau: 6.25e-7,
            scheme: Scheme::Bdf2,
            ..base.clone()
        },
        base,
        deviation: "reference is BDF-2 on the same grid at tau=6.25e-7 (choice of this implementation)",
    }
}

/// Decay studies: `cos² + 0.01`, `τ = 1e-5`, `T = 0.02`.
pub fn decay_preset() -> RunConfig {
    RunConfig::default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let x = [10.0, 20.0, 40.0, 80.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-2.0)).collect();
        assert!((log_log_slope(&x, &y).unwrap() + 2.0).abs() < 1e-12);
        assert!(matches!(
            log_log_slope(&x[..2], &y[..2]),
            Err(Error::TooFewPoints { needed: 3, found: 2 })
        ));
    }

    #[test]
    fn study_guards() {
        let base = spatial_preset().base;
        assert!(matches!(
            spatial_convergence_study(&base, &[50], &base),
            Err(Error::TooFewPoints { .. })
        ));
        let late = RunConfig { t_end: 1e-4, ..base.clone() };
        assert!(matches!(
            temporal_convergence_study(&late, &TEMPORAL_TAUS, 1e-4, &late),
            Err(Error::EmptyWindow)
        ));
    }

    #[test]
    fn constant_datum_study_is_degenerate() {
        let base = RunConfig {
            initial: InitialDatum::Const,
            tau: 1e-4,
            t_end: 1e-3,
            ..RunConfig::default()
        };
        let reference = RunConfig { n_cells: 32, ..base.clone() };
        let rep = spatial_convergence_study(&base, &[8, 12, 16], &reference).unwrap();
        assert!(rep.is_degenerate());
        assert!(rep.err_u.iter().chain(&rep.err_g).all(|e| *e <= 1e-10));
        assert!(rep.to_text().contains("degenerate"));
    }

    #[test]
    fn check_flags_violations() {
        let rec = |step: usize, e: f64| DiagnosticsRecord {
            step,
            time: step as f64 * 1e-3,
            entropy_rel: e,
            gnorm_sq_rel: e,
            var_u: e,
            var_g: e,
            mass_error: 0.0,
            newton_iterations: 1,
            newton_residual: 0.0,
            newton_update: 0.0,
            min_g: 1.0,
        };
        let good: Vec<_> = (0..5).map(|i| rec(i, 1.0 / (i + 1) as f64)).collect();
        assert!(check_series(&good, 1e-8).passed());
        let mut bad = good.clone();
        bad[3].entropy_rel = 2.0;
        bad[2].mass_error = 1e-3;
        let rep = check_series(&bad, 1e-8);
        assert!(rep.failures.len() >= 2, "{:?}", rep.failures);
    }
}
