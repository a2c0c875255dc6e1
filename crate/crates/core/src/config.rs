//! Run configuration from flat `key = value` files.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::basis::Assembler;
use crate::error::{Error, Result};
use crate::lagrangian::InitialDatum;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Euler,
    Bdf2,
}

impl Scheme {
    pub fn order(self) -> usize {
        match self {
            Scheme::Euler => 1,
            Scheme::Bdf2 => 2,
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Scheme::Euler),
            "bdf2" => Ok(Scheme::Bdf2),
            other => Err(Error::Config(format!("unknown scheme `{other}` (use euler or bdf2)"))),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Euler => "euler",
            Scheme::Bdf2 => "bdf2",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub alpha: f64,
    pub n_cells: usize,
    pub tau: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub initial: InitialDatum,
    /// Steps between snapshot files; 0 writes only the initial and final state.
    pub snapshot_every: usize,
    /// Number of tracked particles; 0 disables trajectories.
    pub particles: usize,
    pub assembler: Assembler,
    pub fit_window_start: Option<f64>,
    pub fit_window_end: Option<f64>,
}

const KEYS: [&str; 13] = [
    "alpha",
    "n_cells",
    "tau",
    "t_end",
    "scheme",
    "newton_tol",
    "newton_max_iter",
    "initial",
    "snapshot_every",
    "particles",
    "assembler",
    "fit_window_start",
    "fit_window_end",
];

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            alpha: -1.0,
            n_cells: 100,
            tau: 1e-5,
            t_end: 0.02,
            scheme: Scheme::Bdf2,
            newton_tol: 1e-8,
            newton_max_iter: 50,
            initial: InitialDatum::Cos2 { offset: 0.01 },
            snapshot_every: 0,
            particles: 0,
            assembler: Assembler::ClosedForm,
            fit_window_start: None,
            fit_window_end: None,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("invalid value `{value}` for `{key}`: {e}")))
}

impl RunConfig {
    /// Sets one key; unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "alpha" => self.alpha = parse_value(key, value)?,
            "n_cells" => self.n_cells = parse_value(key, value)?,
            "tau" => self.tau = parse_value(key, value)?,
            "t_end" => self.t_end = parse_value(key, value)?,
            "scheme" => self.scheme = value.parse()?,
            "newton_tol" => self.newton_tol = parse_value(key, value)?,
            "newton_max_iter" => self.newton_max_iter = parse_value(key, value)?,
            "initial" => self.initial = InitialDatum::parse(value)?,
            "snapshot_every" => self.snapshot_every = parse_value(key, value)?,
            "particles" => self.particles = parse_value(key, value)?,
            "assembler" => self.assembler = value.parse()?,
            "fit_window_start" => self.fit_window_start = Some(parse_value(key, value)?),
            "fit_window_end" => self.fit_window_end = Some(parse_value(key, value)?),
            other => {
                return Err(Error::Config(format!(
                    "unknown key `{other}` (allowed: {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    pub fn parse_str(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            if seen.contains(&key) {
                return Err(parse_err(format!("duplicate key `{key}`")));
            }
            seen.push(key);
            cfg.set(key, value).map_err(|e| parse_err(e.to_string()))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text, path)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(self.alpha < 0.0) || !self.alpha.is_finite() {
            return fail(format!("alpha must be negative, got {}", self.alpha));
        }
        if !(self.tau > 0.0) {
            return fail(format!("tau must be positive, got {}", self.tau));
        }
        if !(self.t_end > self.tau) {
            return fail(format!("t_end = {} must exceed tau = {}", self.t_end, self.tau));
        }
        // Any N is point-symmetric on the uniform grid; odd N is needed by the
        // spatial study (N = 25).
        if self.n_cells < 4 {
            return fail(format!("n_cells must be at least 4, got {}", self.n_cells));
        }
        if !(self.newton_tol > 0.0) {
            return fail(format!("newton_tol must be positive, got {}", self.newton_tol));
        }
        if self.newton_max_iter == 0 {
            return fail("newton_max_iter must be at least 1".into());
        }
        if let (Some(a), Some(b)) = (self.fit_window_start, self.fit_window_end) {
            if !(a < b) {
                return fail(format!("fit window [{a}, {b}] is empty"));
            }
        }
        Ok(())
    }

    /// Number of time steps, `round(T/τ)`.
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.tau).round() as usize
    }

    /// Canonical `key = value` rendering; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "alpha = {:?}\nn_cells = {}\ntau = {:?}\nt_end = {:?}\nscheme = {}\nnewton_tol = {:?}\n\
newton_max_iter = {}\ninitial = {}\nsnapshot_every = {}\nparticles = {}\nassembler = {}\n",
            self.alpha,
            self.n_cells,
            self.tau,
            self.t_end,
            self.scheme,
            self.newton_tol,
            self.newton_max_iter,
            self.initial,
            self.snapshot_every,
            self.particles,
            self.assembler
        );
        if let Some(a) = self.fit_window_start {
            s.push_str(&format!("fit_window_start = {a:?}\n"));
        }
        if let Some(b) = self.fit_window_end {
            s.push_str(&format!("fit_window_end = {b:?}\n"));
        }
        s
    }
}
