use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use lagrange_bdf::config::{RunConfig, Scheme};
use lagrange_bdf::error::{Error, Result};
use lagrange_bdf::harness::{
    check_series, decay_preset, decay_sweep, decay_table, plot_script, read_series, run,
    spatial_convergence_study, spatial_preset, temporal_convergence_study, temporal_preset, Preset,
    Sweep, SPATIAL_CELLS, TAU_STAR, TEMPORAL_TAUS,
};

const EXIT_CONFIG: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_CHECK: u8 = 3;

/// Lagrangian BDF solver for one-dimensional super-fast diffusion on the torus.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Euler,
    Bdf2,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Euler => Scheme::Euler,
            SchemeArg::Bdf2 => Scheme::Bdf2,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one flow from a `key = value` configuration file.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Spatial convergence study against a fine-grid reference.
    StudySpace {
        /// Base configuration; defaults to the desk-scale preset.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = SPATIAL_CELLS)]
        cells: Vec<usize>,
        #[arg(long, default_value_t = 400)]
        reference_cells: usize,
        #[arg(long, default_value = "study-space")]
        out: PathBuf,
    },
    /// Temporal convergence study against a small-step reference.
    StudyTime {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "bdf2")]
        scheme: SchemeArg,
        #[arg(long, value_delimiter = ',', default_values_t = TEMPORAL_TAUS)]
        taus: Vec<f64>,
        #[arg(long, default_value_t = 6.25e-7)]
        reference_tau: f64,
        #[arg(long, default_value_t = TAU_STAR)]
        tau_star: f64,
        #[arg(long, default_value = "study-time")]
        out: PathBuf,
    },
    /// Decay-rate table over grid sizes, exponents or time steps.
    StudyDecay {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', conflicts_with_all = ["alphas", "taus"])]
        cells: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "taus")]
        alphas: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        taus: Option<Vec<f64>>,
        #[arg(long, default_value = "study-decay")]
        out: PathBuf,
    },
    /// Re-validate a series.csv against the diagnostics invariants.
    Check {
        series: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Write a gnuplot script for a run directory.
    EmitPlots { run_dir: PathBuf },
}

fn load(config: Option<&Path>, fallback: RunConfig) -> Result<RunConfig> {
    match config {
        Some(p) => RunConfig::from_file(p),
        None => Ok(fallback),
    }
}

fn write_out(dir: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Error::Io { path, source: e })
}

fn preset_note(preset: &Preset, custom: bool) -> String {
    if custom {
        "custom base configuration".into()
    } else {
        format!("preset {}: {}", preset.name, preset.deviation)
    }
}

fn execute(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Run { config, out } => {
            let cfg = RunConfig::from_file(&config)?;
            let summary = run(&cfg, &out)?;
            let last = summary.records.last().expect("records include step 0");
            println!(
                "{} steps to t = {:.6e}; entropy_rel = {:.6e}; artifacts in {}",
                last.step,
                last.time,
                last.entropy_rel,
                out.display()
            );
        }
        Command::StudySpace {
            config,
            cells,
            reference_cells,
            out,
        } => {
            let preset = spatial_preset();
            let base = load(config.as_deref(), preset.base.clone())?;
            let reference = RunConfig {
                n_cells: reference_cells,
                ..base.clone()
            };
            let mut rep = spatial_convergence_study(&base, &cells, &reference)?;
            rep.notes.push(preset_note(&preset, config.is_some()));
            let text = rep.to_text();
            write_out(&out, "study.csv", &text)?;
            print!("{text}");
        }
        Command::StudyTime {
            config,
            scheme,
            taus,
            reference_tau,
            tau_star,
            out,
        } => {
            let preset = temporal_preset(scheme.into());
            let base = load(config.as_deref(), preset.base.clone())?;
            let reference = RunConfig {
                tau: reference_tau,
                scheme: Scheme::Bdf2,
                ..base.clone()
            };
            let mut rep = temporal_convergence_study(&base, &taus, tau_star, &reference)?;
            rep.notes.push(preset_note(&preset, config.is_some()));
            let text = rep.to_text();
            write_out(&out, "study.csv", &text)?;
            print!("{text}");
        }
        Command::StudyDecay {
            config,
            cells,
            alphas,
            taus,
            out,
        } => {
            let template = load(config.as_deref(), decay_preset())?;
            let sweep = match (cells, alphas, taus) {
                (Some(c), _, _) => Sweep::Cells(c),
                (_, Some(a), _) => Sweep::Alpha(a),
                (_, _, Some(t)) => Sweep::Tau(t),
                _ => Sweep::Cells(vec![50, 100, 200]),
            };
            let rows = decay_sweep(&template, &sweep)?;
            let text = decay_table(&sweep, &rows);
            write_out(&out, "rates.csv", &text)?;
            print!("{text}");
        }
        Command::Check { series, tol } => {
            let records = read_series(&series)?;
            let rep = check_series(&records, tol);
            if rep.passed() {
                println!("ok: {} rows satisfy the diagnostics invariants", rep.rows);
            } else {
                for f in &rep.failures {
                    println!("FAIL {f}");
                }
                return Ok(EXIT_CHECK);
            }
        }
        Command::EmitPlots { run_dir } => {
            let script = plot_script(&run_dir)?;
            write_out(&run_dir, "plots.gp", &script)?;
            println!("wrote {}", run_dir.join("plots.gp").display());
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { EXIT_CONFIG } else { EXIT_SOLVER })
        }
    }
}
