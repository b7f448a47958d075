//! The `spectrum`, `quench` and `sweep` subcommands.

use std::fmt;
use std::fs;
use std::path::PathBuf;

use rayon::prelude::*;
use rtchain::analysis::{eta_steady, eta_transient, sweep, Prepared, SweepConfig};
use rtchain::exact_diag::{model_reality, model_spectrum};
use rtchain::{analytic_ep, Error};
use serde::Serialize;

use crate::config::{ConfigError, ExperimentConfig};
use crate::output::{field_tag, write_summary, write_table, Table};

/// Fewest successful sweep points, as a fraction, for a zero exit status.
pub const MIN_SWEEP_SUCCESS: f64 = 0.9;

/// A failed run, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    /// The initial state is not in the unbroken phase.
    Phase {
        message: String,
        h_ep: Option<f64>,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Phase { .. } => 4,
        }
    }

    /// Maps a library error, using `config` for the analytic EP of phase errors.
    fn from_lib(e: Error, config: &ExperimentConfig) -> Self {
        let h_ep = analytic_ep(&config.params()).ok();
        let message = e.to_string();
        match e {
            Error::Mode { source, .. } => match CliError::from_lib(*source, config) {
                CliError::Config(_) => CliError::Config(message),
                CliError::Numeric(_) => CliError::Numeric(message),
                CliError::Phase { h_ep, .. } => CliError::Phase { message, h_ep },
            },
            Error::PhasePrecondition { h_ep, .. } => CliError::Phase {
                message,
                h_ep: Some(h_ep),
            },
            Error::BrokenPhase { .. } => CliError::Phase { message, h_ep },
            Error::DimensionTooLarge { .. } => CliError::Config(format!(
                "{message}; lower `model.n_sites` or raise `exact_diag.max_sites`"
            )),
            Error::InvalidParams { .. } | Error::WindowOutsideGrid { .. } | Error::InsufficientGrid { .. } => {
                CliError::Config(message)
            }
            _ => CliError::Numeric(message),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
            CliError::Phase { message, h_ep } => {
                write!(f, "phase precondition violated: {message}")?;
                if let Some(h) = h_ep {
                    write!(f, "; analytic h_ep = {h}, choose h0 above it")?;
                }
                Ok(())
            }
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

type CliResult<T> = Result<T, CliError>;

fn output_dir(config: &ExperimentConfig) -> CliResult<PathBuf> {
    let dir = config.output.directory.clone();
    fs::create_dir_all(&dir)
        .map_err(|e| CliError::Config(format!("cannot create `output.directory` {}: {e}", dir.display())))?;
    Ok(dir)
}

fn io_error(e: std::io::Error) -> CliError {
    CliError::Config(format!("cannot write output: {e}"))
}

#[derive(Serialize)]
struct SpectrumSummary {
    field: f64,
    classification: rtchain::exact_diag::Reality,
    max_imag: f64,
    analytic_ep: f64,
    n_eigenvalues: usize,
}

/// Eigenvalues of the model at `h0` and their reality classification.
pub fn cmd_spectrum(config: &ExperimentConfig) -> CliResult<Vec<PathBuf>> {
    let params = config.params();
    let lib = |e| CliError::from_lib(e, config);
    let values = model_spectrum(&params, &config.exact_diag).map_err(lib)?;
    let report = model_reality(&params, &config.exact_diag).map_err(lib)?;
    let dir = output_dir(config)?;
    let table = Table::new(format!("spectrum of {} at h = {}", config.model.kind, config.h0))
        .column("index", (0..values.len()).map(|k| k as f64).collect())
        .column("re", values.iter().map(|z| z.re).collect())
        .column("im", values.iter().map(|z| z.im).collect());
    let summary = SpectrumSummary {
        field: config.h0,
        classification: report.classification,
        max_imag: report.max_imag,
        analytic_ep: analytic_ep(&params).map_err(lib)?,
        n_eigenvalues: values.len(),
    };
    Ok(vec![
        write_table(&dir, "spectrum", &table, config).map_err(io_error)?,
        write_summary(&dir, "spectrum_summary", &summary, config).map_err(io_error)?,
    ])
}

/// `t, L, ln L, λ` for every configured `h1`, one file each.
pub fn cmd_quench(config: &ExperimentConfig) -> CliResult<Vec<PathBuf>> {
    if config.h1.is_empty() {
        return Err(CliError::Config("`h1` lists no post-quench fields".into()));
    }
    let lib = |e| CliError::from_lib(e, config);
    let grid = config.time_grid()?;
    let prepared = Prepared::new(&config.params(), config.h0, config.solver, &config.exact_diag).map_err(lib)?;
    let series: Vec<_> = config
        .h1
        .par_iter()
        .map(|&h1| prepared.echo(h1, &grid))
        .collect::<Result<_, _>>()
        .map_err(lib)?;
    let dir = output_dir(config)?;
    let mut written = Vec::new();
    for (h1, s) in config.h1.iter().zip(&series) {
        let table = Table::new(format!(
            "Loschmidt echo of {} quenched from h0 = {} to h1 = {h1}",
            config.model.kind, config.h0
        ))
        .column("t", s.times())
        .column("L", s.echo())
        .column("ln_L", s.log_echo.clone())
        .column("lambda", s.rate());
        let stem = format!("quench_h1_{}", field_tag(*h1));
        written.push(write_table(&dir, &stem, &table, config).map_err(io_error)?);
    }

    #[derive(Serialize)]
    struct Averages {
        h1: f64,
        eta_transient: f64,
        eta_steady: Option<f64>,
    }
    let averages = config
        .h1
        .iter()
        .zip(&series)
        .map(|(&h1, s)| {
            Ok(Averages {
                h1,
                eta_transient: eta_transient(s, &config.window)?,
                eta_steady: if config.window.tau <= grid.t_max() + 1e-9 {
                    Some(eta_steady(s, &config.window)?)
                } else {
                    None
                },
            })
        })
        .collect::<Result<Vec<_>, Error>>()
        .map_err(lib)?;
    written.push(write_summary(&dir, "quench_summary", &averages, config).map_err(io_error)?);
    Ok(written)
}

/// Pads interior-point derivatives with NaN at both ends.
fn padded(interior: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![f64::NAN; n];
    if interior.len() + 2 == n {
        out[1..n - 1].copy_from_slice(interior);
    }
    out
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    detected_ep: Option<f64>,
    method: Option<rtchain::analysis::DetectionMethod>,
    confidence: Option<f64>,
    conclusive: bool,
    analytic_ep: f64,
    detect_on: rtchain::analysis::EtaKind,
    detection: Option<rtchain::analysis::Detection>,
    detection_error: Option<&'a str>,
    n_points: usize,
    n_failed: usize,
}

/// η^T, η^S, their derivatives and the EP estimate over the sweep grid.
///
/// Failed points go to a sidecar file. The run fails when fewer than
/// [`MIN_SWEEP_SUCCESS`] of the points succeed.
pub fn cmd_sweep(config: &ExperimentConfig) -> CliResult<Vec<PathBuf>> {
    let lib = |e| CliError::from_lib(e, config);
    let sweep_config = SweepConfig {
        h0: config.h0,
        h1_grid: config.sweep_grid()?,
        grid: config.time_grid()?,
        window: config.window,
        solver: Some(config.solver),
        detect_on: config.detect_on,
        detector: config.detector,
        ed: config.exact_diag,
    };
    let sr = sweep(&config.params(), &sweep_config).map_err(lib)?;
    let dir = output_dir(config)?;
    let n = sr.h1.len();
    let mut table =
        Table::new(format!("field sweep of {} from h0 = {}", config.model.kind, config.h0)).column("h1", sr.h1.clone());
    if let Some(eta) = &sr.eta_transient {
        table = table.column("eta_T", eta.clone());
    }
    if let Some(eta) = &sr.eta_steady {
        table = table.column("eta_S", eta.clone());
    }
    if let Some(d) = &sr.d_eta_transient {
        table = table.column("deta_T_dh1", padded(d, n));
    }
    if let Some(d) = &sr.d_eta_steady {
        table = table.column("deta_S_dh1", padded(d, n));
    }
    table = table.column("lambda_saturation", sr.lambda_saturation.clone());

    let primary = sr.detection.and_then(|d| d.primary);
    let summary = SweepSummary {
        detected_ep: primary.map(|e| e.h_ep),
        method: primary.map(|e| e.method),
        confidence: primary.map(|e| e.confidence),
        conclusive: primary.is_some_and(|e| e.conclusive),
        analytic_ep: sr.analytic_ep,
        detect_on: sr.detect_on,
        detection: sr.detection,
        detection_error: sr.detection_error.as_deref(),
        n_points: sr.n_attempted(),
        n_failed: sr.failures.len(),
    };
    let mut written = vec![
        write_table(&dir, "sweep", &table, config).map_err(io_error)?,
        write_summary(&dir, "sweep_summary", &summary, config).map_err(io_error)?,
    ];
    if !sr.failures.is_empty() {
        written.push(write_summary(&dir, "sweep_failures", &sr.failures, config).map_err(io_error)?);
    }
    if sr.success_fraction() < MIN_SWEEP_SUCCESS {
        return Err(CliError::Numeric(format!(
            "only {} of {} sweep points succeeded; see sweep_failures.json",
            n,
            sr.n_attempted()
        )));
    }
    Ok(written)
}
