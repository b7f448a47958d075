//! Experiment configuration: a TOML document, command-line overrides applied as
//! dot-paths into it, and resolution against per-model defaults.
//!
//! Every default is filled in before any computation, and the resolved
//! [`ExperimentConfig`] is what the output headers record.

use std::fmt;
use std::path::{Path, PathBuf};

use rtchain::analysis::{field_grid, resolve_solver, DetectorConfig, EtaKind, Solver};
use rtchain::exact_diag::EdOptions;
use rtchain::{AveragingWindow, Model, ModelParams, TimeGrid};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

/// A configuration problem, reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl From<rtchain::Error> for ConfigError {
    fn from(e: rtchain::Error) -> Self {
        ConfigError(e.to_string())
    }
}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// One post-quench field or a list of them.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum FieldList {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawModel {
    kind: Option<Model>,
    gamma: Option<f64>,
    delta: Option<f64>,
    h_a: Option<f64>,
    alpha: Option<f64>,
    n_sites: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawSweep {
    start: Option<f64>,
    stop: Option<f64>,
    step: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawTime {
    t_max: Option<f64>,
    dt: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawWindow {
    tau0: Option<f64>,
    tau1: Option<f64>,
    tau: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawOutput {
    directory: Option<PathBuf>,
    format: Option<Format>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawConfig {
    model: RawModel,
    h0: Option<f64>,
    h1: Option<FieldList>,
    sweep: RawSweep,
    time: RawTime,
    window: RawWindow,
    solver: Option<Solver>,
    detect_on: Option<EtaKind>,
    detector: DetectorConfig,
    output: RawOutput,
    exact_diag: EdOptions,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModelSettings {
    pub kind: Model,
    pub gamma: f64,
    pub delta: f64,
    pub h_a: f64,
    pub alpha: f64,
    pub n_sites: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TimeSettings {
    pub t_max: f64,
    pub dt: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputSettings {
    pub directory: PathBuf,
    pub format: Format,
}

/// A fully resolved experiment. Field names match the TOML keys.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    pub model: ModelSettings,
    pub h0: f64,
    pub h1: Vec<f64>,
    pub sweep: SweepRange,
    pub time: TimeSettings,
    pub window: AveragingWindow,
    pub solver: Solver,
    pub detect_on: EtaKind,
    pub detector: DetectorConfig,
    pub output: OutputSettings,
    pub exact_diag: EdOptions,
}

/// Reference default values for one model.
struct Defaults {
    gamma: f64,
    delta: f64,
    h_a: f64,
    alpha: f64,
    n_sites: usize,
    h0: f64,
    h1: &'static [f64],
    sweep: (f64, f64),
    t_max: f64,
    window: (f64, f64, f64),
    detect_on: EtaKind,
}

fn defaults(model: Model) -> Defaults {
    match model {
        Model::Ixy => Defaults {
            gamma: 1.0,
            delta: 0.0,
            h_a: 0.0,
            alpha: 1.0,
            n_sites: 1200,
            h0: 2.0,
            h1: &[1.0, 1.8],
            sweep: (0.2, 2.5),
            t_max: 200.0,
            window: (20.0, 20.0, 200.0),
            detect_on: EtaKind::Steady,
        },
        Model::Iatxy => Defaults {
            gamma: 1.0,
            delta: 0.0,
            h_a: 0.5,
            alpha: 1.0,
            n_sites: 100,
            h0: 3.0,
            h1: &[1.0, 2.0],
            sweep: (0.2, 2.5),
            t_max: 500.0,
            window: (100.0, 100.0, 500.0),
            detect_on: EtaKind::Steady,
        },
        Model::IxyzSr => Defaults {
            gamma: 0.25,
            delta: 0.1,
            h_a: 0.0,
            alpha: 1.0,
            n_sites: 12,
            h0: 3.0,
            h1: &[0.5, 2.0],
            sweep: (0.5, 2.5),
            t_max: 30.0,
            window: (30.0, 30.0, 60.0),
            detect_on: EtaKind::Transient,
        },
        Model::IxyzLr => Defaults {
            gamma: 0.25,
            delta: 0.1,
            h_a: 0.0,
            alpha: 1.0,
            n_sites: 12,
            h0: 5.0,
            h1: &[2.0, 4.0],
            sweep: (1.5, 4.5),
            t_max: 800.0,
            window: (800.0, 800.0, 1600.0),
            detect_on: EtaKind::Transient,
        },
    }
}

const DEFAULT_DT: f64 = 0.05;
const DEFAULT_STEP: f64 = 0.05;

/// Reads the config file, or starts from an empty document.
pub fn load_document(path: Option<&Path>) -> Result<Table, ConfigError> {
    let Some(path) = path else {
        return Ok(Table::new());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
    text.parse::<Table>()
        .map_err(|e| ConfigError(format!("config {} is not valid TOML: {e}", path.display())))
}

/// Parses the right-hand side of an override as a TOML value, falling back to a
/// bare string so that `model.kind=IXY` works without quotes.
fn parse_value(text: &str) -> Value {
    format!("v = {text}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(text.to_string()))
}

/// Applies `a.b.c=value` to the document, creating intermediate tables.
pub fn apply_override(doc: &mut Table, spec: &str) -> Result<(), ConfigError> {
    let Some((path, value)) = spec.split_once('=') else {
        return err(format!("override `{spec}` is not of the form key=value"));
    };
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return err(format!("override `{spec}` has an empty key"));
    }
    let (last, parents) = keys.split_last().unwrap();
    let mut table = doc;
    for key in parents {
        let entry = table
            .entry(key.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        table = match entry {
            Value::Table(t) => t,
            _ => return err(format!("override `{spec}`: `{key}` is not a table")),
        };
    }
    table.insert(last.to_string(), parse_value(value.trim()));
    Ok(())
}

impl ExperimentConfig {
    /// Resolves a document against the model defaults and validates every field.
    pub fn resolve(doc: Table) -> Result<Self, ConfigError> {
        let raw: RawConfig = serde_path_to_error::deserialize(Value::Table(doc)).map_err(
            |e: serde_path_to_error::Error<toml::de::Error>| {
                ConfigError(format!("invalid config at `{}`: {}", e.path(), e.inner().message()))
            },
        )?;
        let kind = raw.model.kind.unwrap_or(Model::Ixy);
        let d = defaults(kind);
        let model = ModelSettings {
            kind,
            gamma: raw.model.gamma.unwrap_or(d.gamma),
            delta: raw.model.delta.unwrap_or(d.delta),
            h_a: raw.model.h_a.unwrap_or(d.h_a),
            alpha: raw.model.alpha.unwrap_or(d.alpha),
            n_sites: raw.model.n_sites.unwrap_or(d.n_sites),
        };
        let h0 = raw.h0.unwrap_or(d.h0);
        let h1 = match raw.h1 {
            None => d.h1.to_vec(),
            Some(FieldList::One(h)) => vec![h],
            Some(FieldList::Many(v)) => v,
        };
        let sweep = SweepRange {
            start: raw.sweep.start.unwrap_or(d.sweep.0),
            stop: raw.sweep.stop.unwrap_or(d.sweep.1),
            step: raw.sweep.step.unwrap_or(DEFAULT_STEP),
        };
        let time = TimeSettings {
            t_max: raw.time.t_max.unwrap_or(d.t_max),
            dt: raw.time.dt.unwrap_or(DEFAULT_DT),
        };
        let window = AveragingWindow {
            tau0: raw.window.tau0.unwrap_or(d.window.0),
            tau1: raw.window.tau1.unwrap_or(d.window.1),
            tau: raw.window.tau.unwrap_or(d.window.2),
        };
        let solver = resolve_solver(kind, raw.solver)?;
        let config = Self {
            model,
            h0,
            h1,
            sweep,
            time,
            window,
            solver,
            detect_on: raw.detect_on.unwrap_or(d.detect_on),
            detector: raw.detector,
            output: OutputSettings {
                directory: raw.output.directory.unwrap_or_else(|| PathBuf::from("out")),
                format: raw.output.format.unwrap_or_default(),
            },
            exact_diag: raw.exact_diag,
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        self.params().validate()?;
        if !self.h0.is_finite() {
            return err(format!("invalid parameter `h0`: must be finite, got {}", self.h0));
        }
        if let Some(h) = self.h1.iter().find(|h| !h.is_finite()) {
            return err(format!("invalid parameter `h1`: must be finite, got {h}"));
        }
        self.window.validate()?;
        self.time_grid()?;
        if self.window.tau0 > self.time.t_max + 1e-9 {
            return err(format!(
                "invalid parameter `window.tau0`: {} lies beyond time.t_max = {}",
                self.window.tau0, self.time.t_max
            ));
        }
        if self.detector.min_confidence.is_nan() || self.detector.min_confidence < 0.0 {
            return err("invalid parameter `detector.min_confidence`: must be non-negative");
        }
        Ok(())
    }

    /// Model parameters with the field set to `h0`.
    pub fn params(&self) -> ModelParams {
        let m = &self.model;
        let base = match m.kind {
            Model::Ixy => ModelParams::ixy(m.gamma, self.h0, m.n_sites),
            Model::Iatxy => ModelParams::iatxy(m.gamma, self.h0, m.h_a, m.n_sites),
            Model::IxyzSr => ModelParams::ixyz_sr(m.gamma, m.delta, self.h0, m.n_sites),
            Model::IxyzLr => ModelParams::ixyz_lr(m.gamma, m.delta, m.alpha, self.h0, m.n_sites),
        };
        ModelParams {
            delta: m.delta,
            h_a: m.h_a,
            alpha: m.alpha,
            ..base
        }
    }

    pub fn time_grid(&self) -> Result<TimeGrid, ConfigError> {
        Ok(TimeGrid::new(self.time.t_max, self.time.dt)?)
    }

    /// The post-quench field grid of a sweep. An empty grid is a config error.
    pub fn sweep_grid(&self) -> Result<Vec<f64>, ConfigError> {
        let SweepRange { start, stop, step } = self.sweep;
        let grid = field_grid(start, stop, step)?;
        if grid.is_empty() {
            return err(format!(
                "invalid parameter `sweep`: [{start}, {stop}] with step {step} is empty"
            ));
        }
        Ok(grid)
    }

    /// The resolved config as TOML text.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("resolved config is always representable")
    }
}
