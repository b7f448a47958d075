//! Detection quantities derived from echo series: the rate function, the
//! time-averaged rates η^T and η^S, field sweeps with their derivatives, and
//! exceptional-point estimates from the shape of η(h₁).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::echo::{EchoSeries, TimeGrid};
use crate::error::{Error, Result};
use crate::exact_diag::{loschmidt_echo, EdOptions, InitialState};
use crate::models::{analytic_ep, Model, ModelParams};
use crate::momentum::rate_function;

/// Averaging windows: transient `[0, τ₀]` and steady `[τ₁, τ]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AveragingWindow {
    pub tau0: f64,
    pub tau1: f64,
    pub tau: f64,
}

impl AveragingWindow {
    pub fn new(tau0: f64, tau1: f64, tau: f64) -> Result<Self> {
        let w = Self { tau0, tau1, tau };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau0 > 0.0 && self.tau0 <= self.tau1 && self.tau1 < self.tau && self.tau.is_finite()) {
            return Err(Error::param(
                "window",
                format!(
                    "need 0 < tau0 <= tau1 < tau, got tau0 = {}, tau1 = {}, tau = {}",
                    self.tau0, self.tau1, self.tau
                ),
            ));
        }
        Ok(())
    }
}

/// `λ(t_k) = −ln L(t_k)/N`.
pub fn rate_from_echo(series: &EchoSeries) -> Vec<f64> {
    series.rate()
}

/// `−(1/N) ln((1/(b − a)) ∫_a^b L dt)` by the trapezoid rule on the grid.
///
/// `L` is carried as `ln L` and integrated after factoring out its maximum, so
/// echoes far below the smallest double still average correctly.
pub fn eta_between(series: &EchoSeries, start: f64, end: f64) -> Result<f64> {
    let grid = &series.grid;
    let outside = || Error::WindowOutsideGrid {
        start,
        end,
        t_max: grid.t_max(),
        dt: grid.dt,
    };
    let (a, b) = match (grid.index_of(start), grid.index_of(end)) {
        (Some(a), Some(b)) if b > a && b < series.log_echo.len() => (a, b),
        _ => return Err(outside()),
    };
    let logs = &series.log_echo[a..=b];
    let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let interior: f64 = logs[1..logs.len() - 1].iter().map(|l| (l - peak).exp()).sum();
    let ends = 0.5 * ((logs[0] - peak).exp() + (logs[logs.len() - 1] - peak).exp());
    // The trapezoid weights sum to (b − a) steps, so a constant echo averages exactly.
    let mean = (interior + ends) / (b - a) as f64;
    Ok(-(mean.ln() + peak) / series.n_sites as f64)
}

/// η^T over `[0, τ₀]`.
pub fn eta_transient(series: &EchoSeries, window: &AveragingWindow) -> Result<f64> {
    eta_between(series, 0.0, window.tau0)
}

/// η^S over `[τ₁, τ]`, a finite-horizon stand-in for `τ → ∞`.
pub fn eta_steady(series: &EchoSeries, window: &AveragingWindow) -> Result<f64> {
    eta_between(series, window.tau1, window.tau)
}

/// Which route produces the echo.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Momentum,
    ExactDiag,
}

impl Solver {
    pub fn default_for(model: Model) -> Self {
        match model {
            Model::Ixy | Model::Iatxy => Solver::Momentum,
            Model::IxyzSr | Model::IxyzLr => Solver::ExactDiag,
        }
    }
}

/// Time-averaged quantity used for detection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaKind {
    Transient,
    Steady,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionMethod {
    /// Largest `|Δ²η|` on the grid.
    Kink,
    /// First change from convex to concave scanning down from `h₀`.
    CurvatureFlip,
}

impl DetectionMethod {
    /// Kink for the smooth momentum-space curves; curvature flip for the noisier
    /// exact-diagonalisation sweeps, whose broken side can hold larger spikes.
    pub fn default_for(solver: Solver) -> Self {
        match solver {
            Solver::Momentum => DetectionMethod::Kink,
            Solver::ExactDiag => DetectionMethod::CurvatureFlip,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    /// Method reported as the estimate; `None` picks the solver default.
    pub primary: Option<DetectionMethod>,
    /// Estimates with a smaller peak-to-median ratio are inconclusive.
    pub min_confidence: f64,
    /// Apply a 3-point median filter to η before differencing.
    pub median_filter: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            primary: None,
            min_confidence: 3.0,
            median_filter: false,
        }
    }
}

/// Fewest grid points accepted by the detectors.
pub const MIN_DETECTION_POINTS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpEstimate {
    pub h_ep: f64,
    pub method: DetectionMethod,
    /// Peak `|Δ²η|` over the median `|Δ²η|`.
    pub confidence: f64,
    pub conclusive: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub primary: Option<EpEstimate>,
    pub kink: EpEstimate,
    pub curvature_flip: Option<EpEstimate>,
}

/// Second divided differences scaled by the local spacing product, so that on a
/// uniform grid the value is `η_{i+1} − 2η_i + η_{i−1}`.
fn second_differences(h: &[f64], eta: &[f64]) -> Vec<f64> {
    (1..h.len() - 1)
        .map(|i| {
            let (l, r) = (h[i] - h[i - 1], h[i + 1] - h[i]);
            let d2 = 2.0 * ((eta[i + 1] - eta[i]) / r - (eta[i] - eta[i - 1]) / l) / (l + r);
            d2 * l * r
        })
        .collect()
}

fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn ratio(peak: f64, typical: f64) -> f64 {
    // Noise-free curves have a vanishing median; cap the ratio instead of dividing by zero.
    peak / typical.max(peak * 1e-12).max(f64::MIN_POSITIVE)
}

fn median_filter(eta: &[f64]) -> Vec<f64> {
    let n = eta.len();
    (0..n)
        .map(|i| {
            if i == 0 || i + 1 == n {
                eta[i]
            } else {
                median(&eta[i - 1..=i + 1])
            }
        })
        .collect()
}

/// Kink and curvature-flip estimates for `η(h)` on a strictly increasing grid.
/// `scan_from` is where the curvature-flip scan starts (usually `h₀`); the scan
/// starts at the top of the grid when it is `None` or above the grid.
pub fn detect_ep_series(
    h: &[f64],
    eta: &[f64],
    scan_from: Option<f64>,
    primary: DetectionMethod,
    config: &DetectorConfig,
) -> Result<Detection> {
    if h.len() != eta.len() {
        return Err(Error::DimensionMismatch {
            expected: h.len(),
            found: eta.len(),
        });
    }
    if h.len() < MIN_DETECTION_POINTS {
        return Err(Error::InsufficientGrid {
            needed: MIN_DETECTION_POINTS,
            got: h.len(),
        });
    }
    if h.windows(2)
        .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
    {
        return Err(Error::param("h1_grid", "must be strictly increasing"));
    }
    let filtered;
    let eta = if config.median_filter {
        filtered = median_filter(eta);
        &filtered
    } else {
        eta
    };
    let d2 = second_differences(h, eta);
    let abs: Vec<f64> = d2.iter().map(|x| x.abs()).collect();
    let typical = median(&abs);

    let (peak_idx, peak) = abs.iter().enumerate().fold(
        (0, f64::NEG_INFINITY),
        |best, (i, &v)| if v > best.1 { (i, v) } else { best },
    );
    let kink_conf = ratio(peak, typical);
    let kink = EpEstimate {
        h_ep: h[peak_idx + 1],
        method: DetectionMethod::Kink,
        confidence: kink_conf,
        conclusive: kink_conf >= config.min_confidence,
    };

    // d2[j] belongs to h[j + 1].
    let start = match scan_from {
        Some(h0) if h0 < h[h.len() - 2] => {
            let nearest = (1..h.len() - 1)
                .min_by(|&a, &b| (h[a] - h0).abs().total_cmp(&(h[b] - h0).abs()))
                .unwrap_or(h.len() - 2);
            nearest - 1
        }
        _ => d2.len() - 1,
    };
    let mut curvature_flip = None;
    for j in (1..=start).rev() {
        if d2[j] > 0.0 && d2[j - 1] <= 0.0 {
            let run_peak = abs[j..=start].iter().cloned().fold(0.0, f64::max);
            let conf = ratio(run_peak, typical);
            curvature_flip = Some(EpEstimate {
                h_ep: 0.5 * (h[j + 1] + h[j]),
                method: DetectionMethod::CurvatureFlip,
                confidence: conf,
                conclusive: conf >= config.min_confidence,
            });
            break;
        }
    }

    let chosen = match primary {
        DetectionMethod::Kink => Some(kink),
        DetectionMethod::CurvatureFlip => curvature_flip,
    };
    Ok(Detection {
        primary: chosen,
        kink,
        curvature_flip,
    })
}

/// Midpoint of the steepest descent of `η(h)`: where the forward difference is
/// most negative. Used to locate the dip of η^T in the long-range sweeps.
pub fn steepest_drop(h: &[f64], eta: &[f64]) -> Option<f64> {
    if h.len() < 2 || h.len() != eta.len() {
        return None;
    }
    (0..h.len() - 1)
        .map(|i| ((eta[i + 1] - eta[i]) / (h[i + 1] - h[i]), i))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, i)| 0.5 * (h[i] + h[i + 1]))
}

/// Central differences `(η_{i+1} − η_{i−1})/(h_{i+1} − h_{i−1})` at interior points.
pub fn central_differences(h: &[f64], eta: &[f64]) -> Vec<f64> {
    if h.len() < 3 {
        return Vec::new();
    }
    (1..h.len() - 1)
        .map(|i| (eta[i + 1] - eta[i - 1]) / (h[i + 1] - h[i - 1]))
        .collect()
}

/// A uniform field grid `start, start + step, …` up to `stop` inclusive.
pub fn field_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::param("sweep.step", format!("must be positive, got {step}")));
    }
    if !(start.is_finite() && stop.is_finite()) || stop < start {
        return Err(Error::param("sweep.stop", format!("empty grid [{start}, {stop}]")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    // Round to the step's decimal resolution so grid values print cleanly.
    Ok((0..=n)
        .map(|i| ((start + i as f64 * step) * 1e10).round() / 1e10)
        .collect())
}

/// Everything a sweep needs besides the model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub h0: f64,
    pub h1_grid: Vec<f64>,
    pub grid: TimeGrid,
    pub window: AveragingWindow,
    pub solver: Option<Solver>,
    pub detect_on: EtaKind,
    pub detector: DetectorConfig,
    pub ed: EdOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointFailure {
    pub h1: f64,
    pub error: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub model: ModelParams,
    pub h0: f64,
    pub solver: Solver,
    /// Successful post-quench fields, strictly increasing.
    pub h1: Vec<f64>,
    /// Present when the time grid reaches `τ₀`.
    pub eta_transient: Option<Vec<f64>>,
    /// Present when the time grid reaches `τ`.
    pub eta_steady: Option<Vec<f64>>,
    /// Mean of `λ(t)` over the second half of the time grid.
    pub lambda_saturation: Vec<f64>,
    pub d_eta_transient: Option<Vec<f64>>,
    pub d_eta_steady: Option<Vec<f64>>,
    pub detect_on: EtaKind,
    pub detection: Option<Detection>,
    /// Why detection did not run, when it did not.
    pub detection_error: Option<String>,
    pub analytic_ep: f64,
    pub failures: Vec<PointFailure>,
}

impl SweepResult {
    pub fn eta(&self, kind: EtaKind) -> Option<&Vec<f64>> {
        match kind {
            EtaKind::Transient => self.eta_transient.as_ref(),
            EtaKind::Steady => self.eta_steady.as_ref(),
        }
    }

    pub fn n_attempted(&self) -> usize {
        self.h1.len() + self.failures.len()
    }

    pub fn success_fraction(&self) -> f64 {
        let n = self.n_attempted();
        if n == 0 {
            0.0
        } else {
            self.h1.len() as f64 / n as f64
        }
    }
}

/// Re-runs detection on a finished sweep with another configuration.
pub fn detect_ep(sr: &SweepResult, config: &DetectorConfig) -> Result<Detection> {
    let eta = sr
        .eta(sr.detect_on)
        .ok_or_else(|| Error::param("detect_on", "the requested η was not computed on this time grid"))?;
    let method = config.primary.unwrap_or(DetectionMethod::default_for(sr.solver));
    detect_ep_series(&sr.h1, eta, Some(sr.h0), method, config)
}

/// Resolves the solver for a model and rejects impossible combinations.
pub fn resolve_solver(model: Model, requested: Option<Solver>) -> Result<Solver> {
    let solver = requested.unwrap_or(Solver::default_for(model));
    if solver == Solver::Momentum && !matches!(model, Model::Ixy | Model::Iatxy) {
        return Err(Error::param(
            "solver",
            format!("{model} has no momentum-space solution; use exact_diag"),
        ));
    }
    Ok(solver)
}

/// A pre-quench state ready for any number of post-quench fields.
pub enum Prepared {
    Momentum { params: ModelParams, h0: f64 },
    ExactDiag(Box<InitialState>),
}

impl Prepared {
    pub fn new(params: &ModelParams, h0: f64, solver: Solver, ed: &EdOptions) -> Result<Self> {
        params.validate()?;
        match solver {
            Solver::Momentum => {
                let h_ep = analytic_ep(params)?;
                if h0 <= h_ep {
                    return Err(Error::PhasePrecondition { h0, h_ep });
                }
                Ok(Prepared::Momentum { params: *params, h0 })
            }
            Solver::ExactDiag => Ok(Prepared::ExactDiag(Box::new(InitialState::prepare(
                &params.with_field(h0),
                ed,
            )?))),
        }
    }

    pub fn echo(&self, h1: f64, grid: &TimeGrid) -> Result<EchoSeries> {
        match self {
            Prepared::Momentum { params, h0 } => rate_function(params, *h0, h1, grid),
            Prepared::ExactDiag(init) => loschmidt_echo(&init.quench(h1, grid)?),
        }
    }
}

/// Runs one quench per `h₁` and collects η^T, η^S, their derivatives and the EP
/// estimate. Points that fail are recorded and skipped.
pub fn sweep(params: &ModelParams, config: &SweepConfig) -> Result<SweepResult> {
    params.validate()?;
    config.window.validate()?;
    if config.h1_grid.is_empty() {
        return Err(Error::param("h1_grid", "sweep grid is empty"));
    }
    if config
        .h1_grid
        .windows(2)
        .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
    {
        return Err(Error::param("h1_grid", "must be strictly increasing"));
    }
    let solver = resolve_solver(params.model, config.solver)?;
    let prepared = Prepared::new(params, config.h0, solver, &config.ed)?;
    let t_max = config.grid.t_max();
    let want_transient = config.window.tau0 <= t_max + 1e-9;
    let want_steady = config.window.tau <= t_max + 1e-9;
    if !want_transient {
        return Err(Error::WindowOutsideGrid {
            start: 0.0,
            end: config.window.tau0,
            t_max,
            dt: config.grid.dt,
        });
    }

    type Point = (f64, Option<f64>, f64);
    let outcomes: Vec<(f64, Result<Point>)> = config
        .h1_grid
        .par_iter()
        .map(|&h1| {
            let run = || -> Result<Point> {
                let series = prepared.echo(h1, &config.grid)?;
                let eta_t = eta_transient(&series, &config.window)?;
                let eta_s = if want_steady {
                    Some(eta_steady(&series, &config.window)?)
                } else {
                    None
                };
                let rate = series.rate();
                let tail = &rate[rate.len() / 2..];
                let saturation = tail.iter().sum::<f64>() / tail.len() as f64;
                if !(eta_t.is_finite() && eta_s.is_none_or(f64::is_finite) && saturation.is_finite()) {
                    return Err(Error::NonConvergence(format!("non-finite η at h1 = {h1}")));
                }
                Ok((eta_t, eta_s, saturation))
            };
            (h1, run())
        })
        .collect();

    let mut h1s = Vec::new();
    let mut eta_t = Vec::new();
    let mut eta_s = Vec::new();
    let mut saturation = Vec::new();
    let mut failures = Vec::new();
    for (h1, outcome) in outcomes {
        match outcome {
            Ok((t, s, sat)) => {
                h1s.push(h1);
                eta_t.push(t);
                if let Some(s) = s {
                    eta_s.push(s);
                }
                saturation.push(sat);
            }
            Err(e) => failures.push(PointFailure {
                h1,
                error: e.to_string(),
            }),
        }
    }

    let eta_steady = want_steady.then_some(eta_s);
    let d_eta_transient = Some(central_differences(&h1s, &eta_t));
    let d_eta_steady = eta_steady.as_ref().map(|s| central_differences(&h1s, s));
    let mut result = SweepResult {
        model: *params,
        h0: config.h0,
        solver,
        h1: h1s,
        eta_transient: Some(eta_t),
        eta_steady,
        lambda_saturation: saturation,
        d_eta_transient,
        d_eta_steady,
        detect_on: config.detect_on,
        detection: None,
        detection_error: None,
        analytic_ep: analytic_ep(params)?,
        failures,
    };
    match detect_ep(&result, &config.detector) {
        Ok(d) => result.detection = Some(d),
        Err(e) => result.detection_error = Some(e.to_string()),
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn constant_series(log_l: f64, n_sites: usize, t_max: f64) -> EchoSeries {
        let grid = TimeGrid::new(t_max, 0.05).unwrap();
        EchoSeries {
            grid,
            log_echo: vec![log_l; grid.len()],
            n_sites,
            h0: 2.0,
            h1: 1.0,
            params: ModelParams::ixy(1.0, 1.0, n_sites),
        }
    }

    #[test]
    fn rate_examples() {
        assert!(rate_from_echo(&constant_series(0.0, 10, 1.0)).iter().all(|&l| l == 0.0));
        let series = constant_series(-10.0 * 0.3, 10, 1.0);
        assert!(rate_from_echo(&series).iter().all(|&l| (l - 0.3).abs() < 1e-15));
    }

    proptest! {
        #[test]
        fn constant_echo_gives_equal_rates(log_l in -500.0..0.0f64, n in 1usize..2000) {
            let series = constant_series(log_l, n, 10.0);
            let w = AveragingWindow::new(2.0, 4.0, 9.0).unwrap();
            let lambda = -log_l / n as f64;
            prop_assert_eq!(eta_transient(&series, &w).unwrap(), lambda);
            prop_assert_eq!(eta_steady(&series, &w).unwrap(), lambda);
            prop_assert!(rate_from_echo(&series).iter().all(|&l| l == lambda));
        }
    }

    #[test]
    fn eta_handles_tiny_echoes() {
        // L = e^{−2000}: far below the smallest double, still averaged correctly.
        let series = constant_series(-2000.0, 1000, 10.0);
        let w = AveragingWindow::new(5.0, 5.0 + 0.05, 10.0).unwrap();
        assert!((eta_transient(&series, &w).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn eta_trapezoid_matches_closed_form() {
        // ln L = −t, N = 1: ∫₀^τ e^{−t}dt/τ = (1 − e^{−τ})/τ.
        let grid = TimeGrid::new(4.0, 0.001).unwrap();
        let series = EchoSeries {
            grid,
            log_echo: grid.times().iter().map(|t| -t).collect(),
            n_sites: 1,
            h0: 2.0,
            h1: 1.0,
            params: ModelParams::ixy(1.0, 1.0, 2),
        };
        let got = eta_between(&series, 0.0, 4.0).unwrap();
        let want = -((1.0 - (-4.0f64).exp()) / 4.0).ln();
        assert!((got - want).abs() < 1e-6);
    }

    #[test]
    fn window_errors() {
        let series = constant_series(0.0, 4, 10.0);
        assert!(matches!(
            eta_between(&series, 0.0, 10.5),
            Err(Error::WindowOutsideGrid { .. })
        ));
        assert!(matches!(
            eta_between(&series, 0.0, 3.01),
            Err(Error::WindowOutsideGrid { .. })
        ));
        assert!(matches!(
            eta_between(&series, 3.0, 3.0),
            Err(Error::WindowOutsideGrid { .. })
        ));
        assert!(AveragingWindow::new(0.0, 1.0, 2.0).is_err());
        assert!(AveragingWindow::new(3.0, 2.0, 5.0).is_err());
        assert!(AveragingWindow::new(1.0, 2.0, 2.0).is_err());
    }

    #[test]
    fn planted_kink_without_noise() {
        let h = field_grid(0.2, 2.5, 0.05).unwrap();
        let eta: Vec<f64> = h.iter().map(|x| (x - 1.4).abs()).collect();
        let d = detect_ep_series(&h, &eta, None, DetectionMethod::Kink, &DetectorConfig::default()).unwrap();
        let kink = d.primary.unwrap();
        assert!((kink.h_ep - 1.4).abs() <= 0.025 + 1e-12);
        assert!(kink.conclusive);
    }

    #[test]
    fn detector_recovers_noisy_kinks() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let h = field_grid(0.2, 2.5, 0.05).unwrap();
        let mut hits = 0;
        for _ in 0..1000 {
            let planted = rng.gen_range(0.5..2.2);
            let slope_l = rng.gen_range(-1.5..-0.5);
            let slope_r = rng.gen_range(0.5..1.5);
            let eta: Vec<f64> = h
                .iter()
                .map(|&x| {
                    let base = if x < planted {
                        slope_l * (x - planted)
                    } else {
                        slope_r * (x - planted)
                    };
                    base + rng.gen_range(-1e-3..1e-3)
                })
                .collect();
            let d = detect_ep_series(&h, &eta, None, DetectionMethod::Kink, &DetectorConfig::default()).unwrap();
            if (d.primary.unwrap().h_ep - planted).abs() <= 0.05 {
                hits += 1;
            }
        }
        assert!(hits >= 950, "{hits}/1000");
    }

    #[test]
    fn curvature_flip_on_synthetic_shape() {
        // Concave below 1.3, convex above.
        let h = field_grid(0.5, 2.5, 0.05).unwrap();
        let eta: Vec<f64> = h
            .iter()
            .map(|&x| {
                if x < 1.3 {
                    1.0 - (x - 1.3).powi(2)
                } else {
                    1.0 - 0.5 * (x - 1.3) + (x - 1.3).powi(2)
                }
            })
            .collect();
        let d = detect_ep_series(
            &h,
            &eta,
            Some(3.0),
            DetectionMethod::CurvatureFlip,
            &DetectorConfig::default(),
        )
        .unwrap();
        let flip = d.curvature_flip.unwrap();
        assert!((flip.h_ep - 1.3).abs() <= 0.05);
        assert_eq!(d.primary, Some(flip));
    }

    #[test]
    fn detector_needs_five_points() {
        let h = [1.0, 1.1, 1.2, 1.3];
        let err = detect_ep_series(&h, &[0.0; 4], None, DetectionMethod::Kink, &DetectorConfig::default()).unwrap_err();
        assert!(matches!(err, Error::InsufficientGrid { needed: 5, got: 4 }));
    }

    #[test]
    fn flat_curve_is_inconclusive() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = field_grid(0.0, 1.0, 0.05).unwrap();
        let eta: Vec<f64> = h.iter().map(|_| rng.gen_range(-1e-3..1e-3)).collect();
        let d = detect_ep_series(&h, &eta, None, DetectionMethod::Kink, &DetectorConfig::default()).unwrap();
        assert!(!d.kink.conclusive);
    }

    #[test]
    fn steepest_drop_and_differences() {
        let h = [0.0, 1.0, 2.0, 3.0];
        let eta = [5.0, 4.0, 1.0, 0.5];
        assert_eq!(steepest_drop(&h, &eta), Some(1.5));
        assert_eq!(central_differences(&h, &eta), vec![-2.0, -1.75]);
        assert!(central_differences(&[1.0], &[1.0]).is_empty());
    }

    #[test]
    fn field_grid_shape() {
        let g = field_grid(0.2, 2.5, 0.05).unwrap();
        assert_eq!(g.len(), 47);
        assert_eq!(g[0], 0.2);
        assert_eq!(g[46], 2.5);
        assert_eq!(g[24], 1.4);
        assert!(field_grid(1.0, 0.5, 0.05).is_err());
        assert!(field_grid(0.0, 1.0, 0.0).is_err());
    }

    fn quick_config(h0: f64, grid: Vec<f64>) -> SweepConfig {
        SweepConfig {
            h0,
            h1_grid: grid,
            grid: TimeGrid::new(10.0, 0.05).unwrap(),
            window: AveragingWindow::new(5.0, 5.0, 10.0).unwrap(),
            solver: None,
            detect_on: EtaKind::Steady,
            detector: DetectorConfig::default(),
            ed: EdOptions::default(),
        }
    }

    #[test]
    fn single_point_sweep_has_no_derivative() {
        let params = ModelParams::ixy(1.0, 2.0, 100);
        let sr = sweep(&params, &quick_config(2.0, vec![1.0])).unwrap();
        assert_eq!(sr.h1, vec![1.0]);
        assert!(sr.d_eta_steady.as_ref().unwrap().is_empty());
        assert!(sr.detection.is_none());
        assert!(sr.detection_error.is_some());
    }

    #[test]
    fn sweep_rejects_bad_inputs() {
        let params = ModelParams::ixy(1.0, 2.0, 100);
        assert!(sweep(&params, &quick_config(2.0, vec![])).is_err());
        assert!(sweep(&params, &quick_config(2.0, vec![1.0, 0.9])).is_err());
        assert!(matches!(
            sweep(&params, &quick_config(1.0, vec![1.0, 2.0])),
            Err(Error::PhasePrecondition { .. })
        ));
        let mut cfg = quick_config(3.0, vec![1.0]);
        cfg.solver = Some(Solver::Momentum);
        assert!(sweep(&ModelParams::ixyz_sr(0.25, 0.1, 3.0, 8), &cfg).is_err());
    }

    #[test]
    fn sweep_records_failures() {
        // h₁ = ∞ cannot be evaluated; the other points still run.
        let params = ModelParams::ixy(1.0, 2.0, 100);
        let sr = sweep(&params, &quick_config(2.0, vec![1.0, 1.5, f64::INFINITY])).unwrap();
        assert_eq!(sr.h1, vec![1.0, 1.5]);
        assert_eq!(sr.failures.len(), 1);
        assert!((sr.success_fraction() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn exact_diag_sweep_runs() {
        let params = ModelParams::ixyz_sr(0.25, 0.1, 3.0, 6);
        let mut cfg = quick_config(3.0, field_grid(0.5, 2.5, 0.25).unwrap());
        cfg.detect_on = EtaKind::Transient;
        let sr = sweep(&params, &cfg).unwrap();
        assert_eq!(sr.solver, Solver::ExactDiag);
        assert_eq!(sr.h1.len(), 9);
        assert_eq!(sr.d_eta_transient.as_ref().unwrap().len(), 7);
        assert!(sr.detection.is_some());
        assert!(sr.eta_transient.as_ref().unwrap().iter().all(|&e| e >= 0.0));
    }
}
