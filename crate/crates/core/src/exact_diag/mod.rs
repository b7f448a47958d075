//! Exact-diagonalisation quench engine for any of the chain models.
//!
//! The initial state is the ground state of the pre-quench Hamiltonian, which must
//! have a real spectrum. The echo is evaluated in that Hamiltonian's Dyson frame:
//! states are mapped through `P₀⁻¹` before overlaps are taken, which is the same as
//! using the metric `Θ₀ = (P₀⁻¹)†P₀⁻¹` in the original frame.
//!
//! By default the work is done inside the symmetry sector that contains the ground
//! state. The quench changes only the uniform field, which commutes with the
//! symmetries, so the evolved state never leaves that sector. Because `P₀` is made
//! orthonormal inside degenerate eigenvalue clusters, and different sectors are
//! mutually orthogonal, the sector metric is the restriction of the full-space
//! metric and the echo is unchanged.

pub mod sectors;

use ndarray::{Array2, Axis};
use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::echo::{EchoSeries, TimeGrid};
use crate::error::{Error, Result};
use crate::linalg::{
    eig_complex_with, matexp_reference, norm_one, ComplexMatrix, EigenTolerances, Spectrum, StateVector,
};
use crate::models::{analytic_ep, ModelParams, DENSE_MAX_SITES};

pub use sectors::{symmetry_sectors, Sector, SectorLabel};

const I: c64 = c64::new(0.0, 1.0);

/// Default largest chain handled by exact diagonalisation.
pub const DEFAULT_MAX_SITES: usize = 12;

/// Times per batch in the spectral echo evaluation.
const TIME_CHUNK: usize = 256;

/// How the post-quench state is propagated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolutionPath {
    /// Spectral evolution unless the post-quench spectrum is defective.
    #[default]
    Auto,
    Spectral,
    /// Repeated application of `exp(−iH₁dt)`.
    Stepped,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EdOptions {
    /// Largest chain accepted; may be raised up to the dense guard of 14 sites.
    pub max_sites: usize,
    /// Work in the symmetry sector of the ground state instead of the full space.
    pub use_symmetry: bool,
    pub evolution: EvolutionPath,
    pub eigen: EigenTolerances,
    /// `max|Im λ|` below `reality_tol·max(1, ‖H‖₁)` counts as a real spectrum.
    pub reality_tol: f64,
}

impl Default for EdOptions {
    fn default() -> Self {
        Self {
            max_sites: DEFAULT_MAX_SITES,
            use_symmetry: true,
            evolution: EvolutionPath::Auto,
            eigen: EigenTolerances::default(),
            reality_tol: 1e-8,
        }
    }
}

impl EdOptions {
    fn check_size(&self, n_sites: usize) -> Result<()> {
        if self.max_sites > DENSE_MAX_SITES {
            return Err(Error::param(
                "max_sites",
                format!(
                    "cannot exceed the dense guard of {DENSE_MAX_SITES}, got {}",
                    self.max_sites
                ),
            ));
        }
        if n_sites > self.max_sites {
            return Err(Error::DimensionTooLarge {
                n_sites,
                max_sites: self.max_sites,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Reality {
    Unbroken,
    Broken,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealityReport {
    pub classification: Reality,
    pub max_imag: f64,
}

fn reality_threshold(h: &ComplexMatrix, rel: f64) -> f64 {
    rel * norm_one(h).max(1.0)
}

/// Classifies a Hamiltonian as unbroken when `max|Im λ| < tol`; `tol` defaults to
/// `1e-8·max(1, ‖H‖₁)`.
pub fn spectrum_reality(h: &ComplexMatrix, tol: Option<f64>) -> Result<RealityReport> {
    let spec = eig_complex_with(h, &EigenTolerances::default())?;
    let tol = tol.unwrap_or_else(|| reality_threshold(h, 1e-8));
    Ok(classify(spec.max_imag(), tol))
}

fn classify(max_imag: f64, tol: f64) -> RealityReport {
    RealityReport {
        classification: if max_imag < tol {
            Reality::Unbroken
        } else {
            Reality::Broken
        },
        max_imag,
    }
}

/// Unit-norm eigenvector of the eigenvalue with the lowest real part, and that energy.
pub fn ground_state(h: &ComplexMatrix) -> Result<(StateVector, f64)> {
    let spec = eig_complex_with(h, &EigenTolerances::default())?;
    let max_imag = spec.max_imag();
    if max_imag >= reality_threshold(h, 1e-8) {
        return Err(Error::BrokenPhase { max_imag });
    }
    Ok((spec.eigenvector(0).to_owned(), spec.eigenvalues[0].re))
}

/// Spectrum of the whole model, assembled from symmetry sectors when enabled,
/// in ascending real part.
pub fn model_spectrum(params: &ModelParams, opts: &EdOptions) -> Result<Vec<c64>> {
    params.validate()?;
    opts.check_size(params.n_sites)?;
    let mut values = Vec::with_capacity(params.dim());
    for sector in sectors_for(params, opts) {
        let block = sector.project(params);
        values.extend(eig_complex_with(&block, &opts.eigen)?.eigenvalues.iter().copied());
    }
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(values)
}

/// Static classification of the model at its field `params.h`.
pub fn model_reality(params: &ModelParams, opts: &EdOptions) -> Result<RealityReport> {
    params.validate()?;
    opts.check_size(params.n_sites)?;
    let mut worst = 0.0f64;
    let mut scale = 1.0f64;
    for sector in sectors_for(params, opts) {
        let block = sector.project(params);
        scale = scale.max(norm_one(&block));
        worst = worst.max(eig_complex_with(&block, &opts.eigen)?.max_imag());
    }
    Ok(classify(worst, opts.reality_tol * scale))
}

fn sectors_for(params: &ModelParams, opts: &EdOptions) -> Vec<Sector> {
    if opts.use_symmetry {
        symmetry_sectors(params.n_sites, params.model.translation_step())
    } else {
        vec![Sector::full(params.n_sites)]
    }
}

/// The pre-quench side of a quench: ground state, its sector, and the sector
/// Hamiltonian split as `A + h·F` so that post-quench blocks are cheap to form.
#[derive(Clone, Debug)]
pub struct InitialState {
    pub params: ModelParams,
    pub energy: f64,
    pub sector: Sector,
    pub spectrum: Spectrum,
    inverse: ComplexMatrix,
    /// Ground state in sector coordinates (unit norm).
    psi0: StateVector,
    interaction: ComplexMatrix,
    field: ComplexMatrix,
    opts: EdOptions,
}

impl InitialState {
    /// Prepares the ground state of `params` (field `params.h` is `h₀`).
    pub fn prepare(params: &ModelParams, opts: &EdOptions) -> Result<Self> {
        params.validate()?;
        opts.check_size(params.n_sites)?;
        // For γ = 0 the chain is Hermitian and the closed-form value is a saturation
        // field rather than an exceptional point, so only check it when γ ≠ 0.
        if params.gamma != 0.0 {
            let h_ep = analytic_ep(params)?;
            if params.h <= h_ep {
                return Err(Error::PhasePrecondition { h0: params.h, h_ep });
            }
        }

        let mut best: Option<(f64, usize, Spectrum)> = None;
        let mut blocks = Vec::new();
        let mut worst_imag = 0.0f64;
        let mut scale = 1.0f64;
        let sectors = sectors_for(params, opts);
        for (idx, sector) in sectors.iter().enumerate() {
            let interaction = sector.project(&params.with_field(0.0));
            let field = sector.project(&params.with_field(1.0)) - &interaction;
            let h0 = &interaction + &field.mapv(|z| z * params.h);
            scale = scale.max(norm_one(&h0));
            let spec = eig_complex_with(&h0, &opts.eigen)?;
            worst_imag = worst_imag.max(spec.max_imag());
            let e0 = spec.eigenvalues[0].re;
            if best.as_ref().is_none_or(|(e, _, _)| e0 < *e) {
                best = Some((e0, idx, spec));
            }
            blocks.push((interaction, field));
        }
        if worst_imag >= opts.reality_tol * scale {
            return Err(Error::BrokenPhase { max_imag: worst_imag });
        }
        let (energy, idx, spectrum) = best.expect("at least one sector");
        let inverse = spectrum.inverse()?.clone();
        let psi0 = spectrum.eigenvector(0).to_owned();
        let (interaction, field) = blocks.swap_remove(idx);
        let sector = sectors.into_iter().nth(idx).expect("sector index");
        Ok(Self {
            params: *params,
            energy,
            sector,
            spectrum,
            inverse,
            psi0,
            interaction,
            field,
            opts: *opts,
        })
    }

    pub fn h0(&self) -> f64 {
        self.params.h
    }

    /// Ground state in the computational basis of the full chain.
    pub fn ground_state(&self) -> StateVector {
        self.sector.embed(&self.psi0)
    }

    /// Ground state in sector coordinates.
    pub fn sector_state(&self) -> &StateVector {
        &self.psi0
    }

    /// `P₀⁻¹` in sector coordinates.
    pub fn dyson_map(&self) -> &ComplexMatrix {
        &self.inverse
    }

    /// Sector Hamiltonian at field `h`.
    pub fn block(&self, h: f64) -> ComplexMatrix {
        &self.interaction + &self.field.mapv(|z| z * h)
    }

    /// Post-quench side for field `h1` on `grid`.
    pub fn quench(&self, h1: f64, grid: &TimeGrid) -> Result<QuenchSetup<'_>> {
        if !h1.is_finite() {
            return Err(Error::param("h1", "must be finite"));
        }
        let block = self.block(h1);
        let propagation = match self.opts.evolution {
            EvolutionPath::Stepped => Propagation::Stepped(matexp_reference(&block, grid.dt)?),
            path => {
                let spec = eig_complex_with(&block, &self.opts.eigen)?;
                match (spec.defective, path) {
                    (false, _) => Propagation::Spectral(spec),
                    (true, EvolutionPath::Spectral) => {
                        return Err(Error::Defective {
                            condition: spec.condition,
                            residual: spec.residual,
                        })
                    }
                    (true, _) => Propagation::Stepped(matexp_reference(&block, grid.dt)?),
                }
            }
        };
        Ok(QuenchSetup {
            initial: self,
            post_params: self.params.with_field(h1),
            propagation,
            grid: *grid,
        })
    }
}

#[derive(Clone, Debug)]
pub enum Propagation {
    Spectral(Spectrum),
    /// `exp(−iH₁dt)` in sector coordinates.
    Stepped(ComplexMatrix),
}

/// A prepared quench `h₀ → h₁`: initial state, post-quench propagation, time grid.
#[derive(Clone, Debug)]
pub struct QuenchSetup<'a> {
    pub initial: &'a InitialState,
    pub post_params: ModelParams,
    pub propagation: Propagation,
    pub grid: TimeGrid,
}

impl QuenchSetup<'_> {
    /// Log-echo from repeated application of the one-step propagator `u`. The state
    /// is renormalised after every step; the echo is a ratio and does not care.
    fn stepped_log_echo(&self, u: &ComplexMatrix) -> Vec<f64> {
        let inv0 = &self.initial.inverse;
        let mut psi = self.initial.psi0.clone();
        let mut out = Vec::with_capacity(self.grid.len());
        out.push(0.0);
        for _ in 0..self.grid.n_steps {
            psi = u.dot(&psi);
            let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            psi.mapv_inplace(|z| z / norm);
            let phi = inv0.dot(&psi);
            out.push(log_ratio(&phi.view()));
        }
        out
    }

    fn spectral_log_echo(&self, spec: &Spectrum) -> Result<Vec<f64>> {
        let inv1 = spec.inverse()?;
        let coeffs = inv1.dot(&self.initial.psi0);
        let transfer = self.initial.inverse.dot(&spec.vectors);
        let growth = spec.eigenvalues.iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max);
        let d = coeffs.len();
        let times = self.grid.times();
        let mut out = Vec::with_capacity(times.len());
        for chunk in times.chunks(TIME_CHUNK) {
            let weighted = Array2::from_shape_fn((d, chunk.len()), |(j, k)| {
                let t = chunk[k];
                coeffs[j] * (-I * spec.eigenvalues[j] * t - growth * t).exp()
            });
            let phi = transfer.dot(&weighted);
            for (k, col) in phi.axis_iter(Axis(1)).enumerate() {
                out.push(if chunk[k] == 0.0 { 0.0 } else { log_ratio(&col) });
            }
        }
        Ok(out)
    }
}

/// `ln(|φ₀|²/‖φ‖²)`, clamped to `≤ 0`.
fn log_ratio(phi: &ndarray::ArrayView1<'_, c64>) -> f64 {
    let num = phi[0].norm_sqr().max(f64::MIN_POSITIVE);
    let den: f64 = phi.iter().map(|z| z.norm_sqr()).sum();
    (num.ln() - den.ln()).min(0.0)
}

/// `ln L(t_k)` with `L(t) = |⟨φ₀|φ(t)⟩|²/(‖φ₀‖²‖φ(t)‖²)`, `φ = P₀⁻¹ψ`.
///
/// In the Dyson frame the initial state is the first unit vector, so the overlap
/// is the first component of `φ(t)`.
pub fn loschmidt_echo(setup: &QuenchSetup<'_>) -> Result<EchoSeries> {
    let log_echo = match &setup.propagation {
        Propagation::Spectral(spec) => setup.spectral_log_echo(spec)?,
        Propagation::Stepped(u) => setup.stepped_log_echo(u),
    };
    Ok(EchoSeries {
        grid: setup.grid,
        log_echo,
        n_sites: setup.initial.params.n_sites,
        h0: setup.initial.h0(),
        h1: setup.post_params.h,
        params: setup.post_params,
    })
}
