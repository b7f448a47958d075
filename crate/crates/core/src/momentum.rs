//! Momentum-space quench solver for the free-fermion models.
//!
//! After the Jordan-Wigner and Fourier transformations the iXY chain splits into
//! independent 2×2 blocks and the iATXY chain into blocks whose ground state lives
//! in a 4×4 sector. The chain echo is the product of mode echoes, so the rate
//! function is a sum of per-mode log-echoes. Mode echoes are evaluated in the Dyson
//! frame of the initial block, where the pre-quench Hamiltonian is Hermitian.

use std::f64::consts::PI;

use ndarray::{arr2, Array1, Array2};
use num_complex::Complex64 as c64;
use rayon::prelude::*;

use crate::echo::{EchoSeries, TimeGrid};
use crate::error::{Error, Result};
use crate::linalg::{eig_complex, ComplexMatrix, Spectrum};
use crate::models::{analytic_ep, Model, ModelParams};

const I: c64 = c64::new(0.0, 1.0);

/// Below this `|ε⁰_p|` the initial block is treated as degenerate.
pub const DEGENERATE_MODE: f64 = 1e-12;

/// Angles of the independent momentum blocks of an `n_sites` chain.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentumGrid {
    pub model: Model,
    pub angles: Vec<f64>,
}

impl MomentumGrid {
    /// iXY: `φ_p = 2πp/N`, `p = 1..N/2`. iATXY: the same spacing shifted by `−π/2`,
    /// so the `N/2` angles cover `(−π/2, π/2]` without duplicating the identified ends.
    pub fn new(model: Model, n_sites: usize) -> Result<Self> {
        if n_sites < 2 || !n_sites.is_multiple_of(2) {
            return Err(Error::param(
                "n_sites",
                format!("momentum grid needs an even chain length, got {n_sites}"),
            ));
        }
        let offset = match model {
            Model::Ixy => 0.0,
            Model::Iatxy => -PI / 2.0,
            other => {
                return Err(Error::param(
                    "model",
                    format!("{} has no momentum-space solution", other.name()),
                ))
            }
        };
        let n = n_sites as f64;
        let angles = (1..=n_sites / 2).map(|p| offset + 2.0 * PI * p as f64 / n).collect();
        Ok(Self { model, angles })
    }

    pub fn n_modes(&self) -> usize {
        self.angles.len()
    }
}

/// `H^p = [[h − cos φ, −γ sin φ], [γ sin φ, cos φ − h]]`.
pub fn ixy_block(h: f64, gamma: f64, phi: f64) -> ComplexMatrix {
    let (s, c) = phi.sin_cos();
    arr2(&[
        [c64::new(h - c, 0.0), c64::new(-gamma * s, 0.0)],
        [c64::new(gamma * s, 0.0), c64::new(c - h, 0.0)],
    ])
}

/// Principal root `√((h − cos φ)² − γ² sin² φ)`: real and non-negative in the
/// unbroken case, positive imaginary otherwise.
pub fn ixy_dispersion(h: f64, gamma: f64, phi: f64) -> c64 {
    let (s, c) = phi.sin_cos();
    let radicand = (h - c).powi(2) - (gamma * s).powi(2);
    c64::new(radicand, 0.0).sqrt()
}

/// The 4×4 iATXY block that carries the ground state of every momentum pair.
pub fn iatxy_block(h: f64, h_a: f64, gamma: f64, phi: f64) -> ComplexMatrix {
    let (s, c) = phi.sin_cos();
    let g = gamma * s;
    let rows = [
        [h + c, -g, 0.0, -h_a],
        [g, -h - c, h_a, 0.0],
        [0.0, h_a, c - h, -g],
        [-h_a, 0.0, g, h - c],
    ];
    Array2::from_shape_fn((4, 4), |(i, j)| c64::new(rows[i][j], 0.0))
}

/// Closed-form eigenvalues `±[h² + h_a² + cos²φ − γ² sin²φ ± 2√(h²h_a² + h² cos²φ − h_a²γ² sin²φ)]^{1/2}`
/// in the order `(+,+), (+,−), (−,+), (−,−)` (outer sign, inner sign).
pub fn iatxy_eigenvalues(h: f64, h_a: f64, gamma: f64, phi: f64) -> [c64; 4] {
    let (s, c) = phi.sin_cos();
    let base = h * h + h_a * h_a + c * c - gamma * gamma * s * s;
    let inner = c64::new(
        h * h * h_a * h_a + h * h * c * c - h_a * h_a * gamma * gamma * s * s,
        0.0,
    )
    .sqrt();
    let plus = (base + 2.0 * inner).sqrt();
    let minus = (base - 2.0 * inner).sqrt();
    [plus, minus, -plus, -minus]
}

/// A single iXY mode quenched from `h0` to `h1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeQuench {
    pub phi: f64,
    pub h0: f64,
    pub h1: f64,
    pub gamma: f64,
    pub eps0: c64,
    pub eps1: c64,
    pub delta: f64,
    pub omega: f64,
}

impl ModeQuench {
    pub fn ixy(h0: f64, h1: f64, gamma: f64, phi: f64) -> Result<Self> {
        let (s, c) = phi.sin_cos();
        let eps0 = ixy_dispersion(h0, gamma, phi);
        if eps0.norm() < DEGENERATE_MODE {
            return Err(Error::DegenerateInitialBlock { magnitude: eps0.norm() });
        }
        Ok(Self {
            phi,
            h0,
            h1,
            gamma,
            eps0,
            eps1: ixy_dispersion(h1, gamma, phi),
            delta: (h0 - c) * (h1 - c) - (gamma * s).powi(2),
            omega: gamma * (h1 - h0) * s,
        })
    }

    /// `(a_p, b_p)` at time `t`, both scaled by the same positive factor
    /// `e^{−|Im ε¹_p t|}` so that broken modes do not overflow. Any ratio of
    /// their moduli is unaffected.
    pub fn scaled_amplitudes(&self, t: f64) -> (c64, c64) {
        let z = self.eps1 * t;
        let damp = -z.im.abs();
        let ep = (I * z + damp).exp();
        let em = (-I * z + damp).exp();
        let cos = (ep + em) * 0.5;
        let sinc = if self.eps1.norm() > 1e-14 {
            (ep - em) / (2.0 * I) / self.eps1
        } else {
            c64::new(t * damp.exp(), 0.0)
        };
        let a = cos - I * self.delta * sinc / self.eps0;
        let b = I * self.omega * sinc / self.eps0;
        (a, b)
    }

    /// `ln L_p(t) = ln |a|² − ln(|a|² + |b|²)`.
    pub fn log_echo(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let (a, b) = self.scaled_amplitudes(t);
        let na = a.norm_sqr();
        (na.ln() - (na + b.norm_sqr()).ln()).min(0.0)
    }

    /// Post-quench block in the Dyson frame of the initial block, `P₀⁻¹H¹P₀`.
    pub fn dyson_frame_block(&self) -> Result<ComplexMatrix> {
        let spec0 = eig_complex(&ixy_block(self.h0, self.gamma, self.phi))?;
        let inv = spec0.inverse()?;
        Ok(inv.dot(&ixy_block(self.h1, self.gamma, self.phi)).dot(&spec0.vectors))
    }

    /// Amplitudes `(c₁, c₂)` of the initial mode state in the orthonormal basis
    /// `{v, v⊥}` of the Dyson frame, where `v` is the unit eigenvector of the
    /// post-quench block that dominates at late times: the growing mode in the
    /// broken phase, the single eigenvector of a defective block, and the upper
    /// branch `+ε¹_p` otherwise. `|c₁|² + |c₂|² = 1` and the broken-phase echo
    /// tends to `|c₁|²`.
    pub fn jordan_coefficients(&self) -> Result<(c64, c64)> {
        let m = self.dyson_frame_block()?;
        let lambda = if self.eps1.im.abs() > 0.0 {
            c64::new(0.0, self.eps1.im.abs())
        } else {
            self.eps1
        };
        let shifted = [[m[[0, 0]] - lambda, m[[0, 1]]], [m[[1, 0]], m[[1, 1]] - lambda]];
        let row = if shifted[0][0].norm() + shifted[0][1].norm() >= shifted[1][0].norm() + shifted[1][1].norm() {
            shifted[0]
        } else {
            shifted[1]
        };
        let v = [-row[1], row[0]];
        let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        let v = [v[0] / norm, v[1] / norm];
        let v_perp = [-v[1].conj(), v[0].conj()];
        // Initial state in this frame is e₀.
        Ok((v[0].conj(), v_perp[0].conj()))
    }
}

/// `L_p(t)` for an iXY mode.
pub fn ixy_mode_echo(mq: &ModeQuench, t: f64) -> f64 {
    mq.log_echo(t).exp()
}

/// An iATXY mode prepared for repeated evaluation at many times.
#[derive(Clone, Debug)]
pub struct IatxyMode {
    /// `P₀⁻¹P₁`.
    transfer: ComplexMatrix,
    /// `P₁⁻¹ψ₀`.
    coeffs: Array1<c64>,
    eigenvalues: Array1<c64>,
    growth: f64,
    /// Fallback for a defective post-quench block: the post-quench block and the
    /// initial state, propagated with the matrix exponential.
    defective: Option<(ComplexMatrix, Array1<c64>, ComplexMatrix)>,
}

impl IatxyMode {
    pub fn new(h0: f64, h1: f64, h_a: f64, gamma: f64, phi: f64) -> Result<Self> {
        let spec0 = eig_complex(&iatxy_block(h0, h_a, gamma, phi))?;
        let max_imag = spec0.max_imag();
        if max_imag > 1e-8 {
            return Err(Error::BrokenPhase { max_imag });
        }
        let inv0 = spec0.inverse()?.clone();
        let psi0 = spec0.eigenvector(0).to_owned();
        let block1 = iatxy_block(h1, h_a, gamma, phi);
        let spec1 = eig_complex(&block1)?;
        Ok(Self::from_spectra(&inv0, &psi0, &spec1, block1))
    }

    fn from_spectra(inv0: &ComplexMatrix, psi0: &Array1<c64>, spec1: &Spectrum, block1: ComplexMatrix) -> Self {
        match spec1.inverse() {
            Ok(inv1) => Self {
                transfer: inv0.dot(&spec1.vectors),
                coeffs: inv1.dot(psi0),
                eigenvalues: spec1.eigenvalues.clone(),
                growth: spec1.eigenvalues.iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max),
                defective: None,
            },
            Err(_) => Self {
                transfer: Array2::zeros((0, 0)),
                coeffs: Array1::zeros(0),
                eigenvalues: Array1::zeros(0),
                growth: 0.0,
                defective: Some((block1, psi0.clone(), inv0.clone())),
            },
        }
    }

    pub fn log_echo(&self, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        let phi_t: Array1<c64> = match &self.defective {
            None => {
                let weighted: Array1<c64> = self
                    .coeffs
                    .iter()
                    .zip(self.eigenvalues.iter())
                    .map(|(c, lambda)| c * (-I * lambda * t - self.growth * t).exp())
                    .collect();
                self.transfer.dot(&weighted)
            }
            Some((block, psi0, inv0)) => {
                let u = crate::linalg::matexp_reference(block, t)?;
                inv0.dot(&u.dot(psi0))
            }
        };
        let num = phi_t[0].norm_sqr();
        let den: f64 = phi_t.iter().map(|z| z.norm_sqr()).sum();
        Ok((num.ln() - den.ln()).min(0.0))
    }
}

/// `L_p(t)` for an iATXY mode: ground state of the initial 4×4 block, spectral
/// evolution under the post-quench block, overlap in the initial Dyson frame.
pub fn iatxy_mode_echo(h0: f64, h1: f64, h_a: f64, gamma: f64, phi: f64, t: f64) -> Result<f64> {
    Ok(IatxyMode::new(h0, h1, h_a, gamma, phi)?.log_echo(t)?.exp())
}

enum PreparedMode {
    Ixy(ModeQuench),
    Iatxy(Box<IatxyMode>),
}

impl PreparedMode {
    fn log_echo(&self, t: f64) -> Result<f64> {
        match self {
            PreparedMode::Ixy(mq) => Ok(mq.log_echo(t)),
            PreparedMode::Iatxy(mode) => mode.log_echo(t),
        }
    }
}

/// Chain log-echo `Σ_p ln L_p(t)` on `grid`; `λ(t) = −(1/N)Σ_p ln L_p(t)` is its rate.
///
/// Modes are evaluated in parallel; the reduction runs in ascending-angle order
/// so the result does not depend on the number of worker threads.
pub fn rate_function(params: &ModelParams, h0: f64, h1: f64, grid: &TimeGrid) -> Result<EchoSeries> {
    params.validate()?;
    for (field, value) in [("h0", h0), ("h1", h1)] {
        if !value.is_finite() {
            return Err(Error::param(field, "must be finite"));
        }
    }
    let mode_grid = MomentumGrid::new(params.model, params.n_sites)?;
    let h_ep = analytic_ep(params)?;
    if h0 <= h_ep {
        return Err(Error::PhasePrecondition { h0, h_ep });
    }

    let times = grid.times();
    let per_mode: Vec<Vec<f64>> = mode_grid
        .angles
        .par_iter()
        .map(|&phi| -> Result<Vec<f64>> {
            let mode = match params.model {
                Model::Ixy => ModeQuench::ixy(h0, h1, params.gamma, phi).map(PreparedMode::Ixy),
                _ => IatxyMode::new(h0, h1, params.h_a, params.gamma, phi).map(|m| PreparedMode::Iatxy(Box::new(m))),
            }
            .map_err(|e| e.at_mode(phi))?;
            times
                .iter()
                .map(|&t| mode.log_echo(t))
                .collect::<Result<Vec<f64>>>()
                .map_err(|e| e.at_mode(phi))
        })
        .collect::<Result<_>>()?;

    let mut log_echo = vec![0.0; times.len()];
    for mode in &per_mode {
        for (acc, l) in log_echo.iter_mut().zip(mode) {
            *acc += l;
        }
    }
    Ok(EchoSeries {
        grid: *grid,
        log_echo,
        n_sites: params.n_sites,
        h0,
        h1,
        params: params.with_field(h1),
    })
}
