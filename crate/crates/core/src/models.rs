//! RT-symmetric spin-chain Hamiltonians on a periodic ring.
//!
//! All four models share the anisotropic exchange
//! `(J/4)[(1+iγ)σˣσˣ + (1−iγ)σʸσʸ + Δσᶻσᶻ]` with `J = 1` and a transverse field
//! `−(h_l/2)σᶻ_l`. Basis states are bit strings: bit `j` set means site `j + 1`
//! points up (`σᶻ = +1`).

use std::fmt;

use ndarray::Array2;
use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

/// Largest chain that may be expanded into a dense `2^N × 2^N` matrix.
pub const DENSE_MAX_SITES: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    #[serde(rename = "IXY", alias = "ixy")]
    Ixy,
    #[serde(rename = "IATXY", alias = "iatxy")]
    Iatxy,
    #[serde(rename = "IXYZ_SR", alias = "ixyz_sr")]
    IxyzSr,
    #[serde(rename = "IXYZ_LR", alias = "ixyz_lr")]
    IxyzLr,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Ixy => "IXY",
            Model::Iatxy => "IATXY",
            Model::IxyzSr => "IXYZ_SR",
            Model::IxyzLr => "IXYZ_LR",
        }
    }

    /// Smallest lattice translation that leaves the model invariant.
    pub fn translation_step(self) -> usize {
        match self {
            Model::Iatxy => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Model identity plus couplings, in units of the exchange `J = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub model: Model,
    #[serde(default)]
    pub gamma: f64,
    /// z-coupling, IXYZ models only.
    #[serde(default)]
    pub delta: f64,
    /// Uniform field `h'/J`.
    #[serde(default)]
    pub h: f64,
    /// Alternating field, IATXY only.
    #[serde(default)]
    pub h_a: f64,
    /// Power-law decay exponent, IXYZ_LR only.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub n_sites: usize,
}

fn default_alpha() -> f64 {
    1.0
}

/// One exchange bond between two distinct sites (0-based) with strength `J_lm`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bond {
    pub i: usize,
    pub j: usize,
    pub strength: f64,
}

impl ModelParams {
    pub fn ixy(gamma: f64, h: f64, n_sites: usize) -> Self {
        Self {
            model: Model::Ixy,
            gamma,
            delta: 0.0,
            h,
            h_a: 0.0,
            alpha: default_alpha(),
            n_sites,
        }
    }

    pub fn iatxy(gamma: f64, h: f64, h_a: f64, n_sites: usize) -> Self {
        Self {
            model: Model::Iatxy,
            h_a,
            ..Self::ixy(gamma, h, n_sites)
        }
    }

    pub fn ixyz_sr(gamma: f64, delta: f64, h: f64, n_sites: usize) -> Self {
        Self {
            model: Model::IxyzSr,
            delta,
            ..Self::ixy(gamma, h, n_sites)
        }
    }

    pub fn ixyz_lr(gamma: f64, delta: f64, alpha: f64, h: f64, n_sites: usize) -> Self {
        Self {
            model: Model::IxyzLr,
            delta,
            alpha,
            ..Self::ixy(gamma, h, n_sites)
        }
    }

    /// Same couplings with a different uniform field.
    pub fn with_field(&self, h: f64) -> Self {
        Self { h, ..*self }
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_sites
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(Error::param(
                "n_sites",
                format!("need at least 2 sites, got {}", self.n_sites),
            ));
        }
        for (field, value) in [
            ("gamma", self.gamma),
            ("delta", self.delta),
            ("h", self.h),
            ("h_a", self.h_a),
            ("alpha", self.alpha),
        ] {
            if !value.is_finite() {
                return Err(Error::param(field, format!("must be finite, got {value}")));
            }
        }
        if self.model == Model::Iatxy && !self.n_sites.is_multiple_of(2) {
            return Err(Error::param(
                "n_sites",
                format!("IATXY needs an even ring, got {}", self.n_sites),
            ));
        }
        if self.model != Model::Iatxy && self.h_a != 0.0 {
            return Err(Error::param(
                "h_a",
                format!("alternating field is only defined for IATXY, not {}", self.model),
            ));
        }
        if !matches!(self.model, Model::IxyzSr | Model::IxyzLr) && self.delta != 0.0 {
            return Err(Error::param(
                "delta",
                format!("z-coupling is only defined for IXYZ models, not {}", self.model),
            ));
        }
        if self.model == Model::IxyzLr && self.alpha <= 0.0 {
            return Err(Error::param("alpha", format!("must be positive, got {}", self.alpha)));
        }
        Ok(())
    }

    /// Exchange bonds of the ring. Nearest-neighbour models list every site's
    /// right bond; the long-range model lists each unordered pair once with
    /// `J_lm = 1/d^α`, `d` the ring distance.
    pub fn bonds(&self) -> Vec<Bond> {
        let n = self.n_sites;
        match self.model {
            Model::IxyzLr => {
                let mut bonds = Vec::with_capacity(n * (n - 1) / 2);
                for i in 0..n {
                    for j in i + 1..n {
                        let d = (j - i).min(n - (j - i));
                        bonds.push(Bond {
                            i,
                            j,
                            strength: (d as f64).powf(-self.alpha),
                        });
                    }
                }
                bonds
            }
            _ => (0..n)
                .map(|i| Bond {
                    i,
                    j: (i + 1) % n,
                    strength: 1.0,
                })
                .collect(),
        }
    }

    /// Field on 0-based site `site`; odd physical sites (`l = site + 1`) get `h − h_a`.
    pub fn site_field(&self, site: usize) -> f64 {
        if site.is_multiple_of(2) {
            self.h - self.h_a
        } else {
            self.h + self.h_a
        }
    }

    /// Enumerates `H|state⟩` as `(target, amplitude)` pairs. Targets may repeat.
    pub fn apply_to_basis_state(&self, state: usize, bonds: &[Bond], mut emit: impl FnMut(usize, c64)) {
        let spin = |s: usize, site: usize| if (s >> site) & 1 == 1 { 1.0 } else { -1.0 };
        let mut diag = 0.0;
        for bond in bonds {
            let aligned = (state >> bond.i) & 1 == (state >> bond.j) & 1;
            let zz = if aligned { 1.0 } else { -1.0 };
            diag += 0.25 * bond.strength * self.delta * zz;
            // (1+iγ)XX + (1−iγ)YY flips both spins: 2iγ on aligned, 2 on anti-aligned pairs.
            let amp = if aligned {
                c64::new(0.0, 0.5 * self.gamma * bond.strength)
            } else {
                c64::new(0.5 * bond.strength, 0.0)
            };
            emit(state ^ (1 << bond.i) ^ (1 << bond.j), amp);
        }
        for site in 0..self.n_sites {
            diag -= 0.5 * self.site_field(site) * spin(state, site);
        }
        emit(state, c64::new(diag, 0.0));
    }
}

/// Dense Hamiltonian on the full `2^N` Hilbert space.
pub fn build_hamiltonian(params: &ModelParams) -> Result<ComplexMatrix> {
    params.validate()?;
    if params.n_sites > DENSE_MAX_SITES {
        return Err(Error::DimensionTooLarge {
            n_sites: params.n_sites,
            max_sites: DENSE_MAX_SITES,
        });
    }
    let dim = params.dim();
    let bonds = params.bonds();
    let mut h = Array2::<c64>::zeros((dim, dim));
    for col in 0..dim {
        params.apply_to_basis_state(col, &bonds, |row, amp| h[[row, col]] += amp);
    }
    Ok(h)
}

/// Closed-form exceptional point of the model (thermodynamic limit).
pub fn analytic_ep(params: &ModelParams) -> Result<f64> {
    params.validate()?;
    let g2 = params.gamma * params.gamma;
    let zz = (1.0 + params.delta).powi(2);
    Ok(match params.model {
        Model::Ixy => (1.0 + g2).sqrt(),
        Model::Iatxy => (1.0 + params.h_a * params.h_a + g2).sqrt(),
        Model::IxyzSr => (zz + g2).sqrt(),
        Model::IxyzLr => {
            let tail: f64 = (1..=params.n_sites / 2).map(|j| (j as f64).powf(-params.alpha)).sum();
            (zz + g2).sqrt() * tail
        }
    })
}

/// `‖R·conj(H)·R⁻¹ − H‖_F` with `R = exp(−i(π/4)Σσᶻ)`.
pub fn rt_symmetry_residual(h: &ComplexMatrix, n_sites: usize) -> Result<f64> {
    let dim = 1usize.checked_shl(n_sites as u32).unwrap_or(0);
    if dim == 0 || h.nrows() != dim || h.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: h.nrows().max(h.ncols()),
        });
    }
    let phase: Vec<c64> = (0..dim)
        .map(|s| {
            let up = s.count_ones() as f64;
            let mz = 2.0 * up - n_sites as f64;
            c64::from_polar(1.0, -std::f64::consts::FRAC_PI_4 * mz)
        })
        .collect();
    let mut acc = 0.0;
    for ((a, b), value) in h.indexed_iter() {
        let mapped = phase[a] * value.conj() * phase[b].conj();
        acc += (mapped - value).norm_sqr();
    }
    Ok(acc.sqrt())
}
