//! Cross-checks between the momentum-space solver and exact diagonalisation.
//!
//! On a finite ring the ground state lives in the even-fermion-parity sector,
//! whose momenta are antiperiodic: `φ = π(2q + 1)/N`. Evaluated on that set the
//! mode formulas must reproduce dense exact diagonalisation of the spin ring.

use std::f64::consts::PI;

use rtchain::exact_diag::{loschmidt_echo, model_spectrum, EdOptions, InitialState};
use rtchain::momentum::{iatxy_eigenvalues, ixy_dispersion, ModeQuench};
use rtchain::{ModelParams, TimeGrid};

fn antiperiodic(n_sites: usize, count: usize, offset: f64) -> Vec<f64> {
    (0..count)
        .map(|q| offset + PI * (2 * q + 1) as f64 / n_sites as f64)
        .collect()
}

fn ground_energy(params: &ModelParams) -> f64 {
    model_spectrum(params, &EdOptions::default()).unwrap()[0].re
}

#[test]
fn ixy_mode_product_equals_ring_echo() {
    let grid = TimeGrid::new(10.0, 0.25).unwrap();
    // Same-phase, cross-phase and deep broken-phase quenches. None of these rings
    // has a mode sitting exactly on the critical line.
    for (gamma, h0, h1) in [(1.0, 2.0, 3.0), (1.0, 2.0, 0.7), (0.5, 2.5, 0.3), (1.5, 2.2, 1.1)] {
        for n in [4, 6, 8, 10] {
            let params = ModelParams::ixy(gamma, h0, n);
            let init = InitialState::prepare(&params, &EdOptions::default()).unwrap();
            let ed = loschmidt_echo(&init.quench(h1, &grid).unwrap()).unwrap();
            let modes: Vec<ModeQuench> = antiperiodic(n, n / 2, 0.0)
                .into_iter()
                .map(|phi| ModeQuench::ixy(h0, h1, gamma, phi).unwrap())
                .collect();
            for (k, t) in grid.times().into_iter().enumerate() {
                let mode_sum: f64 = modes.iter().map(|m| m.log_echo(t)).sum();
                let gap = (ed.log_echo[k] - mode_sum).abs();
                assert!(
                    gap < 1e-9,
                    "γ={gamma} h0={h0} h1={h1} N={n} t={t}: ED {} vs modes {mode_sum}",
                    ed.log_echo[k]
                );
            }
        }
    }
}

#[test]
fn ixy_ground_energy_is_the_filled_mode_sum() {
    for (gamma, h, n) in [(1.0, 2.0, 8), (0.5, 1.5, 10), (1.5, 2.5, 6)] {
        let e0 = ground_energy(&ModelParams::ixy(gamma, h, n));
        let filled: f64 = antiperiodic(n, n / 2, 0.0)
            .into_iter()
            .map(|phi| ixy_dispersion(h, gamma, phi).re)
            .sum();
        assert!((e0 + filled).abs() < 1e-10, "N={n}: {e0} vs {}", -filled);
    }
}

/// The 4×4 iATXY block couples `k` with `k + π`, so `N/4` blocks cover the ring
/// and both negative levels `−ε₊, −ε₋` of each block are filled.
#[test]
fn iatxy_ground_energy_is_the_filled_block_sum() {
    for (gamma, h, h_a, n) in [
        (1.0, 3.0, 0.5, 8),
        (0.0, 1.3, 0.5, 8),
        (0.5, 2.0, 0.3, 12),
        (1.0, 2.5, 0.7, 4),
    ] {
        let e0 = ground_energy(&ModelParams::iatxy(gamma, h, h_a, n));
        let filled: f64 = antiperiodic(n, n / 4, -PI / 2.0)
            .into_iter()
            .map(|phi| {
                let [plus, minus, _, _] = iatxy_eigenvalues(h, h_a, gamma, phi);
                plus.re + minus.re
            })
            .sum();
        assert!((e0 + filled).abs() < 1e-10, "N={n}: {e0} vs {}", -filled);
    }
}
