//! Translation and spin-flip-parity sectors of the ring.
//!
//! Every Hamiltonian in this crate flips spins in pairs, so the parity of the
//! number of up spins is conserved, and each is invariant under a lattice
//! translation (one site, or two for the staggered field). A sector is spanned by
//! the momentum states `|s, k⟩ = R^{−1/2} Σ_j e^{−ikj} T^j|s⟩` over translation
//! orbits of length `R` compatible with `k`. The columns form an isometry `B`, and
//! the sector Hamiltonian is `B†HB`.

use ndarray::Array2;
use num_complex::Complex64 as c64;

use crate::linalg::{ComplexMatrix, StateVector};
use crate::models::ModelParams;

/// Which symmetry eigenspace a [`Sector`] spans.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SectorLabel {
    /// The whole Hilbert space in the computational basis.
    Full,
    /// Translation eigenvalue `e^{2πi·momentum/n_cells}` and up-spin parity.
    Symmetric {
        momentum: usize,
        n_cells: usize,
        parity: u8,
    },
}

/// An orthonormal basis of one symmetry sector, stored as sparse columns in the
/// computational basis.
#[derive(Clone, Debug)]
pub struct Sector {
    pub label: SectorLabel,
    n_sites: usize,
    columns: Vec<Vec<(usize, c64)>>,
}

fn translate(state: usize, n_sites: usize, step: usize) -> usize {
    let mask = (1usize << n_sites) - 1;
    ((state << step) | (state >> (n_sites - step))) & mask
}

impl Sector {
    /// The full space, one column per basis state.
    pub fn full(n_sites: usize) -> Self {
        Self {
            label: SectorLabel::Full,
            n_sites,
            columns: (0..1usize << n_sites).map(|s| vec![(s, c64::new(1.0, 0.0))]).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// `B†HB`, assembled column by column from the Hamiltonian's action on basis states.
    pub fn project(&self, params: &ModelParams) -> ComplexMatrix {
        let full_dim = 1usize << self.n_sites;
        let mut index: Vec<Option<(usize, c64)>> = vec![None; full_dim];
        for (col, entries) in self.columns.iter().enumerate() {
            for &(state, amp) in entries {
                index[state] = Some((col, amp));
            }
        }
        let bonds = params.bonds();
        let d = self.dim();
        let mut block = Array2::<c64>::zeros((d, d));
        for (col, entries) in self.columns.iter().enumerate() {
            for &(state, amp) in entries {
                params.apply_to_basis_state(state, &bonds, |target, value| {
                    if let Some((row, row_amp)) = index[target] {
                        block[[row, col]] += row_amp.conj() * amp * value;
                    }
                });
            }
        }
        block
    }

    /// `B·v`: a sector vector expressed in the computational basis.
    pub fn embed(&self, v: &StateVector) -> StateVector {
        let mut out = StateVector::zeros(1usize << self.n_sites);
        for (entries, &coeff) in self.columns.iter().zip(v.iter()) {
            for &(state, amp) in entries {
                out[state] += amp * coeff;
            }
        }
        out
    }
}

/// All non-empty sectors for a ring of `n_sites` with translation by `step` sites,
/// ordered by momentum then parity. Their dimensions sum to `2^n_sites`.
pub fn symmetry_sectors(n_sites: usize, step: usize) -> Vec<Sector> {
    assert!(
        step >= 1 && n_sites.is_multiple_of(step),
        "translation step must divide the ring"
    );
    let full_dim = 1usize << n_sites;
    let n_cells = n_sites / step;
    let mut seen = vec![false; full_dim];
    let mut orbits: Vec<Vec<usize>> = Vec::new();
    for s in 0..full_dim {
        if seen[s] {
            continue;
        }
        let mut orbit = vec![s];
        seen[s] = true;
        let mut x = translate(s, n_sites, step);
        while x != s {
            seen[x] = true;
            orbit.push(x);
            x = translate(x, n_sites, step);
        }
        orbits.push(orbit);
    }

    let mut sectors = Vec::new();
    for momentum in 0..n_cells {
        let k = 2.0 * std::f64::consts::PI * momentum as f64 / n_cells as f64;
        for parity in 0..2u8 {
            let columns: Vec<Vec<(usize, c64)>> = orbits
                .iter()
                .filter(|orbit| (orbit[0].count_ones() % 2) as u8 == parity)
                .filter(|orbit| (momentum * orbit.len()) % n_cells == 0)
                .map(|orbit| {
                    let norm = (orbit.len() as f64).sqrt();
                    orbit
                        .iter()
                        .enumerate()
                        .map(|(j, &state)| (state, c64::from_polar(1.0 / norm, -k * j as f64)))
                        .collect()
                })
                .collect();
            if !columns.is_empty() {
                sectors.push(Sector {
                    label: SectorLabel::Symmetric {
                        momentum,
                        n_cells,
                        parity,
                    },
                    n_sites,
                    columns,
                });
            }
        }
    }
    sectors
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{conj_transpose, frobenius};
    use crate::models::build_hamiltonian;

    fn isometry(sector: &Sector) -> ComplexMatrix {
        let d = sector.dim();
        let mut b = Array2::<c64>::zeros((1 << sector.n_sites(), d));
        for col in 0..d {
            let mut e = StateVector::zeros(d);
            e[col] = c64::new(1.0, 0.0);
            b.column_mut(col).assign(&sector.embed(&e));
        }
        b
    }

    #[test]
    fn sectors_partition_the_space() {
        for (n, step) in [(6, 1), (8, 1), (8, 2), (12, 1)] {
            let total: usize = symmetry_sectors(n, step).iter().map(Sector::dim).sum();
            assert_eq!(total, 1 << n);
        }
    }

    #[test]
    fn columns_are_orthonormal() {
        for sector in symmetry_sectors(6, 2) {
            let b = isometry(&sector);
            let gram = conj_transpose(&b).dot(&b);
            assert!(frobenius(&(gram - Array2::<c64>::eye(sector.dim()))) < 1e-12);
        }
    }

    #[test]
    fn projection_matches_dense_and_decouples() {
        let params = ModelParams::iatxy(0.8, 1.7, 0.4, 6);
        let h = build_hamiltonian(&params).unwrap();
        for sector in symmetry_sectors(6, 2) {
            let b = isometry(&sector);
            let block = sector.project(&params);
            let want = conj_transpose(&b).dot(&h).dot(&b);
            assert!(frobenius(&(&block - &want)) < 1e-12);
            // The sector is invariant: H·B = B·block.
            assert!(frobenius(&(h.dot(&b) - b.dot(&block))) < 1e-12);
        }
    }

    #[test]
    fn full_sector_reproduces_hamiltonian() {
        let params = ModelParams::ixyz_lr(0.3, 0.2, 1.5, 1.1, 6);
        let block = Sector::full(6).project(&params);
        assert!(frobenius(&(block - build_hamiltonian(&params).unwrap())) < 1e-14);
    }
}
