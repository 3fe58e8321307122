//! Ground-truth engines used to falsify the sector machinery.
//!
//! Everything here works in the full 2^(N+1)-dimensional product space with
//! no sector bookkeeping at all, built strictly from the matrix-element
//! rules in [`crate::model`] so the two routes share conventions and nothing
//! else. Deliberately simple and dense; capped at small N.
//!
//! Basis order: index = (electron_down_bit << N) | nuclear_down_mask, so
//! index 0 is the fully aligned all-up state.

pub mod liouville;

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;

use crate::basis::SectorId;
use crate::error::{Error, Result};
use crate::model::{diag_energy, flip_element, CouplingSet};
use crate::observables::StateSpec;

/// Largest N for the dense full-space route (dimension 2^(N+1) = 8192).
pub const FULL_SPACE_MAX_NUCLEI: usize = 12;

/// A state vector over the full product space.
#[derive(Debug, Clone)]
pub struct FullState {
    n: usize,
    amps: DVector<Complex64>,
}

/// Flat basis index of `(electron, nuclear down-set)`.
pub fn full_index(n: usize, electron_up: bool, mask: u64) -> usize {
    let down_bit = if electron_up { 0 } else { 1 };
    (down_bit << n) | mask as usize
}

fn check_cap(n: usize) -> Result<()> {
    if n == 0 || n > FULL_SPACE_MAX_NUCLEI {
        return Err(Error::FullSpaceCapExceeded {
            n,
            max: FULL_SPACE_MAX_NUCLEI,
        });
    }
    Ok(())
}

impl FullState {
    pub fn zero(n: usize) -> Result<Self> {
        check_cap(n)?;
        Ok(Self {
            n,
            amps: DVector::zeros(1 << (n + 1)),
        })
    }

    /// A single basis ket.
    pub fn basis_state(n: usize, electron_up: bool, mask: u64) -> Result<Self> {
        let mut state = Self::zero(n)?;
        state.amps[full_index(n, electron_up, mask)] = Complex64::new(1.0, 0.0);
        Ok(state)
    }

    pub fn from_amplitudes(n: usize, amps: DVector<Complex64>) -> Result<Self> {
        check_cap(n)?;
        if amps.len() != 1 << (n + 1) {
            return Err(Error::DimensionMismatch {
                expected: 1 << (n + 1),
                got: amps.len(),
            });
        }
        Ok(Self { n, amps })
    }

    pub fn n_nuclei(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amps
    }

    pub fn amp(&self, electron_up: bool, mask: u64) -> Complex64 {
        self.amps[full_index(self.n, electron_up, mask)]
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Flattens a sector-decomposed state into the full product space.
pub fn embed_state_spec(spec: &StateSpec) -> Result<FullState> {
    let n = spec.n_nuclei();
    let mut state = FullState::zero(n)?;
    for (&id, sector_state) in spec.sectors() {
        let basis = crate::basis::SectorBasis::for_sector(n, id)?;
        for (i, &mask) in basis.down_configs().iter().enumerate() {
            state.amps[full_index(n, false, mask)] += sector_state.weight * sector_state.down[i];
        }
        for (j, &mask) in basis.up_configs().iter().enumerate() {
            state.amps[full_index(n, true, mask)] += sector_state.weight * sector_state.up[j];
        }
    }
    Ok(state)
}

/// The dense 2^(N+1)-dimensional Hamiltonian.
pub fn build_full_hamiltonian(cs: &CouplingSet) -> Result<DMatrix<f64>> {
    let n = cs.n_nuclei();
    check_cap(n)?;
    let dim = 1usize << (n + 1);
    let mut h = DMatrix::zeros(dim, dim);
    for mask in 0..(1u64 << n) {
        h[(full_index(n, true, mask), full_index(n, true, mask))] =
            diag_energy(cs, true, mask)?;
        let down_idx = full_index(n, false, mask);
        h[(down_idx, down_idx)] = diag_energy(cs, false, mask)?;
        for l in 0..n {
            if mask & (1 << l) == 0 {
                let up_idx = full_index(n, true, mask | (1 << l));
                let element = flip_element(cs, l);
                h[(down_idx, up_idx)] = element;
                h[(up_idx, down_idx)] = element;
            }
        }
    }
    Ok(h)
}

/// Diagonal of the conserved total z-spin operator in the full basis.
pub fn m_z_diagonal(n: usize) -> Vec<f64> {
    let dim = 1usize << (n + 1);
    (0..dim)
        .map(|idx| {
            let electron_down = idx >> n == 1;
            let mask = (idx as u64) & ((1 << n) - 1);
            let electron = if electron_down { -1.0 } else { 1.0 };
            electron + n as f64 - 2.0 * mask.count_ones() as f64
        })
        .collect()
}

/// The full-space index of each state in the sector-ordered direct sum
/// [top, paired sectors by m (down branch then up branch), bottom].
pub fn sector_permutation(n: usize) -> Result<Vec<usize>> {
    let mut order = Vec::with_capacity(1 << (n + 1));
    for id in SectorId::all(n) {
        let basis = crate::basis::SectorBasis::for_sector(n, id)?;
        for &mask in basis.down_configs() {
            order.push(full_index(n, false, mask));
        }
        for &mask in basis.up_configs() {
            order.push(full_index(n, true, mask));
        }
    }
    Ok(order)
}

/// Spectral data of the full Hamiltonian.
#[derive(Debug, Clone)]
pub struct FullPropagator {
    n: usize,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

/// Diagonalizes the full Hamiltonian for repeated propagation.
pub fn full_propagator(cs: &CouplingSet) -> Result<FullPropagator> {
    let n = cs.n_nuclei();
    let h = build_full_hamiltonian(cs)?;
    let (eigenvalues, eigenvectors) =
        crate::linalg::symmetric_eigen(&h).ok_or_else(|| Error::EigenFailure {
            sector: SectorId::Top,
            detail: "full-space eigensolver did not converge".into(),
        })?;
    Ok(FullPropagator {
        n,
        eigenvalues,
        eigenvectors,
    })
}

impl FullPropagator {
    pub fn evolve_at(&self, initial: &FullState, t: f64) -> Result<FullState> {
        if initial.n != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: initial.n,
            });
        }
        let v = &self.eigenvectors;
        let dim = v.nrows();
        let mut modes = vec![Complex64::new(0.0, 0.0); dim];
        for (j, mode) in modes.iter_mut().enumerate() {
            *mode = v
                .column(j)
                .iter()
                .zip(initial.amps.iter())
                .map(|(&vij, &xi)| vij * xi)
                .sum();
        }
        let mut out = DVector::from_element(dim, Complex64::new(0.0, 0.0));
        for (j, &mode) in modes.iter().enumerate() {
            let phased = mode * Complex64::from_polar(1.0, -self.eigenvalues[j] * t);
            for (i, &vij) in v.column(j).iter().enumerate() {
                out[i] += vij * phased;
            }
        }
        FullState::from_amplitudes(self.n, out)
    }
}

/// Schroedinger evolution of a full-space state over a time grid.
pub fn evolve_full(
    cs: &CouplingSet,
    initial: &FullState,
    times: &[f64],
) -> Result<Vec<FullState>> {
    let prop = full_propagator(cs)?;
    times.iter().map(|&t| prop.evolve_at(initial, t)).collect()
}

/// Electron marginal of a pure full-space state, in the (up, down) basis.
pub fn partial_trace_electron(state: &FullState) -> Matrix2<Complex64> {
    let n = state.n;
    let mut rho = Matrix2::zeros();
    for mask in 0..(1u64 << n) {
        let up = state.amp(true, mask);
        let down = state.amp(false, mask);
        rho[(0, 0)] += up * up.conj();
        rho[(0, 1)] += up * down.conj();
        rho[(1, 0)] += down * up.conj();
        rho[(1, 1)] += down * down.conj();
    }
    rho
}

/// Bloch components (s_x, s_y, s_z) of a 2x2 density matrix in the
/// (up, down) basis.
pub fn spin_from_density(rho: &Matrix2<Complex64>) -> [f64; 3] {
    let s_plus = rho[(1, 0)];
    [
        2.0 * s_plus.re,
        2.0 * s_plus.im,
        (rho[(0, 0)] - rho[(1, 1)]).re,
    ]
}

/// Bloch components of the electron marginal of a pure full-space state.
pub fn spin_components(state: &FullState) -> [f64; 3] {
    spin_from_density(&partial_trace_electron(state))
}
