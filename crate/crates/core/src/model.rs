//! Physical parameters and the single authoritative rule for Hamiltonian
//! matrix elements.
//!
//! The model is one electron spin-1/2 coupled to N nuclear spins-1/2 through
//! contact hyperfine constants `A_k`, with an electron Zeeman energy
//! `epsilon_e` and an optional nuclear Zeeman energy `epsilon_n` (hbar = 1,
//! all energies in one arbitrary unit, times in its inverse).
//!
//! Matrix-element convention, used verbatim by every solver route in this
//! crate so they cannot diverge:
//!
//! * a nuclear configuration is a down-set bitmask `S` (bit k set means
//!   nucleus k points down);
//! * diagonal, electron down: `-(shift(S)) + epsilon_n * (N - 2|S|)` where
//!   `shift(S) = epsilon_e + A_tot - sum_{l in S} A_l` and
//!   `A_tot = sum_k A_k / 2`;
//! * diagonal, electron up: `+(shift(S)) + epsilon_n * (N - 2|S|)`;
//! * off-diagonal between electron-down `S` and electron-up `S ∪ {l}`:
//!   `A_l / 4`; every other off-diagonal vanishes.

use crate::error::{Error, Result};

/// Widest nuclear register representable in a single `u64` down-set mask.
pub const MAX_NUCLEI: usize = 62;

/// Hyperfine couplings plus Zeeman energies for one electron and N nuclei.
///
/// Immutable after construction; derived totals are recomputed on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSet {
    couplings: Vec<f64>,
    epsilon_e: f64,
    epsilon_n: f64,
}

impl CouplingSet {
    /// A coupling set with no nuclear Zeeman term.
    pub fn new(couplings: Vec<f64>, epsilon_e: f64) -> Result<Self> {
        Self::with_nuclear_zeeman(couplings, epsilon_e, 0.0)
    }

    pub fn with_nuclear_zeeman(
        couplings: Vec<f64>,
        epsilon_e: f64,
        epsilon_n: f64,
    ) -> Result<Self> {
        if couplings.is_empty() {
            return Err(Error::EmptyCouplings);
        }
        if couplings.len() > MAX_NUCLEI {
            return Err(Error::TooManyNuclei {
                n: couplings.len(),
                max: MAX_NUCLEI,
            });
        }
        for (index, a) in couplings.iter().enumerate() {
            if !a.is_finite() {
                return Err(Error::NonFiniteCoupling { index });
            }
        }
        if !epsilon_e.is_finite() || !epsilon_n.is_finite() {
            return Err(Error::NonFiniteCoupling {
                index: couplings.len(),
            });
        }
        Ok(Self {
            couplings,
            epsilon_e,
            epsilon_n,
        })
    }

    /// N identical couplings of strength `a`.
    pub fn uniform(n: usize, a: f64, epsilon_e: f64) -> Result<Self> {
        Self::new(vec![a; n], epsilon_e)
    }

    pub fn n_nuclei(&self) -> usize {
        self.couplings.len()
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    /// `A_k` for nucleus `k` (zero-based).
    pub fn coupling(&self, k: usize) -> f64 {
        self.couplings[k]
    }

    pub fn epsilon_e(&self) -> f64 {
        self.epsilon_e
    }

    pub fn epsilon_n(&self) -> f64 {
        self.epsilon_n
    }

    /// Total coupling `A = sum_k A_k / 2`.
    pub fn total_coupling(&self) -> f64 {
        self.couplings.iter().sum::<f64>() / 2.0
    }

    /// All-ones down-set mask for this register width.
    pub fn full_mask(&self) -> u64 {
        (1u64 << self.n_nuclei()) - 1
    }

    fn check_mask(&self, down_set: u64) -> Result<()> {
        if down_set & !self.full_mask() != 0 {
            return Err(Error::MaskOutOfRange {
                mask: down_set,
                n: self.n_nuclei(),
            });
        }
        Ok(())
    }

    /// `sum_{l in S} A_l` over the down-set `S`.
    pub fn down_set_sum(&self, down_set: u64) -> f64 {
        let mut bits = down_set;
        let mut sum = 0.0;
        while bits != 0 {
            let k = bits.trailing_zeros() as usize;
            sum += self.couplings[k];
            bits &= bits - 1;
        }
        sum
    }

    /// Shifted level energy `epsilon_e + A - sum_{l in S} A_l` of a
    /// configuration with down-set `S`; `shifted_energy(0)` is the
    /// all-nuclei-up value `epsilon_e + A`.
    pub fn shifted_energy(&self, down_set: u64) -> f64 {
        self.epsilon_e + self.total_coupling() - self.down_set_sum(down_set)
    }

    /// Nuclear Zeeman addition `epsilon_n * (N - 2|S|)`; zero when
    /// `epsilon_n` is zero.
    pub fn nuclear_zeeman(&self, down_set: u64) -> f64 {
        self.epsilon_n * (self.n_nuclei() as f64 - 2.0 * down_set.count_ones() as f64)
    }
}

/// Signed diagonal Hamiltonian energy of one basis state.
pub fn diag_energy(cs: &CouplingSet, electron_up: bool, down_set: u64) -> Result<f64> {
    cs.check_mask(down_set)?;
    let sign = if electron_up { 1.0 } else { -1.0 };
    Ok(sign * cs.shifted_energy(down_set) + cs.nuclear_zeeman(down_set))
}

/// Spin-flip matrix element `A_l / 4` between electron-down `S` and
/// electron-up `S ∪ {l}` (zero-based `l`).
pub fn flip_element(cs: &CouplingSet, l: usize) -> f64 {
    cs.coupling(l) / 4.0
}
