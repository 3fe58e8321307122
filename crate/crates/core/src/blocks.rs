//! Per-sector energy blocks and the sector Hamiltonian.
//!
//! A paired sector couples the electron-down branch (shifted level energies
//! `b_down`, entering the diagonal with a minus sign) to the electron-up
//! branch (`b_up`, entering with a plus sign) through the rectangular
//! single-flip matrix K with entries `A_l / 4`. The same data feeds the
//! time-domain Hamiltonian
//!
//! ```text
//! H = [ -diag(b_down)   K            ]
//!     [  K^T            +diag(b_up)  ]
//! ```
//!
//! and the Laplace-domain system `[A C; D B] (Ydown, Xup) = i (Y0, X0)` with
//! `A = diag(iw + b_down)`, `B = diag(iw - b_up)`, `C = -K`, `D = -K^T`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::basis::{Branch, SectorBasis, SectorId};
use crate::error::{Error, Result};
use crate::model::{flip_element, CouplingSet};

/// Largest sector dimension materialized as a dense matrix by default.
pub const DEFAULT_DENSE_CAP: usize = 4096;

/// Diagonal energies and sparse coupling matrix of one sector.
///
/// `b_down`/`b_up` are the shifted level energies per configuration; any
/// nuclear Zeeman contribution is folded in with the sign that keeps the
/// diagonal exactly `-b_down` / `+b_up`, so with `epsilon_n = 0` they are the
/// bare shifted energies.
#[derive(Debug, Clone)]
pub struct SectorBlocks {
    basis: SectorBasis,
    b_down: Vec<f64>,
    b_up: Vec<f64>,
    /// Row-wise sparse K: for each down config, the (up column, A_l/4) pairs,
    /// sorted by column.
    coupling: Vec<Vec<(usize, f64)>>,
}

/// Dense symmetric sector Hamiltonian, basis ordered [down branch | up branch].
#[derive(Debug, Clone)]
pub struct SectorHamiltonian {
    sector: SectorId,
    down_dim: usize,
    matrix: DMatrix<f64>,
}

/// The Laplace-domain left-hand side blocks at a fixed frequency.
#[derive(Debug, Clone)]
pub struct LaplaceBlocks {
    /// `iw + b_down`, diagonal of the down-branch block.
    pub a_diag: Vec<Complex64>,
    /// `iw - b_up`, diagonal of the up-branch block.
    pub b_diag: Vec<Complex64>,
    /// `-K`, dense.
    pub c: DMatrix<f64>,
}

/// Builds the frequency-independent block content of a sector.
pub fn build_blocks(cs: &CouplingSet, basis: &SectorBasis) -> Result<SectorBlocks> {
    let n = cs.n_nuclei();
    if basis.n_nuclei() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: basis.n_nuclei(),
        });
    }
    let zee_down = match basis.down_configs().first() {
        Some(&mask) => cs.nuclear_zeeman(mask),
        None => 0.0,
    };
    let zee_up = match basis.up_configs().first() {
        Some(&mask) => cs.nuclear_zeeman(mask),
        None => 0.0,
    };
    let b_down: Vec<f64> = basis
        .down_configs()
        .iter()
        .map(|&mask| cs.shifted_energy(mask) - zee_down)
        .collect();
    let b_up: Vec<f64> = basis
        .up_configs()
        .iter()
        .map(|&mask| cs.shifted_energy(mask) + zee_up)
        .collect();
    let coupling = basis
        .down_configs()
        .iter()
        .map(|&down| {
            let mut row = Vec::with_capacity(n - down.count_ones() as usize);
            for l in 0..n {
                if down & (1 << l) == 0 {
                    let partner = down | (1 << l);
                    let col = basis.rank(Branch::Up, partner)?;
                    row.push((col, flip_element(cs, l)));
                }
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SectorBlocks {
        basis: basis.clone(),
        b_down,
        b_up,
        coupling,
    })
}

impl SectorBlocks {
    pub fn basis(&self) -> &SectorBasis {
        &self.basis
    }

    pub fn sector(&self) -> SectorId {
        self.basis.sector()
    }

    pub fn b_down(&self) -> &[f64] {
        &self.b_down
    }

    pub fn b_up(&self) -> &[f64] {
        &self.b_up
    }

    pub fn down_dim(&self) -> usize {
        self.b_down.len()
    }

    pub fn up_dim(&self) -> usize {
        self.b_up.len()
    }

    pub fn dim(&self) -> usize {
        self.down_dim() + self.up_dim()
    }

    /// Sparse rows of K: (up column, A_l/4) pairs per down config.
    pub fn coupling_rows(&self) -> &[Vec<(usize, f64)>] {
        &self.coupling
    }

    /// K as a dense down_dim x up_dim matrix.
    pub fn coupling_dense(&self) -> DMatrix<f64> {
        let mut k = DMatrix::zeros(self.down_dim(), self.up_dim());
        for (i, row) in self.coupling.iter().enumerate() {
            for &(j, value) in row {
                k[(i, j)] = value;
            }
        }
        k
    }

    /// Dense symmetric Hamiltonian under the default dimension cap.
    pub fn assemble_hamiltonian(&self) -> Result<SectorHamiltonian> {
        self.assemble_hamiltonian_capped(DEFAULT_DENSE_CAP)
    }

    pub fn assemble_hamiltonian_capped(&self, cap: usize) -> Result<SectorHamiltonian> {
        let dim = self.dim();
        if dim > cap {
            return Err(Error::DenseCapExceeded {
                sector: self.sector(),
                dim,
                cap,
            });
        }
        let nd = self.down_dim();
        let mut h = DMatrix::zeros(dim, dim);
        for (i, &b) in self.b_down.iter().enumerate() {
            h[(i, i)] = -b;
        }
        for (j, &b) in self.b_up.iter().enumerate() {
            h[(nd + j, nd + j)] = b;
        }
        for (i, row) in self.coupling.iter().enumerate() {
            for &(j, value) in row {
                h[(i, nd + j)] = value;
                h[(nd + j, i)] = value;
            }
        }
        Ok(SectorHamiltonian {
            sector: self.sector(),
            down_dim: nd,
            matrix: h,
        })
    }

    /// The same sector with the branch coupling dropped entirely (the
    /// crudest pole approximation); diagonals are untouched.
    pub fn decoupled(&self) -> SectorBlocks {
        SectorBlocks {
            basis: self.basis.clone(),
            b_down: self.b_down.clone(),
            b_up: self.b_up.clone(),
            coupling: vec![Vec::new(); self.coupling.len()],
        }
    }

    /// Laplace-domain blocks at frequency `omega` (the transform variable of
    /// `integral_0^inf dt e^(-w t) f(t)`, entering only as `iw`).
    pub fn laplace_lhs(&self, omega: Complex64) -> LaplaceBlocks {
        let iw = Complex64::i() * omega;
        LaplaceBlocks {
            a_diag: self.b_down.iter().map(|&b| iw + b).collect(),
            b_diag: self.b_up.iter().map(|&b| iw - b).collect(),
            c: -self.coupling_dense(),
        }
    }
}

impl SectorHamiltonian {
    pub fn sector(&self) -> SectorId {
        self.sector
    }

    pub fn down_dim(&self) -> usize {
        self.down_dim
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

impl LaplaceBlocks {
    /// `D = C^T`.
    pub fn d(&self) -> DMatrix<f64> {
        self.c.transpose()
    }

    /// The dense partitioned matrix [A C; D B].
    pub fn dense(&self) -> DMatrix<Complex64> {
        let nd = self.a_diag.len();
        let nu = self.b_diag.len();
        let mut m = DMatrix::zeros(nd + nu, nd + nu);
        for (i, &a) in self.a_diag.iter().enumerate() {
            m[(i, i)] = a;
        }
        for (j, &b) in self.b_diag.iter().enumerate() {
            m[(nd + j, nd + j)] = b;
        }
        for i in 0..nd {
            for j in 0..nu {
                m[(i, nd + j)] = Complex64::from(self.c[(i, j)]);
                m[(nd + j, i)] = Complex64::from(self.c[(i, j)]);
            }
        }
        m
    }

    /// The down-branch Schur complement `A - C B^{-1} D`, the matrix whose
    /// determinant zeros are the sector eigenfrequencies.
    pub fn down_schur_complement(&self) -> DMatrix<Complex64> {
        let nd = self.a_diag.len();
        let mut s = DMatrix::zeros(nd, nd);
        for i in 0..nd {
            s[(i, i)] = self.a_diag[i];
        }
        for i in 0..nd {
            for ip in 0..nd {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, &b) in self.b_diag.iter().enumerate() {
                    acc += self.c[(i, j)] * self.c[(ip, j)] / b;
                }
                s[(i, ip)] -= acc;
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::enumerate_sector;

    fn blocks_for(couplings: Vec<f64>, eps: f64, m: usize) -> SectorBlocks {
        let cs = CouplingSet::new(couplings, eps).unwrap();
        let basis = enumerate_sector(cs.n_nuclei(), m).unwrap();
        build_blocks(&cs, &basis).unwrap()
    }

    #[test]
    fn three_nuclei_middle_sector_coupling_matrix() {
        let (a1, a2, a3) = (0.9, 0.55, 0.3);
        let blocks = blocks_for(vec![a1, a2, a3], 0.7, 1);
        // down configs {1},{2},{3}; up configs colex {1,2},{1,3},{2,3}
        let expect = [
            [a2 / 4.0, a3 / 4.0, 0.0],
            [a1 / 4.0, 0.0, a3 / 4.0],
            [0.0, a1 / 4.0, a2 / 4.0],
        ];
        let k = blocks.coupling_dense();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(k[(i, j)], expect[i][j]);
            }
        }
    }

    #[test]
    fn coupling_rows_and_columns_have_fixed_sparsity() {
        let blocks = blocks_for(vec![0.1, 0.4, 0.7, 1.0, 1.3], 0.0, 2);
        let k = blocks.coupling_dense();
        for i in 0..blocks.down_dim() {
            let nonzero = (0..blocks.up_dim()).filter(|&j| k[(i, j)] != 0.0).count();
            assert_eq!(nonzero, 5 - 2);
        }
        for j in 0..blocks.up_dim() {
            let nonzero = (0..blocks.down_dim()).filter(|&i| k[(i, j)] != 0.0).count();
            assert_eq!(nonzero, 2 + 1);
        }
    }

    #[test]
    fn single_nucleus_blocks() {
        let a = 1.7;
        let blocks = blocks_for(vec![a], 0.0, 0);
        assert_eq!(blocks.b_down(), &[a / 2.0]);
        assert_eq!(blocks.b_up(), &[-a / 2.0]);
        assert_eq!(blocks.coupling_dense()[(0, 0)], a / 4.0);
        let h = blocks.assemble_hamiltonian().unwrap();
        assert_eq!(h.matrix()[(0, 0)], -a / 2.0);
        assert_eq!(h.matrix()[(1, 1)], -a / 2.0);
        assert_eq!(h.matrix()[(0, 1)], a / 4.0);
        assert_eq!(h.matrix()[(1, 0)], a / 4.0);
    }

    #[test]
    fn decoupled_hamiltonian_is_diagonal_zeeman() {
        let eps = 2.2;
        let blocks = blocks_for(vec![0.0; 4], eps, 1);
        let h = blocks.assemble_hamiltonian().unwrap();
        for i in 0..h.dim() {
            for j in 0..h.dim() {
                if i == j {
                    let expect = if i < blocks.down_dim() { -eps } else { eps };
                    assert_eq!(h.matrix()[(i, j)], expect);
                } else {
                    assert_eq!(h.matrix()[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn trace_identity() {
        let blocks = blocks_for(vec![0.3, 0.8, 1.1, 0.2], 0.9, 2);
        let h = blocks.assemble_hamiltonian().unwrap();
        let trace: f64 = (0..h.dim()).map(|i| h.matrix()[(i, i)]).sum();
        let expect: f64 =
            blocks.b_up().iter().sum::<f64>() - blocks.b_down().iter().sum::<f64>();
        assert!((trace - expect).abs() < 1e-12);
    }

    #[test]
    fn laplace_blocks_match_shifted_diagonals() {
        let (a1, a2, a3) = (0.4, 0.9, 1.6);
        let cs = CouplingSet::new(vec![a1, a2, a3], 0.25).unwrap();
        let b0 = cs.shifted_energy(0);
        let basis = enumerate_sector(3, 1).unwrap();
        let blocks = build_blocks(&cs, &basis).unwrap();
        let omega = Complex64::new(0.3, -0.7);
        let lhs = blocks.laplace_lhs(omega);
        let iw = Complex64::i() * omega;
        let a = [a1, a2, a3];
        for (k, &entry) in lhs.a_diag.iter().enumerate() {
            assert!((entry - (iw + b0 - a[k])).norm() < 1e-14);
        }
        // up configs colex {1,2},{1,3},{2,3}
        let pair_sums = [a1 + a2, a1 + a3, a2 + a3];
        for (j, &entry) in lhs.b_diag.iter().enumerate() {
            assert!((entry - (iw - b0 + pair_sums[j])).norm() < 1e-14);
        }
        assert_eq!(lhs.c, -blocks.coupling_dense());
    }

    #[test]
    fn schur_complement_matches_self_energy_form() {
        let (a1, a2, a3) = (0.8, 0.35, 0.6);
        let cs = CouplingSet::new(vec![a1, a2, a3], 0.45).unwrap();
        let b0 = cs.shifted_energy(0);
        let basis = enumerate_sector(3, 1).unwrap();
        let blocks = build_blocks(&cs, &basis).unwrap();
        let omega = Complex64::new(0.21, 0.37);
        let z = Complex64::i() * omega;
        let s = blocks.laplace_lhs(omega).down_schur_complement();

        let self_energy = (z + b0 - a1)
            - (a3 * a3 / (z - b0 + a3 + a1) + a2 * a2 / (z - b0 + a2 + a1)) / 16.0;
        assert!((s[(0, 0)] - self_energy).norm() < 1e-12);

        let off = -a1 * a2 / (16.0 * (z - b0 + a1 + a2));
        assert!((s[(0, 1)] - off).norm() < 1e-12);
        assert!((s[(1, 0)] - off).norm() < 1e-12);
    }

    #[test]
    fn large_frequency_limit_is_diagonal() {
        let blocks = blocks_for(vec![0.5, 0.7], 0.1, 0);
        let omega = Complex64::new(0.0, -1e9); // iw = 1e9
        let lhs = blocks.laplace_lhs(omega);
        for entry in lhs.a_diag.iter().chain(lhs.b_diag.iter()) {
            assert!((entry / Complex64::new(1e9, 0.0) - 1.0).norm() < 1e-8);
        }
    }

    #[test]
    fn dense_cap_is_enforced() {
        let blocks = blocks_for(vec![1.0; 8], 0.0, 4);
        assert!(matches!(
            blocks.assemble_hamiltonian_capped(10),
            Err(Error::DenseCapExceeded { .. })
        ));
    }

    #[test]
    fn nuclear_zeeman_folds_into_diagonals() {
        let cs = CouplingSet::with_nuclear_zeeman(vec![0.4, 0.8, 1.2], 0.3, 0.11).unwrap();
        let basis = enumerate_sector(3, 1).unwrap();
        let blocks = build_blocks(&cs, &basis).unwrap();
        let h = blocks.assemble_hamiltonian().unwrap();
        for (i, &mask) in basis.down_configs().iter().enumerate() {
            let expect = crate::model::diag_energy(&cs, false, mask).unwrap();
            assert!((h.matrix()[(i, i)] - expect).abs() < 1e-15);
        }
        for (j, &mask) in basis.up_configs().iter().enumerate() {
            let expect = crate::model::diag_energy(&cs, true, mask).unwrap();
            assert!((h.matrix()[(3 + j, 3 + j)] - expect).abs() < 1e-15);
        }
    }
}
