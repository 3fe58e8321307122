//! Exact time propagation of sector amplitudes by spectral decomposition.
//!
//! The sector Hamiltonian is real symmetric, so `exp(-i H t)` is evaluated
//! as `V exp(-i L t) V^T` with machine accuracy at any time, for arbitrary
//! complex initial amplitudes and arbitrary time grids. No step-size error
//! enters anywhere in this route.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::basis::{SectorBasis, SectorId};
use crate::blocks::{build_blocks, SectorHamiltonian};
use crate::error::{Error, Result};
use crate::model::CouplingSet;

/// Absolute norm-drift budget for propagated trajectories.
pub const NORM_DRIFT_BUDGET: f64 = 1e-12;

const ORTHOGONALITY_TOL: f64 = 1e-12;
const RECONSTRUCTION_TOL: f64 = 1e-10;
/// Beyond this dimension the O(d^3) decomposition checks are sampled.
const FULL_CHECK_DIM: usize = 1024;

/// Eigendecomposition of one sector Hamiltonian.
#[derive(Debug, Clone)]
pub struct SectorPropagator {
    sector: SectorId,
    down_dim: usize,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

/// Complex sector amplitudes on a time grid, one row per time point,
/// split into the electron-down and electron-up branches.
#[derive(Debug, Clone)]
pub struct AmplitudeTrajectory {
    times: Vec<f64>,
    down_amps: DMatrix<Complex64>,
    up_amps: DMatrix<Complex64>,
}

/// Diagonalizes a sector Hamiltonian, eigenvalues ascending.
pub fn diagonalize(h: &SectorHamiltonian) -> Result<SectorPropagator> {
    let (eigenvalues, eigenvectors) =
        crate::linalg::symmetric_eigen(h.matrix()).ok_or_else(|| Error::EigenFailure {
            sector: h.sector(),
            detail: "symmetric eigensolver did not converge".into(),
        })?;
    let prop = SectorPropagator {
        sector: h.sector(),
        down_dim: h.down_dim(),
        eigenvalues,
        eigenvectors,
    };
    prop.verify(h)?;
    Ok(prop)
}

impl SectorPropagator {
    fn verify(&self, h: &SectorHamiltonian) -> Result<()> {
        let dim = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let scale = h.matrix().amax().max(1e-300);
        let fail = |what: &str, err: f64, tol: f64| Error::EigenFailure {
            sector: self.sector,
            detail: format!("{what} error {err:.3e} exceeds {tol:.3e}"),
        };
        if dim <= FULL_CHECK_DIM {
            let gram = v.transpose() * v;
            let mut ortho_err: f64 = 0.0;
            for i in 0..dim {
                for j in 0..dim {
                    let target = if i == j { 1.0 } else { 0.0 };
                    ortho_err = ortho_err.max((gram[(i, j)] - target).abs());
                }
            }
            if ortho_err > ORTHOGONALITY_TOL {
                return Err(fail("orthogonality", ortho_err, ORTHOGONALITY_TOL));
            }
            let mut scaled = v.clone();
            for (j, &lambda) in self.eigenvalues.iter().enumerate() {
                scaled.column_mut(j).scale_mut(lambda);
            }
            let recon = &scaled * v.transpose();
            let recon_err = (recon - h.matrix()).amax();
            if recon_err > RECONSTRUCTION_TOL * scale {
                return Err(fail("reconstruction", recon_err, RECONSTRUCTION_TOL * scale));
            }
        } else {
            // sampled residual check: ||H v_j - lambda_j v_j|| on a spread of columns
            let step = (dim / 64).max(1);
            for j in (0..dim).step_by(step) {
                let col = v.column(j);
                let residual = h.matrix() * col - self.eigenvalues[j] * col;
                let err = residual.amax();
                if err > RECONSTRUCTION_TOL * scale {
                    return Err(fail("residual", err, RECONSTRUCTION_TOL * scale));
                }
            }
        }
        Ok(())
    }

    pub fn sector(&self) -> SectorId {
        self.sector
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn down_dim(&self) -> usize {
        self.down_dim
    }

    pub fn up_dim(&self) -> usize {
        self.dim() - self.down_dim
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// State at a single time.
    pub fn evolve_at(&self, initial: &DVector<Complex64>, t: f64) -> Result<DVector<Complex64>> {
        if initial.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: initial.len(),
            });
        }
        let modes = transpose_mul_complex(&self.eigenvectors, initial.as_slice());
        Ok(DVector::from_vec(self.apply_phases(&modes, t)))
    }

    fn apply_phases(&self, modes: &[Complex64], t: f64) -> Vec<Complex64> {
        let phased: Vec<Complex64> = modes
            .iter()
            .zip(&self.eigenvalues)
            .map(|(&c, &lambda)| c * Complex64::from_polar(1.0, -lambda * t))
            .collect();
        mul_complex(&self.eigenvectors, &phased)
    }

    /// Propagates a concatenated [down | up] amplitude column over a grid.
    pub fn propagate(
        &self,
        initial: &DVector<Complex64>,
        times: &[f64],
    ) -> Result<AmplitudeTrajectory> {
        if initial.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: initial.len(),
            });
        }
        let norm0 = initial.iter().map(|a| a.norm_sqr()).sum::<f64>();
        if norm0 == 0.0 {
            return Err(Error::ZeroState);
        }
        let modes = transpose_mul_complex(&self.eigenvectors, initial.as_slice());
        let nd = self.down_dim;
        let nu = self.up_dim();
        let mut down_amps = DMatrix::zeros(times.len(), nd);
        let mut up_amps = DMatrix::zeros(times.len(), nu);
        let budget = NORM_DRIFT_BUDGET * norm0.max(1.0);
        for (row, &t) in times.iter().enumerate() {
            let state = self.apply_phases(&modes, t);
            let norm: f64 = state.iter().map(|a| a.norm_sqr()).sum();
            let drift = (norm - norm0).abs();
            if drift > budget {
                return Err(Error::NormDrift { drift, budget });
            }
            for i in 0..nd {
                down_amps[(row, i)] = state[i];
            }
            for j in 0..nu {
                up_amps[(row, j)] = state[nd + j];
            }
        }
        AmplitudeTrajectory::new(times.to_vec(), down_amps, up_amps)
    }

    /// Propagates separate branch columns.
    pub fn propagate_parts(
        &self,
        down0: &[Complex64],
        up0: &[Complex64],
        times: &[f64],
    ) -> Result<AmplitudeTrajectory> {
        if down0.len() != self.down_dim {
            return Err(Error::DimensionMismatch {
                expected: self.down_dim,
                got: down0.len(),
            });
        }
        if up0.len() != self.up_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.up_dim(),
                got: up0.len(),
            });
        }
        let mut initial = Vec::with_capacity(self.dim());
        initial.extend_from_slice(down0);
        initial.extend_from_slice(up0);
        self.propagate(&DVector::from_vec(initial), times)
    }
}

/// `V^T x` for real V and complex x.
fn transpose_mul_complex(v: &DMatrix<f64>, x: &[Complex64]) -> Vec<Complex64> {
    (0..v.ncols())
        .map(|j| {
            v.column(j)
                .iter()
                .zip(x)
                .map(|(&vij, &xi)| vij * xi)
                .sum()
        })
        .collect()
}

/// `V y` for real V and complex y.
fn mul_complex(v: &DMatrix<f64>, y: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); v.nrows()];
    for (j, &yj) in y.iter().enumerate() {
        if yj == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (i, &vij) in v.column(j).iter().enumerate() {
            out[i] += vij * yj;
        }
    }
    out
}

impl AmplitudeTrajectory {
    pub fn new(
        times: Vec<f64>,
        down_amps: DMatrix<Complex64>,
        up_amps: DMatrix<Complex64>,
    ) -> Result<Self> {
        if down_amps.nrows() != times.len() || up_amps.nrows() != times.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                got: down_amps.nrows().max(up_amps.nrows()),
            });
        }
        Ok(Self {
            times,
            down_amps,
            up_amps,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn down_dim(&self) -> usize {
        self.down_amps.ncols()
    }

    pub fn up_dim(&self) -> usize {
        self.up_amps.ncols()
    }

    /// Electron-down amplitudes at time index `row` (one per config).
    pub fn down_at(&self, row: usize) -> Vec<Complex64> {
        self.down_amps.row(row).iter().copied().collect()
    }

    pub fn up_at(&self, row: usize) -> Vec<Complex64> {
        self.up_amps.row(row).iter().copied().collect()
    }

    pub fn down_amp(&self, row: usize, i: usize) -> Complex64 {
        self.down_amps[(row, i)]
    }

    pub fn up_amp(&self, row: usize, j: usize) -> Complex64 {
        self.up_amps[(row, j)]
    }

    pub fn down_norm_sq_at(&self, row: usize) -> f64 {
        self.down_amps.row(row).iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn up_norm_sq_at(&self, row: usize) -> f64 {
        self.up_amps.row(row).iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm_sq_at(&self, row: usize) -> f64 {
        self.down_norm_sq_at(row) + self.up_norm_sq_at(row)
    }

    /// Largest deviation of the per-row norm from the first row.
    pub fn max_norm_drift(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let n0 = self.norm_sq_at(0);
        (0..self.len())
            .map(|row| (self.norm_sq_at(row) - n0).abs())
            .fold(0.0, f64::max)
    }
}

/// Builds and propagates one sector end to end: basis, blocks, Hamiltonian,
/// eigendecomposition, then the trajectory of the given initial amplitudes.
pub fn evolve_sector(
    cs: &CouplingSet,
    sector: SectorId,
    down0: &[Complex64],
    up0: &[Complex64],
    times: &[f64],
) -> Result<AmplitudeTrajectory> {
    let basis = SectorBasis::for_sector(cs.n_nuclei(), sector)?;
    let blocks = build_blocks(cs, &basis)?;
    let h = blocks.assemble_hamiltonian()?;
    let prop = diagonalize(&h)?;
    prop.propagate_parts(down0, up0, times)
}
