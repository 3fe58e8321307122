//! Global state assembly and electron observables.
//!
//! A state is a weighted superposition of sector states; the weight times
//! the in-sector amplitude is the only physically meaningful product, and
//! normalization requires the weighted amplitude norms to sum to one. The
//! longitudinal spin component collects each sector separately, while the
//! transverse component pairs the down branch of each sector with the up
//! branch of the adjacent sector carrying the identical nuclear
//! configurations (the only pairing with nonzero basis overlap). The two
//! aligned extremal states take part in both sums as one-state sectors.

use std::collections::BTreeMap;

use nalgebra::{DVector, Matrix2};
use num_complex::Complex64;

use crate::basis::{SectorBasis, SectorId};
use crate::error::{Error, Result};
use crate::evolver::{evolve_sector, AmplitudeTrajectory};
use crate::model::CouplingSet;

/// Components below this modulus are dropped when decomposing product states.
const WEIGHT_CUTOFF: f64 = 1e-15;

/// Norm and Bloch-ball tolerance for emitted trajectories.
pub const TRAJECTORY_TOL: f64 = 1e-10;

/// Weight and initial amplitudes of one populated sector.
#[derive(Debug, Clone)]
pub struct SectorState {
    pub weight: Complex64,
    /// Electron-down amplitudes, one per down config (empty for the top
    /// sector).
    pub down: DVector<Complex64>,
    /// Electron-up amplitudes, one per up config (empty for the bottom
    /// sector).
    pub up: DVector<Complex64>,
}

/// A global state at t = 0: sector weights plus per-sector amplitude columns.
#[derive(Debug, Clone)]
pub struct StateSpec {
    n: usize,
    sectors: BTreeMap<SectorId, SectorState>,
}

impl StateSpec {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            sectors: BTreeMap::new(),
        }
    }

    /// Decomposes the product state `|electron(theta, phi)> ⊗ |mask>` into
    /// its at most two sectors: the up component lands in the up branch of
    /// the sector above, the down component in the down branch of the sector
    /// holding `popcount(mask)` nuclear downs.
    pub fn product(n: usize, theta: f64, phi: f64, nuclear_mask: u64) -> Result<Self> {
        if n == 0 || nuclear_mask & !((1u64 << n) - 1) != 0 {
            return Err(Error::MaskOutOfRange {
                mask: nuclear_mask,
                n,
            });
        }
        let popcount = nuclear_mask.count_ones() as usize;
        let up_weight = Complex64::from((theta / 2.0).cos());
        let down_weight = Complex64::from_polar((theta / 2.0).sin(), phi);
        let mut spec = Self::empty(n);
        if up_weight.norm() > WEIGHT_CUTOFF {
            let sector = if popcount == 0 {
                SectorId::Top
            } else {
                SectorId::Paired(popcount - 1)
            };
            spec.insert_unit(sector, up_weight, crate::basis::Branch::Up, nuclear_mask)?;
        }
        if down_weight.norm() > WEIGHT_CUTOFF {
            let sector = if popcount == n {
                SectorId::Bottom
            } else {
                SectorId::Paired(popcount)
            };
            spec.insert_unit(sector, down_weight, crate::basis::Branch::Down, nuclear_mask)?;
        }
        Ok(spec)
    }

    /// Electron pointing down, nuclei set by the down mask.
    pub fn electron_down(n: usize, nuclear_mask: u64) -> Result<Self> {
        Self::product(n, std::f64::consts::PI, 0.0, nuclear_mask)
    }

    /// Electron pointing up, nuclei set by the down mask.
    pub fn electron_up(n: usize, nuclear_mask: u64) -> Result<Self> {
        Self::product(n, 0.0, 0.0, nuclear_mask)
    }

    fn insert_unit(
        &mut self,
        sector: SectorId,
        weight: Complex64,
        branch: crate::basis::Branch,
        mask: u64,
    ) -> Result<()> {
        let basis = SectorBasis::for_sector(self.n, sector)?;
        let index = basis.rank(branch, mask)?;
        let mut down = DVector::zeros(basis.down_dim());
        let mut up = DVector::zeros(basis.up_dim());
        match branch {
            crate::basis::Branch::Down => down[index] = Complex64::new(1.0, 0.0),
            crate::basis::Branch::Up => up[index] = Complex64::new(1.0, 0.0),
        }
        self.insert_sector(sector, SectorState { weight, down, up })
    }

    /// Adds a populated sector with explicit amplitude columns.
    pub fn insert_sector(&mut self, sector: SectorId, state: SectorState) -> Result<()> {
        let basis = SectorBasis::for_sector(self.n, sector)?;
        if state.down.len() != basis.down_dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.down_dim(),
                got: state.down.len(),
            });
        }
        if state.up.len() != basis.up_dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.up_dim(),
                got: state.up.len(),
            });
        }
        self.sectors.insert(sector, state);
        Ok(())
    }

    pub fn n_nuclei(&self) -> usize {
        self.n
    }

    pub fn sectors(&self) -> &BTreeMap<SectorId, SectorState> {
        &self.sectors
    }

    /// The weighted global norm: `sum_sectors |weight|^2 (|down|^2 + |up|^2)`.
    pub fn global_norm_sq(&self) -> f64 {
        self.sectors
            .values()
            .map(|s| s.weight.norm_sqr() * (s.down.norm_squared() + s.up.norm_squared()))
            .sum()
    }

    /// Rescales the sector weights so the global norm is one; relative
    /// amplitudes are untouched.
    pub fn normalize(&self) -> Result<Self> {
        let norm_sq = self.global_norm_sq();
        if norm_sq <= 0.0 {
            return Err(Error::ZeroState);
        }
        let scale = Complex64::from(1.0 / norm_sq.sqrt());
        let sectors = self
            .sectors
            .iter()
            .map(|(&id, s)| {
                (
                    id,
                    SectorState {
                        weight: s.weight * scale,
                        down: s.down.clone(),
                        up: s.up.clone(),
                    },
                )
            })
            .collect();
        Ok(Self {
            n: self.n,
            sectors,
        })
    }
}

/// Evolved per-sector amplitudes sharing one time grid.
#[derive(Debug, Clone)]
pub struct SectorTrack {
    pub weight: Complex64,
    pub amplitudes: AmplitudeTrajectory,
}

/// The full evolved state: one track per populated sector.
#[derive(Debug, Clone)]
pub struct TrajectoryBundle {
    n: usize,
    times: Vec<f64>,
    tracks: BTreeMap<SectorId, SectorTrack>,
}

/// Electron spin trajectory plus the conserved norm, one row per time.
#[derive(Debug, Clone)]
pub struct SpinTrajectory {
    pub times: Vec<f64>,
    pub s_x: Vec<f64>,
    pub s_y: Vec<f64>,
    pub s_z: Vec<f64>,
    pub norm: Vec<f64>,
}

/// Evolves every populated sector of `spec` with the spectral propagator.
pub fn evolve_state(
    cs: &CouplingSet,
    spec: &StateSpec,
    times: &[f64],
) -> Result<TrajectoryBundle> {
    if spec.n_nuclei() != cs.n_nuclei() {
        return Err(Error::DimensionMismatch {
            expected: cs.n_nuclei(),
            got: spec.n_nuclei(),
        });
    }
    let mut bundle = TrajectoryBundle::new(cs.n_nuclei(), times.to_vec());
    for (&id, state) in spec.sectors() {
        let traj = evolve_sector(
            cs,
            id,
            state.down.as_slice(),
            state.up.as_slice(),
            times,
        )?;
        bundle.insert_track(id, state.weight, traj)?;
    }
    Ok(bundle)
}

impl TrajectoryBundle {
    pub fn new(n: usize, times: Vec<f64>) -> Self {
        Self {
            n,
            times,
            tracks: BTreeMap::new(),
        }
    }

    pub fn insert_track(
        &mut self,
        sector: SectorId,
        weight: Complex64,
        amplitudes: AmplitudeTrajectory,
    ) -> Result<()> {
        if amplitudes.len() != self.times.len() {
            return Err(Error::DimensionMismatch {
                expected: self.times.len(),
                got: amplitudes.len(),
            });
        }
        self.tracks.insert(sector, SectorTrack { weight, amplitudes });
        Ok(())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn tracks(&self) -> &BTreeMap<SectorId, SectorTrack> {
        &self.tracks
    }

    /// Longitudinal spin at time index `row`: weighted up-branch norm minus
    /// down-branch norm, sector by sector.
    pub fn s_z_at(&self, row: usize) -> f64 {
        self.tracks
            .values()
            .map(|t| {
                t.weight.norm_sqr()
                    * (t.amplitudes.up_norm_sq_at(row) - t.amplitudes.down_norm_sq_at(row))
            })
            .sum()
    }

    /// Transverse spin `(s_x + i s_y) / 2` at time index `row`, from the
    /// adjacent-sector overlap of identical nuclear configurations.
    pub fn s_plus_at(&self, row: usize) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        for (&id, track) in &self.tracks {
            if track.amplitudes.down_dim() == 0 {
                continue;
            }
            let partner_id = match id {
                SectorId::Paired(0) => SectorId::Top,
                SectorId::Paired(m) => SectorId::Paired(m - 1),
                SectorId::Bottom => SectorId::Paired(self.n - 1),
                SectorId::Top => continue,
            };
            let Some(partner) = self.tracks.get(&partner_id) else {
                continue;
            };
            // both branches enumerate the same popcount in the same order
            let overlap: Complex64 = (0..track.amplitudes.down_dim())
                .map(|i| {
                    track.amplitudes.down_amp(row, i)
                        * partner.amplitudes.up_amp(row, i).conj()
                })
                .sum();
            total += track.weight * partner.weight.conj() * overlap;
        }
        total
    }

    /// Weighted global norm at time index `row`.
    pub fn norm_at(&self, row: usize) -> f64 {
        self.tracks
            .values()
            .map(|t| t.weight.norm_sqr() * t.amplitudes.norm_sq_at(row))
            .sum()
    }

    /// Expectation of the conserved total z-spin at time index `row`.
    pub fn m_z_at(&self, row: usize) -> f64 {
        self.tracks
            .iter()
            .map(|(&id, t)| {
                id.m_z(self.n) as f64 * t.weight.norm_sqr() * t.amplitudes.norm_sq_at(row)
            })
            .sum()
    }

    /// Collapses the bundle into the electron spin trajectory.
    pub fn assemble(&self) -> SpinTrajectory {
        let len = self.times.len();
        let mut s_x = Vec::with_capacity(len);
        let mut s_y = Vec::with_capacity(len);
        let mut s_z = Vec::with_capacity(len);
        let mut norm = Vec::with_capacity(len);
        for row in 0..len {
            let plus = self.s_plus_at(row);
            s_x.push(2.0 * plus.re);
            s_y.push(2.0 * plus.im);
            s_z.push(self.s_z_at(row));
            norm.push(self.norm_at(row));
        }
        SpinTrajectory {
            times: self.times.clone(),
            s_x,
            s_y,
            s_z,
            norm,
        }
    }
}

impl SpinTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Checks unit norm and Bloch-ball containment at every time.
    pub fn validate(&self) -> Result<()> {
        for row in 0..self.len() {
            let drift = (self.norm[row] - 1.0).abs();
            if drift > TRAJECTORY_TOL {
                return Err(Error::NormDrift {
                    drift,
                    budget: TRAJECTORY_TOL,
                });
            }
            let len_sq = self.s_x[row] * self.s_x[row]
                + self.s_y[row] * self.s_y[row]
                + self.s_z[row] * self.s_z[row];
            if len_sq > 1.0 + TRAJECTORY_TOL {
                return Err(Error::BlochBallBreach {
                    len: len_sq.sqrt(),
                });
            }
        }
        Ok(())
    }
}

/// The 2x2 electron density matrix `(I + s . sigma) / 2` in the (up, down)
/// basis.
pub fn reduced_density_matrix(s: [f64; 3]) -> Result<Matrix2<Complex64>> {
    let [x, y, z] = s;
    let len = (x * x + y * y + z * z).sqrt();
    if len > 1.0 + 1e-8 {
        return Err(Error::BlochBallBreach { len });
    }
    Ok(Matrix2::new(
        Complex64::new((1.0 + z) / 2.0, 0.0),
        Complex64::new(x / 2.0, -y / 2.0),
        Complex64::new(x / 2.0, y / 2.0),
        Complex64::new((1.0 - z) / 2.0, 0.0),
    ))
}
