//! Enumeration and indexing of the conserved total-spin sectors.
//!
//! The total z-spin `M_z = s_z + sum_k I_kz` (Pauli units) commutes with the
//! Hamiltonian, so the 2^(N+1)-dimensional problem splits into sectors. A
//! paired sector `m` holds the C(N,m) electron-down configurations with `m`
//! nuclear downs together with the C(N,m+1) electron-up configurations with
//! `m+1` nuclear downs, all at `M_z = N - 2m - 1`. Two extremal one-state
//! sectors (all spins aligned) sit at `M_z = ±(N+1)`.
//!
//! Configurations are down-set bitmasks ordered by increasing integer value,
//! which for fixed popcount is colexicographic order; rank/unrank use the
//! combinadic formulas rather than linear scans.

use crate::error::{Error, Result};
use crate::model::MAX_NUCLEI;

/// Binomial coefficient C(n, k); zero outside the triangle.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut result: u128 = 1;
    for i in 1..=k {
        result = result * (n - k + i) as u128 / i as u128;
    }
    result as u64
}

/// One block of the conserved-M_z decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SectorId {
    /// The single aligned state with electron and all nuclei up, M_z = N+1.
    Top,
    /// Paired sector m, 0 <= m <= N-1, M_z = N - 2m - 1.
    Paired(usize),
    /// The single aligned state with electron and all nuclei down, M_z = -(N+1).
    Bottom,
}

impl SectorId {
    pub fn m_z(&self, n: usize) -> i64 {
        match self {
            SectorId::Top => n as i64 + 1,
            SectorId::Paired(m) => n as i64 - 2 * *m as i64 - 1,
            SectorId::Bottom => -(n as i64 + 1),
        }
    }

    /// All sectors for an N-nucleus register, top to bottom in M_z.
    pub fn all(n: usize) -> impl Iterator<Item = SectorId> {
        std::iter::once(SectorId::Top)
            .chain((0..n).map(SectorId::Paired))
            .chain(std::iter::once(SectorId::Bottom))
    }
}

/// Branch of a paired sector, labelled by the electron direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// Electron down; nuclear down-sets have popcount m.
    Down,
    /// Electron up; nuclear down-sets have popcount m+1.
    Up,
}

/// The ordered configuration lists of one sector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorBasis {
    n: usize,
    sector: SectorId,
    down_configs: Vec<u64>,
    up_configs: Vec<u64>,
}

/// Branch dimensions (C(N,m), C(N,m+1)) of paired sector m.
pub fn sector_dims(n: usize, m: usize) -> Result<(usize, usize)> {
    check_paired(n, m as i64)?;
    Ok((binomial(n, m) as usize, binomial(n, m + 1) as usize))
}

fn check_paired(n: usize, m: i64) -> Result<()> {
    if n == 0 || n > MAX_NUCLEI {
        return Err(Error::TooManyNuclei {
            n,
            max: MAX_NUCLEI,
        });
    }
    if m < 0 || m >= n as i64 {
        return Err(Error::SectorOutOfRange {
            m,
            n,
            max: n as i64 - 1,
        });
    }
    Ok(())
}

/// All masks of the given popcount below 2^n, in increasing value.
pub fn masks_of_popcount(n: usize, popcount: usize) -> Vec<u64> {
    let count = binomial(n, popcount) as usize;
    let mut out = Vec::with_capacity(count);
    if popcount == 0 {
        out.push(0);
        return out;
    }
    if popcount > n {
        return out;
    }
    let limit = 1u64 << n;
    let mut mask = (1u64 << popcount) - 1;
    while mask < limit {
        out.push(mask);
        // Gosper's hack: next larger integer with the same popcount.
        let c = mask & mask.wrapping_neg();
        let r = mask + c;
        if r >= limit || c == 0 {
            break;
        }
        mask = (((r ^ mask) >> 2) / c) | r;
    }
    debug_assert_eq!(out.len(), count);
    out
}

/// Colexicographic rank of a fixed-popcount mask among equals.
pub fn colex_rank(mask: u64) -> usize {
    let mut rank = 0u64;
    let mut bits = mask;
    let mut i = 1usize;
    while bits != 0 {
        let p = bits.trailing_zeros() as usize;
        rank += binomial(p, i);
        bits &= bits - 1;
        i += 1;
    }
    rank as usize
}

/// Inverse of [`colex_rank`] for the given popcount.
pub fn colex_unrank(popcount: usize, rank: usize) -> u64 {
    let mut mask = 0u64;
    let mut r = rank as u64;
    for i in (1..=popcount).rev() {
        // largest p with C(p, i) <= r
        let mut p = i - 1;
        while binomial(p + 1, i) <= r {
            p += 1;
        }
        mask |= 1u64 << p;
        r -= binomial(p, i);
    }
    mask
}

/// Enumerates paired sector m of an N-nucleus register.
pub fn enumerate_sector(n: usize, m: usize) -> Result<SectorBasis> {
    check_paired(n, m as i64)?;
    Ok(SectorBasis {
        n,
        sector: SectorId::Paired(m),
        down_configs: masks_of_popcount(n, m),
        up_configs: masks_of_popcount(n, m + 1),
    })
}

impl SectorBasis {
    /// Basis of any sector, extremal ones included as one-state sectors: the
    /// top state is an empty down-branch with a single up-branch config, the
    /// bottom state the reverse.
    pub fn for_sector(n: usize, sector: SectorId) -> Result<Self> {
        match sector {
            SectorId::Paired(m) => enumerate_sector(n, m),
            SectorId::Top => Ok(SectorBasis {
                n,
                sector,
                down_configs: Vec::new(),
                up_configs: vec![0],
            }),
            SectorId::Bottom => Ok(SectorBasis {
                n,
                sector,
                down_configs: vec![(1u64 << n) - 1],
                up_configs: Vec::new(),
            }),
        }
    }

    pub fn n_nuclei(&self) -> usize {
        self.n
    }

    pub fn sector(&self) -> SectorId {
        self.sector
    }

    pub fn configs(&self, branch: Branch) -> &[u64] {
        match branch {
            Branch::Down => &self.down_configs,
            Branch::Up => &self.up_configs,
        }
    }

    pub fn down_configs(&self) -> &[u64] {
        &self.down_configs
    }

    pub fn up_configs(&self) -> &[u64] {
        &self.up_configs
    }

    pub fn down_dim(&self) -> usize {
        self.down_configs.len()
    }

    pub fn up_dim(&self) -> usize {
        self.up_configs.len()
    }

    /// Total sector dimension.
    pub fn dim(&self) -> usize {
        self.down_dim() + self.up_dim()
    }

    /// Combinadic index of `config` within the named branch.
    pub fn rank(&self, branch: Branch, config: u64) -> Result<usize> {
        let list = self.configs(branch);
        let expected_popcount = match (self.sector, branch) {
            (SectorId::Paired(m), Branch::Down) => m,
            (SectorId::Paired(m), Branch::Up) => m + 1,
            (SectorId::Top, Branch::Up) => 0,
            (SectorId::Bottom, Branch::Down) => self.n,
            _ => return Err(Error::ConfigNotInBranch { mask: config }),
        };
        if config & !((1u64 << self.n) - 1) != 0
            || config.count_ones() as usize != expected_popcount
        {
            return Err(Error::ConfigNotInBranch { mask: config });
        }
        let rank = colex_rank(config);
        debug_assert_eq!(list[rank], config);
        Ok(rank)
    }

    /// Config at the given branch index.
    pub fn unrank(&self, branch: Branch, index: usize) -> u64 {
        self.configs(branch)[index]
    }
}

/// Sums the state-count table (extremal states plus every paired sector) and
/// asserts it reproduces the full dimension 2^(N+1).
pub fn total_state_count(n: usize) -> u64 {
    let mut total = 2u64; // the two aligned extremal states
    for m in 0..n {
        total += binomial(n, m) + binomial(n, m + 1);
    }
    assert_eq!(total, 1u64 << (n + 1));
    total
}
