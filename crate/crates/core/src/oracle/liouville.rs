//! Density-matrix formulation: block decomposition over the electron and
//! numerical integration of the Liouville-von Neumann equation.
//!
//! The full density matrix splits over the electron into nuclear-space
//! blocks
//!
//! ```text
//! rho = |up><up| ⊗ A  +  |up><down| ⊗ B  +  |down><up| ⊗ B†  +  |down><down| ⊗ C
//! ```
//!
//! with A, C Hermitian and tr A + tr C = 1. Writing the Hamiltonian in the
//! same split, with `g = (1/2) sum_k A_k I_k` acting on the nuclear space
//! (z component diagonal with Pauli eigenvalues, ladder components with unit
//! matrix elements, matching [`crate::model`]) and `Z` the nuclear Zeeman
//! diagonal, the Liouville equation `i d rho / dt = [H, rho]` becomes
//!
//! ```text
//! i dA/dt = [g_z + Z, A]                + (g_- B† - B g_+) / 2
//! i dB/dt = [eps I + g_z, B]_+ + [Z, B] + (g_- C  - A g_-) / 2
//! i dC/dt = -[g_z, C]          + [Z, C] + (g_+ B  - B† g_-) / 2
//! ```
//!
//! where `[.,.]_+` is the anticommutator. These follow directly from the
//! block form of H; a pure-state input reproduces the Schroedinger
//! outer-product derivative entry by entry, which the tests assert.
//!
//! Integration is classic fixed-step fourth order with step control: the
//! grid is refined until the conserved trace drifts below budget and the
//! electron observables agree between successive refinements. This route is
//! a consistency witness, quarantined to small N, not a production path.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::CouplingSet;
use crate::oracle::FullState;

/// Largest N accepted by the dense block integrator.
pub const LIOUVILLE_MAX_NUCLEI: usize = 6;

/// Trace-preservation budget over a full run.
pub const TRACE_DRIFT_BUDGET: f64 = 1e-9;

/// The electron-resolved blocks of the full density matrix.
#[derive(Debug, Clone)]
pub struct BlockDensity {
    n: usize,
    /// up-up block, Hermitian.
    pub a: DMatrix<Complex64>,
    /// up-down block.
    pub b: DMatrix<Complex64>,
    /// down-down block, Hermitian.
    pub c: DMatrix<Complex64>,
}

impl BlockDensity {
    pub fn new(
        n: usize,
        a: DMatrix<Complex64>,
        b: DMatrix<Complex64>,
        c: DMatrix<Complex64>,
    ) -> Result<Self> {
        if n == 0 || n > LIOUVILLE_MAX_NUCLEI {
            return Err(Error::FullSpaceCapExceeded {
                n,
                max: LIOUVILLE_MAX_NUCLEI,
            });
        }
        let dim = 1usize << n;
        for block in [&a, &b, &c] {
            if block.nrows() != dim || block.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: block.nrows().max(block.ncols()),
                });
            }
        }
        Ok(Self { n, a, b, c })
    }

    /// Blocks of the pure-state density matrix of `state`.
    pub fn from_pure(state: &FullState) -> Result<Self> {
        let n = state.n_nuclei();
        let dim = 1usize << n;
        let mut a = DMatrix::zeros(dim, dim);
        let mut b = DMatrix::zeros(dim, dim);
        let mut c = DMatrix::zeros(dim, dim);
        for row in 0..dim {
            let up_row = state.amp(true, row as u64);
            let down_row = state.amp(false, row as u64);
            for col in 0..dim {
                let up_col = state.amp(true, col as u64).conj();
                let down_col = state.amp(false, col as u64).conj();
                a[(row, col)] = up_row * up_col;
                b[(row, col)] = up_row * down_col;
                c[(row, col)] = down_row * down_col;
            }
        }
        Self::new(n, a, b, c)
    }

    /// Maximally mixed nuclear bath with the electron pointing up.
    pub fn mixed_bath_electron_up(n: usize) -> Result<Self> {
        let dim = 1usize << n;
        let a = DMatrix::from_diagonal_element(dim, dim, Complex64::from(1.0 / dim as f64));
        Self::new(n, a, DMatrix::zeros(dim, dim), DMatrix::zeros(dim, dim))
    }

    pub fn n_nuclei(&self) -> usize {
        self.n
    }

    /// `tr A + tr C`, one for any density matrix.
    pub fn trace(&self) -> f64 {
        (self.a.trace() + self.c.trace()).re
    }

    /// `tr A - tr C`.
    pub fn s_z(&self) -> f64 {
        (self.a.trace() - self.c.trace()).re
    }

    /// `(s_x + i s_y) / 2 = conj(tr B)`.
    pub fn s_plus(&self) -> Complex64 {
        self.b.trace().conj()
    }

    /// Bloch components of the electron marginal.
    pub fn spin(&self) -> [f64; 3] {
        let plus = self.s_plus();
        [2.0 * plus.re, 2.0 * plus.im, self.s_z()]
    }

    /// The nuclear marginal `A + C`.
    pub fn nuclear_marginal(&self) -> DMatrix<Complex64> {
        &self.a + &self.c
    }
}

/// The `g` operators and diagonal Zeeman data, with the ladder parts stored
/// as sparse triplets `(to, from, A_k / 2)`.
#[derive(Debug, Clone)]
pub struct GOperators {
    epsilon_e: f64,
    /// diagonal of g_z per nuclear mask
    g_z: Vec<f64>,
    /// diagonal of the nuclear Zeeman term per mask
    zeeman: Vec<f64>,
    /// g_- entries: flips one nucleus from up to down
    lowering: Vec<(usize, usize, f64)>,
}

/// Materializes the nuclear-space operators for a coupling set.
pub fn build_g_operators(cs: &CouplingSet) -> Result<GOperators> {
    let n = cs.n_nuclei();
    if n > LIOUVILLE_MAX_NUCLEI {
        return Err(Error::FullSpaceCapExceeded {
            n,
            max: LIOUVILLE_MAX_NUCLEI,
        });
    }
    let dim = 1usize << n;
    let g_z: Vec<f64> = (0..dim)
        .map(|mask| cs.total_coupling() - cs.down_set_sum(mask as u64))
        .collect();
    let zeeman: Vec<f64> = (0..dim)
        .map(|mask| cs.nuclear_zeeman(mask as u64))
        .collect();
    let mut lowering = Vec::with_capacity(n * dim / 2);
    for from in 0..dim {
        for k in 0..n {
            if from & (1 << k) == 0 {
                lowering.push((from | (1 << k), from, cs.coupling(k) / 2.0));
            }
        }
    }
    Ok(GOperators {
        epsilon_e: cs.epsilon_e(),
        g_z,
        zeeman,
        lowering,
    })
}

impl GOperators {
    /// `g_- M`
    fn lower_left(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(m.nrows(), m.ncols());
        for &(to, from, value) in &self.lowering {
            for col in 0..m.ncols() {
                out[(to, col)] += value * m[(from, col)];
            }
        }
        out
    }

    /// `g_+ M` (g_+ is the transpose of g_-)
    fn raise_left(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(m.nrows(), m.ncols());
        for &(to, from, value) in &self.lowering {
            for col in 0..m.ncols() {
                out[(from, col)] += value * m[(to, col)];
            }
        }
        out
    }

    /// `M g_-`
    fn lower_right(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(m.nrows(), m.ncols());
        for &(to, from, value) in &self.lowering {
            for row in 0..m.nrows() {
                out[(row, from)] += value * m[(row, to)];
            }
        }
        out
    }

    /// `M g_+`
    fn raise_right(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(m.nrows(), m.ncols());
        for &(to, from, value) in &self.lowering {
            for row in 0..m.nrows() {
                out[(row, to)] += value * m[(row, from)];
            }
        }
        out
    }

    /// `[diag, M]` for a real diagonal operator.
    fn diag_commutator(diag: &[f64], m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| (diag[i] - diag[j]) * m[(i, j)])
    }

    /// `[diag, M]_+` for a real diagonal operator.
    fn diag_anticommutator(diag: &[f64], m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| (diag[i] + diag[j]) * m[(i, j)])
    }
}

/// Time derivative of the density blocks under the Liouville equation.
pub fn liouville_rhs(blocks: &BlockDensity, g: &GOperators) -> BlockDensity {
    let minus_i = Complex64::new(0.0, -1.0);
    let half = Complex64::from(0.5);
    let b_dagger = blocks.b.adjoint();

    let mut gz_zee = vec![0.0; g.g_z.len()];
    for (slot, (&gz, &z)) in gz_zee.iter_mut().zip(g.g_z.iter().zip(&g.zeeman)) {
        *slot = gz + z;
    }

    let da = {
        let comm = GOperators::diag_commutator(&gz_zee, &blocks.a);
        let flips = g.lower_left(&b_dagger) - g.raise_right(&blocks.b);
        (comm + flips * half) * minus_i
    };
    let db = {
        let mut acomm_diag = vec![0.0; g.g_z.len()];
        for (slot, &gz) in acomm_diag.iter_mut().zip(&g.g_z) {
            *slot = gz + g.epsilon_e;
        }
        let acomm = GOperators::diag_anticommutator(&acomm_diag, &blocks.b);
        let zee = GOperators::diag_commutator(&g.zeeman, &blocks.b);
        let flips = g.lower_left(&blocks.c) - g.lower_right(&blocks.a);
        (acomm + zee + flips * half) * minus_i
    };
    let dc = {
        let comm = GOperators::diag_commutator(&g.g_z, &blocks.c);
        let zee = GOperators::diag_commutator(&g.zeeman, &blocks.c);
        let flips = g.raise_left(&blocks.b) - g.lower_right(&b_dagger);
        (zee - comm + flips * half) * minus_i
    };
    BlockDensity {
        n: blocks.n,
        a: da,
        b: db,
        c: dc,
    }
}

fn rk4_step(state: &BlockDensity, g: &GOperators, dt: f64) -> BlockDensity {
    let add = |x: &BlockDensity, k: &BlockDensity, factor: f64| BlockDensity {
        n: x.n,
        a: &x.a + &k.a * Complex64::from(factor),
        b: &x.b + &k.b * Complex64::from(factor),
        c: &x.c + &k.c * Complex64::from(factor),
    };
    let k1 = liouville_rhs(state, g);
    let k2 = liouville_rhs(&add(state, &k1, dt / 2.0), g);
    let k3 = liouville_rhs(&add(state, &k2, dt / 2.0), g);
    let k4 = liouville_rhs(&add(state, &k3, dt), g);
    let sixth = dt / 6.0;
    BlockDensity {
        n: state.n,
        a: &state.a
            + (&k1.a + &k2.a * Complex64::from(2.0) + &k3.a * Complex64::from(2.0) + &k4.a)
                * Complex64::from(sixth),
        b: &state.b
            + (&k1.b + &k2.b * Complex64::from(2.0) + &k3.b * Complex64::from(2.0) + &k4.b)
                * Complex64::from(sixth),
        c: &state.c
            + (&k1.c + &k2.c * Complex64::from(2.0) + &k3.c * Complex64::from(2.0) + &k4.c)
                * Complex64::from(sixth),
    }
}

fn integrate_run(
    initial: &BlockDensity,
    g: &GOperators,
    times: &[f64],
    max_step: f64,
) -> (Vec<BlockDensity>, f64) {
    let mut out = Vec::with_capacity(times.len());
    let mut state = initial.clone();
    let mut t = 0.0;
    let trace0 = initial.trace();
    let mut drift: f64 = 0.0;
    for &target in times {
        let span = target - t;
        if span > 0.0 {
            let steps = (span / max_step).ceil().max(1.0) as usize;
            let dt = span / steps as f64;
            for _ in 0..steps {
                state = rk4_step(&state, g, dt);
            }
            t = target;
        }
        drift = drift.max((state.trace() - trace0).abs());
        out.push(state.clone());
    }
    (out, drift)
}

/// Integrates the block Liouville equation over an ascending time grid,
/// refining the step until the trace drift is inside budget and the electron
/// observables agree between refinements.
pub fn liouville_evolve(
    initial: &BlockDensity,
    cs: &CouplingSet,
    times: &[f64],
) -> Result<Vec<BlockDensity>> {
    if cs.n_nuclei() != initial.n {
        return Err(Error::DimensionMismatch {
            expected: initial.n,
            got: cs.n_nuclei(),
        });
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|t| !t.is_finite() || *t < 0.0)
    {
        return Err(Error::Invalid(
            "time grid must be ascending, finite, and nonnegative".into(),
        ));
    }
    let g = build_g_operators(cs)?;
    let energy_scale = 2.0
        * (cs.epsilon_e().abs()
            + cs.couplings().iter().map(|a| a.abs()).sum::<f64>()
            + cs.n_nuclei() as f64 * cs.epsilon_n().abs());
    let mut max_step = if energy_scale > 0.0 {
        0.04 / energy_scale
    } else {
        f64::INFINITY
    };
    let span = times.last().copied().unwrap_or(0.0);
    if !max_step.is_finite() || max_step > span.max(1.0) {
        max_step = span.max(1.0);
    }

    let mut previous: Option<(Vec<BlockDensity>, f64)> = None;
    for attempt in 0..10 {
        let (snapshots, drift) = integrate_run(initial, &g, times, max_step);
        if drift <= TRACE_DRIFT_BUDGET / 2.0 {
            if let Some((prev_snapshots, _)) = &previous {
                let observable_gap = snapshots
                    .iter()
                    .zip(prev_snapshots)
                    .map(|(now, before)| {
                        let [ax, ay, az] = now.spin();
                        let [bx, by, bz] = before.spin();
                        (ax - bx).abs().max((ay - by).abs()).max((az - bz).abs())
                    })
                    .fold(0.0f64, f64::max);
                if observable_gap <= 5e-9 {
                    return Ok(snapshots);
                }
            }
            previous = Some((snapshots, drift));
        } else {
            previous = Some((snapshots, drift));
        }
        max_step /= 2.0;
        let _ = attempt;
    }
    let drift = previous.map(|(_, d)| d).unwrap_or(f64::NAN);
    Err(Error::StepControlFailure { drift, attempts: 10 })
}
