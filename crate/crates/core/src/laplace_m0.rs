//! Closed-form solution of the lowest paired sector (m = 0) by Laplace
//! transform and residue inversion, plus the pole approximations.
//!
//! For m = 0 the down branch is one-dimensional, so the Laplace-domain
//! amplitudes are explicit rational functions of `z = iw`:
//!
//! ```text
//! P(z)   = (z + B0) prod_j (z - Bj) - (1/16) sum_j Aj^2 prod_{k != j} (z - Bk)
//! Ydown  = i n(z) / P(z)
//! n(z)   = Y(0) prod_j (z - Bj) + (1/4) sum_j Aj Xj(0) prod_{k != j} (z - Bk)
//! Xj     = [i Xj(0) + (Aj/4) Ydown(z)] / (z - Bj)
//! ```
//!
//! with `B0 = epsilon_e + A` and `Bj = B0 - Aj` (nuclear Zeeman shifts fold
//! into both). The N+1 real roots of `P` are exactly the sector
//! eigenfrequencies; inverting pole by pole gives sums of `exp(-i t root)`
//! terms whose weights obey the large-frequency sum rules, so the initial
//! state is recovered identically at `t = 0`.
//!
//! The residue formulas require simple poles. On detected degeneracy (or a
//! root colliding with a decoupled level `Bj`) this module refuses with an
//! explicit error and the caller falls back to the spectral propagator.
//!
//! Two pole approximations are provided for any paired sector: dropping the
//! branch coupling entirely (poles at the unperturbed diagonals), or keeping
//! only the diagonal of the self-energy, which turns each down config into an
//! independent scalar root search. The latter is exact whenever the down
//! branch is one-dimensional.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::basis::{enumerate_sector, SectorBasis};
use crate::blocks::{build_blocks, SectorBlocks};
use crate::error::{Error, Result};
use crate::evolver::AmplitudeTrajectory;
use crate::model::CouplingSet;

/// Pole gaps below this fraction of the spectral range count as degenerate.
pub const DEGENERACY_FRACTION: f64 = 1e-8;

/// A monic polynomial of the arrowhead form
/// `(z + head) prod_i (z - tail_i) - (1/16) sum_i amp_i^2 prod_{k != i} (z - tail_k)`.
///
/// Both the m = 0 characteristic polynomial and the diagonal self-energy
/// equations of any sector have this shape.
#[derive(Debug, Clone)]
struct ArrowheadPoly {
    head: f64,
    tails: Vec<f64>,
    amps: Vec<f64>,
}

impl ArrowheadPoly {
    /// Monic coefficients, ascending degree in z.
    fn coefficients(&self) -> Vec<f64> {
        let mut poly = vec![self.head, 1.0];
        for &t in &self.tails {
            poly = mul_linear(&poly, t);
        }
        for (i, &a) in self.amps.iter().enumerate() {
            let mut tail = vec![1.0];
            for (j, &t) in self.tails.iter().enumerate() {
                if j != i {
                    tail = mul_linear(&tail, t);
                }
            }
            for (c, t) in poly.iter_mut().zip(&tail) {
                *c -= a * a / 16.0 * t;
            }
        }
        poly
    }

    /// Value at a complex point, from the product form.
    fn eval_complex(&self, z: Complex64) -> Complex64 {
        let mut v = Complex64::new(1.0, 0.0);
        for &t in &self.tails {
            v *= z - t;
        }
        let mut p = (z + self.head) * v;
        for (i, &a) in self.amps.iter().enumerate() {
            let mut w = Complex64::new(1.0, 0.0);
            for (j, &t) in self.tails.iter().enumerate() {
                if j != i {
                    w *= z - t;
                }
            }
            p -= a * a / 16.0 * w;
        }
        p
    }

    /// All real roots, ascending, solved from the secular form
    /// `f(z) = z + head - sum_g W_g / (z - t_g)` with `W_g = amp_g^2 / 16`.
    ///
    /// Zero-amplitude tails factor out exactly. Repeated tails contribute
    /// their value as an exact root (multiplicity minus one) and pool their
    /// weights into a single secular pole. What remains is a strictly
    /// increasing function on each pole gap, so every root is bracketed by
    /// construction and a safeguarded Newton iteration is unconditionally
    /// accurate; nothing here suffers the coefficient cancellation a
    /// companion-matrix route hits on clustered spectra.
    fn roots(&self) -> Result<Vec<f64>> {
        let mut exact: Vec<f64> = Vec::new();
        let mut active: Vec<(f64, f64)> = Vec::new(); // (tail, summed weight)
        for (&t, &a) in self.tails.iter().zip(&self.amps) {
            if a == 0.0 {
                exact.push(t);
            } else {
                active.push((t, a * a / 16.0));
            }
        }
        active.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut poles: Vec<(f64, f64)> = Vec::new();
        for (t, w) in active {
            match poles.last_mut() {
                Some(last) if last.0 == t => {
                    last.1 += w;
                    exact.push(t);
                }
                _ => poles.push((t, w)),
            }
        }

        let mut roots = exact;
        if poles.is_empty() {
            roots.push(-self.head);
        } else {
            for gap in 0..=poles.len() {
                roots.push(self.secular_root(&poles, gap)?);
            }
        }
        roots.sort_by(f64::total_cmp);
        Ok(roots)
    }

    /// The single root of the secular function in gap `gap` (0 = below the
    /// lowest pole, `poles.len()` = above the highest).
    fn secular_root(&self, poles: &[(f64, f64)], gap: usize) -> Result<f64> {
        let f = |z: f64| -> f64 {
            z + self.head - poles.iter().map(|&(t, w)| w / (z - t)).sum::<f64>()
        };
        let df = |z: f64| -> f64 {
            1.0 + poles
                .iter()
                .map(|&(t, w)| w / ((z - t) * (z - t)))
                .sum::<f64>()
        };
        // bracket (lo, hi) with f(lo) < 0 < f(hi); f is increasing
        let (mut lo, mut hi) = if gap == 0 {
            let hi = poles[0].0;
            let mut step = 1.0 + self.head.abs() + hi.abs();
            let mut lo = hi - step;
            while f(lo) >= 0.0 {
                step *= 2.0;
                lo = hi - step;
                if !lo.is_finite() {
                    return Err(Error::Invalid("secular bracket diverged".into()));
                }
            }
            (lo, hi)
        } else if gap == poles.len() {
            let lo = poles[poles.len() - 1].0;
            let mut step = 1.0 + self.head.abs() + lo.abs();
            let mut hi = lo + step;
            while f(hi) <= 0.0 {
                step *= 2.0;
                hi = lo + step;
                if !hi.is_finite() {
                    return Err(Error::Invalid("secular bracket diverged".into()));
                }
            }
            (lo, hi)
        } else {
            (poles[gap - 1].0, poles[gap].0)
        };

        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let fx = f(x);
            if fx == 0.0 {
                return Ok(x);
            }
            if fx.is_finite() {
                if fx < 0.0 {
                    lo = x;
                } else {
                    hi = x;
                }
            }
            let newton = x - fx / df(x);
            let next = if fx.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - x).abs() <= 0.5 * f64::EPSILON * x.abs().max(1.0) {
                return Ok(next);
            }
            x = next;
            if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()).max(1.0) {
                return Ok(0.5 * (lo + hi));
            }
        }
        Ok(x)
    }
}

fn mul_linear(poly: &[f64], root: f64) -> Vec<f64> {
    let mut out = vec![0.0; poly.len() + 1];
    for (k, &c) in poly.iter().enumerate() {
        out[k + 1] += c;
        out[k] -= c * root;
    }
    out
}

/// The degree-(N+1) characteristic polynomial of the m = 0 sector.
#[derive(Debug, Clone)]
pub struct CharPoly {
    arrow: ArrowheadPoly,
    coefficients: Vec<f64>,
}

/// Assembles the m = 0 characteristic polynomial of a coupling set.
pub fn char_poly_coeffs(cs: &CouplingSet) -> CharPoly {
    let blocks = lowest_sector_blocks(cs);
    let arrow = ArrowheadPoly {
        head: blocks.b_down()[0],
        tails: blocks.b_up().to_vec(),
        amps: cs.couplings().to_vec(),
    };
    let coefficients = arrow.coefficients();
    CharPoly {
        arrow,
        coefficients,
    }
}

fn lowest_sector_blocks(cs: &CouplingSet) -> SectorBlocks {
    let basis = enumerate_sector(cs.n_nuclei(), 0).expect("valid coupling set");
    build_blocks(cs, &basis).expect("basis built from the same coupling set")
}

impl CharPoly {
    /// Monic coefficients in `z = iw`, ascending degree, length N+2.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Product-form evaluation (no coefficient cancellation).
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.arrow.eval_complex(z)
    }

    /// The decoupled up-branch levels `Bj`, the roots of the auxiliary
    /// denominator polynomial.
    pub fn decoupled_levels(&self) -> &[f64] {
        &self.arrow.tails
    }
}

/// All N+1 real poles, ascending.
pub fn find_poles(p: &CharPoly) -> Result<Vec<f64>> {
    p.arrow.roots()
}

/// Residue data of the inverse Laplace transforms for one initial condition.
///
/// Nuclei with exactly zero coupling are split off: their up amplitudes
/// precess freely at the bare level and their levels never enter the pole
/// set (the corresponding factors cancel in the rational form).
#[derive(Debug, Clone)]
pub struct RationalSolution {
    /// Poles of the coupled subsystem, ascending.
    poles: Vec<f64>,
    /// All bare up-branch levels `Bj`.
    levels: Vec<f64>,
    down0: Complex64,
    up0: Vec<Complex64>,
    down_weights: Vec<Complex64>,
    up_free_weights: Vec<Complex64>,
    /// Per nucleus, the weights at each pole; empty for decoupled nuclei.
    up_pole_weights: Vec<Vec<Complex64>>,
}

/// Builds the residue solution for initial amplitudes `(down0, up0)` in the
/// m = 0 sector, solving for the exact poles first.
pub fn residue_solution(
    cs: &CouplingSet,
    down0: Complex64,
    up0: &[Complex64],
) -> Result<RationalSolution> {
    build_solution(cs, down0, up0, None)
}

/// Same as [`residue_solution`] with a caller-supplied pole set of the full
/// problem (used by the diagonal self-energy approximation, which is exact
/// here).
pub fn residue_solution_with_poles(
    cs: &CouplingSet,
    down0: Complex64,
    up0: &[Complex64],
    poles: Vec<f64>,
) -> Result<RationalSolution> {
    build_solution(cs, down0, up0, Some(poles))
}

fn build_solution(
    cs: &CouplingSet,
    down0: Complex64,
    up0: &[Complex64],
    poles_in: Option<Vec<f64>>,
) -> Result<RationalSolution> {
    let n = cs.n_nuclei();
    if up0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: up0.len(),
        });
    }
    let blocks = lowest_sector_blocks(cs);
    let levels = blocks.b_up().to_vec();
    let coupled: Vec<usize> = (0..n).filter(|&j| cs.coupling(j) != 0.0).collect();

    let poles = match poles_in {
        Some(mut all) => {
            if all.len() != n + 1 {
                return Err(Error::DimensionMismatch {
                    expected: n + 1,
                    got: all.len(),
                });
            }
            // strip the exactly-cancelling levels of decoupled nuclei
            for (j, &level) in levels.iter().enumerate() {
                if cs.coupling(j) != 0.0 {
                    continue;
                }
                let nearest = all
                    .iter()
                    .enumerate()
                    .min_by(|a, b| (a.1 - level).abs().total_cmp(&(b.1 - level).abs()))
                    .map(|(idx, _)| idx)
                    .expect("pole list is nonempty");
                all.remove(nearest);
            }
            all
        }
        None => {
            let arrow = ArrowheadPoly {
                head: blocks.b_down()[0],
                tails: coupled.iter().map(|&j| levels[j]).collect(),
                amps: coupled.iter().map(|&j| cs.coupling(j)).collect(),
            };
            arrow.roots()?
        }
    };
    if poles.len() != coupled.len() + 1 {
        return Err(Error::DimensionMismatch {
            expected: coupled.len() + 1,
            got: poles.len(),
        });
    }

    let range = poles[poles.len() - 1] - poles[0];
    let tol = DEGENERACY_FRACTION * range;
    for pair in poles.windows(2) {
        let gap = pair[1] - pair[0];
        if gap <= tol {
            return Err(Error::DegeneratePoles { gap, tol });
        }
    }
    for &j in &coupled {
        for &pole in &poles {
            let gap = (pole - levels[j]).abs();
            if gap <= tol {
                return Err(Error::PoleCollision { pole, gap });
            }
        }
    }

    // numerator over the coupled subsystem:
    // n(z) = down0 prod_j (z - Bj) + (1/4) sum_j Aj up0_j prod_{k != j} (z - Bk)
    let numerator = |z: f64| -> Complex64 {
        let mut full = 1.0;
        for &j in &coupled {
            full *= z - levels[j];
        }
        let mut value = down0 * full;
        for &j in &coupled {
            let mut tail = 1.0;
            for &k in &coupled {
                if k != j {
                    tail *= z - levels[k];
                }
            }
            value += up0[j] * cs.coupling(j) / 4.0 * tail;
        }
        value
    };
    // gap products over the computed pole set keep the residue algebra (and
    // with it the t = 0 sum rules) exact whatever the root error
    let gap_product = |z: f64, skip: Option<usize>| -> f64 {
        poles
            .iter()
            .enumerate()
            .filter(|&(l, _)| Some(l) != skip)
            .map(|(_, &p)| z - p)
            .product()
    };

    let down_weights: Vec<Complex64> = poles
        .iter()
        .enumerate()
        .map(|(l, &pole)| numerator(pole) / gap_product(pole, Some(l)))
        .collect();
    let up_free_weights: Vec<Complex64> = (0..n)
        .map(|j| {
            if cs.coupling(j) == 0.0 {
                up0[j]
            } else {
                up0[j]
                    + cs.coupling(j) / 4.0 * numerator(levels[j]) / gap_product(levels[j], None)
            }
        })
        .collect();
    let up_pole_weights: Vec<Vec<Complex64>> = (0..n)
        .map(|j| {
            if cs.coupling(j) == 0.0 {
                Vec::new()
            } else {
                poles
                    .iter()
                    .enumerate()
                    .map(|(l, &pole)| {
                        cs.coupling(j) / 4.0 * down_weights[l] / (pole - levels[j])
                    })
                    .collect()
            }
        })
        .collect();

    Ok(RationalSolution {
        poles,
        levels,
        down0,
        up0: up0.to_vec(),
        down_weights,
        up_free_weights,
        up_pole_weights,
    })
}

impl RationalSolution {
    /// Poles of the coupled subsystem, ascending.
    pub fn poles(&self) -> &[f64] {
        &self.poles
    }

    /// The bare up-branch levels `Bj`.
    pub fn decoupled_levels(&self) -> &[f64] {
        &self.levels
    }

    /// Per-pole residue weights of the down amplitude; they sum to the
    /// initial down amplitude.
    pub fn down_weights(&self) -> &[Complex64] {
        &self.down_weights
    }

    pub fn initial(&self) -> (Complex64, &[Complex64]) {
        (self.down0, &self.up0)
    }

    /// The down amplitude at time `t`.
    pub fn down_at(&self, t: f64) -> Complex64 {
        self.poles
            .iter()
            .zip(&self.down_weights)
            .map(|(&pole, &w)| w * Complex64::from_polar(1.0, -pole * t))
            .sum()
    }

    /// The up amplitude of nucleus `j` at time `t`.
    pub fn up_at(&self, j: usize, t: f64) -> Complex64 {
        let free = self.up_free_weights[j] * Complex64::from_polar(1.0, -self.levels[j] * t);
        let pole_sum: Complex64 = self
            .poles
            .iter()
            .zip(&self.up_pole_weights[j])
            .map(|(&pole, &w)| w * Complex64::from_polar(1.0, -pole * t))
            .sum();
        free + pole_sum
    }

    /// Full amplitude trajectory on a time grid, in the same layout the
    /// spectral propagator produces.
    pub fn trajectory(&self, times: &[f64]) -> Result<AmplitudeTrajectory> {
        let n = self.levels.len();
        let mut down = DMatrix::zeros(times.len(), 1);
        let mut up = DMatrix::zeros(times.len(), n);
        for (row, &t) in times.iter().enumerate() {
            down[(row, 0)] = self.down_at(t);
            for j in 0..n {
                up[(row, j)] = self.up_at(j, t);
            }
        }
        AmplitudeTrajectory::new(times.to_vec(), down, up)
    }
}

/// Which part of the branch coupling the pole approximation keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoleApproximation {
    /// Drop the coupling blocks entirely; poles sit at the bare diagonals.
    Decoupled,
    /// Keep only the diagonal of the self-energy: one scalar equation per
    /// down config, each contributing its own root set.
    DiagonalSelfEnergy,
}

/// Approximate pole sets of one paired sector.
#[derive(Debug, Clone)]
pub struct ApproxPoles {
    pub variant: PoleApproximation,
    /// One ascending root list per down config. Under [`PoleApproximation::Decoupled`]
    /// each list is the single bare level; under
    /// [`PoleApproximation::DiagonalSelfEnergy`] each list holds the
    /// N - m + 1 roots of that config's scalar equation.
    pub per_down_config: Vec<Vec<f64>>,
    /// Bare up-branch levels; populated only under
    /// [`PoleApproximation::Decoupled`] (the self-energy roots already
    /// contain the up-like poles).
    pub up_levels: Vec<f64>,
}

impl ApproxPoles {
    /// Every approximate pole, ascending (with repeats where configs share
    /// them).
    pub fn flattened(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self
            .per_down_config
            .iter()
            .flatten()
            .copied()
            .chain(self.up_levels.iter().copied())
            .collect();
        all.sort_by(f64::total_cmp);
        all
    }
}

/// Computes approximate poles of paired sector `m`.
pub fn approx_poles(
    cs: &CouplingSet,
    m: usize,
    variant: PoleApproximation,
) -> Result<ApproxPoles> {
    let basis = enumerate_sector(cs.n_nuclei(), m)?;
    let blocks = build_blocks(cs, &basis)?;
    match variant {
        PoleApproximation::Decoupled => Ok(ApproxPoles {
            variant,
            per_down_config: blocks.b_down().iter().map(|&b| vec![-b]).collect(),
            up_levels: blocks.b_up().to_vec(),
        }),
        PoleApproximation::DiagonalSelfEnergy => {
            let per_down_config = self_energy_roots(cs, &basis, &blocks)?;
            Ok(ApproxPoles {
                variant,
                per_down_config,
                up_levels: Vec::new(),
            })
        }
    }
}

fn self_energy_roots(
    cs: &CouplingSet,
    basis: &SectorBasis,
    blocks: &SectorBlocks,
) -> Result<Vec<Vec<f64>>> {
    let n = cs.n_nuclei();
    basis
        .down_configs()
        .iter()
        .zip(blocks.b_down())
        .zip(blocks.coupling_rows())
        .map(|((&down, &b_i), row)| {
            let mut tails = Vec::with_capacity(row.len());
            let mut amps = Vec::with_capacity(row.len());
            for &(col, _) in row {
                tails.push(blocks.b_up()[col]);
            }
            for l in 0..n {
                if down & (1 << l) == 0 {
                    amps.push(cs.coupling(l));
                }
            }
            debug_assert_eq!(tails.len(), amps.len());
            ArrowheadPoly {
                head: b_i,
                tails,
                amps,
            }
            .roots()
        })
        .collect()
}

/// Largest distance from any entry of `approx` to its nearest entry in
/// `exact`.
pub fn max_nearest_distance(approx: &[f64], exact: &[f64]) -> f64 {
    approx
        .iter()
        .map(|&a| {
            exact
                .iter()
                .map(|&e| (a - e).abs())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}
