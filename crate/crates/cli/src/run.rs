//! Trajectory production: solver dispatch across the populated sectors and
//! CSV emission.

use centralspin::basis::{SectorBasis, SectorId};
use centralspin::blocks::build_blocks;
use centralspin::evolver::{diagonalize, AmplitudeTrajectory};
use centralspin::laplace_m0::{
    approx_poles, residue_solution, residue_solution_with_poles, PoleApproximation,
};
use centralspin::model::CouplingSet;
use centralspin::observables::{SectorState, SpinTrajectory, TrajectoryBundle};
use centralspin::oracle::{embed_state_spec, evolve_full, spin_components};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::{ConfigError, RunConfig, SolverKind};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] centralspin::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug)]
pub struct RunOutcome {
    pub trajectory: SpinTrajectory,
    pub sectors: Vec<SectorId>,
    /// Degeneracy fallbacks taken during the run, for operator visibility.
    pub notes: Vec<String>,
}

/// Runs the configured initial state under the chosen solver.
pub fn run_trajectory(
    cfg: &RunConfig,
    solver: SolverKind,
    workers: Option<usize>,
) -> Result<RunOutcome, CliError> {
    let spec = cfg.initial.normalize()?;
    let cs = &cfg.coupling_set;
    let times = &cfg.times;

    let populated: Vec<(SectorId, &SectorState)> = spec
        .sectors()
        .iter()
        .filter(|(_, state)| state.weight.norm() > 0.0)
        .map(|(&id, state)| (id, state))
        .collect();
    let sectors: Vec<SectorId> = populated.iter().map(|(id, _)| *id).collect();

    if solver == SolverKind::Oracle {
        let initial = embed_state_spec(&spec)?;
        let snapshots = evolve_full(cs, &initial, times)?;
        let mut trajectory = SpinTrajectory {
            times: times.clone(),
            s_x: Vec::with_capacity(times.len()),
            s_y: Vec::with_capacity(times.len()),
            s_z: Vec::with_capacity(times.len()),
            norm: Vec::with_capacity(times.len()),
        };
        for snapshot in &snapshots {
            let [sx, sy, sz] = spin_components(snapshot);
            trajectory.s_x.push(sx);
            trajectory.s_y.push(sy);
            trajectory.s_z.push(sz);
            trajectory.norm.push(snapshot.norm_sq());
        }
        return Ok(RunOutcome {
            trajectory,
            sectors,
            notes: Vec::new(),
        });
    }

    if matches!(solver, SolverKind::LaplaceM0 | SolverKind::PoleApproxPa1) {
        for (id, _) in &populated {
            if matches!(id, SectorId::Paired(m) if *m >= 1) {
                return Err(CliError::Usage(format!(
                    "solver {} only treats the lowest paired sector; the initial state \
                     populates {:?} (use --solver sector-eigen)",
                    solver.name(),
                    id
                )));
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot build worker pool: {e}")))?;
    let results: Vec<(SectorId, Complex64, AmplitudeTrajectory, Option<String>)> =
        pool.install(|| {
            populated
                .par_iter()
                .map(|&(id, state)| {
                    let (traj, note) = solve_sector(cs, id, state, times, solver)?;
                    Ok((id, state.weight, traj, note))
                })
                .collect::<Result<Vec<_>, CliError>>()
        })?;

    let mut bundle = TrajectoryBundle::new(cs.n_nuclei(), times.clone());
    let mut notes = Vec::new();
    for (id, weight, traj, note) in results {
        bundle.insert_track(id, weight, traj)?;
        notes.extend(note);
    }
    Ok(RunOutcome {
        trajectory: bundle.assemble(),
        sectors,
        notes,
    })
}

fn solve_sector(
    cs: &CouplingSet,
    id: SectorId,
    state: &SectorState,
    times: &[f64],
    solver: SolverKind,
) -> Result<(AmplitudeTrajectory, Option<String>), CliError> {
    let spectral = |blocks: &centralspin::blocks::SectorBlocks| -> Result<AmplitudeTrajectory, CliError> {
        let prop = diagonalize(&blocks.assemble_hamiltonian()?)?;
        Ok(prop.propagate_parts(state.down.as_slice(), state.up.as_slice(), times)?)
    };
    let basis = SectorBasis::for_sector(cs.n_nuclei(), id)?;
    let blocks = build_blocks(cs, &basis)?;

    match solver {
        SolverKind::SectorEigen | SolverKind::Oracle => Ok((spectral(&blocks)?, None)),
        SolverKind::PoleApproxPa0 => Ok((spectral(&blocks.decoupled())?, None)),
        SolverKind::LaplaceM0 | SolverKind::PoleApproxPa1 => {
            if id != SectorId::Paired(0) {
                // extremal one-state sectors carry a bare phase; the spectral
                // route is already closed-form there
                return Ok((spectral(&blocks)?, None));
            }
            let down0 = state.down[0];
            let solution = if solver == SolverKind::LaplaceM0 {
                residue_solution(cs, down0, state.up.as_slice())
            } else {
                let pa1 = approx_poles(cs, 0, PoleApproximation::DiagonalSelfEnergy)?;
                residue_solution_with_poles(cs, down0, state.up.as_slice(), pa1.flattened())
            };
            match solution {
                Ok(sol) => Ok((sol.trajectory(times)?, None)),
                Err(
                    err @ (centralspin::Error::DegeneratePoles { .. }
                    | centralspin::Error::PoleCollision { .. }),
                ) => {
                    let note = format!(
                        "{}: {err}; fell back to the spectral propagator",
                        solver.name()
                    );
                    Ok((spectral(&blocks)?, Some(note)))
                }
                Err(err) => Err(err.into()),
            }
        }
    }
}

/// The trajectory as CSV text: header plus one full-precision row per time.
pub fn csv_string(trajectory: &SpinTrajectory) -> String {
    let mut out = String::with_capacity(trajectory.len() * 100 + 32);
    out.push_str("t,s_x,s_y,s_z,norm\n");
    for row in 0..trajectory.len() {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            trajectory.times[row],
            trajectory.s_x[row],
            trajectory.s_y[row],
            trajectory.s_z[row],
            trajectory.norm[row],
        ));
    }
    out
}

pub fn write_text(path: &str, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_string(),
        source,
    })
}
