//! Subcommand implementations.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use centralspin::basis::{binomial, enumerate_sector, total_state_count, SectorId};
use centralspin::blocks::build_blocks;
use centralspin::evolver::diagonalize;
use centralspin::laplace_m0::{
    approx_poles, char_poly_coeffs, find_poles, max_nearest_distance, PoleApproximation,
};
use centralspin::observables::StateSpec;
use centralspin::oracle::liouville::{liouville_evolve, BlockDensity};
use centralspin::oracle::{embed_state_spec, evolve_full, spin_components};
use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};

use crate::config::{parse_config, RunConfig, SolverKind};
use crate::run::{csv_string, run_trajectory, write_text, CliError};

/// Sector-versus-oracle agreement threshold for `oracle-check`.
pub const ORACLE_TOL: f64 = 1e-9;
/// Spin and trace thresholds for `liouville-check`.
pub const LIOUVILLE_SPIN_TOL: f64 = 1e-8;
pub const LIOUVILLE_TRACE_TOL: f64 = 1e-9;

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(parse_config(&text)?)
}

pub fn cmd_evolve(
    config_path: &Path,
    solver: Option<SolverKind>,
    out: Option<PathBuf>,
    workers: Option<usize>,
    compare: Option<SolverKind>,
) -> Result<(), CliError> {
    let cfg = load_config(config_path)?;
    let solver = solver.unwrap_or(cfg.solver);
    let outcome = run_trajectory(&cfg, solver, workers)?;
    for note in &outcome.notes {
        eprintln!("note: {note}");
    }
    outcome
        .trajectory
        .validate()
        .map_err(|e| CliError::Invariant(e.to_string()))?;

    let out_path = out
        .map(|p| p.display().to_string())
        .or_else(|| cfg.output_path.clone());
    let csv = csv_string(&outcome.trajectory);

    if let Some(other) = compare {
        let base = out_path.ok_or_else(|| {
            CliError::Usage("--compare needs an output path (--out or [output].path)".into())
        })?;
        let second = run_trajectory(&cfg, other, workers)?;
        second
            .trajectory
            .validate()
            .map_err(|e| CliError::Invariant(e.to_string()))?;
        let second_path = compare_path(&base, other);
        write_text(&base, &csv)?;
        write_text(&second_path, &csv_string(&second.trajectory))?;
        let a = &outcome.trajectory;
        let b = &second.trajectory;
        let max = |f: &dyn Fn(usize) -> f64| (0..a.len()).map(f).fold(0.0f64, f64::max);
        println!(
            "compared {} vs {} over {} points:",
            solver.name(),
            other.name(),
            a.len()
        );
        println!("  max |ds_x| = {:.6e}", max(&|i| (a.s_x[i] - b.s_x[i]).abs()));
        println!("  max |ds_y| = {:.6e}", max(&|i| (a.s_y[i] - b.s_y[i]).abs()));
        println!("  max |ds_z| = {:.6e}", max(&|i| (a.s_z[i] - b.s_z[i]).abs()));
        println!("  wrote {base} and {second_path}");
        return Ok(());
    }

    match out_path {
        Some(path) => {
            write_text(&path, &csv)?;
            eprintln!(
                "wrote {path}: {} rows, solver {}, sectors {:?}",
                outcome.trajectory.len(),
                solver.name(),
                outcome.sectors
            );
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn compare_path(base: &str, solver: SolverKind) -> String {
    match base.rsplit_once('.') {
        Some((stem, ext)) => format!("{stem}.{}.{ext}", solver.name()),
        None => format!("{base}.{}", solver.name()),
    }
}

pub fn cmd_sectors(n: usize) -> Result<(), CliError> {
    if n == 0 || n > centralspin::model::MAX_NUCLEI {
        return Err(CliError::Usage(format!(
            "N must be between 1 and {}",
            centralspin::model::MAX_NUCLEI
        )));
    }
    let total = total_state_count(n);
    println!("sector table for N = {n} (total states {total})");
    println!("{:>6}  {:>8}  {:>12}  {:>10}  {:>8}", "M_z", "sector", "down configs", "up configs", "states");
    println!("{:>6}  {:>8}  {:>12}  {:>10}  {:>8}", n as i64 + 1, "top", "-", 1, 1);
    for m in 0..n {
        let down = binomial(n, m);
        let up = binomial(n, m + 1);
        println!(
            "{:>6}  {:>8}  {:>12}  {:>10}  {:>8}",
            SectorId::Paired(m).m_z(n),
            format!("m={m}"),
            down,
            up,
            down + up
        );
    }
    println!("{:>6}  {:>8}  {:>12}  {:>10}  {:>8}", -(n as i64) - 1, "bottom", 1, "-", 1);
    Ok(())
}

pub fn cmd_poles(
    config_path: &Path,
    sector_m: usize,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let cfg = load_config(config_path)?;
    let cs = &cfg.coupling_set;
    let n = cs.n_nuclei();

    // exact poles: the closed form in the lowest sector, the sector
    // eigenvalues elsewhere
    let exact: Vec<f64> = if sector_m == 0 {
        find_poles(&char_poly_coeffs(cs))?
    } else {
        diagonalize(
            &build_blocks(cs, &enumerate_sector(n, sector_m)?)?.assemble_hamiltonian()?,
        )?
        .eigenvalues()
        .to_vec()
    };
    let pa0 = approx_poles(cs, sector_m, PoleApproximation::Decoupled)?;
    let pa1 = approx_poles(cs, sector_m, PoleApproximation::DiagonalSelfEnergy)?;
    let pa0_flat = pa0.flattened();
    let pa1_flat = pa1.flattened();

    let mut text = String::new();
    writeln!(
        text,
        "poles of sector m={sector_m} (N={n}): exact vs approximations"
    )
    .unwrap();
    if pa1_flat.len() == exact.len() {
        writeln!(
            text,
            "{:>5}  {:>24}  {:>24}  {:>24}  {:>12}  {:>12}",
            "index", "exact", "pa0", "pa1", "|pa0-exact|", "|pa1-exact|"
        )
        .unwrap();
        for (i, &e) in exact.iter().enumerate() {
            writeln!(
                text,
                "{:>5}  {:>24.16e}  {:>24.16e}  {:>24.16e}  {:>12.3e}  {:>12.3e}",
                i,
                e,
                pa0_flat[i],
                pa1_flat[i],
                (pa0_flat[i] - e).abs(),
                (pa1_flat[i] - e).abs()
            )
            .unwrap();
        }
    } else {
        writeln!(
            text,
            "{:>5}  {:>24}  {:>24}  {:>12}",
            "index", "exact", "pa0", "|pa0-exact|"
        )
        .unwrap();
        for (i, &e) in exact.iter().enumerate() {
            writeln!(
                text,
                "{:>5}  {:>24.16e}  {:>24.16e}  {:>12.3e}",
                i,
                e,
                pa0_flat[i],
                (pa0_flat[i] - e).abs()
            )
            .unwrap();
        }
        writeln!(text, "pa1 roots per down config:").unwrap();
        for (i, roots) in pa1.per_down_config.iter().enumerate() {
            let list: Vec<String> = roots.iter().map(|r| format!("{r:.16e}")).collect();
            writeln!(text, "  config {i}: {}", list.join("  ")).unwrap();
        }
    }
    writeln!(
        text,
        "summary: max nearest |pa0-exact| = {:.6e}, max nearest |pa1-exact| = {:.6e}",
        max_nearest_distance(&pa0_flat, &exact),
        max_nearest_distance(&pa1_flat, &exact)
    )
    .unwrap();
    print!("{text}");

    if let Some(path) = out {
        let mut csv = String::from("kind,config,index,value\n");
        for (i, &v) in exact.iter().enumerate() {
            writeln!(csv, "exact,,{i},{v:.16e}").unwrap();
        }
        for (i, &v) in pa0_flat.iter().enumerate() {
            writeln!(csv, "pa0,,{i},{v:.16e}").unwrap();
        }
        for (c, roots) in pa1.per_down_config.iter().enumerate() {
            for (i, &v) in roots.iter().enumerate() {
                writeln!(csv, "pa1,{c},{i},{v:.16e}").unwrap();
            }
        }
        write_text(&path.display().to_string(), &csv)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

pub fn cmd_oracle_check(
    config_path: &Path,
    runs: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<(), CliError> {
    let cfg = load_config(config_path)?;
    let n = cfg.coupling_set.n_nuclei();
    let mut states: Vec<(String, StateSpec)> =
        vec![("configured initial state".into(), cfg.initial.clone())];
    let mut rng = SmallRng::seed_from_u64(seed);
    for run in 0..runs {
        let theta = (2.0 * rng.gen::<f64>() - 1.0f64).acos();
        let phi = rng.gen_range(0.0..std::f64::consts::TAU);
        let mask = rng.gen_range(0..(1u64 << n));
        states.push((
            format!("random product state {run} (mask {mask:#b})"),
            StateSpec::product(n, theta, phi, mask)?,
        ));
    }

    let mut worst: f64 = 0.0;
    for (label, spec) in &states {
        let run_cfg = RunConfig {
            initial: spec.clone(),
            ..cfg.clone()
        };
        let sector = run_trajectory(&run_cfg, SolverKind::SectorEigen, workers)?;
        let snapshots = evolve_full(
            &cfg.coupling_set,
            &embed_state_spec(&spec.normalize()?)?,
            &cfg.times,
        )?;
        let mut err: f64 = 0.0;
        for (row, snapshot) in snapshots.iter().enumerate() {
            let [ox, oy, oz] = spin_components(snapshot);
            err = err
                .max((sector.trajectory.s_x[row] - ox).abs())
                .max((sector.trajectory.s_y[row] - oy).abs())
                .max((sector.trajectory.s_z[row] - oz).abs());
        }
        println!("  {label}: max |ds| = {err:.6e}");
        worst = worst.max(err);
    }
    if worst <= ORACLE_TOL {
        println!("oracle-check: PASS (max spin deviation {worst:.6e} <= {ORACLE_TOL:.0e})");
        Ok(())
    } else {
        println!("oracle-check: FAIL (max spin deviation {worst:.6e} > {ORACLE_TOL:.0e})");
        Err(CliError::Invariant(format!(
            "sector route deviates from the brute-force oracle by {worst:.6e}"
        )))
    }
}

pub fn cmd_liouville_check(config_path: &Path) -> Result<(), CliError> {
    let cfg = load_config(config_path)?;
    let spec = cfg.initial.normalize()?;
    let sector = run_trajectory(&cfg, SolverKind::SectorEigen, Some(1))?;
    let initial = BlockDensity::from_pure(&embed_state_spec(&spec)?)?;
    let snapshots = liouville_evolve(&initial, &cfg.coupling_set, &cfg.times)?;

    let mut worst_spin: f64 = 0.0;
    let mut worst_trace: f64 = 0.0;
    for (row, snapshot) in snapshots.iter().enumerate() {
        let [sx, sy, sz] = snapshot.spin();
        worst_spin = worst_spin
            .max((sector.trajectory.s_x[row] - sx).abs())
            .max((sector.trajectory.s_y[row] - sy).abs())
            .max((sector.trajectory.s_z[row] - sz).abs());
        worst_trace = worst_trace.max((snapshot.trace() - 1.0).abs());
    }
    println!(
        "  max |ds| = {worst_spin:.6e} (tol {LIOUVILLE_SPIN_TOL:.0e}), max |tr-1| = {worst_trace:.6e} (tol {LIOUVILLE_TRACE_TOL:.0e})"
    );
    if worst_spin <= LIOUVILLE_SPIN_TOL && worst_trace <= LIOUVILLE_TRACE_TOL {
        println!("liouville-check: PASS");
        Ok(())
    } else {
        println!("liouville-check: FAIL");
        Err(CliError::Invariant(format!(
            "density-matrix route deviates: spin {worst_spin:.6e}, trace {worst_trace:.6e}"
        )))
    }
}

pub fn cmd_blocks(config_path: &Path, sector_m: usize) -> Result<(), CliError> {
    let cfg = load_config(config_path)?;
    let cs = &cfg.coupling_set;
    let n = cs.n_nuclei();
    let basis = enumerate_sector(n, sector_m)?;
    let blocks = build_blocks(cs, &basis)?;
    println!(
        "sector m={sector_m} of N={n} ({} down x {} up)",
        blocks.down_dim(),
        blocks.up_dim()
    );
    let masks = |configs: &[u64]| {
        configs
            .iter()
            .map(|m| format!("{m:0width$b}", width = n))
            .collect::<Vec<_>>()
            .join(" ")
    };
    println!("down configs: {}", masks(basis.down_configs()));
    println!(
        "b_down: {}",
        blocks
            .b_down()
            .iter()
            .map(|v| format!("{v:.16e}"))
            .collect::<Vec<_>>()
            .join(" ")
    );
    println!("up configs: {}", masks(basis.up_configs()));
    println!(
        "b_up: {}",
        blocks
            .b_up()
            .iter()
            .map(|v| format!("{v:.16e}"))
            .collect::<Vec<_>>()
            .join(" ")
    );
    println!("coupling (down index, up index, value):");
    for (i, row) in blocks.coupling_rows().iter().enumerate() {
        for &(j, value) in row {
            println!("  ({i}, {j}, {value:.16e})");
        }
    }
    Ok(())
}
