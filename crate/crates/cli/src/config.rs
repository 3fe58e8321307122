//! Run configuration: TOML schema, validation, and construction of the
//! solver inputs.

use centralspin::basis::{SectorBasis, SectorId};
use centralspin::model::CouplingSet;
use centralspin::observables::{SectorState, StateSpec};
use nalgebra::DVector;
use num_complex::Complex64;
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("configuration is not valid TOML: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("missing required field: {0}")]
    Missing(&'static str),
    #[error("field {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error(transparent)]
    Core(#[from] centralspin::Error),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        reason: reason.into(),
    }
}

/// Which solver produces the trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SolverKind {
    /// Per-sector spectral propagation (the exact default).
    SectorEigen,
    /// Closed-form residue inversion; lowest paired sector only.
    LaplaceM0,
    /// Branch coupling dropped entirely.
    PoleApproxPa0,
    /// Diagonal self-energy poles; lowest paired sector only.
    PoleApproxPa1,
    /// Brute-force full-space evolution.
    Oracle,
}

impl SolverKind {
    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::SectorEigen => "sector-eigen",
            SolverKind::LaplaceM0 => "laplace-m0",
            SolverKind::PoleApproxPa0 => "pole-approx-pa0",
            SolverKind::PoleApproxPa1 => "pole-approx-pa1",
            SolverKind::Oracle => "oracle",
        }
    }

    fn parse(text: &str) -> Option<Self> {
        Some(match text {
            "sector-eigen" => SolverKind::SectorEigen,
            "laplace-m0" => SolverKind::LaplaceM0,
            "pole-approx-pa0" => SolverKind::PoleApproxPa0,
            "pole-approx-pa1" => SolverKind::PoleApproxPa1,
            "oracle" => SolverKind::Oracle,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    nuclei: Option<usize>,
    #[serde(default)]
    epsilon_e: f64,
    #[serde(default)]
    epsilon_n: f64,
    couplings: RawCouplings,
    initial: RawInitial,
    time: RawTime,
    solver: Option<String>,
    output: Option<RawOutput>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCouplings {
    uniform: Option<f64>,
    list: Option<Vec<f64>>,
    exponential: Option<RawExponential>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExponential {
    a_max: f64,
    gamma: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    electron: Option<RawElectron>,
    nuclear_mask: Option<u64>,
    sector: Option<Vec<RawSector>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawElectron {
    Named(String),
    Angles {
        theta: f64,
        #[serde(default)]
        phi: f64,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSector {
    sector: RawSectorKey,
    weight: [f64; 2],
    #[serde(default)]
    down: Vec<[f64; 2]>,
    #[serde(default)]
    up: Vec<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawSectorKey {
    Index(i64),
    Name(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    t_max: f64,
    points: usize,
    spacing: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    path: Option<String>,
}

/// A fully validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub coupling_set: CouplingSet,
    pub initial: StateSpec,
    pub times: Vec<f64>,
    pub solver: SolverKind,
    pub output_path: Option<String>,
}

/// Parses and validates a TOML run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text)?;

    let couplings = build_couplings(&raw)?;
    let n = couplings.len();
    let coupling_set =
        CouplingSet::with_nuclear_zeeman(couplings, raw.epsilon_e, raw.epsilon_n)?;
    let initial = build_initial(&raw.initial, n)?;
    let times = build_times(&raw.time)?;
    let solver = match raw.solver.as_deref() {
        None => SolverKind::SectorEigen,
        Some(name) => SolverKind::parse(name)
            .ok_or_else(|| invalid("solver", format!("unknown solver `{name}`")))?,
    };
    let output_path = raw.output.and_then(|o| o.path);

    Ok(RunConfig {
        coupling_set,
        initial,
        times,
        solver,
        output_path,
    })
}

fn build_couplings(raw: &RawConfig) -> Result<Vec<f64>, ConfigError> {
    let section = &raw.couplings;
    let forms = section.uniform.is_some() as u8
        + section.list.is_some() as u8
        + section.exponential.is_some() as u8;
    if forms == 0 {
        return Err(ConfigError::Missing(
            "couplings.uniform | couplings.list | couplings.exponential",
        ));
    }
    if forms > 1 {
        return Err(invalid(
            "couplings",
            "exactly one of uniform, list, exponential may be given",
        ));
    }
    if let Some(list) = &section.list {
        if let Some(n) = raw.nuclei {
            if n != list.len() {
                return Err(invalid(
                    "nuclei",
                    format!("{} disagrees with couplings.list length {}", n, list.len()),
                ));
            }
        }
        return Ok(list.clone());
    }
    let n = raw.nuclei.ok_or(ConfigError::Missing("nuclei"))?;
    if let Some(a) = section.uniform {
        return Ok(vec![a; n]);
    }
    let profile = section.exponential.as_ref().expect("checked above");
    Ok((0..n)
        .map(|k| profile.a_max * (-(k as f64) * profile.gamma).exp())
        .collect())
}

fn build_initial(raw: &RawInitial, n: usize) -> Result<StateSpec, ConfigError> {
    let has_product = raw.electron.is_some() || raw.nuclear_mask.is_some();
    let has_sectors = raw.sector.as_ref().is_some_and(|s| !s.is_empty());
    match (has_product, has_sectors) {
        (false, false) => Err(ConfigError::Missing("initial.electron or initial.sector")),
        (true, true) => Err(invalid(
            "initial",
            "give either an electron product state or explicit sector amplitudes, not both",
        )),
        (true, false) => {
            let electron = raw
                .electron
                .as_ref()
                .ok_or(ConfigError::Missing("initial.electron"))?;
            let mask = raw.nuclear_mask.unwrap_or(0);
            if n < 64 && mask >= (1u64 << n) {
                return Err(invalid(
                    "initial.nuclear_mask",
                    format!("{mask:#b} sets bits beyond the {n} nuclei"),
                ));
            }
            let (theta, phi) = electron_angles(electron)?;
            Ok(StateSpec::product(n, theta, phi, mask)?)
        }
        (false, true) => {
            let mut spec = StateSpec::empty(n);
            for entry in raw.sector.as_ref().expect("checked above") {
                let id = sector_id(&entry.sector, n)?;
                let basis = SectorBasis::for_sector(n, id)?;
                let down = parse_amplitudes(&entry.down, basis.down_dim(), "initial.sector.down")?;
                let up = parse_amplitudes(&entry.up, basis.up_dim(), "initial.sector.up")?;
                spec.insert_sector(
                    id,
                    SectorState {
                        weight: Complex64::new(entry.weight[0], entry.weight[1]),
                        down,
                        up,
                    },
                )?;
            }
            Ok(spec)
        }
    }
}

fn electron_angles(spec: &RawElectron) -> Result<(f64, f64), ConfigError> {
    use std::f64::consts::{FRAC_PI_2, PI};
    Ok(match spec {
        RawElectron::Angles { theta, phi } => (*theta, *phi),
        RawElectron::Named(name) => match name.as_str() {
            "up" => (0.0, 0.0),
            "down" => (PI, 0.0),
            "+x" => (FRAC_PI_2, 0.0),
            "-x" => (FRAC_PI_2, PI),
            "+y" => (FRAC_PI_2, FRAC_PI_2),
            "-y" => (FRAC_PI_2, -FRAC_PI_2),
            other => {
                return Err(invalid(
                    "initial.electron",
                    format!("unknown direction `{other}` (use up, down, ±x, ±y, or angles)"),
                ))
            }
        },
    })
}

fn sector_id(key: &RawSectorKey, n: usize) -> Result<SectorId, ConfigError> {
    match key {
        RawSectorKey::Name(name) => match name.as_str() {
            "top" => Ok(SectorId::Top),
            "bottom" => Ok(SectorId::Bottom),
            other => Err(invalid(
                "initial.sector.sector",
                format!("unknown sector name `{other}`"),
            )),
        },
        RawSectorKey::Index(m) => {
            if *m == -1 {
                Ok(SectorId::Top)
            } else if *m == n as i64 {
                Ok(SectorId::Bottom)
            } else if (0..n as i64).contains(m) {
                Ok(SectorId::Paired(*m as usize))
            } else {
                Err(invalid(
                    "initial.sector.sector",
                    format!("index {m} outside -1..={n}"),
                ))
            }
        }
    }
}

fn parse_amplitudes(
    raw: &[[f64; 2]],
    expected: usize,
    field: &'static str,
) -> Result<DVector<Complex64>, ConfigError> {
    if raw.len() != expected {
        return Err(invalid(
            field,
            format!("expected {expected} amplitudes, got {}", raw.len()),
        ));
    }
    Ok(DVector::from_iterator(
        expected,
        raw.iter().map(|[re, im]| Complex64::new(*re, *im)),
    ))
}

fn build_times(raw: &RawTime) -> Result<Vec<f64>, ConfigError> {
    if raw.t_max <= 0.0 || !raw.t_max.is_finite() {
        return Err(invalid("time.t_max", "must be positive"));
    }
    if raw.points < 2 {
        return Err(invalid("time.points", "need at least two points"));
    }
    let spacing = match raw.spacing.as_deref() {
        None | Some("linear") => Spacing::Linear,
        Some("log") => Spacing::Log,
        Some(other) => {
            return Err(invalid(
                "time.spacing",
                format!("unknown spacing `{other}` (linear or log)"),
            ))
        }
    };
    let n = raw.points;
    Ok(match spacing {
        Spacing::Linear => (0..n)
            .map(|i| raw.t_max * i as f64 / (n - 1) as f64)
            .collect(),
        // four geometric decades ending at t_max
        Spacing::Log => (0..n)
            .map(|i| raw.t_max * 10f64.powf(-4.0 * (1.0 - i as f64 / (n - 1) as f64)))
            .collect(),
    })
}
