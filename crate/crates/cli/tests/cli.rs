//! End-to-end tests of the installed binary: configuration ingestion, CSV
//! emission, determinism across worker counts, and the validation
//! subcommands.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_centralspin"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

const BASE_CONFIG: &str = r#"
nuclei = 3
epsilon_e = 0.4
[couplings]
list = [0.9, 0.55, 0.3]
[initial]
electron = "down"
nuclear_mask = 0
[time]
t_max = 20.0
points = 50
"#;

#[test]
fn evolve_writes_a_full_precision_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "run.toml", BASE_CONFIG);
    let out = dir.path().join("traj.csv");
    let result = bin()
        .args(["evolve"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(result.status.success(), "{}", stderr(&result));
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,s_x,s_y,s_z,norm");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 5);
    let s_z: f64 = first[3].parse().unwrap();
    assert!((s_z + 1.0).abs() < 1e-12, "electron starts pointing down");
    let norm: f64 = first[4].parse().unwrap();
    assert!((norm - 1.0).abs() < 1e-12);
    assert_eq!(csv.lines().count(), 51);
}

#[test]
fn evolve_to_stdout_without_a_path() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "run.toml", BASE_CONFIG);
    let result = bin().args(["evolve"]).arg(&config).output().unwrap();
    assert!(result.status.success());
    assert!(stdout(&result).starts_with("t,s_x,s_y,s_z,norm"));
}

#[test]
fn csv_is_bit_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    // a transverse state populates several sectors at once
    let config = write(
        dir.path(),
        "run.toml",
        &BASE_CONFIG.replace("electron = \"down\"", "electron = \"+x\""),
    );
    let mut outputs = Vec::new();
    for workers in ["1", "4"] {
        let out = dir.path().join(format!("traj-{workers}.csv"));
        let result = bin()
            .args(["evolve"])
            .arg(&config)
            .args(["--workers", workers])
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(result.status.success(), "{}", stderr(&result));
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn conflicting_coupling_forms_are_a_structured_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "run.toml",
        &BASE_CONFIG.replace(
            "list = [0.9, 0.55, 0.3]",
            "list = [0.9, 0.55, 0.3]\nuniform = 1.0",
        ),
    );
    let result = bin().args(["evolve"]).arg(&config).output().unwrap();
    assert!(!result.status.success());
    assert!(stderr(&result).contains("couplings"));
}

#[test]
fn residue_solver_rejects_higher_sectors_with_an_explanation() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "run.toml",
        &BASE_CONFIG.replace("nuclear_mask = 0", "nuclear_mask = 5"),
    );
    let result = bin()
        .args(["evolve"])
        .arg(&config)
        .args(["--solver", "laplace-m0"])
        .output()
        .unwrap();
    assert!(!result.status.success());
    assert!(stderr(&result).contains("lowest paired sector"));
}

#[test]
fn compare_emits_two_csvs_and_a_difference_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "run.toml", BASE_CONFIG);
    let out = dir.path().join("traj.csv");
    let result = bin()
        .args(["evolve"])
        .arg(&config)
        .args(["--solver", "pole-approx-pa0"])
        .args(["--compare", "sector-eigen"])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(result.status.success(), "{}", stderr(&result));
    assert!(out.exists());
    assert!(dir.path().join("traj.sector-eigen.csv").exists());
    let text = stdout(&result);
    assert!(text.contains("max |ds_z|"));
    // dropping the hyperfine coupling must show up in the longitudinal spin
    let ds_z: f64 = text
        .lines()
        .find(|l| l.contains("max |ds_z|"))
        .and_then(|l| l.rsplit('=').next())
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!(ds_z > 1e-3);
}

#[test]
fn sector_table_matches_the_small_cases() {
    let result = bin().args(["sectors", "3"]).output().unwrap();
    assert!(result.status.success());
    let text = stdout(&result);
    assert!(text.contains("total states 16"));
    let result = bin().args(["sectors", "4"]).output().unwrap();
    assert!(stdout(&result).contains("total states 32"));
    assert!(result.status.success());
}

#[test]
fn pole_listing_aligns_the_exact_and_approximate_sets() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "run.toml", BASE_CONFIG);
    let csv_path = dir.path().join("poles.csv");
    let result = bin()
        .args(["poles"])
        .arg(&config)
        .arg("--out")
        .arg(&csv_path)
        .output()
        .unwrap();
    assert!(result.status.success(), "{}", stderr(&result));
    let text = stdout(&result);
    assert!(text.contains("exact"));
    // the diagonal self-energy is exact in the lowest sector
    let pa1_line = text
        .lines()
        .find(|l| l.contains("max nearest |pa1-exact|"))
        .unwrap();
    let err: f64 = pa1_line.rsplit('=').next().unwrap().trim().parse().unwrap();
    assert!(err < 1e-9, "pa1 deviation {err}");
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("kind,config,index,value"));
    assert_eq!(csv.lines().filter(|l| l.starts_with("exact")).count(), 4);
    assert_eq!(csv.lines().filter(|l| l.starts_with("pa0")).count(), 4);
}

#[test]
fn higher_sector_pole_listing_reports_per_config_roots() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "run.toml", BASE_CONFIG);
    let result = bin()
        .args(["poles"])
        .arg(&config)
        .args(["--sector-m", "1"])
        .output()
        .unwrap();
    assert!(result.status.success(), "{}", stderr(&result));
    let text = stdout(&result);
    assert!(text.contains("pa1 roots per down config"));
    assert!(text.contains("config 2"));
}

#[test]
fn oracle_check_passes_with_random_states() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "run.toml", BASE_CONFIG);
    let result = bin()
        .args(["oracle-check"])
        .arg(&config)
        .args(["--runs", "3", "--seed", "7"])
        .output()
        .unwrap();
    assert!(result.status.success(), "{}", stderr(&result));
    assert!(stdout(&result).contains("oracle-check: PASS"));
}

#[test]
fn liouville_check_passes_on_a_small_bath() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "run.toml",
        &BASE_CONFIG
            .replace("nuclei = 3", "nuclei = 2")
            .replace("list = [0.9, 0.55, 0.3]", "list = [0.9, 0.55]")
            .replace("points = 50", "points = 25"),
    );
    let result = bin().args(["liouville-check"]).arg(&config).output().unwrap();
    assert!(result.status.success(), "{}", stderr(&result));
    assert!(stdout(&result).contains("liouville-check: PASS"));
}

#[test]
fn blocks_dump_lists_the_coupling_entries() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "run.toml", BASE_CONFIG);
    let result = bin()
        .args(["blocks"])
        .arg(&config)
        .args(["--sector-m", "1"])
        .output()
        .unwrap();
    assert!(result.status.success(), "{}", stderr(&result));
    let text = stdout(&result);
    assert!(text.contains("down configs: 001 010 100"));
    assert!(text.contains("up configs: 011 101 110"));
    // 3 down configs x 2 flips each
    assert_eq!(text.matches("  (").count(), 6);
}

#[test]
fn exponential_profile_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "run.toml",
        &BASE_CONFIG
            .replace("nuclei = 3", "nuclei = 5")
            .replace(
                "list = [0.9, 0.55, 0.3]",
                "exponential = { a_max = 1.0, gamma = 0.3 }",
            ),
    );
    let result = bin().args(["evolve"]).arg(&config).output().unwrap();
    assert!(result.status.success(), "{}", stderr(&result));
}
