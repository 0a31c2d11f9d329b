//! End-to-end runs of the binary: artifact contracts, determinism, and exit
//! codes.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_morrey-lab"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

/// CSV body with the provenance block and timestamp stripped.
fn body_of(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n")
}

const BASE_CONFIG: &str = r#"
[domain]
preset = "unit_square"
resolution = 32

[coefficients]
beta = 0.5
b_scale = 0.1
c_scale = 0.1

[data]
nu = "lebesgue"
g = { name = "waves", seed = 11, amplitude = 0.5 }

[solver]
strategy = "direct"

[output]
prefix = "run"
"#;

#[test]
fn solve_writes_solution_and_report() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "run.toml", BASE_CONFIG);
    let out = run_in(dir.path(), &["solve", "--config", &config]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let solution = dir.path().join("run_solution.csv");
    let report = dir.path().join("run_report.csv");
    assert!(solution.exists() && report.exists());
    let body = body_of(&solution);
    assert!(body.starts_with("x,y,value"));
    // 33x33 lattice on the unit square: every node is interior or boundary.
    assert_eq!(body.lines().count(), 1 + 33 * 33);
    let report_body = body_of(&report);
    assert!(report_body.contains("mode,direct"));
    assert!(report_body.contains("beta_hat,"));
}

#[test]
fn solve_is_deterministic_modulo_timestamp() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "run.toml", BASE_CONFIG);
    assert!(run_in(dir.path(), &["solve", "--config", &config, "--out", "a"])
        .status
        .success());
    assert!(run_in(dir.path(), &["solve", "--config", &config, "--out", "b"])
        .status
        .success());
    assert_eq!(
        body_of(&dir.path().join("a_solution.csv")),
        body_of(&dir.path().join("b_solution.csv"))
    );
    assert_eq!(
        body_of(&dir.path().join("a_report.csv")),
        body_of(&dir.path().join("b_report.csv"))
    );
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = TempDir::new().unwrap();
    // Missing file.
    let out = run_in(dir.path(), &["solve", "--config", "nope.toml"]);
    assert_eq!(out.status.code(), Some(2));

    // Resolution not a power of two.
    let config = write_config(
        dir.path(),
        "bad.toml",
        "[domain]\npreset = \"unit_square\"\nresolution = 100\n",
    );
    let out = run_in(dir.path(), &["solve", "--config", &config]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("resolution"), "stderr: {stderr}");

    // Unknown field diagnostics carry the field name.
    let config = write_config(
        dir.path(),
        "unknown.toml",
        "[domain]\npreset = \"unit_square\"\nresolution = 32\nwat = 1\n",
    );
    let out = run_in(dir.path(), &["solve", "--config", &config]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("wat"));
}

#[test]
fn non_contractive_series_exits_with_code_three() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        "strong.toml",
        r#"
[domain]
preset = "unit_square"
resolution = 16

[coefficients]
beta = 0.5
b_scale = 60.0

[solver]
strategy = "neumann"
max_terms = 15
"#,
    );
    let out = run_in(dir.path(), &["solve", "--config", &config]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn morrey_norm_prints_value_and_argmax() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        "m.toml",
        "[domain]\npreset = \"unit_square\"\nresolution = 64\n",
    );
    let out = run_in(dir.path(), &["morrey-norm", "--config", &config, "--out", "m"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("morrey norm"), "stdout: {stdout}");
    // Lebesgue at q = 4/3 peaks at the center with radius 1/4.
    assert!(stdout.contains("(0.500000, 0.500000)"));
    let body = body_of(&dir.path().join("m_morrey.csv"));
    assert!(body.starts_with("q,value,argmax_x,argmax_y,argmax_radius"));
    assert_eq!(body.lines().count(), 2);
}

#[test]
fn capacity_command_matches_concentric_form() {
    let dir = TempDir::new().unwrap();
    let out = run_in(
        dir.path(),
        &["capacity", "--inner", "0.5", "--outer", "1.0", "--resolution", "64"],
    );
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    let value: f64 = stdout
        .split('=')
        .nth(1)
        .and_then(|s| s.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    let exact = 2.0 * std::f64::consts::PI / 2f64.ln();
    assert!((value - exact).abs() / exact < 0.08, "value {value}");
}

#[test]
fn cdc_check_row_count_contract() {
    let dir = TempDir::new().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "cdc-check",
            "--domain",
            "l_shape",
            "--points",
            "6",
            "--radii",
            "0.1,0.2",
            "--resolution",
            "64",
            "--out",
            "l",
        ],
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let body = body_of(&dir.path().join("l_cdc.csv"));
    // Header plus one row per (point, radius) pair.
    assert_eq!(body.lines().count(), 1 + 6 * 2);
    assert!(body.starts_with("xi_x,xi_y,radius,ratio,warning"));
}

#[test]
fn holder_fit_roundtrip_on_solution_csv() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        "slit.toml",
        r#"
[domain]
preset = "slit_square"
resolution = 64

[coefficients]
beta = 0.5

[data]
nu = "zero"
g = "slit_branch"
"#,
    );
    assert!(run_in(dir.path(), &["solve", "--config", &config, "--out", "s"])
        .status
        .success());
    let out = run_in(
        dir.path(),
        &[
            "holder-fit",
            "--in",
            "s_solution.csv",
            "--range",
            "0.15,0.7",
            "--out",
            "s",
        ],
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("beta_hat"), "stdout: {stdout}");
    assert!(dir.path().join("s_holderfit.csv").exists());
}

#[test]
fn sweep_contract_and_monotone_contraction() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        "sweep.toml",
        r#"
[domain]
preset = "unit_square"
resolution = 32

[coefficients]
beta = 0.5

[solver]
strategy = "neumann"
"#,
    );
    let out = run_in(
        dir.path(),
        &[
            "sweep",
            "--config",
            &config,
            "--param",
            "b_scale",
            "--values",
            "0.05,0.1,0.2",
            "--out",
            "sw",
        ],
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let body = body_of(&dir.path().join("sw_sweep.csv"));
    let rows: Vec<&str> = body.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    let ratios: Vec<f64> = rows
        .iter()
        .map(|r| r.split(',').nth(5).unwrap().parse::<f64>().unwrap())
        .collect();
    assert!(ratios[0] < ratios[1] && ratios[1] < ratios[2], "{ratios:?}");

    // An empty value list yields an empty table and still succeeds.
    let out = run_in(
        dir.path(),
        &["sweep", "--config", &config, "--param", "b_scale", "--values", "", "--out", "e"],
    );
    assert!(out.status.success());
    let body = body_of(&dir.path().join("e_sweep.csv"));
    assert_eq!(body.lines().count(), 1, "expected header only: {body}");
}

#[test]
fn solve_emits_structured_grid_and_morrey_emits_measure() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "run.toml", BASE_CONFIG);
    assert!(run_in(dir.path(), &["solve", "--config", &config]).status.success());
    let dat = std::fs::read_to_string(dir.path().join("run_solution.dat")).unwrap();
    assert!(dat.starts_with("# structured grid: nx 33 ny 33"));
    // One line per lattice row below the single header comment.
    assert_eq!(dat.lines().count(), 1 + 33);

    assert!(run_in(dir.path(), &["morrey-norm", "--config", &config, "--out", "m"])
        .status
        .success());
    let body = body_of(&dir.path().join("m_measure.csv"));
    assert!(body.starts_with("cell,x,y,mass"));
    // Lebesgue carries one row per interior cell.
    assert_eq!(body.lines().count(), 1 + 31 * 31);
}
