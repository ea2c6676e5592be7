//! End-to-end runs of the `gconvex` binary against the shipped fixtures,
//! checking exit codes and CSV outputs.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_gconvex")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn out_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gconvex-cli-test-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(cfg: &str, tag: &str) -> (i32, String, PathBuf) {
    let dir = out_dir(tag);
    let output = Command::new(bin())
        .args(["run", fixture(cfg).to_str().unwrap(), "--out", dir.to_str().unwrap()])
        .output()
        .expect("binary runs");
    let code = output.status.code().unwrap_or(-1);
    let text = format!(
        "{}{}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    (code, text, dir)
}

#[test]
fn dini_logpower_reports_convergent_unit_value() {
    let (code, _, dir) = run("dini_logpower.cfg", "dini");
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(dir.join("dini.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    assert!(row.starts_with("logpower,"), "{row}");
    assert!(row.contains("Convergent"), "{row}");
    let value: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
    assert!((value - 1.0).abs() < 1e-8, "value {value}");
}

#[test]
fn malformed_config_exits_one_naming_key() {
    let (code, text, _) = run("dini_bad_key.cfg", "badkey");
    assert_eq!(code, 1);
    assert!(text.contains("bogus"), "{text}");
}

#[test]
fn missing_config_exits_one() {
    let output = Command::new(bin()).args(["run", "/nonexistent.cfg"]).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn barrier_default_passes_ten_properties() {
    let (code, _, dir) = run("barrier_default.cfg", "barrier");
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(dir.join("barrier-verify.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 10);
    for row in rows {
        assert!(row.contains(",true,"), "{row}");
    }
}

#[test]
fn broken_barrier_exits_two() {
    let (code, text, dir) = run("barrier_broken.cfg", "barrier-broken");
    assert_eq!(code, 2, "{text}");
    let csv = std::fs::read_to_string(dir.join("barrier-verify.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("U3") && l.contains(",false,")), "{csv}");
}

#[test]
fn corner_dump_has_expected_columns() {
    let (code, _, dir) = run("corner_default.cfg", "corner");
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(dir.join("iterate-corner.csv")).unwrap();
    assert!(csv.starts_with("m,k,K,b,B,gap,bound\n"));
    assert_eq!(csv.lines().count(), 52); // header + 51 states
}

#[test]
fn flat_dump_converges() {
    let (code, text, dir) = run("flat_random.cfg", "flat");
    assert_eq!(code, 0, "{text}");
    let csv = std::fs::read_to_string(dir.join("iterate-flat.csv")).unwrap();
    let last = csv.lines().last().unwrap();
    let gap: f64 = last.split(',').nth(5).unwrap().parse().unwrap();
    assert!(gap < 1e-6, "final gap {gap}");
}

#[test]
fn solve_disk_center_value() {
    let (code, text, dir) = run("solve_disk.cfg", "solve");
    assert_eq!(code, 0, "{text}");
    let csv = std::fs::read_to_string(dir.join("solve.csv")).unwrap();
    // The node at the origin carries u(0) ≈ 1/4.
    let mut u0 = None;
    for line in csv.lines().skip(1) {
        let mut cols = line.split(',');
        let x: f64 = cols.next().unwrap().parse().unwrap();
        let y: f64 = cols.next().unwrap().parse().unwrap();
        if x.abs() < 1e-12 && y.abs() < 1e-12 {
            u0 = Some(cols.next().unwrap().parse::<f64>().unwrap());
        }
    }
    let u0 = u0.expect("origin is a grid node");
    assert!((u0 - 0.25).abs() < 1e-3, "u(0) = {u0}");
}

#[test]
fn corrupted_solve_exits_two() {
    let (code, text, _) = run("solve_disk_corrupt.cfg", "solve-corrupt");
    assert_eq!(code, 2, "{text}");
    assert!(text.contains("residual"), "{text}");
}

#[test]
fn probe_power_cusp_blows_up() {
    let (code, text, dir) = run("probe_power_cusp.cfg", "probe");
    assert_eq!(code, 0, "{text}");
    let csv = std::fs::read_to_string(dir.join("probe.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.ends_with("BlowUp")), "{csv}");
}

#[test]
fn flat_fixed_oracle_runs() {
    let dir = out_dir("flat-fixed");
    let cfg_path = dir.join("flat.cfg");
    std::fs::write(&cfg_path, "[iterate-flat]\nsteps = 60\noracle = fixed:AB\n").unwrap();
    let output = Command::new(bin())
        .args(["run", cfg_path.to_str().unwrap(), "--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.join("iterate-flat.csv")).unwrap();
    assert_eq!(csv.lines().count(), 62); // header + 61 states
}

#[test]
fn classify_wedge_is_corner() {
    let dir = out_dir("classify");
    let cfg_path = dir.join("classify.cfg");
    std::fs::write(&cfg_path, "[classify]\ndomain = wedge\n").unwrap();
    let output = Command::new(bin())
        .args(["run", cfg_path.to_str().unwrap(), "--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.join("classify.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    assert!(row.contains("Corner") && row.ends_with("true"), "{row}");
}

#[test]
fn sharpness_table_consistent() {
    let (code, text, dir) = run("sharpness_small.cfg", "sharpness");
    assert_eq!(code, 0, "{text}");
    let csv = std::fs::read_to_string(dir.join("sharpness.csv")).unwrap();
    assert!(csv.contains("power_cusp") && csv.contains("log_cusp") && csv.contains("wedge"));
    // The strongly non-Dini cusp blows up; the Dini cusp keeps a derivative.
    let alpha_row = csv.lines().find(|l| l.starts_with("power_cusp,5.0")).unwrap();
    assert!(alpha_row.contains("Divergent") && alpha_row.contains("BlowUp"), "{alpha_row}");
    let q2_row = csv.lines().find(|l| l.starts_with("log_cusp,2.0")).unwrap();
    assert!(q2_row.contains("Convergent") && q2_row.contains("Differentiable"), "{q2_row}");
}
