use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_thermobuck");

fn thermobuck(args: &[&str], out: &Path) -> Output {
    Command::new(BIN)
        .args(["--quiet", "--threads", "1", "--output-dir"])
        .arg(out)
        .args(args)
        .env_remove("THERMOBUCK_OUTPUT_DIR")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(key))
        .unwrap_or_else(|| panic!("no `{key}` in\n{text}"))
        .trim()
        .parse()
        .unwrap()
}

#[test]
fn unknown_subcommand_exits_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = thermobuck(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(BIN).arg("--help").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn errors_are_single_structured_lines() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[mesh]\ndims = [0, 4]\n").unwrap();
    let o = thermobuck(&["analyze", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    let line = err.lines().last().unwrap();
    assert!(line.starts_with("error: kind=config message=\""), "{err}");
    assert!(line.contains("missing block [material]"), "{err}");

    let o = thermobuck(&["run", "no_such_problem"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("kind=io"));
}

#[test]
fn run_at_full_volume_emits_only_the_reference() {
    let dir = tempfile::tempdir().unwrap();
    let text = thermobuck::io::fixture_text("strip_2d")
        .unwrap()
        .replace("v_target = 0.5", "v_target = 1.0");
    assert!(text.contains("v_target = 1.0"));
    let cfg = dir.path().join("full.toml");
    std::fs::write(&cfg, text).unwrap();
    let o = thermobuck(&["run", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = thermobuck::io::read_history(&dir.path().join("history.csv")).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!((rows[0].v, rows[0].j_over_j0, rows[0].p_over_p0), (1.0, 1.0, 1.0));
    let vtk = std::fs::read_to_string(dir.path().join("topology_final.vtk")).unwrap();
    assert!(vtk.contains("CELLS 16 80"));
    assert!(stdout(&o).contains("termination = TargetReached"));
}

#[test]
fn verify_reports_agreement_on_a_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let o = thermobuck(&["verify", "column_small", "--samples", "4"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!(value(&s, "max relative direct-vs-adjoint discrepancy:") <= 1e-10, "{s}");
    assert!(value(&s, "max relative finite-difference error (lambda):") <= 1e-3, "{s}");
    assert!(value(&s, "max relative finite-difference error (compliance):") <= 1e-3, "{s}");
}

#[test]
fn cold_analysis_of_the_column_matches_euler() {
    let dir = tempfile::tempdir().unwrap();
    let o = thermobuck(&["analyze", "column_eq55_coarse", "--delta-t", "0"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    let (e, b, t, l) = (2e11, 0.05, 0.01, 0.25);
    let euler = std::f64::consts::PI.powi(2) * e * (b * t * t * t / 12.0) / (4.0 * l * l);
    let p = value(&s, "critical_load");
    assert!(((p - euler) / euler).abs() < 0.1, "{p} vs {euler}");
    assert!(dir.path().join("analysis.vtk").exists());
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(BIN)
        .args(["--quiet", "analyze", "strip_2d"])
        .env("THERMOBUCK_OUTPUT_DIR", dir.path())
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("analysis.vtk").exists());
}
