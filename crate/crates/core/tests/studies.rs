use std::path::Path;
use std::process::Command;

use cipfem::dispersion::discrete_wavenumber;
use cipfem::study::{all_passed, run_study, StudyConfig, StudyKind};

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_cipfem")).args(args).output().unwrap()
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn cli_output_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    write(&cfg, r#"{"study": "convergence", "k": [4], "n": [4, 8], "p": [1, 2], "gamma": [0, 0.1]}"#);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let o = cli(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read(&a).unwrap();
    assert_eq!(text, std::fs::read(&b).unwrap());
    assert_eq!(String::from_utf8(text).unwrap().lines().count(), 9);
    let sidecar: StudyConfig = serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.json")).unwrap()).unwrap();
    assert_eq!(sidecar.n, vec![4, 8]);
    assert_eq!(sidecar.out.as_deref(), Some(a.as_path()));
}

#[test]
fn cli_overrides_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    write(&cfg, r#"{"study": "convergence", "k": [3], "n": [2], "p": [2]}"#);
    let out = dir.path().join("o.csv");
    let o = cli(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quad-degree", "8", "--study", "gamma_sweep"]);
    assert!(o.status.success());
    let sidecar: StudyConfig = serde_json::from_str(&std::fs::read_to_string(dir.path().join("o.json")).unwrap()).unwrap();
    assert_eq!(sidecar.quad_degree, Some(8));
    assert_eq!(sidecar.study, StudyKind::GammaSweep);

    let low = cli(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quad-degree", "3"]);
    assert_eq!(low.status.code(), Some(2));
    write(&cfg, r#"{"study": "gamma_sweep", "k": [3], "n": [2], "gamma": [0, -1]}"#);
    assert_eq!(cli(&["--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(cli(&[]).status.code(), Some(2));
}

#[test]
fn sweep_with_only_zero_penalty_is_fem() {
    let mut c = StudyConfig::new(StudyKind::GammaSweep);
    c.k = vec![8.0];
    c.n = vec![6];
    let sweep = run_study(&c).unwrap();
    c.study = StudyKind::Convergence;
    let fem = run_study(&c).unwrap();
    assert_eq!(sweep.len(), 1);
    assert_eq!(sweep[0].is_min, Some(true));
    assert_eq!(sweep[0].err_energy, fem[0].err_energy);
    assert_eq!(sweep[0].err_jump, Some(0.0));
}

#[test]
fn probe_examples_from_the_far_pre_asymptotic_range() {
    let mut c = StudyConfig::new(StudyKind::StabilityProbe);
    c.k = vec![25.0];
    c.n = vec![8];
    c.gamma = vec![0.05, 10.0];
    let rows = run_study(&c).unwrap();
    assert!((rows[0].kh - 4.42).abs() < 0.01);
    assert!(!rows[0].asserted && rows[0].gamma == 0.0);
    for r in &rows[1..] {
        assert!(r.asserted && r.passed(), "{r:?}");
        assert!(r.uh_l2.unwrap().is_finite() && r.relative_residual.unwrap() <= 1e-9);
    }
    assert!(all_passed(&rows));
}

#[test]
fn pollution_grows_once_it_dominates() {
    let mut c = StudyConfig::new(StudyKind::Pollution);
    c.k = vec![20.0, 40.0, 80.0];
    c.kh_target = Some(0.5);
    let rows = run_study(&c).unwrap();
    let rel: Vec<f64> = rows.iter().map(|r| r.rel_h1_semi.unwrap()).collect();
    assert!(rel[1] / rel[0] > 1.3 && rel[2] / rel[1] > 1.3, "{rel:?}");
    for r in &rows {
        assert!((r.kh - 0.5).abs() < 0.02);
    }
    // 1D cross-check at the realized kh: linear in k.
    let w: Vec<f64> = rows.iter().map(|r| r.wavenumber_error.unwrap() / r.k).collect();
    for pair in w.windows(2) {
        assert!((pair[1] / pair[0] - 1.0).abs() < 0.1, "{w:?}");
    }
}

#[test]
fn dispersion_cross_check_linear_in_k() {
    for p in 1..=3 {
        let d = discrete_wavenumber(p, 0.5, 0.0).unwrap();
        let e: Vec<f64> = [10.0, 20.0, 40.0].iter().map(|&k| d.wavenumber_error(k)).collect();
        assert!((e[1] / e[0] - 2.0).abs() < 1e-12 && (e[2] / e[1] - 2.0).abs() < 1e-12);
    }
}

#[test]
fn dispersion_study_via_cli() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nested").join("disp.csv");
    let o = cli(&["--study", "dispersion", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut reader = csv::Reader::from_path(&out).unwrap();
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 18);
    for r in &rows {
        assert_eq!(&r[col("study")], "dispersion");
        assert!(r[col("phase_error")].parse::<f64>().unwrap() > 0.0);
        assert!(r[col("err_L2")].is_empty());
    }
}
