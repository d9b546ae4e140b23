//! Batch studies over parameter grids, written as CSV plus a JSON sidecar.
//!
//! Rows are computed in parallel and emitted in grid order. Wall-clock time
//! is not written, so reruns of a configuration reproduce the CSV bytes.

mod config;
mod row;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

pub use config::{Econd, ResonanceScan, SolutionKind, StudyConfig, StudyKind};
pub use row::{eoc, fill_eocs, StudyRow};

use crate::analysis::{c_sta, data_norm, discrete_norms, error_report_with, plane_wave, sine_product, ExactSolution};
use crate::dispersion::discrete_wavenumber_complex;
use crate::error::{Error, Result};
use crate::fespace::FeSpace;
use crate::forms::{assemble_system_with, PenaltyProfile};
use crate::geometry::Mesh;
use crate::linalg;
use crate::quadrature::QuadratureRule;
use num_complex::Complex;

/// Residual bound asserted on solver rows.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

/// Rows of `config.study`.
pub fn run_study(config: &StudyConfig) -> Result<Vec<StudyRow>> {
    config.validate()?;
    match config.study {
        StudyKind::Convergence => run_convergence_study(config),
        StudyKind::Pollution => run_pollution_study(config),
        StudyKind::GammaSweep => run_gamma_sweep(config),
        StudyKind::StabilityProbe => run_stability_probe(config),
        StudyKind::Dispersion => run_dispersion_study(config),
    }
}

/// Rows per `(k, p, gamma)` sorted by `h` descending, with EOCs between
/// consecutive rows.
pub fn run_convergence_study(config: &StudyConfig) -> Result<Vec<StudyRow>> {
    config.validate()?;
    let mut tasks = Vec::new();
    for &k in &config.k {
        for &p in &config.p {
            for &gamma in &config.gamma {
                let mut ns = config.meshes_for(k);
                ns.sort_unstable();
                ns.dedup();
                tasks.extend(ns.into_iter().map(|n| Task { k, n, p, gamma, asserted: true }));
            }
        }
    }
    let mut rows = solve_tasks(config, &tasks)?;
    for group in rows.chunk_by_mut(|a, b| a.k == b.k && a.p == b.p && a.gamma == b.gamma) {
        fill_eocs(group);
    }
    Ok(rows)
}

/// Rows at the target `kh` for each `k`, with the 1D `|k - omega|` at the
/// realized `kh` as a cross-check.
pub fn run_pollution_study(config: &StudyConfig) -> Result<Vec<StudyRow>> {
    config.validate()?;
    if config.kh_target.is_none() {
        return Err(Error::Config("pollution study runs in kh_target mode".into()));
    }
    let tasks = grid(config, |_| true);
    let mut rows = solve_tasks(config, &tasks)?;
    for row in &mut rows {
        if let Ok(d) = discrete_wavenumber_complex(row.p, row.kh, Complex::new(config.rho, row.gamma)) {
            row.omega_h = Some(d.omega_h);
            row.phase_error = Some(d.phase_error);
            row.wavenumber_error = Some(d.wavenumber_error(row.k));
        }
    }
    Ok(rows)
}

/// Rows per penalty value; `is_min` marks the smallest energy error of each
/// `(k, n, p)` group.
pub fn run_gamma_sweep(config: &StudyConfig) -> Result<Vec<StudyRow>> {
    config.validate()?;
    let tasks = grid(config, |_| true);
    let mut rows = solve_tasks(config, &tasks)?;
    for group in rows.chunk_by_mut(|a, b| a.k == b.k && a.n == b.n && a.p == b.p) {
        let best = group
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.err_energy.map(|e| (i, e)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i);
        for (i, r) in group.iter_mut().enumerate() {
            r.is_min = Some(Some(i) == best);
        }
    }
    Ok(rows)
}

/// CIP rows (`gamma > 0`) asserted solvable with a small residual; each
/// `(k, n, p)` also gets an unasserted FEM row for comparison. With a
/// resonance scan the worst FEM wave number joins the `k` list.
pub fn run_stability_probe(config: &StudyConfig) -> Result<Vec<StudyRow>> {
    config.validate()?;
    let mut config = config.clone();
    if let Some(scan) = config.resonance_scan {
        let n = config.meshes_for(config.k[0])[0];
        let k = scan_resonance(&scan, n, config.p[0])?;
        if !config.k.contains(&k) {
            config.k.push(k);
        }
    }
    let mut tasks = Vec::new();
    for &k in &config.k {
        for n in config.meshes_for(k) {
            for &p in &config.p {
                tasks.push(Task { k, n, p, gamma: 0.0, asserted: false });
                tasks.extend(config.gamma.iter().filter(|g| **g > 0.0).map(|&gamma| Task { k, n, p, gamma, asserted: true }));
            }
        }
    }
    solve_tasks(&config, &tasks)
}

/// 1D discrete wave numbers over `(p, gamma, kh, k)`; stop-band rows carry
/// the status `evanescent`.
pub fn run_dispersion_study(config: &StudyConfig) -> Result<Vec<StudyRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    for &p in &config.p {
        for &gamma in &config.gamma {
            for &kh in &config.kh {
                for &k in &config.k {
                    let mut row = StudyRow::new(config.study, rows.len(), k, 0, kh / k, p, gamma, config.rho);
                    row.kh = kh;
                    match discrete_wavenumber_complex(p, kh, Complex::new(config.rho, gamma)) {
                        Ok(d) => {
                            row.omega_h = Some(d.omega_h);
                            row.attenuation = Some(d.attenuation);
                            row.phase_error = Some(d.phase_error);
                            row.wavenumber_error = Some(d.wavenumber_error(k));
                        }
                        Err(Error::Evanescent { .. }) => row.status = "evanescent".into(),
                        Err(e) => row.status = e.to_string(),
                    }
                    rows.push(row);
                }
            }
        }
    }
    Ok(rows)
}

/// Wave number in `[k_min, k_max]` whose standard FEM matrix on the
/// `n x n` mesh of degree `p` has the smallest `min_pivot / max_pivot`.
pub fn scan_resonance(scan: &ResonanceScan, n: usize, p: usize) -> Result<f64> {
    let mesh = Arc::new(Mesh::unit_square(n)?);
    let space = FeSpace::new(mesh.clone(), p)?;
    let quad = QuadratureRule::for_degree(p)?;
    let penalty = PenaltyProfile::zero(&mesh);
    let ks: Vec<f64> = (0..scan.samples)
        .map(|i| {
            if scan.samples == 1 {
                scan.k_min
            } else {
                scan.k_min + (scan.k_max - scan.k_min) * i as f64 / (scan.samples - 1) as f64
            }
        })
        .collect();
    let ratios = ks
        .par_iter()
        .map(|&k| {
            let problem = plane_wave(k, [1.0, 0.0])?.problem(penalty.clone())?;
            let system = assemble_system_with(&problem, &space, &quad)?;
            Ok(match linalg::factorize(&system.matrix) {
                Ok(lu) => lu.min_pivot / lu.max_pivot,
                Err(Error::SingularMatrix { .. }) => 0.0,
                Err(e) => return Err(e),
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let worst = ratios.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0);
    Ok(ks[worst])
}

#[derive(Debug, Clone, Copy)]
struct Task {
    k: f64,
    n: usize,
    p: usize,
    gamma: f64,
    asserted: bool,
}

fn grid(config: &StudyConfig, asserted: impl Fn(f64) -> bool) -> Vec<Task> {
    let mut tasks = Vec::new();
    for &k in &config.k {
        for n in config.meshes_for(k) {
            for &p in &config.p {
                for &gamma in &config.gamma {
                    tasks.push(Task { k, n, p, gamma, asserted: asserted(gamma) });
                }
            }
        }
    }
    tasks
}

fn solve_tasks(config: &StudyConfig, tasks: &[Task]) -> Result<Vec<StudyRow>> {
    tasks.par_iter().enumerate().map(|(i, t)| solve_row(config, i, t)).collect()
}

fn exact(config: &StudyConfig, k: f64) -> Result<ExactSolution<f64>> {
    match config.solution {
        SolutionKind::PlaneWave => plane_wave(k, config.direction),
        SolutionKind::SineProduct => sine_product(k),
    }
}

/// Configuration errors abort the study; solver errors end up in the row.
fn solve_row(config: &StudyConfig, index: usize, t: &Task) -> Result<StudyRow> {
    let mesh = Arc::new(Mesh::unit_square(t.n)?);
    let mut row = StudyRow::new(config.study, index, t.k, t.n, mesh.h, t.p, t.gamma, config.rho);
    row.asserted = t.asserted;
    row.c_sta = c_sta(t.k, mesh.h, t.p, t.gamma);
    if let Some(e) = config.econd {
        let (p, kh) = (t.p as f64, row.kh);
        row.econd_ok = Some(kh / p <= e.c0 * (p / t.k).powf(1.0 / (p + 1.0)));
        row.pollution_indicator = e.sigma.map(|s| t.k / (p * p) * (kh / (s * p)).powf(2.0 * p));
    }
    let space = FeSpace::new(mesh.clone(), t.p)?;
    let quad = match config.quad_degree {
        Some(q) => QuadratureRule::new(q)?,
        None => QuadratureRule::for_degree(t.p)?,
    };
    let mut penalty = PenaltyProfile::constant(&mesh, t.gamma)?;
    if config.rho != 0.0 {
        penalty = penalty.with_real_part(config.rho);
    }
    let ex = exact(config, t.k)?;
    let problem = ex.problem(penalty.clone())?;
    let system = assemble_system_with(&problem, &space, &quad)?;
    row.dofs = Some(system.dof_count());
    row.data_norm = Some(data_norm(&problem, &mesh, &quad));
    let (uh, diag) = match linalg::solve(&system) {
        Ok(s) => s,
        Err(e @ (Error::SingularMatrix { .. } | Error::InvalidParameter(_))) => {
            row.status = e.to_string();
            return Ok(row);
        }
        Err(e) => return Err(e),
    };
    row.relative_residual = Some(diag.relative_residual);
    row.min_pivot = Some(diag.min_pivot);
    row.max_pivot = Some(diag.max_pivot);
    row.condition_estimate = Some(diag.condition_estimate);
    row.factor_nnz = Some(diag.factor_nnz);
    let uh_norms = discrete_norms(&space, &uh, &penalty)?;
    row.uh_l2 = Some(uh_norms.l2.sqrt());
    row.set_report(&error_report_with(&ex, &uh, &space, &penalty, &quad)?);
    if !(diag.relative_residual <= RESIDUAL_TOLERANCE && uh_norms.l2.is_finite()) {
        row.status = "residual".into();
    }
    Ok(row)
}

/// `out` with its extension replaced by `json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

/// Writes the CSV to `out` and the configuration to the sidecar next to it.
pub fn write_outputs(config: &StudyConfig, rows: &[StudyRow], out: &Path) -> Result<()> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    row::write_csv(rows, out)?;
    let mut text = serde_json::to_string_pretty(config)?;
    text.push('\n');
    std::fs::write(sidecar_path(out), text)?;
    Ok(())
}

/// True when every asserted row passed.
pub fn all_passed(rows: &[StudyRow]) -> bool {
    rows.iter().all(|r| !r.asserted || r.passed())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(study: StudyKind) -> StudyConfig {
        let mut c = StudyConfig::new(study);
        c.k = vec![3.0];
        c.n = vec![2, 4];
        c
    }

    #[test]
    fn convergence_rows_sorted_with_eocs() {
        let mut c = small(StudyKind::Convergence);
        c.n = vec![8, 4, 2];
        c.p = vec![1, 2];
        let rows = run_convergence_study(&c).unwrap();
        assert_eq!(rows.len(), 6);
        for g in rows.chunks(3) {
            assert!(g[0].h > g[1].h && g[1].h > g[2].h);
            assert!(g[0].eoc_l2.is_none());
            assert!(g[1].eoc_l2.is_some() && g[2].eoc_h1_semi.is_some() && g[2].eoc_energy.is_some());
        }
        assert!(all_passed(&rows));
        assert!(rows.iter().enumerate().all(|(i, r)| r.index == i));
    }

    #[test]
    fn single_mesh_has_no_eoc() {
        let mut c = small(StudyKind::Convergence);
        c.n = vec![4];
        let rows = run_convergence_study(&c).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].eoc_l2.is_none() && rows[0].eoc_energy.is_none());
    }

    #[test]
    fn sweep_flags_one_minimum_per_group() {
        let mut c = small(StudyKind::GammaSweep);
        c.gamma = vec![0.0, 0.1, 1.0];
        let rows = run_gamma_sweep(&c).unwrap();
        for g in rows.chunks(3) {
            assert_eq!(g.iter().filter(|r| r.is_min == Some(true)).count(), 1);
        }
    }

    #[test]
    fn probe_pairs_fem_rows_unasserted() {
        let mut c = small(StudyKind::StabilityProbe);
        c.gamma = vec![0.1, 1.0];
        let rows = run_stability_probe(&c).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows.iter().filter(|r| !r.asserted).count(), 2);
        assert!(rows.iter().filter(|r| !r.asserted).all(|r| r.gamma == 0.0));
        assert!(all_passed(&rows));
    }

    #[test]
    fn resonance_scan_adds_a_wave_number() {
        let mut c = small(StudyKind::StabilityProbe);
        c.n = vec![2];
        c.gamma = vec![0.5];
        c.resonance_scan = Some(ResonanceScan { k_min: 1.0, k_max: 6.0, samples: 11 });
        let rows = run_stability_probe(&c).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows[2].k >= 1.0 && rows[2].k <= 6.0);
    }

    #[test]
    fn dispersion_rows_report_stop_band() {
        let mut c = StudyConfig::new(StudyKind::Dispersion);
        c.k = vec![10.0];
        c.kh = vec![0.5, 4.0];
        let rows = run_study(&c).unwrap();
        assert_eq!(rows[0].status, "ok");
        assert!(rows[0].phase_error.unwrap() > 0.0);
        assert_eq!(rows[1].status, "evanescent");
        assert!(all_passed(&rows));
    }

    #[test]
    fn failed_asserted_row_fails_study() {
        let mut c = small(StudyKind::Convergence);
        c.n = vec![2];
        let mut rows = run_convergence_study(&c).unwrap();
        assert!(all_passed(&rows));
        rows[0].status = "residual".into();
        assert!(!all_passed(&rows));
        rows[0].asserted = false;
        assert!(all_passed(&rows));
    }
}
