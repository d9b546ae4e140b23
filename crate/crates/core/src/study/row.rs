use std::path::Path;

use serde::Serialize;

use super::config::StudyKind;
use crate::analysis::ErrorReport;
use crate::error::Result;

/// One CSV row. Columns that do not apply to a study stay empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub study: StudyKind,
    pub index: usize,
    pub k: f64,
    pub n: usize,
    pub h: f64,
    pub kh: f64,
    pub p: usize,
    pub gamma: f64,
    pub rho: f64,
    /// `ok`, or why the row has no solution.
    pub status: String,
    pub asserted: bool,
    pub dofs: Option<usize>,
    #[serde(rename = "err_L2")]
    pub err_l2: Option<f64>,
    #[serde(rename = "err_H1semi")]
    pub err_h1_semi: Option<f64>,
    pub err_jump: Option<f64>,
    pub err_1h: Option<f64>,
    pub err_energy: Option<f64>,
    #[serde(rename = "err_bnd_L2")]
    pub err_bnd_l2: Option<f64>,
    #[serde(rename = "rel_L2")]
    pub rel_l2: Option<f64>,
    #[serde(rename = "rel_H1semi")]
    pub rel_h1_semi: Option<f64>,
    pub rel_jump: Option<f64>,
    pub rel_1h: Option<f64>,
    pub rel_energy: Option<f64>,
    #[serde(rename = "rel_bnd_L2")]
    pub rel_bnd_l2: Option<f64>,
    #[serde(rename = "eoc_L2")]
    pub eoc_l2: Option<f64>,
    #[serde(rename = "eoc_H1semi")]
    pub eoc_h1_semi: Option<f64>,
    pub eoc_energy: Option<f64>,
    pub c_err: Option<f64>,
    pub c_sta: Option<f64>,
    pub data_norm: Option<f64>,
    #[serde(rename = "uh_L2")]
    pub uh_l2: Option<f64>,
    pub relative_residual: Option<f64>,
    pub min_pivot: Option<f64>,
    pub max_pivot: Option<f64>,
    pub condition_estimate: Option<f64>,
    pub factor_nnz: Option<usize>,
    pub is_min: Option<bool>,
    pub econd_ok: Option<bool>,
    pub pollution_indicator: Option<f64>,
    pub omega_h: Option<f64>,
    pub attenuation: Option<f64>,
    pub phase_error: Option<f64>,
    pub wavenumber_error: Option<f64>,
}

impl StudyRow {
    #[allow(clippy::too_many_arguments)]
    pub fn new(study: StudyKind, index: usize, k: f64, n: usize, h: f64, p: usize, gamma: f64, rho: f64) -> Self {
        Self {
            study,
            index,
            k,
            n,
            h,
            kh: k * h,
            p,
            gamma,
            rho,
            status: "ok".into(),
            asserted: false,
            dofs: None,
            err_l2: None,
            err_h1_semi: None,
            err_jump: None,
            err_1h: None,
            err_energy: None,
            err_bnd_l2: None,
            rel_l2: None,
            rel_h1_semi: None,
            rel_jump: None,
            rel_1h: None,
            rel_energy: None,
            rel_bnd_l2: None,
            eoc_l2: None,
            eoc_h1_semi: None,
            eoc_energy: None,
            c_err: None,
            c_sta: None,
            data_norm: None,
            uh_l2: None,
            relative_residual: None,
            min_pivot: None,
            max_pivot: None,
            condition_estimate: None,
            factor_nnz: None,
            is_min: None,
            econd_ok: None,
            pollution_indicator: None,
            omega_h: None,
            attenuation: None,
            phase_error: None,
            wavenumber_error: None,
        }
    }

    pub fn set_report(&mut self, r: &ErrorReport<f64>) {
        self.err_l2 = Some(r.err_l2);
        self.err_h1_semi = Some(r.err_h1_semi);
        self.err_jump = Some(r.err_jump);
        self.err_1h = Some(r.err_1h);
        self.err_energy = Some(r.err_energy);
        self.err_bnd_l2 = Some(r.err_bnd_l2);
        self.rel_l2 = Some(r.rel_l2);
        self.rel_h1_semi = Some(r.rel_h1_semi);
        self.rel_jump = Some(r.rel_jump);
        self.rel_1h = Some(r.rel_1h);
        self.rel_energy = Some(r.rel_energy);
        self.rel_bnd_l2 = Some(r.rel_bnd_l2);
        self.c_err = Some(r.c_err);
    }

    pub fn passed(&self) -> bool {
        self.status == "ok"
    }
}

/// `log(e0 / e1) / log(h0 / h1)`; `None` unless all inputs are positive and
/// the mesh sizes differ.
pub fn eoc(e0: f64, e1: f64, h0: f64, h1: f64) -> Option<f64> {
    if e0 > 0.0 && e1 > 0.0 && h0 > 0.0 && h1 > 0.0 && h0 != h1 {
        Some((e0 / e1).ln() / (h0 / h1).ln())
    } else {
        None
    }
}

/// Fills the EOC columns of each row from its predecessor.
pub fn fill_eocs(rows: &mut [StudyRow]) {
    for i in 1..rows.len() {
        let (a, b) = (&rows[i - 1], &rows[i]);
        let pair = |x: Option<f64>, y: Option<f64>| eoc(x?, y?, a.h, b.h);
        let (l2, h1, en) = (pair(a.err_l2, b.err_l2), pair(a.err_h1_semi, b.err_h1_semi), pair(a.err_energy, b.err_energy));
        rows[i].eoc_l2 = l2;
        rows[i].eoc_h1_semi = h1;
        rows[i].eoc_energy = en;
    }
}

pub(crate) fn write_csv(rows: &[StudyRow], out: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(out)?;
    if rows.is_empty() {
        w.write_record(header())?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn header() -> Vec<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.serialize(StudyRow::new(StudyKind::Convergence, 0, 0.0, 0, 0.0, 0, 0.0, 0.0)).expect("in-memory write");
    let bytes = w.into_inner().expect("in-memory write");
    let text = String::from_utf8(bytes).expect("csv output is utf-8");
    text.lines().next().unwrap_or_default().split(',').map(str::to_owned).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eoc_formula() {
        let e = eoc(4.0, 1.0, 0.2, 0.1).unwrap();
        assert!((e - 2.0).abs() < 1e-14);
        assert!(eoc(0.0, 1.0, 0.2, 0.1).is_none());
        assert!(eoc(1.0, 1.0, 0.1, 0.1).is_none());
    }

    #[test]
    fn csv_header_and_empty_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        let mut r = StudyRow::new(StudyKind::GammaSweep, 0, 2.0, 4, 0.25, 1, 0.0, 0.0);
        r.err_l2 = Some(0.5);
        write_csv(&[r], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        let head = lines.next().unwrap();
        assert!(head.starts_with("study,index,k,n,h,kh,p,gamma,rho,status,asserted,dofs,err_L2,"));
        assert!(lines.next().unwrap().starts_with("gamma_sweep,0,2.0,4,0.25,0.5,1,0.0,0.0,ok,false,,0.5,"));

        write_csv(&[], &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap().trim_end(), head);
    }
}
