use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum StudyKind {
    Convergence,
    Pollution,
    GammaSweep,
    StabilityProbe,
    Dispersion,
}

impl StudyKind {
    pub fn name(self) -> &'static str {
        match self {
            StudyKind::Convergence => "convergence",
            StudyKind::Pollution => "pollution",
            StudyKind::GammaSweep => "gamma_sweep",
            StudyKind::StabilityProbe => "stability_probe",
            StudyKind::Dispersion => "dispersion",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionKind {
    /// `exp(i k d.x)`.
    #[default]
    PlaneWave,
    /// `sin(pi x) sin(pi y)`.
    SineProduct,
}

/// Resolution condition `kh / p <= c0 (p / k)^{1 / (p + 1)}`; with `sigma`
/// the rows also carry `k / p^2 (kh / (sigma p))^{2p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Econd {
    pub c0: f64,
    #[serde(default)]
    pub sigma: Option<f64>,
}

/// Scan of `k` in `[k_min, k_max]` for the standard FEM matrix with the
/// smallest relative pivot on the first `(n, p)` of the grid; the worst `k`
/// joins the probe grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceScan {
    pub k_min: f64,
    pub k_max: f64,
    pub samples: usize,
}

/// Flat JSON study description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub study: StudyKind,
    #[serde(default)]
    pub k: Vec<f64>,
    /// Subdivisions per side of the unit square.
    #[serde(default)]
    pub n: Vec<usize>,
    /// Derive `n = round(k sqrt(2) / kh_target)` per `k` instead of using `n`.
    #[serde(default)]
    pub kh_target: Option<f64>,
    #[serde(default = "default_p")]
    pub p: Vec<usize>,
    #[serde(default = "default_gamma")]
    pub gamma: Vec<f64>,
    /// Real part of the penalty (complex-penalty switch).
    #[serde(default)]
    pub rho: f64,
    #[serde(default = "default_direction")]
    pub direction: [f64; 2],
    #[serde(default)]
    pub solution: SolutionKind,
    /// Dimensionless `kh` values of the dispersion study.
    #[serde(default)]
    pub kh: Vec<f64>,
    #[serde(default)]
    pub quad_degree: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub econd: Option<Econd>,
    #[serde(default)]
    pub resonance_scan: Option<ResonanceScan>,
}

fn default_p() -> Vec<usize> {
    vec![1]
}

fn default_gamma() -> Vec<f64> {
    vec![0.0]
}

fn default_direction() -> [f64; 2] {
    [1.0, 0.0]
}

impl StudyConfig {
    /// Minimal configuration for `study` with every optional field defaulted.
    pub fn new(study: StudyKind) -> Self {
        Self {
            study,
            k: Vec::new(),
            n: Vec::new(),
            kh_target: None,
            p: default_p(),
            gamma: default_gamma(),
            rho: 0.0,
            direction: default_direction(),
            solution: SolutionKind::default(),
            kh: Vec::new(),
            quad_degree: None,
            out: None,
            econd: None,
            resonance_scan: None,
        }
    }

    /// Built-in grid used when the CLI gets `--study` without `--config`.
    pub fn preset(study: StudyKind) -> Self {
        let mut c = Self::new(study);
        match study {
            StudyKind::Convergence => {
                c.k = vec![5.0];
                c.n = vec![8, 16, 32, 64];
                c.p = vec![1, 2, 3];
            }
            StudyKind::Pollution => {
                c.k = vec![10.0, 20.0, 40.0];
                c.kh_target = Some(0.5);
            }
            StudyKind::GammaSweep => {
                c.k = vec![50.0];
                c.kh_target = Some(1.0);
                c.gamma = vec![0.0, 0.005, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.08, 0.1];
            }
            StudyKind::StabilityProbe => {
                c.k = vec![10.0, 25.0, 50.0];
                c.n = vec![4, 8, 16];
                c.p = vec![1, 2];
                c.gamma = vec![0.01, 0.1, 1.0, 10.0];
            }
            StudyKind::Dispersion => {
                c.k = vec![10.0];
                c.p = vec![1, 2, 3];
                c.kh = vec![0.05, 0.1, 0.2, 0.3, 0.4, 0.5];
            }
        }
        c
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.p.is_empty() || self.p.contains(&0) {
            return bad("p must be a non-empty list of degrees >= 1".into());
        }
        if self.gamma.is_empty() {
            return bad("gamma list must not be empty".into());
        }
        if let Some(g) = self.gamma.iter().find(|g| !(**g >= 0.0) || !g.is_finite()) {
            return bad(format!("penalty parameters must be finite and >= 0, got {g}"));
        }
        if !self.rho.is_finite() {
            return bad("rho must be finite".into());
        }
        if self.k.is_empty() {
            return bad("k list must not be empty".into());
        }
        if let Some(k) = self.k.iter().find(|k| !(**k > 0.0) || !k.is_finite()) {
            return bad(format!("wave numbers must be positive, got {k}"));
        }
        let len = (self.direction[0].powi(2) + self.direction[1].powi(2)).sqrt();
        if (len - 1.0).abs() > 1e-12 {
            return bad(format!("direction must have unit length, got |d| = {len}"));
        }
        if self.study == StudyKind::Dispersion {
            if self.kh.is_empty() {
                return bad("dispersion study needs a non-empty kh list".into());
            }
            if let Some(v) = self.kh.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
                return bad(format!("kh values must be positive, got {v}"));
            }
            return Ok(());
        }
        match self.kh_target {
            Some(t) if !(t > 0.0) || !t.is_finite() => return bad(format!("kh_target must be positive, got {t}")),
            Some(_) => {}
            None if self.n.is_empty() => return bad("either n or kh_target is required".into()),
            None if self.n.contains(&0) => return bad("mesh subdivisions must be >= 1".into()),
            None => {}
        }
        if self.study == StudyKind::Pollution && self.kh_target.is_none() {
            return bad("pollution study runs in kh_target mode".into());
        }
        if let Some(q) = self.quad_degree {
            let pmax = self.p.iter().copied().max().unwrap_or(1);
            if q < 2 * pmax {
                return bad(format!("quad_degree {q} below 2p = {}", 2 * pmax));
            }
        }
        if let Some(s) = &self.resonance_scan {
            if !(s.k_min > 0.0 && s.k_max >= s.k_min && s.samples >= 1) {
                return bad("resonance_scan needs 0 < k_min <= k_max and samples >= 1".into());
            }
        }
        Ok(())
    }

    /// Mesh subdivisions for wave number `k`.
    pub fn meshes_for(&self, k: f64) -> Vec<usize> {
        match self.kh_target {
            Some(t) => vec![((k * std::f64::consts::SQRT_2 / t).round() as usize).max(1)],
            None => self.n.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for s in [
            StudyKind::Convergence,
            StudyKind::Pollution,
            StudyKind::GammaSweep,
            StudyKind::StabilityProbe,
            StudyKind::Dispersion,
        ] {
            StudyConfig::preset(s).validate().unwrap();
        }
    }

    #[test]
    fn json_round_trip_and_defaults() {
        let c = StudyConfig::from_json(r#"{"study": "gamma_sweep", "k": [5], "n": [4], "gamma": [0, 0.1]}"#).unwrap();
        assert_eq!(c.p, vec![1]);
        assert_eq!(c.direction, [1.0, 0.0]);
        let back = StudyConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn invalid_configs_rejected() {
        for text in [
            r#"{"study": "gamma_sweep", "k": [5], "n": [4], "gamma": [0, -0.1]}"#,
            r#"{"study": "convergence", "k": [], "n": [4]}"#,
            r#"{"study": "convergence", "k": [5]}"#,
            r#"{"study": "convergence", "k": [5], "n": [4], "p": []}"#,
            r#"{"study": "pollution", "k": [5], "n": [4]}"#,
            r#"{"study": "dispersion", "k": [5]}"#,
            r#"{"study": "convergence", "k": [5], "n": [4], "unknown": 1}"#,
            r#"{"study": "convergence", "k": [5], "n": [4], "direction": [1, 1]}"#,
            r#"{"study": "convergence", "k": [5], "n": [4], "p": [2], "quad_degree": 3}"#,
        ] {
            assert!(StudyConfig::from_json(text).is_err(), "{text}");
        }
    }

    #[test]
    fn kh_target_mode() {
        let mut c = StudyConfig::preset(StudyKind::Pollution);
        c.kh_target = Some(0.5);
        assert_eq!(c.meshes_for(10.0), vec![28]);
        assert_eq!(c.meshes_for(40.0), vec![113]);
    }
}
