use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::{make_metric, GeodesicFamily, ROOT_TOL};
use crate::quadrature::DEFAULT_REL_TOL;

/// The shipped experiment: `f0 = 0.25 x^2`, `f1 = 0.3 x^3 - 0.15 x^2`.
pub const DEFAULT_CONFIG: &str = include_str!("../../config/default.toml");

/// Flat on-disk layout; every key is optional and falls back to the defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    f0: Option<Vec<f64>>,
    f1: Option<Vec<f64>>,
    n_schedule: Option<Vec<usize>>,
    t_grid: Option<Vec<f64>>,
    rho_grid: Option<Vec<f64>>,
    rho_max: Option<f64>,
    rho_points: Option<usize>,
    grid_resolution: Option<usize>,
    tol_root: Option<f64>,
    tol_quadrature: Option<f64>,
    tol_identity: Option<f64>,
    output_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    /// Relative residual for `G'(x) = rho`.
    pub root: f64,
    /// Relative accuracy of each norming integral.
    pub quadrature: f64,
    /// Relative agreement required between dual routes (`E_N`, `R`).
    pub identity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { root: ROOT_TOL, quadrature: DEFAULT_REL_TOL, identity: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub f0_coeffs: Vec<f64>,
    pub f1_coeffs: Vec<f64>,
    pub n_schedule: Vec<usize>,
    pub t_grid: Vec<f64>,
    pub rho_grid: Vec<f64>,
    pub grid_resolution: usize,
    pub tolerances: Tolerances,
    pub output_dir: PathBuf,
}

fn uniform(max: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![0.0];
    }
    let step = 2.0 * max / (points - 1) as f64;
    (0..points).map(|i| -max + step * i as f64).collect()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::from_toml_str(DEFAULT_CONFIG).expect("shipped config is valid")
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let rho_grid = match (raw.rho_grid, raw.rho_max, raw.rho_points) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(Error::Config("give either rho_grid or rho_max/rho_points, not both".into()))
            }
            (Some(grid), None, None) => grid,
            (None, max, points) => uniform(max.unwrap_or(8.0), points.unwrap_or(33)),
        };
        let defaults = Tolerances::default();
        let cfg = ExperimentConfig {
            f0_coeffs: raw.f0.unwrap_or_else(|| vec![0.0, 0.0, 0.25]),
            f1_coeffs: raw.f1.unwrap_or_else(|| vec![0.0, 0.0, -0.15, 0.3]),
            n_schedule: raw.n_schedule.unwrap_or_else(|| vec![16, 32, 64, 128, 256, 512, 1024]),
            t_grid: raw.t_grid.unwrap_or_else(|| vec![0.0, 0.25, 0.5, 0.75, 1.0]),
            rho_grid,
            grid_resolution: raw.grid_resolution.unwrap_or(4000),
            tolerances: Tolerances {
                root: raw.tol_root.unwrap_or(defaults.root),
                quadrature: raw.tol_quadrature.unwrap_or(defaults.quadrature),
                identity: raw.tol_identity.unwrap_or(defaults.identity),
            },
            output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("out")),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n_schedule.is_empty() {
            return bad("n_schedule is empty".into());
        }
        if self.n_schedule[0] < 2 {
            return bad("n_schedule entries must be at least 2".into());
        }
        if self.n_schedule.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("n_schedule {:?} is not strictly increasing", self.n_schedule));
        }
        if self.t_grid.is_empty() || self.rho_grid.is_empty() {
            return bad("t_grid and rho_grid must be nonempty".into());
        }
        if let Some(t) = self.t_grid.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return bad(format!("t_grid value {t} outside [0, 1]"));
        }
        if let Some(r) = self.rho_grid.iter().find(|r| !r.is_finite()) {
            return bad(format!("rho_grid value {r} is not finite"));
        }
        let tol = &self.tolerances;
        for (name, v) in [("tol_root", tol.root), ("tol_quadrature", tol.quadrature), ("tol_identity", tol.identity)] {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("{name} = {v} must lie in (0, 1)"));
            }
        }
        self.family().map(|_| ())
    }

    /// Validated endpoint metrics.
    pub fn family(&self) -> Result<GeodesicFamily> {
        Ok(GeodesicFamily::new(
            make_metric(&self.f0_coeffs, self.grid_resolution)?,
            make_metric(&self.f1_coeffs, self.grid_resolution)?,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_config_matches_documented_defaults() {
        let c = ExperimentConfig::default();
        assert_eq!(c.f0_coeffs, vec![0.0, 0.0, 0.25]);
        assert_eq!(c.f1_coeffs, vec![0.0, 0.0, -0.15, 0.3]);
        assert_eq!(c.n_schedule, vec![16, 32, 64, 128, 256, 512, 1024]);
        assert_eq!(c.t_grid, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(c.rho_grid.len(), 33);
        assert_eq!(c.rho_grid[0], -8.0);
        assert_eq!(c.rho_grid[16], 0.0);
        assert_eq!(c.rho_grid[32], 8.0);
        assert_eq!(ExperimentConfig::from_toml_str("").unwrap(), c);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            "n_schedule = [16, 16]",
            "n_schedule = []",
            "t_grid = [0.0, 1.5]",
            "rho_grid = []",
            "f0 = [0.0, 0.0, -10.0]",
            "tol_identity = 0.0",
            "unknown_key = 3",
            "rho_grid = [0.0]\nrho_max = 2.0",
            "[section]\nf0 = [0.0]",
        ] {
            assert!(ExperimentConfig::from_toml_str(text).is_err(), "{text}");
        }
    }

    #[test]
    fn explicit_rho_grid() {
        let c = ExperimentConfig::from_toml_str("rho_grid = [-1.0, 0.5]\noutput_dir = \"x\"").unwrap();
        assert_eq!(c.rho_grid, vec![-1.0, 0.5]);
        assert_eq!(c.output_dir, PathBuf::from("x"));
    }
}
