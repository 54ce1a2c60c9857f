use std::path::{Path, PathBuf};
use std::sync::Arc;

use pqlap::continuation::{log_grid, DEFAULT_RHO_MAX, DEFAULT_RHO_MIN, DEFAULT_RHO_POINTS};
use pqlap::{Mesh1D, PQParams, Quadrature, SolverConfig};
use serde::Deserialize;

use crate::error::CliError;

/// Environment variable that overrides `output_dir`.
pub const OUTPUT_DIR_ENV: &str = "PQLAP_OUTPUT_DIR";

/// Flat run configuration, read from a TOML file. Every key is optional.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub p: f64,
    pub q: f64,
    /// Left end of the interval.
    pub a: f64,
    /// Right end of the interval.
    pub b: f64,
    pub elements: usize,
    pub quadrature_order: usize,
    pub residual_tol: f64,
    pub max_iterations: usize,
    pub rho_max: f64,
    pub rho_min: f64,
    pub rho_points: usize,
    pub modes: Vec<usize>,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let solver = SolverConfig::default();
        Self {
            p: 3.0,
            q: 2.0,
            a: 0.0,
            b: 1.0,
            elements: 512,
            quadrature_order: 8,
            residual_tol: solver.residual_tol,
            max_iterations: solver.max_iterations,
            rho_max: DEFAULT_RHO_MAX,
            rho_min: DEFAULT_RHO_MIN,
            rho_points: DEFAULT_RHO_POINTS,
            modes: vec![1, 2, 3],
            output_dir: PathBuf::from("pqlap-out"),
            seed: 0,
        }
    }
}

impl RunConfig {
    /// Reads `path` (defaults when `None`) and applies the output directory
    /// environment override.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                    path: path.to_path_buf(),
                    source,
                })?;
                toml::from_str(&text)
                    .map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))?
            }
            None => RunConfig::default(),
        };
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
            cfg.output_dir = PathBuf::from(dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.pq()?;
        self.mesh()?;
        self.solver().validate()?;
        self.grid()?;
        if self.modes.is_empty() {
            return Err(CliError::Config("modes must not be empty".into()));
        }
        if let Some(k) = self.modes.iter().find(|&&k| k == 0) {
            return Err(CliError::Config(format!(
                "mode indices start at 1, got {k}"
            )));
        }
        Ok(())
    }

    pub fn pq(&self) -> Result<PQParams, CliError> {
        Ok(PQParams::new(self.p, self.q)?)
    }

    pub fn mesh(&self) -> Result<Arc<Mesh1D>, CliError> {
        Quadrature::gauss_legendre(self.quadrature_order)?;
        let mesh = Mesh1D::uniform(self.a, self.b, self.elements)?
            .with_quadrature_order(self.quadrature_order)?;
        Ok(Arc::new(mesh))
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            residual_tol: self.residual_tol,
            max_iterations: self.max_iterations,
            seed: self.seed,
            ..SolverConfig::default()
        }
    }

    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        Ok(log_grid(self.rho_max, self.rho_min, self.rho_points)?)
    }
}
