//! Flat `key = value` run configuration.
//!
//! ```text
//! n_particles = 400
//! k_templates = 10
//! lambda = 0.1
//! mu = 0.1
//! features = "hog"
//! seed = 7
//! ```
//!
//! Missing keys take their defaults; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureKind;
use crate::solver::SolverConfig;
use crate::tracker::TrackerConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureChoice {
    Intensity,
    Hog,
}

impl FeatureChoice {
    pub fn kind(self) -> FeatureKind {
        match self {
            FeatureChoice::Intensity => FeatureKind::Intensity,
            FeatureChoice::Hog => FeatureKind::hog(),
        }
    }
}

impl std::str::FromStr for FeatureChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intensity" => Ok(FeatureChoice::Intensity),
            "hog" => Ok(FeatureChoice::Hog),
            other => Err(Error::invalid(format!(
                "unknown feature kind {other:?} (expected intensity or hog)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n_particles: usize,
    pub k_templates: usize,
    pub sigma_xy: f64,
    pub sigma_s: f64,
    pub lambda: f64,
    pub mu: f64,
    pub solver_tol: f64,
    pub solver_max_iters: usize,
    pub features: FeatureChoice,
    pub tau: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrackerConfig::default();
        Self {
            n_particles: t.n_particles,
            k_templates: t.k_templates,
            sigma_xy: t.sigma_xy,
            sigma_s: t.sigma_s,
            lambda: t.solver.lambda,
            mu: t.solver.mu,
            solver_tol: t.solver.tol,
            solver_max_iters: t.solver.max_iters,
            features: FeatureChoice::Intensity,
            tau: t.tau,
            seed: t.seed,
            input: None,
            output: None,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::invalid(format!("bad config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
    }

    pub fn to_text(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::invalid(format!("cannot serialize config: {e}")))
    }

    pub fn tracker_config(&self) -> TrackerConfig {
        TrackerConfig {
            n_particles: self.n_particles,
            k_templates: self.k_templates,
            sigma_xy: self.sigma_xy,
            sigma_s: self.sigma_s,
            solver: SolverConfig {
                lambda: self.lambda,
                mu: self.mu,
                max_iters: self.solver_max_iters,
                tol: self.solver_tol,
                trace_objective: false,
            },
            features: self.features.kind(),
            tau: self.tau,
            seed: self.seed,
        }
    }
}
