//! JSON container for a single coding problem, used to replay the solver in
//! isolation.
//!
//! ```json
//! {
//!   "d": 2, "l": 1, "k": 2,
//!   "lambda": 0.1, "mu": 0.1,
//!   "dictionary": [1.0, 0.0, 0.0, 1.0],
//!   "candidate": [0.6, 0.8]
//! }
//! ```
//!
//! `dictionary` is the d x (l*k) matrix and `candidate` the d x l matrix,
//! both flattened column-major. `max_iters` and `tol` are optional.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{CandidateFeatures, Dictionary, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverInstance {
    pub d: usize,
    pub l: usize,
    pub k: usize,
    pub lambda: f64,
    pub mu: f64,
    pub dictionary: Vec<f64>,
    pub candidate: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

impl SolverInstance {
    pub fn new(dict: &Dictionary, x: &CandidateFeatures, cfg: &SolverConfig) -> Self {
        Self {
            d: dict.dim(),
            l: dict.patches(),
            k: dict.templates(),
            lambda: cfg.lambda,
            mu: cfg.mu,
            dictionary: dict.matrix().as_slice().to_vec(),
            candidate: x.data.as_slice().to_vec(),
            max_iters: Some(cfg.max_iters),
            tol: Some(cfg.tol),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("bad solver instance: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn dictionary(&self) -> Result<Dictionary> {
        if self.dictionary.len() != self.d * self.l * self.k {
            return Err(Error::invalid(format!(
                "dictionary has {} values, expected d*l*k = {}",
                self.dictionary.len(),
                self.d * self.l * self.k
            )));
        }
        Dictionary::new(
            DMatrix::from_column_slice(self.d, self.l * self.k, &self.dictionary),
            self.l,
            self.k,
        )
    }

    pub fn features(&self) -> Result<CandidateFeatures> {
        if self.candidate.len() != self.d * self.l {
            return Err(Error::invalid(format!(
                "candidate has {} values, expected d*l = {}",
                self.candidate.len(),
                self.d * self.l
            )));
        }
        Ok(CandidateFeatures::new(DMatrix::from_column_slice(
            self.d,
            self.l,
            &self.candidate,
        )))
    }

    pub fn solver_config(&self) -> SolverConfig {
        let base = SolverConfig::default();
        SolverConfig {
            lambda: self.lambda,
            mu: self.mu,
            max_iters: self.max_iters.unwrap_or(base.max_iters),
            tol: self.tol.unwrap_or(base.tol),
            trace_objective: true,
        }
    }
}
