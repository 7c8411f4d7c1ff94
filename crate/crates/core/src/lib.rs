//! Structured group-local sparse tracking.
//!
//! Each tracking candidate is cut into overlapping patches and coded against
//! a dictionary of template patches under a group (l1,inf) penalty that makes
//! all patches of a candidate pick the same few templates. Codes come from an
//! ADMM solver whose subproblems are closed form (a cached linear solve,
//! simplex projections and clamping). The codes drive the likelihood of a
//! particle filter, and the crate ships the usual overlap/success/AUC metrics
//! for one-pass evaluation on OTB-layout sequences.

pub mod config;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod geometry;
pub mod gray;
pub mod instance;
pub mod io;
pub mod projections;
pub mod solver;
pub mod synth;
pub mod tracker;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use evaluation::{auc, ope_run, overlap, success_curve, FrameTracker, RunSummary, SuccessCurve, TrackRun};
pub use features::{FeatureKind, HogParams, PatchGridConfig};
pub use geometry::BoundingBox;
pub use gray::{crop_warp, GrayImage};
pub use io::{load_sequence, write_results, SequenceSpec};
pub use projections::{project_nonneg, project_simplex};
pub use solver::{
    objective, precompute, solve, solve_batch, CandidateFeatures, Dictionary, Precomputation, SolverConfig,
    SolverDiagnostics, SolverState,
};
pub use synth::{synth_sequence, SynthConfig};
pub use tracker::{Tracker, TrackerConfig};

/// [`Tracker`] behind the [`FrameTracker`] interface used by [`ope_run`].
#[derive(Debug, Clone)]
pub struct SglstTracker {
    cfg: TrackerConfig,
    inner: Option<Tracker>,
}

impl SglstTracker {
    pub fn new(cfg: TrackerConfig) -> Self {
        Self { cfg, inner: None }
    }

    pub fn inner(&self) -> Option<&Tracker> {
        self.inner.as_ref()
    }
}

impl FrameTracker for SglstTracker {
    fn start(&mut self, frame: &GrayImage, init: BoundingBox) -> Result<()> {
        self.inner = Some(Tracker::init(frame, init, self.cfg)?);
        Ok(())
    }

    fn track(&mut self, frame: &GrayImage) -> Result<BoundingBox> {
        let t = self
            .inner
            .as_mut()
            .ok_or_else(|| Error::invalid("tracker used before start"))?;
        Ok(t.step(frame)?.bbox)
    }
}
