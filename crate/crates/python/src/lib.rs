//! Python bindings for the sglst tracker.
//!
//! Matrices cross the boundary as lists of rows (`list[list[float]]`), so
//! numpy arrays can be passed with `.tolist()`.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use nalgebra::DMatrix;
use sglst::config::FeatureChoice;
use sglst::evaluation::default_thresholds;
use sglst::{
    CandidateFeatures, Dictionary, FeatureKind, GrayImage, SglstTracker, SolverConfig,
    TrackerConfig,
};

fn to_py(e: sglst::Error) -> PyErr {
    match e {
        sglst::Error::InvalidArgument(_) | sglst::Error::Parse { .. } => PyValueError::new_err(e.to_string()),
        sglst::Error::Numerical(_) => PyRuntimeError::new_err(e.to_string()),
        sglst::Error::Io { .. } | sglst::Error::Image { .. } => PyIOError::new_err(e.to_string()),
    }
}

fn matrix(rows: &[Vec<f64>], what: &str) -> PyResult<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return Err(PyValueError::new_err(format!("{what} must be a non-empty list of rows")));
    }
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err(format!("{what} rows have different lengths")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn image(rows: &[Vec<f64>]) -> PyResult<GrayImage> {
    let m = matrix(rows, "image")?;
    GrayImage::from_fn(m.ncols(), m.nrows(), |x, y| m[(y, x)]).map_err(to_py)
}

fn feature_kind(name: &str) -> PyResult<FeatureKind> {
    name.parse::<FeatureChoice>().map(FeatureChoice::kind).map_err(to_py)
}

/// Axis-aligned box with 0-based top-left corner.
#[pyclass(from_py_object, name = "BoundingBox")]
#[derive(Clone, Copy)]
struct PyBoundingBox {
    inner: sglst::BoundingBox,
}

#[pymethods]
impl PyBoundingBox {
    #[new]
    fn new(x: f64, y: f64, w: f64, h: f64) -> PyResult<Self> {
        Ok(Self { inner: sglst::BoundingBox::new(x, y, w, h).map_err(to_py)? })
    }

    #[getter]
    fn x(&self) -> f64 {
        self.inner.x
    }

    #[getter]
    fn y(&self) -> f64 {
        self.inner.y
    }

    #[getter]
    fn w(&self) -> f64 {
        self.inner.w
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h
    }

    fn center(&self) -> (f64, f64) {
        self.inner.center()
    }

    fn area(&self) -> f64 {
        self.inner.area()
    }

    fn __repr__(&self) -> String {
        let b = self.inner;
        format!("BoundingBox(x={}, y={}, w={}, h={})", b.x, b.y, b.w, b.h)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }
}

/// Euclidean projection onto the probability simplex.
#[pyfunction]
fn project_simplex(v: Vec<f64>) -> PyResult<Vec<f64>> {
    sglst::project_simplex(&v).map_err(to_py)
}

/// Elementwise max(v, 0).
#[pyfunction]
fn project_nonneg(v: Vec<f64>) -> PyResult<Vec<f64>> {
    sglst::project_nonneg(&v).map_err(to_py)
}

/// Area IoU of two boxes.
#[pyfunction]
fn overlap(a: PyBoundingBox, b: PyBoundingBox) -> f64 {
    sglst::overlap(&a.inner, &b.inner)
}

/// Fraction of overlaps strictly above each threshold (default 0, 0.05, ..., 1).
#[pyfunction]
#[pyo3(signature = (overlaps, thresholds=None))]
fn success_curve(overlaps: Vec<f64>, thresholds: Option<Vec<f64>>) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let t = thresholds.unwrap_or_else(default_thresholds);
    let c = sglst::success_curve(&overlaps, &t).map_err(to_py)?;
    Ok((c.thresholds, c.fractions))
}

/// Trapezoidal area under a success curve.
#[pyfunction]
fn auc(thresholds: Vec<f64>, fractions: Vec<f64>) -> PyResult<f64> {
    if thresholds.len() != fractions.len() {
        return Err(PyValueError::new_err("thresholds and fractions differ in length"));
    }
    Ok(sglst::auc(&sglst::SuccessCurve { thresholds, fractions }))
}

/// Codes a d x l candidate against a d x (l*k) dictionary.
///
/// Returns a dict with `code` ((l*k) x l rows), `objective`, `iterations`
/// and `converged`.
#[pyfunction]
#[pyo3(signature = (dictionary, candidate, l, k, lam=0.1, mu=0.1, max_iters=100, tol=1e-4))]
#[allow(clippy::too_many_arguments)]
fn solve<'py>(
    py: Python<'py>,
    dictionary: Vec<Vec<f64>>,
    candidate: Vec<Vec<f64>>,
    l: usize,
    k: usize,
    lam: f64,
    mu: f64,
    max_iters: usize,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let dict = Dictionary::new(matrix(&dictionary, "dictionary")?, l, k).map_err(to_py)?;
    let x = CandidateFeatures::new(matrix(&candidate, "candidate")?);
    let cfg = SolverConfig { lambda: lam, mu, max_iters, tol, trace_objective: false };
    let (code, diag) = py
        .detach(|| {
            let pre = sglst::precompute(&dict, &cfg)?;
            sglst::solve(&x, &dict, &pre, &cfg)
        })
        .map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("code", rows(&code))?;
    out.set_item("objective", diag.final_objective)?;
    out.set_item("iterations", diag.iterations)?;
    out.set_item("converged", diag.converged)?;
    Ok(out)
}

/// Fidelity plus group penalty of a code.
#[pyfunction]
#[pyo3(signature = (code, candidate, dictionary, l, k, lam=0.1))]
fn objective(
    code: Vec<Vec<f64>>,
    candidate: Vec<Vec<f64>>,
    dictionary: Vec<Vec<f64>>,
    l: usize,
    k: usize,
    lam: f64,
) -> PyResult<f64> {
    let dict = Dictionary::new(matrix(&dictionary, "dictionary")?, l, k).map_err(to_py)?;
    let x = CandidateFeatures::new(matrix(&candidate, "candidate")?);
    sglst::objective(&matrix(&code, "code")?, &x, &dict, lam).map_err(to_py)
}

/// Unit-norm patch features of a square region, one column per patch
/// (returned as rows of the d x l matrix).
#[pyfunction]
#[pyo3(signature = (region, features="intensity"))]
fn extract_features(region: Vec<Vec<f64>>, features: &str) -> PyResult<Vec<Vec<f64>>> {
    let f = feature_kind(features)?.extract(&image(&region)?).map_err(to_py)?;
    Ok(rows(&f.data))
}

/// Bilinear crop of `box` resampled to `size` x `size`.
#[pyfunction]
fn crop_warp(frame: Vec<Vec<f64>>, bbox: PyBoundingBox, size: usize) -> PyResult<Vec<Vec<f64>>> {
    let out = sglst::crop_warp(&image(&frame)?, &bbox.inner, size).map_err(to_py)?;
    Ok((0..out.height())
        .map(|y| (0..out.width()).map(|x| out.get(x, y)).collect())
        .collect())
}

/// Writes a synthetic OTB-layout sequence and returns its ground truth.
#[pyfunction]
#[pyo3(signature = (out_dir, frames=100, sigma=2.0, seed=0))]
fn synth_sequence(out_dir: PathBuf, frames: usize, sigma: f64, seed: u64) -> PyResult<Vec<PyBoundingBox>> {
    let cfg = sglst::SynthConfig { frames, sigma, seed, ..sglst::SynthConfig::default() };
    let seq = sglst::synth_sequence(&cfg, &out_dir).map_err(to_py)?;
    Ok(seq.ground_truth.into_iter().flatten().map(|inner| PyBoundingBox { inner }).collect())
}

/// Particle-filter tracker driven frame by frame.
#[pyclass(name = "Tracker")]
struct PyTracker {
    inner: sglst::Tracker,
}

fn tracker_config(
    n_particles: usize,
    k_templates: usize,
    features: &str,
    seed: u64,
    lam: f64,
    max_iters: usize,
) -> PyResult<TrackerConfig> {
    let d = TrackerConfig::default();
    Ok(TrackerConfig {
        n_particles,
        k_templates,
        features: feature_kind(features)?,
        seed,
        solver: SolverConfig { lambda: lam, max_iters, ..d.solver },
        ..d
    })
}

#[pymethods]
impl PyTracker {
    #[new]
    #[pyo3(signature = (first_frame, init_box, n_particles=400, k_templates=10, features="intensity", seed=0, lam=0.1, max_iters=100))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        first_frame: Vec<Vec<f64>>,
        init_box: PyBoundingBox,
        n_particles: usize,
        k_templates: usize,
        features: &str,
        seed: u64,
        lam: f64,
        max_iters: usize,
    ) -> PyResult<Self> {
        let cfg = tracker_config(n_particles, k_templates, features, seed, lam, max_iters)?;
        let inner = sglst::Tracker::init(&image(&first_frame)?, init_box.inner, cfg).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Tracks one frame and returns the estimated box.
    fn step(&mut self, py: Python<'_>, frame: Vec<Vec<f64>>) -> PyResult<PyBoundingBox> {
        let img = image(&frame)?;
        let out = py.detach(|| self.inner.step(&img)).map_err(to_py)?;
        Ok(PyBoundingBox { inner: out.bbox })
    }

    /// Current template weights.
    fn template_weights(&self) -> Vec<f64> {
        self.inner.templates().weights.clone()
    }

    #[getter]
    fn frame_index(&self) -> usize {
        self.inner.frame_index()
    }
}

/// One-pass evaluation of a sequence directory; returns the run summary.
#[pyfunction]
#[pyo3(signature = (seq_dir, n_particles=400, k_templates=10, features="intensity", seed=0, lam=0.1, max_iters=100))]
#[allow(clippy::too_many_arguments)]
fn track_sequence<'py>(
    py: Python<'py>,
    seq_dir: PathBuf,
    n_particles: usize,
    k_templates: usize,
    features: &str,
    seed: u64,
    lam: f64,
    max_iters: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = tracker_config(n_particles, k_templates, features, seed, lam, max_iters)?;
    let (run, summary) = py
        .detach(|| {
            let seq = sglst::load_sequence(&seq_dir)?;
            sglst::ope_run(&seq, &mut SglstTracker::new(cfg))
        })
        .map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("sequence", summary.sequence)?;
    out.set_item("mean_overlap", summary.mean_overlap)?;
    out.set_item("auc", summary.auc)?;
    out.set_item("frames_scored", summary.frames_scored)?;
    out.set_item("overlaps", summary.overlaps)?;
    let boxes: Vec<PyBoundingBox> = run.results.into_iter().map(|inner| PyBoundingBox { inner }).collect();
    out.set_item("results", boxes)?;
    Ok(out)
}

#[pymodule]
pub fn pysglst(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBoundingBox>()?;
    m.add_class::<PyTracker>()?;
    m.add_function(wrap_pyfunction!(project_simplex, m)?)?;
    m.add_function(wrap_pyfunction!(project_nonneg, m)?)?;
    m.add_function(wrap_pyfunction!(overlap, m)?)?;
    m.add_function(wrap_pyfunction!(success_curve, m)?)?;
    m.add_function(wrap_pyfunction!(auc, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(objective, m)?)?;
    m.add_function(wrap_pyfunction!(extract_features, m)?)?;
    m.add_function(wrap_pyfunction!(crop_warp, m)?)?;
    m.add_function(wrap_pyfunction!(synth_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(track_sequence, m)?)?;
    Ok(())
}
