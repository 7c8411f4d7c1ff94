//! Particle-filter tracker scored by structured group-local sparse codes.
//!
//! Every frame the particle cloud is diffused, each particle's box is warped
//! to the feature region and coded against the template dictionary, and the
//! candidate whose aligned coefficients carry the most mass wins. Particle
//! weights follow the likelihoods, the cloud is resampled systematically, and
//! the template set is refreshed from the result.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureKind;
use crate::geometry::BoundingBox;
use crate::gray::{crop_warp, GrayImage};
use crate::solver::{
    precompute, solve, solve_batch, CandidateFeatures, Dictionary, Precomputation, SolverConfig,
};

pub const MIN_SCALE: f64 = 0.2;
pub const MAX_SCALE: f64 = 5.0;

// Candidates solved together per worker.
const SOLVE_BATCH: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    pub n_particles: usize,
    pub k_templates: usize,
    /// Std-dev of the per-frame center random walk, pixels.
    pub sigma_xy: f64,
    /// Std-dev of the per-frame log-scale random walk.
    pub sigma_s: f64,
    pub solver: SolverConfig,
    pub features: FeatureKind,
    /// Cosine similarity below which the result replaces a template.
    pub tau: f64,
    pub seed: u64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            n_particles: 400,
            k_templates: 10,
            sigma_xy: 4.0,
            sigma_s: 0.02,
            solver: SolverConfig::default(),
            features: FeatureKind::Intensity,
            tau: 0.85,
            seed: 0,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles == 0 || self.k_templates == 0 {
            return Err(Error::invalid("n_particles and k_templates must be at least 1"));
        }
        if !(self.sigma_xy >= 0.0 && self.sigma_s >= 0.0) {
            return Err(Error::invalid("motion noise must be nonnegative"));
        }
        self.solver.validate()
    }
}

/// Particle: box center and scale relative to the initial box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleState {
    pub cx: f64,
    pub cy: f64,
    pub s: f64,
}

impl ParticleState {
    pub fn to_box(&self, base_w: f64, base_h: f64) -> Result<BoundingBox> {
        BoundingBox::from_center(self.cx, self.cy, self.s * base_w, self.s * base_h)
    }
}

/// `k` template appearances; slot 0 holds the initial crop and is never replaced.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateSet {
    pub crops: Vec<GrayImage>,
    pub features: Vec<CandidateFeatures>,
    pub weights: Vec<f64>,
}

impl TemplateSet {
    pub fn len(&self) -> usize {
        self.crops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.crops.is_empty()
    }

    pub fn dictionary(&self) -> Result<Dictionary> {
        Dictionary::from_templates(&self.features)
    }
}

/// Average over templates of the coefficients pairing candidate patch `r`
/// with patch `r` of each template.
pub fn alignment_pool(c_hat: &DMatrix<f64>, patches: usize, templates: usize) -> Result<DVector<f64>> {
    if c_hat.shape() != (patches * templates, patches) {
        return Err(Error::invalid(format!(
            "code is {}x{}, expected {}x{}",
            c_hat.nrows(),
            c_hat.ncols(),
            patches * templates,
            patches
        )));
    }
    Ok(DVector::from_fn(patches, |r, _| {
        (0..templates).map(|q| c_hat[(q * patches + r, r)]).sum::<f64>() / templates as f64
    }))
}

/// Aligned coefficient mass attributed to each template.
pub fn aligned_mass(c_hat: &DMatrix<f64>, patches: usize, templates: usize) -> Vec<f64> {
    (0..templates)
        .map(|q| (0..patches).map(|r| c_hat[(q * patches + r, r)]).sum())
        .collect()
}

#[derive(Debug, Clone)]
pub struct CandidateScore {
    pub likelihood: f64,
    pub code: DMatrix<f64>,
    pub converged: bool,
}

/// Codes one candidate and sums its pooled representative vector.
pub fn candidate_likelihood(
    x: &CandidateFeatures,
    dict: &Dictionary,
    pre: &Precomputation,
    cfg: &SolverConfig,
) -> Result<CandidateScore> {
    let (code, diag) = solve(x, dict, pre, cfg)?;
    let pooled = alignment_pool(&code, dict.patches(), dict.templates())?;
    Ok(CandidateScore {
        likelihood: pooled.sum(),
        code,
        converged: diag.converged,
    })
}

/// Gaussian random walk on center and log-scale.
pub fn propagate<R: Rng>(particles: &mut [ParticleState], sigma_xy: f64, sigma_s: f64, rng: &mut R) {
    for p in particles.iter_mut() {
        let nx: f64 = rng.sample(StandardNormal);
        let ny: f64 = rng.sample(StandardNormal);
        let ns: f64 = rng.sample(StandardNormal);
        p.cx += sigma_xy * nx;
        p.cy += sigma_xy * ny;
        p.s = (p.s * (sigma_s * ns).exp()).clamp(MIN_SCALE, MAX_SCALE);
    }
}

/// Systematic resampling indices for pointers `(offset + i) / n`, `offset` in `[0, 1)`.
pub fn systematic_indices(weights: &[f64], offset: f64) -> Vec<usize> {
    let n = weights.len();
    let total: f64 = weights.iter().sum();
    let mut out = Vec::with_capacity(n);
    let mut cumulative = 0.0;
    let mut j = 0;
    for i in 0..n {
        let pointer = (offset + i as f64) / n as f64 * total;
        while j + 1 < n && cumulative + weights[j] <= pointer {
            cumulative += weights[j];
            j += 1;
        }
        out.push(j);
    }
    out
}

/// Systematic resampling with one uniform offset; weights are reset to uniform.
pub fn resample<R: Rng>(
    particles: &[ParticleState],
    weights: &mut [f64],
    rng: &mut R,
) -> Vec<ParticleState> {
    let offset: f64 = rng.random();
    let picked = systematic_indices(weights, offset);
    let n = particles.len();
    weights.iter_mut().for_each(|w| *w = 1.0 / n as f64);
    picked.into_iter().map(|i| particles[i]).collect()
}

/// Index of the largest finite value, lowest index on ties.
pub fn argmax_lowest(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            continue;
        }
        match best {
            Some(b) if values[b] >= v => {}
            _ => best = Some(i),
        }
    }
    best
}

fn cosine(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.dot(b) / (na * nb)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub bbox: BoundingBox,
    pub likelihood: f64,
    /// No candidate could be scored; the previous box was repeated.
    pub lost: bool,
    pub replaced_template: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: TrackerConfig,
    templates: TemplateSet,
    dictionary: Dictionary,
    pre: Precomputation,
    particles: Vec<ParticleState>,
    weights: Vec<f64>,
    base_size: (f64, f64),
    last_box: BoundingBox,
    frame_index: usize,
    rng: ChaCha8Rng,
}

impl Tracker {
    pub fn init(first_frame: &GrayImage, init_box: BoundingBox, cfg: TrackerConfig) -> Result<Self> {
        cfg.validate()?;
        let (fw, fh) = (first_frame.width() as f64, first_frame.height() as f64);
        if init_box.x < 0.0 || init_box.y < 0.0 || init_box.right() > fw || init_box.bottom() > fh {
            return Err(Error::invalid(format!(
                "initial box {init_box:?} is not inside the {fw}x{fh} frame"
            )));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let region = cfg.features.region_size();
        let mut crops = Vec::with_capacity(cfg.k_templates);
        crops.push(crop_warp(first_frame, &init_box, region)?);
        for _ in 1..cfg.k_templates {
            let dx = rng.random_range(-2..=2) as f64;
            let dy = rng.random_range(-2..=2) as f64;
            let shifted = BoundingBox::new(
                (init_box.x + dx).clamp(0.0, fw - init_box.w),
                (init_box.y + dy).clamp(0.0, fh - init_box.h),
                init_box.w,
                init_box.h,
            )?;
            crops.push(crop_warp(first_frame, &shifted, region)?);
        }
        let features = crops
            .iter()
            .map(|c| cfg.features.extract(c))
            .collect::<Result<Vec<_>>>()?;
        let templates = TemplateSet {
            crops,
            features,
            weights: vec![1.0 / cfg.k_templates as f64; cfg.k_templates],
        };
        let dictionary = templates.dictionary()?;
        let pre = precompute(&dictionary, &cfg.solver)?;

        let (cx, cy) = init_box.center();
        let n = cfg.n_particles;
        Ok(Self {
            cfg,
            templates,
            dictionary,
            pre,
            particles: vec![ParticleState { cx, cy, s: 1.0 }; n],
            weights: vec![1.0 / n as f64; n],
            base_size: (init_box.w, init_box.h),
            last_box: init_box,
            frame_index: 0,
            rng,
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    pub fn templates(&self) -> &TemplateSet {
        &self.templates
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dictionary
    }

    pub fn particles(&self) -> &[ParticleState] {
        &self.particles
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn frame_index(&self) -> usize {
        self.frame_index
    }

    pub fn last_box(&self) -> BoundingBox {
        self.last_box
    }

    /// Candidate box for a particle, or `None` when it cannot be scored on a
    /// frame of the given size (center off-frame or box larger than the frame).
    fn candidate_box(&self, p: &ParticleState, fw: f64, fh: f64) -> Option<BoundingBox> {
        let b = p.to_box(self.base_size.0, self.base_size.1).ok()?;
        let inside = p.cx >= 0.0 && p.cx < fw && p.cy >= 0.0 && p.cy < fh;
        (inside && b.w <= fw && b.h <= fh).then_some(b)
    }

    /// Scores every particle against the current dictionary; unscorable
    /// particles get `None`.
    pub fn score_particles(&self, frame: &GrayImage) -> Result<Vec<Option<CandidateScore>>> {
        let (fw, fh) = (frame.width() as f64, frame.height() as f64);
        let region = self.cfg.features.region_size();
        let boxes: Vec<Option<BoundingBox>> = self
            .particles
            .iter()
            .map(|p| self.candidate_box(p, fw, fh))
            .collect();
        let scorable: Vec<(usize, BoundingBox)> = boxes
            .iter()
            .enumerate()
            .filter_map(|(i, b)| b.map(|b| (i, b)))
            .collect();

        let chunks: Vec<Vec<(usize, CandidateScore)>> = scorable
            .par_chunks(SOLVE_BATCH)
            .map(|chunk| {
                let xs = chunk
                    .iter()
                    .map(|(_, b)| self.cfg.features.extract(&crop_warp(frame, b, region)?))
                    .collect::<Result<Vec<_>>>()?;
                let solved = solve_batch(&xs, &self.dictionary, &self.pre, &self.cfg.solver)?;
                chunk
                    .iter()
                    .zip(solved)
                    .map(|((i, _), (code, diag))| {
                        let pooled = alignment_pool(&code, self.dictionary.patches(), self.dictionary.templates())?;
                        Ok((*i, CandidateScore { likelihood: pooled.sum(), code, converged: diag.converged }))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;

        let mut scores: Vec<Option<CandidateScore>> = (0..boxes.len()).map(|_| None).collect();
        for (i, s) in chunks.into_iter().flatten() {
            scores[i] = Some(s);
        }
        Ok(scores)
    }

    pub fn step(&mut self, frame: &GrayImage) -> Result<StepOutcome> {
        self.frame_index += 1;
        propagate(
            &mut self.particles,
            self.cfg.sigma_xy,
            self.cfg.sigma_s,
            &mut self.rng,
        );

        let scores = self.score_particles(frame)?;
        let likelihoods: Vec<f64> = scores
            .iter()
            .map(|s| s.as_ref().map_or(f64::NEG_INFINITY, |s| s.likelihood))
            .collect();

        let Some(best) = argmax_lowest(&likelihoods) else {
            log::warn!("frame {}: no candidate could be scored, target lost", self.frame_index);
            let n = self.particles.len();
            self.weights.iter_mut().for_each(|w| *w = 1.0 / n as f64);
            return Ok(StepOutcome {
                bbox: self.last_box,
                likelihood: f64::NEG_INFINITY,
                lost: true,
                replaced_template: None,
            });
        };
        let result = self.particles[best].to_box(self.base_size.0, self.base_size.1)?;
        let winner = scores[best].as_ref().map(|s| s.code.clone()).unwrap_or_default();

        for (w, &lk) in self.weights.iter_mut().zip(&likelihoods) {
            *w = if lk.is_finite() { lk.max(0.0) } else { 0.0 };
        }
        let total: f64 = self.weights.iter().sum();
        let n = self.weights.len();
        if total > 0.0 {
            self.weights.iter_mut().for_each(|w| *w /= total);
        } else {
            self.weights.iter_mut().for_each(|w| *w = 1.0 / n as f64);
        }
        self.particles = resample(&self.particles, &mut self.weights, &mut self.rng);

        let replaced = self.update_templates(&result, frame, &winner)?;
        self.last_box = result;
        Ok(StepOutcome {
            bbox: result,
            likelihood: likelihoods[best],
            lost: false,
            replaced_template: replaced,
        })
    }

    /// Reweights templates by the winner's aligned mass and, when the result
    /// is dissimilar to every template, swaps it in for the lowest-weight
    /// mutable template. Returns the replaced slot.
    pub fn update_templates(
        &mut self,
        result_box: &BoundingBox,
        frame: &GrayImage,
        winning_code: &DMatrix<f64>,
    ) -> Result<Option<usize>> {
        let l = self.dictionary.patches();
        let k = self.dictionary.templates();
        if winning_code.shape() == (l * k, l) {
            for (w, m) in self
                .templates
                .weights
                .iter_mut()
                .zip(aligned_mass(winning_code, l, k))
            {
                *w *= 1.0 + m;
            }
        }

        let crop = crop_warp(frame, result_box, self.cfg.features.region_size())?;
        let feats = self.cfg.features.extract(&crop)?;
        let max_sim = self
            .templates
            .features
            .iter()
            .map(|t| cosine(&feats.data, &t.data))
            .fold(f64::NEG_INFINITY, f64::max);

        let mut replaced = None;
        if k > 1 && !feats.degenerate && max_sim < self.cfg.tau {
            let mut slot = 1;
            for q in 2..k {
                if self.templates.weights[q] < self.templates.weights[slot] {
                    slot = q;
                }
            }
            let med = median(&self.templates.weights);
            self.templates.crops[slot] = crop;
            self.templates.features[slot] = feats;
            self.templates.weights[slot] = med;
            self.dictionary = self.templates.dictionary()?;
            self.pre = precompute(&self.dictionary, &self.cfg.solver)?;
            replaced = Some(slot);
        }

        let total: f64 = self.templates.weights.iter().sum();
        self.templates.weights.iter_mut().for_each(|w| *w /= total);
        Ok(replaced)
    }
}
