//! Overlapping patch grids and per-patch descriptors.
//!
//! A candidate region is warped to a fixed square size, cut into an
//! overlapping grid of `l` square patches (row-major, top-left first), and
//! each patch becomes one unit-norm column of a d x l feature matrix.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gray::GrayImage;
use crate::solver::CandidateFeatures;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchGridConfig {
    pub region_size: usize,
    pub patch_size: usize,
    pub stride: usize,
}

impl PatchGridConfig {
    /// 32x32 region, 16x16 patches, stride 8: nine patches.
    pub const INTENSITY: Self = Self {
        region_size: 32,
        patch_size: 16,
        stride: 8,
    };

    /// 64x64 region, 32x32 patches, stride 16: nine patches.
    pub const HOG: Self = Self {
        region_size: 64,
        patch_size: 32,
        stride: 16,
    };

    pub fn validate(&self) -> Result<()> {
        if self.patch_size == 0 || self.stride == 0 || self.patch_size > self.region_size {
            return Err(Error::invalid(format!("invalid patch grid {self:?}")));
        }
        if !(self.region_size - self.patch_size).is_multiple_of(self.stride) {
            return Err(Error::invalid(format!(
                "region {} minus patch {} is not a multiple of stride {}",
                self.region_size, self.patch_size, self.stride
            )));
        }
        Ok(())
    }

    pub fn per_side(&self) -> usize {
        (self.region_size - self.patch_size) / self.stride + 1
    }

    /// Number of patches `l`.
    pub fn count(&self) -> usize {
        self.per_side() * self.per_side()
    }

    /// Top-left `(x, y)` of every patch in grid order.
    pub fn offsets(&self) -> Vec<(usize, usize)> {
        let n = self.per_side();
        (0..n)
            .flat_map(|row| (0..n).map(move |col| (col * self.stride, row * self.stride)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HogParams {
    /// Cell side in pixels.
    pub cell_size: usize,
    /// Block side in cells.
    pub block_cells: usize,
    /// Block stride in cells.
    pub block_stride: usize,
    /// Unsigned orientation bins over `[0, pi)`.
    pub bins: usize,
    pub epsilon: f64,
}

impl Default for HogParams {
    fn default() -> Self {
        Self {
            cell_size: 4,
            block_cells: 2,
            block_stride: 1,
            bins: 4,
            epsilon: 1e-5,
        }
    }
}

impl HogParams {
    fn blocks_per_side(&self, patch_size: usize) -> Result<usize> {
        if self.cell_size == 0 || self.block_cells == 0 || self.block_stride == 0 || self.bins == 0 {
            return Err(Error::invalid(format!("invalid HOG parameters {self:?}")));
        }
        if !patch_size.is_multiple_of(self.cell_size) {
            return Err(Error::invalid(format!(
                "patch size {patch_size} is not a multiple of cell size {}",
                self.cell_size
            )));
        }
        let cells = patch_size / self.cell_size;
        if cells < self.block_cells || !(cells - self.block_cells).is_multiple_of(self.block_stride) {
            return Err(Error::invalid(format!(
                "{cells} cells per side do not tile into {}-cell blocks with stride {}",
                self.block_cells, self.block_stride
            )));
        }
        Ok((cells - self.block_cells) / self.block_stride + 1)
    }

    /// Descriptor length for a square patch of the given side.
    pub fn dimension(&self, patch_size: usize) -> Result<usize> {
        let b = self.blocks_per_side(patch_size)?;
        Ok(b * b * self.bins)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeatureKind {
    Intensity,
    Hog(HogParams),
}

impl FeatureKind {
    pub fn hog() -> Self {
        FeatureKind::Hog(HogParams::default())
    }

    pub fn grid(&self) -> PatchGridConfig {
        match self {
            FeatureKind::Intensity => PatchGridConfig::INTENSITY,
            FeatureKind::Hog(_) => PatchGridConfig::HOG,
        }
    }

    pub fn region_size(&self) -> usize {
        self.grid().region_size
    }

    pub fn dimension(&self) -> Result<usize> {
        let grid = self.grid();
        match self {
            FeatureKind::Intensity => Ok(grid.patch_size * grid.patch_size),
            FeatureKind::Hog(p) => p.dimension(grid.patch_size),
        }
    }

    pub fn extract(&self, region: &GrayImage) -> Result<CandidateFeatures> {
        match self {
            FeatureKind::Intensity => intensity_features(region, &self.grid()),
            FeatureKind::Hog(p) => hog_features(region, &self.grid(), p),
        }
    }
}

pub fn extract_patch_grid(region: &GrayImage, cfg: &PatchGridConfig) -> Result<Vec<GrayImage>> {
    cfg.validate()?;
    if region.width() != cfg.region_size || region.height() != cfg.region_size {
        return Err(Error::invalid(format!(
            "region is {}x{}, grid expects {}x{}",
            region.width(),
            region.height(),
            cfg.region_size,
            cfg.region_size
        )));
    }
    cfg.offsets()
        .into_iter()
        .map(|(x, y)| region.window(x, y, cfg.patch_size, cfg.patch_size))
        .collect()
}

/// Stacks descriptors as columns and l2-normalizes each; zero columns stay zero.
fn normalized_columns(columns: Vec<DVector<f64>>) -> CandidateFeatures {
    let d = columns[0].len();
    let mut data = DMatrix::zeros(d, columns.len());
    let mut degenerate = false;
    for (j, col) in columns.iter().enumerate() {
        let norm = col.norm();
        if norm > 0.0 {
            data.column_mut(j).copy_from(&(col / norm));
        } else {
            degenerate = true;
        }
    }
    if degenerate {
        log::warn!("zero-energy patch left unnormalized");
    }
    CandidateFeatures { data, degenerate }
}

/// Raw patch pixels (row-major), one unit-norm column per patch.
pub fn intensity_features(region: &GrayImage, grid: &PatchGridConfig) -> Result<CandidateFeatures> {
    let patches = extract_patch_grid(region, grid)?;
    let cols = patches
        .iter()
        .map(|p| DVector::from_column_slice(p.values()))
        .collect();
    Ok(normalized_columns(cols))
}

/// Histogram of oriented gradients for one square patch.
///
/// Gradients are `[-1, 0, 1]` differences with replicated borders.
/// Orientation is unsigned; each pixel splits its magnitude linearly between
/// the two nearest bin centers (`b * pi / bins`, circular). Cell histograms
/// are summed over each block, and each block histogram is normalized by
/// `sqrt(||v||^2 + eps^2)`.
pub fn hog_descriptor(patch: &GrayImage, params: &HogParams) -> Result<DVector<f64>> {
    if patch.width() != patch.height() {
        return Err(Error::invalid("HOG patch must be square"));
    }
    let size = patch.width();
    let blocks = params.blocks_per_side(size)?;
    let cells = size / params.cell_size;
    let bins = params.bins;
    let bin_width = PI / bins as f64;

    let mut cell_hist = vec![0.0; cells * cells * bins];
    for y in 0..size {
        for x in 0..size {
            let (xi, yi) = (x as isize, y as isize);
            let gx = patch.get_clamped(xi + 1, yi) - patch.get_clamped(xi - 1, yi);
            let gy = patch.get_clamped(xi, yi + 1) - patch.get_clamped(xi, yi - 1);
            let mag = gx.hypot(gy);
            if mag == 0.0 {
                continue;
            }
            let mut angle = gy.atan2(gx);
            if angle < 0.0 {
                angle += PI;
            }
            if angle >= PI {
                angle -= PI;
            }
            let pos = angle / bin_width;
            let lower = pos.floor();
            let frac = pos - lower;
            let b0 = (lower as usize) % bins;
            let b1 = (b0 + 1) % bins;
            let cell = (y / params.cell_size) * cells + x / params.cell_size;
            cell_hist[cell * bins + b0] += mag * (1.0 - frac);
            cell_hist[cell * bins + b1] += mag * frac;
        }
    }

    let mut out = DVector::zeros(blocks * blocks * bins);
    let mut v = vec![0.0; bins];
    for by in 0..blocks {
        for bx in 0..blocks {
            v.iter_mut().for_each(|e| *e = 0.0);
            for cy in by * params.block_stride..by * params.block_stride + params.block_cells {
                for cx in bx * params.block_stride..bx * params.block_stride + params.block_cells {
                    let base = (cy * cells + cx) * bins;
                    for (b, e) in v.iter_mut().enumerate() {
                        *e += cell_hist[base + b];
                    }
                }
            }
            let denom = (v.iter().map(|e| e * e).sum::<f64>() + params.epsilon * params.epsilon).sqrt();
            let base = (by * blocks + bx) * bins;
            for (b, e) in v.iter().enumerate() {
                out[base + b] = e / denom;
            }
        }
    }
    Ok(out)
}

/// One unit-norm HOG column per grid patch.
pub fn hog_features(
    region: &GrayImage,
    grid: &PatchGridConfig,
    params: &HogParams,
) -> Result<CandidateFeatures> {
    let patches = extract_patch_grid(region, grid)?;
    let cols = patches
        .iter()
        .map(|p| hog_descriptor(p, params))
        .collect::<Result<Vec<_>>>()?;
    Ok(normalized_columns(cols))
}
