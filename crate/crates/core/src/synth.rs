//! Synthetic tracking sequences: a fixed random texture square performing a
//! Gaussian random walk over a freshly drawn noisy background.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::gray::GrayImage;
use crate::io::{format_boxes, save_frame, SequenceSpec, GROUND_TRUTH_FILE, IMAGE_DIR};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub width: usize,
    pub height: usize,
    /// Side of the square target, pixels.
    pub target_size: usize,
    pub frames: usize,
    /// Per-axis std-dev of the frame-to-frame displacement, pixels.
    pub sigma: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            width: 160,
            height: 120,
            target_size: 32,
            frames: 100,
            sigma: 2.0,
            seed: 0,
        }
    }
}

const TEXTURE_CELL: usize = 4;
const BACKGROUND_MAX: f64 = 0.3;
const TEXTURE_MIN: f64 = 0.45;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.frames == 0 {
            return Err(Error::invalid("synthetic sequence needs at least one frame"));
        }
        if self.target_size == 0 || self.target_size >= self.width || self.target_size >= self.height {
            return Err(Error::invalid(format!(
                "target of {} px does not fit a {}x{} frame",
                self.target_size, self.width, self.height
            )));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma must be finite and nonnegative"));
        }
        Ok(())
    }
}

/// Ground-truth boxes: a random walk started at the frame center, reflected
/// at the frame borders.
pub fn synth_trajectory(cfg: &SynthConfig) -> Result<Vec<BoundingBox>> {
    cfg.validate()?;
    let size = cfg.target_size as f64;
    let max_x = (cfg.width - cfg.target_size) as f64;
    let max_y = (cfg.height - cfg.target_size) as f64;
    let mut rng = stream_rng(cfg.seed, 1);

    let step = |pos: f64, delta: f64, max: f64| -> f64 {
        let next = pos + delta;
        if (0.0..=max).contains(&next) {
            next
        } else {
            (pos - delta).clamp(0.0, max)
        }
    };

    let (mut x, mut y) = ((max_x / 2.0).floor(), (max_y / 2.0).floor());
    let mut boxes = Vec::with_capacity(cfg.frames);
    boxes.push(BoundingBox::new(x, y, size, size)?);
    for _ in 1..cfg.frames {
        let dx: f64 = rng.sample(StandardNormal);
        let dy: f64 = rng.sample(StandardNormal);
        x = step(x, cfg.sigma * dx, max_x);
        y = step(y, cfg.sigma * dy, max_y);
        boxes.push(BoundingBox::new(x, y, size, size)?);
    }
    Ok(boxes)
}

/// Blocky random texture of side `size`, values in `[TEXTURE_MIN, 1]`.
pub fn synth_texture(size: usize, seed: u64) -> GrayImage {
    let mut rng = stream_rng(seed, 2);
    let cells = size.div_ceil(TEXTURE_CELL);
    let levels: Vec<f64> = (0..cells * cells)
        .map(|_| rng.random_range(TEXTURE_MIN..=1.0))
        .collect();
    GrayImage::from_fn(size, size, |x, y| {
        levels[(y / TEXTURE_CELL) * cells + x / TEXTURE_CELL]
    })
    .expect("texture values are in range")
}

/// Renders one frame: uniform noise in `[0, BACKGROUND_MAX]` with the texture
/// pasted at `target` (nearest sampling at pixel centers).
pub fn render_frame<R: Rng>(
    cfg: &SynthConfig,
    texture: &GrayImage,
    target: &BoundingBox,
    rng: &mut R,
) -> Result<GrayImage> {
    let size = texture.width() as f64;
    let mut values = Vec::with_capacity(cfg.width * cfg.height);
    for y in 0..cfg.height {
        for x in 0..cfg.width {
            let u = x as f64 + 0.5 - target.x;
            let v = y as f64 + 0.5 - target.y;
            let noise = rng.random_range(0.0..=BACKGROUND_MAX);
            if (0.0..size).contains(&u) && (0.0..size).contains(&v) {
                values.push(texture.get(u as usize, v as usize));
            } else {
                values.push(noise);
            }
        }
    }
    GrayImage::new(cfg.width, cfg.height, values)
}

/// In-memory frames and ground truth.
pub fn synth_frames(cfg: &SynthConfig) -> Result<(Vec<GrayImage>, Vec<BoundingBox>)> {
    let truth = synth_trajectory(cfg)?;
    let texture = synth_texture(cfg.target_size, cfg.seed);
    let mut rng = stream_rng(cfg.seed, 3);
    let frames = truth
        .iter()
        .map(|b| render_frame(cfg, &texture, b, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    Ok((frames, truth))
}

/// Writes an OTB-layout sequence (`img/0001.png`, ..., `groundtruth_rect.txt`).
pub fn synth_sequence(cfg: &SynthConfig, out_dir: &Path) -> Result<SequenceSpec> {
    let (frames, truth) = synth_frames(cfg)?;
    let img_dir = out_dir.join(IMAGE_DIR);
    fs::create_dir_all(&img_dir).map_err(|e| Error::io(&img_dir, e))?;

    let mut paths = Vec::with_capacity(frames.len());
    for (i, frame) in frames.iter().enumerate() {
        let path = img_dir.join(format!("{:04}.png", i + 1));
        save_frame(frame, &path)?;
        paths.push(path);
    }
    let gt_path = out_dir.join(GROUND_TRUTH_FILE);
    fs::write(&gt_path, format_boxes(&truth)).map_err(|e| Error::io(&gt_path, e))?;

    Ok(SequenceSpec {
        name: out_dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "synthetic".into()),
        frames: paths,
        ground_truth: truth.into_iter().map(Some).collect(),
    })
}
