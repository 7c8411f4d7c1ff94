//! Floating-point grayscale images and bilinear crop-warp.

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;

/// Row-major grayscale image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl GrayImage {
    /// Builds an image, clamping values into `[0, 1]`.
    pub fn new(width: usize, height: usize, mut values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!("image must be non-empty, got {width}x{height}")));
        }
        if values.len() != width * height {
            return Err(Error::invalid(format!(
                "{} values for a {width}x{height} image",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("image contains non-finite values"));
        }
        for v in &mut values {
            *v = v.clamp(0.0, 1.0);
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self::new(width, height, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// Pixel lookup with edge replication for out-of-range coordinates.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let xc = x.clamp(0, self.width as isize - 1) as usize;
        let yc = y.clamp(0, self.height as isize - 1) as usize;
        self.get(xc, yc)
    }

    /// Integer sub-window; must lie inside the image.
    pub fn window(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Self> {
        if x0 + width > self.width || y0 + height > self.height {
            return Err(Error::invalid(format!(
                "window {width}x{height}+{x0}+{y0} exceeds {}x{} image",
                self.width, self.height
            )));
        }
        let mut values = Vec::with_capacity(width * height);
        for y in y0..y0 + height {
            values.extend_from_slice(&self.values[y * self.width + x0..y * self.width + x0 + width]);
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    /// Luminance conversion `0.299 R + 0.587 G + 0.114 B` of an 8-bit RGB image.
    pub fn from_rgb8(img: &image::RgbImage) -> Self {
        let (w, h) = img.dimensions();
        let values = img
            .pixels()
            .map(|p| {
                let [r, g, b] = p.0;
                (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64) / 255.0
            })
            .collect();
        Self {
            width: w as usize,
            height: h as usize,
            values,
        }
    }

    pub fn from_luma8(img: &image::GrayImage) -> Self {
        let (w, h) = img.dimensions();
        Self {
            width: w as usize,
            height: h as usize,
            values: img.pixels().map(|p| p.0[0] as f64 / 255.0).collect(),
        }
    }

    pub fn from_dynamic(img: &image::DynamicImage) -> Self {
        match img {
            image::DynamicImage::ImageLuma8(g) => Self::from_luma8(g),
            other => Self::from_rgb8(&other.to_rgb8()),
        }
    }

    /// Quantizes to 8 bits.
    pub fn to_luma8(&self) -> image::GrayImage {
        image::GrayImage::from_fn(self.width as u32, self.height as u32, |x, y| {
            let v = self.get(x as usize, y as usize);
            image::Luma([(v * 255.0).round() as u8])
        })
    }
}

/// Bilinearly resamples `bbox` of `frame` onto an `out_size x out_size` grid.
///
/// Output pixel `(i, j)` samples the source at
/// `(x + (j + 0.5) * w / out - 0.5, y + (i + 0.5) * h / out - 0.5)`, the
/// pixel-center mapping, so a box aligned with an `out x out` pixel region is
/// copied exactly. Samples outside the frame use edge replication.
pub fn crop_warp(frame: &GrayImage, bbox: &BoundingBox, out_size: usize) -> Result<GrayImage> {
    if out_size == 0 {
        return Err(Error::invalid("out_size must be at least 1"));
    }
    let sx = bbox.w / out_size as f64;
    let sy = bbox.h / out_size as f64;
    let mut values = Vec::with_capacity(out_size * out_size);
    for i in 0..out_size {
        let fy = bbox.y + (i as f64 + 0.5) * sy - 0.5;
        let y0 = fy.floor();
        let ty = fy - y0;
        let y0 = y0 as isize;
        for j in 0..out_size {
            let fx = bbox.x + (j as f64 + 0.5) * sx - 0.5;
            let x0 = fx.floor();
            let tx = fx - x0;
            let x0 = x0 as isize;
            let top = lerp(frame.get_clamped(x0, y0), frame.get_clamped(x0 + 1, y0), tx);
            let bottom = lerp(
                frame.get_clamped(x0, y0 + 1),
                frame.get_clamped(x0 + 1, y0 + 1),
                tx,
            );
            values.push(lerp(top, bottom, ty));
        }
    }
    GrayImage::new(out_size, out_size, values)
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    if t == 0.0 {
        a
    } else {
        a + (b - a) * t
    }
}
