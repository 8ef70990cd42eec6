//! Real-valued sample grids and patch preprocessing.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A real-valued 2D grid stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    width: usize,
    height: usize,
    samples: Vec<f64>,
}

impl ImageGrid {
    pub fn new(width: usize, height: usize, samples: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimensions(format!("zero-sized grid {width}x{height}")));
        }
        if samples.len() != width * height {
            return Err(Error::Dimensions(format!(
                "{} samples for a {width}x{height} grid",
                samples.len()
            )));
        }
        if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite sample {bad}")));
        }
        Ok(Self { width, height, samples })
    }

    /// Grid filled with zeros. Panics on a zero dimension.
    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "zero-sized grid");
        Self {
            width,
            height,
            samples: vec![value; width * height],
        }
    }

    /// Builds a grid from `f(row, col)`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "zero-sized grid");
        let mut samples = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                samples.push(f(row, col));
            }
        }
        Self { width, height, samples }
    }

    pub(crate) fn from_raw(width: usize, height: usize, samples: Vec<f64>) -> Self {
        debug_assert_eq!(samples.len(), width * height);
        Self { width, height, samples }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    #[inline]
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.samples[row * self.width + col]
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Sum of squared samples.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.map(|v| v * factor)
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self::from_raw(self.width, self.height, self.samples.iter().map(|&v| f(v)).collect())
    }

    /// Circular shift: output(r, c) = input(r - dy, c - dx).
    pub fn shifted(&self, dy: isize, dx: isize) -> Self {
        let (w, h) = (self.width as isize, self.height as isize);
        Self::from_fn(self.width, self.height, |r, c| {
            let sr = (r as isize - dy).rem_euclid(h) as usize;
            let sc = (c as isize - dx).rem_euclid(w) as usize;
            self.get(sr, sc)
        })
    }

    /// Copies one `size`×`size` patch per `(row, col)` offset.
    pub fn extract_patches(&self, size: usize, offsets: &[(usize, usize)]) -> Result<Vec<ImageGrid>> {
        if size == 0 {
            return Err(Error::InvalidParameter("patch size must be positive".into()));
        }
        if size > self.width || size > self.height {
            return Err(Error::Dimensions(format!(
                "patch size {size} exceeds the {}x{} image",
                self.width, self.height
            )));
        }
        offsets
            .iter()
            .map(|&(row, col)| {
                if row + size > self.height || col + size > self.width {
                    return Err(Error::OutOfBounds {
                        row,
                        col,
                        size,
                        width: self.width,
                        height: self.height,
                    });
                }
                let mut samples = Vec::with_capacity(size * size);
                for r in row..row + size {
                    let start = r * self.width + col;
                    samples.extend_from_slice(&self.samples[start..start + size]);
                }
                Ok(ImageGrid::from_raw(size, size, samples))
            })
            .collect()
    }

    /// Zero mean, unit sum of squares.
    pub fn normalize_patch(&self) -> Result<ImageGrid> {
        if self.samples.len() < 2 {
            return Err(Error::Dimensions("normalization needs at least 2 samples".into()));
        }
        let peak = self.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let n = self.samples.len() as f64;
        let mut out = self.samples.clone();
        // two passes: the second removes the rounding left by the first
        for _ in 0..2 {
            let mean = out.iter().sum::<f64>() / n;
            out.iter_mut().for_each(|v| *v -= mean);
            let energy: f64 = out.iter().map(|v| v * v).sum();
            if !(energy > peak * peak * n * 1e-24) {
                return Err(Error::ZeroEnergy);
            }
            let scale = 1.0 / libm::sqrt(energy);
            out.iter_mut().for_each(|v| *v *= scale);
        }
        Ok(ImageGrid::from_raw(self.width, self.height, out))
    }

    /// Halves both dimensions by averaging 2×2 blocks.
    pub fn downscale_half(&self) -> Result<ImageGrid> {
        if !self.width.is_multiple_of(2) || !self.height.is_multiple_of(2) {
            return Err(Error::OddDimension {
                width: self.width,
                height: self.height,
            });
        }
        let (w, h) = (self.width / 2, self.height / 2);
        Ok(ImageGrid::from_fn(w, h, |r, c| {
            let (r2, c2) = (2 * r, 2 * c);
            0.25 * (self.get(r2, c2) + self.get(r2, c2 + 1) + self.get(r2 + 1, c2) + self.get(r2 + 1, c2 + 1))
        }))
    }

    /// Periodic convolution with a sampled, unit-sum Gaussian truncated at
    /// radius `ceil(4 sigma)`. `sigma == 0` returns the input.
    pub fn gaussian_blur(&self, sigma: f64) -> Result<ImageGrid> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!("blur sigma {sigma} must be >= 0")));
        }
        if sigma == 0.0 {
            return Ok(self.clone());
        }
        let kernel = gaussian_kernel_1d(sigma);
        let radius = (kernel.len() / 2) as isize;
        let (w, h) = (self.width, self.height);

        let mut tmp = vec![0.0; w * h];
        for r in 0..h {
            let row = &self.samples[r * w..(r + 1) * w];
            for c in 0..w {
                let mut acc = 0.0;
                for (i, k) in kernel.iter().enumerate() {
                    let src = (c as isize + i as isize - radius).rem_euclid(w as isize) as usize;
                    acc += k * row[src];
                }
                tmp[r * w + c] = acc;
            }
        }
        let mut out = vec![0.0; w * h];
        for r in 0..h {
            for (i, k) in kernel.iter().enumerate() {
                let src = (r as isize + i as isize - radius).rem_euclid(h as isize) as usize;
                let src_row = &tmp[src * w..(src + 1) * w];
                let dst_row = &mut out[r * w..(r + 1) * w];
                for (d, s) in dst_row.iter_mut().zip(src_row) {
                    *d += k * s;
                }
            }
        }
        Ok(ImageGrid::from_raw(w, h, out))
    }
}

/// Normalized 1D Gaussian taps over `-ceil(4 sigma)..=ceil(4 sigma)`.
pub fn gaussian_kernel_1d(sigma: f64) -> Vec<f64> {
    let radius = libm::ceil(4.0 * sigma) as isize;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|d| libm::exp(-((d * d) as f64) / (2.0 * sigma * sigma)))
        .collect();
    let total: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= total);
    taps
}

/// Offsets of the non-overlapping `size`×`size` tiles covering the image,
/// row-major. Trailing strips narrower than `size` are dropped.
pub fn tile_offsets(width: usize, height: usize, size: usize) -> Vec<(usize, usize)> {
    if size == 0 {
        return Vec::new();
    }
    let mut offsets = Vec::new();
    for r in 0..height / size {
        for c in 0..width / size {
            offsets.push((r * size, c * size));
        }
    }
    offsets
}

/// Four corner windows followed by the centered window.
pub fn five_crop_offsets(width: usize, height: usize, size: usize) -> Vec<(usize, usize)> {
    if size > width || size > height {
        return Vec::new();
    }
    let (dr, dc) = (height - size, width - size);
    vec![(0, 0), (0, dc), (dr, 0), (dr, dc), (dr / 2, dc / 2)]
}

/// Patches cut from one source texture.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchSet {
    patches: Vec<ImageGrid>,
    class_label: String,
    source_id: String,
}

impl PatchSet {
    pub fn new(patches: Vec<ImageGrid>, class_label: impl Into<String>, source_id: impl Into<String>) -> Result<Self> {
        let class_label = class_label.into();
        if class_label.is_empty() {
            return Err(Error::InvalidParameter("empty class label".into()));
        }
        if let Some(first) = patches.first() {
            if patches
                .iter()
                .any(|p| p.width() != first.width() || p.height() != first.height())
            {
                return Err(Error::Dimensions("patches of one set differ in size".into()));
            }
        }
        Ok(Self {
            patches,
            class_label,
            source_id: source_id.into(),
        })
    }

    pub fn patches(&self) -> &[ImageGrid] {
        &self.patches
    }

    pub fn class_label(&self) -> &str {
        &self.class_label
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }
}
