//! Separable 2D Mallat pyramid with the orthonormal Daubechies-2 (4-tap)
//! filter pair and periodic extension.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::grid::ImageGrid;

/// Daubechies-2 analysis low-pass taps.
pub fn db2_lowpass() -> [f64; 4] {
    let s3 = libm::sqrt(3.0);
    let norm = 4.0 * core::f64::consts::SQRT_2;
    [
        (1.0 + s3) / norm,
        (3.0 + s3) / norm,
        (3.0 - s3) / norm,
        (1.0 - s3) / norm,
    ]
}

/// Quadrature mirror high-pass: `g[k] = (-1)^k h[3-k]`.
pub fn db2_highpass() -> [f64; 4] {
    let h = db2_lowpass();
    [h[3], -h[2], h[1], -h[0]]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Orientation {
    /// Low-pass along rows, high-pass along columns.
    Horizontal,
    /// High-pass along rows, low-pass along columns.
    Vertical,
    Diagonal,
}

impl Orientation {
    pub const ALL: [Orientation; 3] = [Orientation::Horizontal, Orientation::Vertical, Orientation::Diagonal];

    fn short(self) -> &'static str {
        match self {
            Orientation::Horizontal => "H",
            Orientation::Vertical => "V",
            Orientation::Diagonal => "D",
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DwtPyramid {
    levels: usize,
    details: BTreeMap<(usize, Orientation), ImageGrid>,
    approx: ImageGrid,
}

impl DwtPyramid {
    pub fn new(levels: usize, details: BTreeMap<(usize, Orientation), ImageGrid>, approx: ImageGrid) -> Result<Self> {
        let pyramid = Self {
            levels,
            details,
            approx,
        };
        pyramid.check()?;
        Ok(pyramid)
    }

    fn check(&self) -> Result<()> {
        if self.details.len() != 3 * self.levels {
            return Err(Error::Dimensions(format!(
                "{} detail subbands for {} levels",
                self.details.len(),
                self.levels
            )));
        }
        let (aw, ah) = (self.approx.width(), self.approx.height());
        for level in 1..=self.levels {
            let scale = 1usize << (self.levels - level);
            for o in Orientation::ALL {
                let d = self
                    .details
                    .get(&(level, o))
                    .ok_or_else(|| Error::Dimensions(format!("missing detail ({level}, {o})")))?;
                if d.width() != aw * scale || d.height() != ah * scale {
                    return Err(Error::Dimensions(format!(
                        "detail ({level}, {o}) is {}x{}, expected {}x{}",
                        d.width(),
                        d.height(),
                        aw * scale,
                        ah * scale
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn approx(&self) -> &ImageGrid {
        &self.approx
    }

    pub fn detail(&self, level: usize, orientation: Orientation) -> Option<&ImageGrid> {
        self.details.get(&(level, orientation))
    }

    /// Detail subbands ordered by level (finest first), then orientation.
    pub fn details(&self) -> impl Iterator<Item = (&(usize, Orientation), &ImageGrid)> {
        self.details.iter()
    }

    pub fn energy(&self) -> f64 {
        self.approx.energy() + self.details.values().map(ImageGrid::energy).sum::<f64>()
    }
}

/// Periodic analysis of one line into (low, high) halves.
fn analyze_line(input: &[f64], low: &mut [f64], high: &mut [f64]) {
    let (h, g) = (db2_lowpass(), db2_highpass());
    let n = input.len();
    for i in 0..n / 2 {
        let (mut a, mut d) = (0.0, 0.0);
        for k in 0..4 {
            let x = input[(2 * i + k) % n];
            a += h[k] * x;
            d += g[k] * x;
        }
        low[i] = a;
        high[i] = d;
    }
}

/// Inverse of [`analyze_line`]: the adjoint of an orthonormal analysis.
fn synthesize_line(low: &[f64], high: &[f64], out: &mut [f64]) {
    let (h, g) = (db2_lowpass(), db2_highpass());
    let n = out.len();
    out.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..n / 2 {
        for k in 0..4 {
            out[(2 * i + k) % n] += h[k] * low[i] + g[k] * high[i];
        }
    }
}

/// One 2D analysis step: returns (LL, LH, HL, HH) with rows filtered first.
fn analyze_2d(img: &ImageGrid) -> [ImageGrid; 4] {
    let (w, h) = (img.width(), img.height());
    let (hw, hh) = (w / 2, h / 2);
    // row pass
    let mut row_low = vec![0.0; hw * h];
    let mut row_high = vec![0.0; hw * h];
    for r in 0..h {
        analyze_line(
            &img.samples()[r * w..(r + 1) * w],
            &mut row_low[r * hw..(r + 1) * hw],
            &mut row_high[r * hw..(r + 1) * hw],
        );
    }
    // column pass on each half
    let columns = |src: &[f64]| {
        let mut lo = vec![0.0; hw * hh];
        let mut hi = vec![0.0; hw * hh];
        let mut col = vec![0.0; h];
        let (mut cl, mut ch) = (vec![0.0; hh], vec![0.0; hh]);
        for c in 0..hw {
            for r in 0..h {
                col[r] = src[r * hw + c];
            }
            analyze_line(&col, &mut cl, &mut ch);
            for r in 0..hh {
                lo[r * hw + c] = cl[r];
                hi[r * hw + c] = ch[r];
            }
        }
        (ImageGrid::from_raw(hw, hh, lo), ImageGrid::from_raw(hw, hh, hi))
    };
    let (ll, lh) = columns(&row_low);
    let (hl, hhh) = columns(&row_high);
    [ll, lh, hl, hhh]
}

fn synthesize_2d(ll: &ImageGrid, lh: &ImageGrid, hl: &ImageGrid, hh: &ImageGrid) -> ImageGrid {
    let (hw, hhgt) = (ll.width(), ll.height());
    let (w, h) = (2 * hw, 2 * hhgt);
    let columns = |lo: &ImageGrid, hi: &ImageGrid| {
        let mut out = vec![0.0; hw * h];
        let (mut cl, mut ch) = (vec![0.0; hhgt], vec![0.0; hhgt]);
        let mut col = vec![0.0; h];
        for c in 0..hw {
            for r in 0..hhgt {
                cl[r] = lo.get(r, c);
                ch[r] = hi.get(r, c);
            }
            synthesize_line(&cl, &ch, &mut col);
            for r in 0..h {
                out[r * hw + c] = col[r];
            }
        }
        out
    };
    let row_low = columns(ll, lh);
    let row_high = columns(hl, hh);
    let mut out = vec![0.0; w * h];
    for r in 0..h {
        synthesize_line(
            &row_low[r * hw..(r + 1) * hw],
            &row_high[r * hw..(r + 1) * hw],
            &mut out[r * w..(r + 1) * w],
        );
    }
    ImageGrid::from_raw(w, h, out)
}

/// `levels`-level periodic Daubechies-2 pyramid. Level 1 is the finest.
pub fn dwt2(image: &ImageGrid, levels: usize) -> Result<DwtPyramid> {
    if levels == 0 {
        return Err(Error::InvalidParameter(
            "at least one decomposition level required".into(),
        ));
    }
    let step = 1usize << levels;
    if !image.width().is_multiple_of(step) || !image.height().is_multiple_of(step) {
        return Err(Error::Dimensions(format!(
            "{}x{} image is not divisible by 2^{levels}",
            image.width(),
            image.height()
        )));
    }
    let mut details = BTreeMap::new();
    let mut current = image.clone();
    for level in 1..=levels {
        let [ll, lh, hl, hh] = analyze_2d(&current);
        details.insert((level, Orientation::Horizontal), lh);
        details.insert((level, Orientation::Vertical), hl);
        details.insert((level, Orientation::Diagonal), hh);
        current = ll;
    }
    DwtPyramid::new(levels, details, current)
}

pub fn idwt2(pyramid: &DwtPyramid) -> Result<ImageGrid> {
    pyramid.check()?;
    let mut current = pyramid.approx.clone();
    for level in (1..=pyramid.levels).rev() {
        let d = |o| &pyramid.details[&(level, o)];
        current = synthesize_2d(
            &current,
            d(Orientation::Horizontal),
            d(Orientation::Vertical),
            d(Orientation::Diagonal),
        );
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    extern crate std;

    use super::*;
    use proptest::prelude::*;

    #[test]
    fn filters_are_orthonormal() {
        let h = db2_lowpass();
        let g = db2_highpass();
        let dot = |a: &[f64], b: &[f64], shift: usize| -> f64 {
            (0..4).filter(|k| k + shift < 4).map(|k| a[k] * b[k + shift]).sum()
        };
        assert!((dot(&h, &h, 0) - 1.0).abs() < 1e-15);
        assert!(dot(&h, &h, 2).abs() < 1e-15);
        assert!(dot(&h, &g, 0).abs() < 1e-15);
        assert!((h.iter().sum::<f64>() - core::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn constant_image_has_no_detail() {
        let p = dwt2(&ImageGrid::filled(32, 32, 0.4), 3).unwrap();
        for (_, d) in p.details() {
            assert!(d.samples().iter().all(|v| v.abs() < 1e-10));
        }
        // each level multiplies the DC by 2
        assert!(p.approx().samples().iter().all(|v| (v - 0.4 * 8.0).abs() < 1e-10));
        let back = idwt2(&p).unwrap();
        assert!(back.samples().iter().all(|v| (v - 0.4).abs() < 1e-12));
    }

    #[test]
    fn three_levels_on_128() {
        let img = ImageGrid::from_fn(128, 128, |r, c| ((r * 7 + c * 3) % 11) as f64);
        let p = dwt2(&img, 3).unwrap();
        assert_eq!(p.details().count(), 9);
        assert_eq!((p.approx().width(), p.approx().height()), (16, 16));
        assert_eq!(p.detail(1, Orientation::Diagonal).unwrap().width(), 64);
        assert_eq!(p.detail(3, Orientation::Vertical).unwrap().width(), 16);
    }

    #[test]
    fn zero_pyramid_and_errors() {
        let p = dwt2(&ImageGrid::zeros(16, 16), 2).unwrap();
        assert!(idwt2(&p).unwrap().samples().iter().all(|&v| v == 0.0));
        assert!(dwt2(&ImageGrid::zeros(12, 16), 3).is_err());
        assert!(dwt2(&ImageGrid::zeros(16, 16), 0).is_err());
        let mut details = BTreeMap::new();
        details.insert((1, Orientation::Horizontal), ImageGrid::zeros(4, 4));
        assert!(DwtPyramid::new(1, details, ImageGrid::zeros(4, 4)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]
        #[test]
        fn perfect_reconstruction_and_energy(samples in proptest::collection::vec(-1.0f64..1.0, 32 * 16)) {
            let img = ImageGrid::new(32, 16, samples).unwrap();
            let p = dwt2(&img, 3).unwrap();
            prop_assert!((p.energy() - img.energy()).abs() <= 1e-9);
            let back = idwt2(&p).unwrap();
            for (a, b) in back.samples().iter().zip(img.samples()) {
                prop_assert!((a - b).abs() <= 1e-9);
            }
        }
    }
}
