//! Frequency-domain Morlet filterbank with a Gaussian scaling filter.
//!
//! Scales run `j = 0..J` with `j = 0` the finest: the band-pass filter
//! `(j, r)` is the mother wavelet dilated by `2^j` and rotated by `r·π/L`.
//! Each band-pass response lives on one half-plane of the frequency grid
//! (analytic filters), so the Littlewood–Paley sum counts every filter at
//! `ω` and at `-ω`; this stands in for the `L` conjugate orientations
//! `r·π/L + π`, which give identical moduli on real inputs.
//!
//! All responses are real and nonnegative. The band-pass filters share one
//! gain, picked to minimize the worst Littlewood–Paley deviation on the
//! annulus `π/2^J ≤ |ω| ≤ π` without letting any response exceed one.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};
use crate::fft::{bin_frequency, Fft2d};

/// Shape parameters of the Morlet bank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MorletParams {
    /// Center frequency of the finest wavelet, radians per sample.
    pub center_freq: f64,
    /// Radial bandwidth relative to the width at which adjacent scales cross
    /// at half power.
    pub bandwidth_factor: f64,
    /// Ratio of radial to angular frequency bandwidth; below one widens the
    /// angular coverage.
    pub slant: f64,
    /// Width of the scaling filter; at 1 its amplitude is one half at `π/2^J`.
    pub lowpass_width: f64,
    /// Standard deviation of the normalization blur filter in DFT bins.
    pub blur_width: f64,
}

impl Default for MorletParams {
    fn default() -> Self {
        Self {
            center_freq: 3.0 * PI / 4.0,
            bandwidth_factor: 1.8,
            slant: 0.4,
            lowpass_width: 1.3,
            blur_width: 1.0,
        }
    }
}

impl MorletParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("morlet_center_freq", self.center_freq),
            ("morlet_bandwidth_factor", self.bandwidth_factor),
            ("slant", self.slant),
            ("lowpass_width", self.lowpass_width),
            ("blur_width", self.blur_width),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.center_freq >= PI {
            return Err(Error::InvalidParameter("morlet_center_freq must be below pi".into()));
        }
        Ok(())
    }

    /// Radial standard deviation of the mother wavelet's Gaussian window in
    /// the frequency domain.
    pub fn radial_sigma(&self) -> f64 {
        self.bandwidth_factor * self.center_freq / (3.0 * libm::sqrt(LN_2))
    }

    /// Unscaled, unrotated-frame Morlet response at `(u, v)`, where `u` runs
    /// along the wavelet's orientation.
    fn mother(&self, u: f64, v: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let s2 = 2.0 * self.radial_sigma() * self.radial_sigma();
        let xi = self.center_freq;
        let sv = self.slant * v;
        let window = libm::exp(-((u - xi) * (u - xi) + sv * sv) / s2);
        let correction = libm::exp(-(xi * xi + u * u + sv * sv) / s2);
        window - correction
    }
}

/// Filters for one sampling resolution `2^res` of the input grid.
#[derive(Debug, Clone)]
pub struct Level {
    res: usize,
    width: usize,
    height: usize,
    // indexed by (j - first_scale) * L + r
    bandpass: Vec<Vec<f64>>,
    first_scale: usize,
    lowpass: Vec<f64>,
    fft: Fft2d,
}

impl Level {
    pub fn res(&self) -> usize {
        self.res
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn fft(&self) -> &Fft2d {
        &self.fft
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    /// Band-pass response of scale `j` (absolute index), rotation `r`.
    pub fn bandpass(&self, j: usize, r: usize, rotations: usize) -> &[f64] {
        &self.bandpass[(j - self.first_scale) * rotations + r]
    }

    pub fn first_scale(&self) -> usize {
        self.first_scale
    }
}

/// Morlet band-pass filters, Gaussian scaling filter `φ_J` and the narrow
/// normalization blur, sampled for a fixed grid size.
#[derive(Debug, Clone)]
pub struct FilterBank {
    width: usize,
    height: usize,
    scales: usize,
    rotations: usize,
    params: MorletParams,
    gain: f64,
    blur: Vec<f64>,
    levels: Vec<Level>,
    coarsest_fft: Fft2d,
}

impl FilterBank {
    pub fn morlet(width: usize, height: usize, scales: usize, rotations: usize, params: MorletParams) -> Result<Self> {
        if scales == 0 || rotations == 0 {
            return Err(Error::InvalidParameter(format!(
                "J={scales} and L={rotations} must both be at least 1"
            )));
        }
        params.validate()?;
        if scales >= usize::BITS as usize - 1 {
            return Err(Error::InvalidParameter(format!("J={scales} is too large")));
        }
        let step = 1usize << scales;
        if width < step || height < step {
            return Err(Error::Dimensions(format!(
                "{width}x{height} grid is smaller than 2^J = {step}"
            )));
        }
        if !width.is_multiple_of(step) || !height.is_multiple_of(step) {
            return Err(Error::Dimensions(format!(
                "{width}x{height} grid is not divisible by 2^J = {step}"
            )));
        }

        let raw: Vec<Vec<f64>> = (0..scales)
            .flat_map(|j| (0..rotations).map(move |r| (j, r)))
            .map(|(j, r)| {
                sample_grid(width, height, |wx, wy| {
                    bandpass_response(&params, rotations, j, r, wx, wy)
                })
            })
            .collect();
        let lowpass = sample_grid(width, height, |wx, wy| lowpass_response(&params, scales, wx, wy));
        let blur_sigma = params.blur_width * 2.0 * PI / width.min(height) as f64;
        let blur = sample_grid(width, height, |wx, wy| {
            libm::exp(-(wx * wx + wy * wy) / (2.0 * blur_sigma * blur_sigma))
        });

        let gain = calibrate_gain(width, height, scales, &raw, &lowpass);
        let full: Vec<Vec<f64>> = raw
            .into_iter()
            .map(|f| f.into_iter().map(|v| v * gain).collect())
            .collect();

        let mut levels = Vec::with_capacity(scales);
        for res in 0..scales {
            let first_scale = if res == 0 { 0 } else { res + 1 };
            let factor = 1usize << res;
            let (w, h) = (width / factor, height / factor);
            let bandpass = (first_scale..scales)
                .flat_map(|j| (0..rotations).map(move |r| j * rotations + r))
                .map(|idx| periodize(&full[idx], width, height, factor))
                .collect();
            levels.push(Level {
                res,
                width: w,
                height: h,
                bandpass,
                first_scale,
                lowpass: periodize(&lowpass, width, height, factor),
                fft: Fft2d::new(w, h),
            });
        }
        // level 0 keeps every scale
        levels[0].bandpass = full;

        Ok(Self {
            width,
            height,
            scales,
            rotations,
            params,
            gain,
            blur,
            levels,
            coarsest_fft: Fft2d::new(width >> scales, height >> scales),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn scales(&self) -> usize {
        self.scales
    }

    pub fn rotations(&self) -> usize {
        self.rotations
    }

    pub fn params(&self) -> &MorletParams {
        &self.params
    }

    /// Common band-pass gain applied to the raw Morlet responses.
    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn bandpass_count(&self) -> usize {
        self.scales * self.rotations
    }

    /// Full-resolution response of band-pass filter `(j, r)`.
    pub fn bandpass(&self, j: usize, r: usize) -> &[f64] {
        self.levels[0].bandpass(j, r, self.rotations)
    }

    /// Full-resolution response of the scaling filter `φ_J`.
    pub fn lowpass(&self) -> &[f64] {
        &self.levels[0].lowpass
    }

    /// Full-resolution response of the normalization blur.
    pub fn blur(&self) -> &[f64] {
        &self.blur
    }

    /// Filters for signals subsampled by `2^res`, `res < J`. Band-pass
    /// filters below scale `res + 1` are omitted for `res > 0`; the
    /// responses are the periodized full-resolution ones.
    pub fn level(&self, res: usize) -> &Level {
        &self.levels[res]
    }

    pub fn levels(&self) -> usize {
        self.levels.len()
    }

    /// FFT plan for signals subsampled by `2^res`, `res <= J`.
    pub fn fft_at(&self, res: usize) -> &Fft2d {
        if res < self.levels.len() {
            self.levels[res].fft()
        } else {
            assert_eq!(res, self.scales, "no sampling level {res}");
            &self.coarsest_fft
        }
    }

    /// Pointwise Littlewood–Paley sum and its largest deviation from one on
    /// the annulus `π/2^J ≤ |ω| ≤ π`.
    pub fn littlewood_paley(&self) -> (Vec<f64>, f64) {
        let sum = lp_bandpass_sum(self.width, self.height, self.levels[0].bandpass.iter());
        let total: Vec<f64> = sum.iter().zip(self.lowpass()).map(|(s, p)| s + p * p).collect();
        let mut worst = 0.0f64;
        for_each_annulus(self.width, self.height, self.scales, |idx| {
            worst = worst.max((total[idx] - 1.0).abs());
        });
        (total, worst)
    }
}

fn bandpass_response(params: &MorletParams, rotations: usize, j: usize, r: usize, wx: f64, wy: f64) -> f64 {
    let theta = r as f64 * PI / rotations as f64;
    let (s, c) = (libm::sin(theta), libm::cos(theta));
    let dilation = (1u64 << j) as f64;
    let u = (c * wx + s * wy) * dilation;
    let v = (-s * wx + c * wy) * dilation;
    params.mother(u, v)
}

fn lowpass_response(params: &MorletParams, scales: usize, wx: f64, wy: f64) -> f64 {
    let sigma = params.lowpass_width * (PI / (1u64 << scales) as f64) / libm::sqrt(2.0 * LN_2);
    libm::exp(-(wx * wx + wy * wy) / (2.0 * sigma * sigma))
}

/// Samples `f` on the DFT grid. A Nyquist bin stands for both `+π` and `-π`,
/// so it receives the sum of the two evaluations.
fn sample_grid(width: usize, height: usize, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let aliases = |k: usize, n: usize| {
        let w = bin_frequency(k, n);
        if 2 * k == n {
            [Some(w), Some(-w)]
        } else {
            [Some(w), None]
        }
    };
    let mut out = Vec::with_capacity(width * height);
    for ky in 0..height {
        let wys = aliases(ky, height);
        for kx in 0..width {
            let wxs = aliases(kx, width);
            let mut v = 0.0;
            for wy in wys.iter().flatten() {
                for wx in wxs.iter().flatten() {
                    v += f(*wx, *wy);
                }
            }
            out.push(v);
        }
    }
    out
}

/// Sums the `factor`² aliases of a full-grid response onto the coarse grid.
fn periodize(full: &[f64], width: usize, height: usize, factor: usize) -> Vec<f64> {
    let (w, h) = (width / factor, height / factor);
    let mut out = vec![0.0; w * h];
    for ky in 0..height {
        for kx in 0..width {
            out[(ky % h) * w + kx % w] += full[ky * width + kx];
        }
    }
    out
}

/// `Σ |ψ̂(ω)|² + |ψ̂(-ω)|²` over the given responses.
fn lp_bandpass_sum<'a>(width: usize, height: usize, filters: impl Iterator<Item = &'a Vec<f64>>) -> Vec<f64> {
    let mut sum = vec![0.0; width * height];
    for f in filters {
        for ky in 0..height {
            let my = (height - ky) % height;
            for kx in 0..width {
                let mx = (width - kx) % width;
                let a = f[ky * width + kx];
                // self-mirrored bins (DC, Nyquist) hold ω and -ω in one sample
                let b = if (mx, my) == (kx, ky) { 0.0 } else { f[my * width + mx] };
                sum[ky * width + kx] += a * a + b * b;
            }
        }
    }
    sum
}

fn for_each_annulus(width: usize, height: usize, scales: usize, mut f: impl FnMut(usize)) {
    let inner = PI / (1u64 << scales) as f64;
    for ky in 0..height {
        let wy = bin_frequency(ky, height);
        for kx in 0..width {
            let wx = bin_frequency(kx, width);
            let radius = libm::sqrt(wx * wx + wy * wy);
            if radius >= inner - 1e-12 && radius <= PI + 1e-12 {
                f(ky * width + kx);
            }
        }
    }
}

/// Gain `g` minimizing `max |φ̂² + g² S - 1|` over the annulus, capped so no
/// response exceeds one and `φ̂² + g² S / 2 ≤ 1` everywhere (the energy a real
/// signal keeps through one layer).
fn calibrate_gain(width: usize, height: usize, scales: usize, raw: &[Vec<f64>], lowpass: &[f64]) -> f64 {
    let sum = lp_bandpass_sum(width, height, raw.iter());
    let peak = raw.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut t_max = if peak > 0.0 { 1.0 / (peak * peak) } else { 1.0 };
    for (s, p) in sum.iter().zip(lowpass) {
        if *s > 0.0 {
            t_max = t_max.min(2.0 * (1.0 - p * p).max(0.0) / s);
        }
    }
    let mut annulus = Vec::new();
    for_each_annulus(width, height, scales, |idx| {
        annulus.push((lowpass[idx] * lowpass[idx], sum[idx]))
    });
    let deviation = |t: f64| {
        annulus
            .iter()
            .fold(0.0f64, |m, (p2, s)| m.max((p2 + t * s - 1.0).abs()))
    };
    // convex in t: golden-section search
    let ratio = (libm::sqrt(5.0) - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, t_max);
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let (mut fa, mut fb) = (deviation(a), deviation(b));
    for _ in 0..120 {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = deviation(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = deviation(b);
        }
    }
    libm::sqrt(0.5 * (lo + hi))
}
