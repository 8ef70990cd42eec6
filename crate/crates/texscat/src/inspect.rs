//! One subband's histogram next to its fitted distribution, for plotting
//! outside the program.

use serde::Serialize;
use texscat_core::dwt::dwt2;
use texscat_core::statmodel::{ggd_fit, weibull_fit};
use texscat_core::{Extractor, ImageGrid, Method, Path};

use crate::config::RunConfig;
use crate::error::{AppError, AppResult};

pub const BINS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    /// Lower edge of the first bin.
    pub lo: f64,
    /// Upper edge of the last bin (inclusive).
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// `bins` uniform bins over `[min, max]` of `values`.
    pub fn new(values: &[f64], bins: usize) -> Self {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut counts = vec![0u64; bins];
        if values.is_empty() {
            return Self {
                lo: 0.0,
                hi: 0.0,
                counts,
            };
        }
        let width = (hi - lo) / bins as f64;
        for &v in values {
            let b = if width > 0.0 { ((v - lo) / width) as usize } else { 0 };
            counts[b.min(bins - 1)] += 1;
        }
        Self { lo, hi, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitInspection {
    pub subband: String,
    /// `weibull` (lambda, k) or `ggd` (alpha, beta).
    pub model: &'static str,
    pub p1: f64,
    pub p2: f64,
    pub samples: usize,
    /// Samples at or below the floor, left out of both fit and histogram.
    pub floored: usize,
    pub histogram: Histogram,
}

impl FitInspection {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("inspection serializes")
    }
}

/// Normalizes the whole image, transforms it with `config` and fits the
/// subband named by `selector` (`j:r/...` for scattering, `{level}{H|V|D}`
/// for the DWT baseline).
pub fn fit_inspect(image: &ImageGrid, config: &RunConfig, selector: &str) -> AppResult<FitInspection> {
    let patch = image.normalize_patch()?;
    let ex = config.extractor();
    if config.method == Method::FwtGgd {
        let pyramid = dwt2(&patch, ex.dwt_levels)?;
        let (level, o) = pyramid
            .details()
            .find(|(key, _)| format!("{}{}", key.0, key.1) == selector.trim())
            .map(|(key, _)| *key)
            .ok_or_else(|| AppError::usage(format!("no DWT subband '{selector}' (e.g. 1H, 2D)")))?;
        let band = pyramid.detail(level, o).expect("key exists");
        let fit = ggd_fit(band.samples())?;
        return Ok(FitInspection {
            subband: format!("{level}{o}"),
            model: "ggd",
            p1: fit.alpha,
            p2: fit.beta,
            samples: band.len(),
            floored: 0,
            histogram: Histogram::new(band.samples(), BINS),
        });
    }
    let path: Path = selector
        .parse()
        .map_err(|e: texscat_core::Error| AppError::usage(e.to_string()))?;
    if path.layer() == 0 {
        return Err(AppError::usage(
            "the layer-0 low-pass is not fitted; select j:r or deeper",
        ));
    }
    let extractor = Extractor::new(ex, patch.width(), patch.height()).map_err(|e| AppError::usage(e.to_string()))?;
    let rep = extractor.scatter(&patch)?;
    let band = rep.get(&path).ok_or_else(|| {
        AppError::usage(format!(
            "no subband '{path}' for J={} L={} M={}",
            ex.scales, ex.rotations, ex.max_order
        ))
    })?;
    let peak = band.samples().iter().fold(0.0f64, |m, &v| m.max(v));
    let floor = ex.floor_rel * peak;
    let fit = weibull_fit(band.samples(), floor)?;
    let kept: Vec<f64> = band.samples().iter().copied().filter(|&v| v > floor).collect();
    Ok(FitInspection {
        subband: path.to_string(),
        model: "weibull",
        p1: fit.lambda,
        p2: fit.k,
        samples: band.len(),
        floored: band.len() - kept.len(),
        histogram: Histogram::new(&kept, BINS),
    })
}
