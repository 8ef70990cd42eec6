//! Maximum-likelihood Weibull and generalized Gaussian fits.
//!
//! The Weibull density uses the rate parametrization
//! `p(x | λ, k) = λk (λx)^(k-1) exp(-(λx)^k)`, so `λ` is the reciprocal of the
//! conventional scale. The GGD density is
//! `p(x | α, β) = β / (2αΓ(1/β)) exp(-(|x|/α)^β)`.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::dwt::DwtPyramid;
use crate::error::{Error, Result};
use crate::scattering::ScatteringRep;
use crate::signature::{Method, Signature, SignatureConfig, SubbandParams};
use crate::special::{digamma, ln_gamma, trigamma};

/// Minimum number of usable samples for either fit.
pub const MIN_SAMPLES: usize = 16;
/// Iteration cap for the safeguarded Newton solvers.
pub const MAX_ITER: usize = 100;
/// Default Weibull floor relative to the subband maximum.
pub const DEFAULT_FLOOR_REL: f64 = 1e-12;

const K_BRACKET: (f64, f64) = (1e-3, 1e3);
const BETA_BRACKET: (f64, f64) = (1e-2, 1e2);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeibullParams {
    /// Rate (inverse scale).
    pub lambda: f64,
    /// Shape.
    pub k: f64,
}

impl WeibullParams {
    pub fn new(lambda: f64, k: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite() && k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter(format!("Weibull (lambda={lambda}, k={k})")));
        }
        Ok(Self { lambda, k })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let lx = self.lambda * x;
        if x == 0.0 {
            return if self.k < 1.0 {
                f64::INFINITY
            } else if self.k == 1.0 {
                self.lambda
            } else {
                0.0
            };
        }
        let ln = libm::log(self.lambda * self.k) + (self.k - 1.0) * libm::log(lx) - libm::pow(lx, self.k);
        libm::exp(ln)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -libm::expm1(-libm::pow(self.lambda * x, self.k))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GgdParams {
    /// Scale.
    pub alpha: f64,
    /// Shape.
    pub beta: f64,
}

impl GgdParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("GGD (alpha={alpha}, beta={beta})")));
        }
        Ok(Self { alpha, beta })
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        libm::log(self.beta / (2.0 * self.alpha))
            - ln_gamma(1.0 / self.beta)
            - libm::pow(x.abs() / self.alpha, self.beta)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        libm::exp(self.ln_pdf(x))
    }
}

fn check_positive(samples: &[f64]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    match samples.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        Some(&x) => Err(Error::NonPositiveSample(x)),
        None => Ok(()),
    }
}

/// Weibull log-likelihood `Nk lnλ + N ln k + (k-1)Σ ln x - Σ(λx)^k`.
pub fn weibull_loglik(params: WeibullParams, samples: &[f64]) -> Result<f64> {
    check_positive(samples)?;
    let n = samples.len() as f64;
    let WeibullParams { lambda, k } = params;
    let sum_ln: f64 = samples.iter().map(|&x| libm::log(x)).sum();
    let sum_pow: f64 = samples.iter().map(|&x| libm::pow(lambda * x, k)).sum();
    Ok(n * k * libm::log(lambda) + n * libm::log(k) + (k - 1.0) * sum_ln - sum_pow)
}

/// `ln Σ exp(v_i)` without overflow.
fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + libm::log(values.map(|v| libm::exp(v - max)).sum::<f64>())
}

/// Rate maximizing the likelihood for a fixed shape: `((1/N) Σ x^k)^(-1/k)`.
pub fn weibull_lambda_star(samples: &[f64], k: f64) -> Result<f64> {
    check_positive(samples)?;
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidParameter(format!("shape {k}")));
    }
    let ln_mean = log_sum_exp(samples.iter().map(|&x| k * libm::log(x))) - libm::log(samples.len() as f64);
    Ok(libm::exp(-ln_mean / k))
}

/// Shape score `N/k + Σ ln x - N Σ(ln x)x^k / Σ x^k` and its derivative.
///
/// `logs` must be centered (mean zero); the score is invariant to that shift
/// and the centering keeps `x^k` in range.
fn shape_score(logs: &[f64], k: f64) -> (f64, f64) {
    let n = logs.len() as f64;
    let max = logs.iter().fold(f64::NEG_INFINITY, |m, &l| m.max(l));
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for &l in logs {
        let w = libm::exp(k * (l - max));
        s0 += w;
        s1 += w * l;
        s2 += w * l * l;
    }
    let mean1 = s1 / s0;
    let var = (s2 / s0 - mean1 * mean1).max(0.0);
    (n / k - n * mean1, -n / (k * k) - n * var)
}

/// Public form of the shape equation residual, for diagnostics and tests.
pub fn weibull_shape_residual(samples: &[f64], k: f64) -> Result<f64> {
    check_positive(samples)?;
    let logs: Vec<f64> = samples.iter().map(|&x| libm::log(x)).collect();
    let mean = logs.iter().sum::<f64>() / logs.len() as f64;
    let centered: Vec<f64> = logs.iter().map(|l| l - mean).collect();
    Ok(shape_score(&centered, k).0)
}

/// Newton iteration kept inside a sign-change bracket; bisection is geometric
/// because both shape brackets span several decades. Without a sign change
/// the bracket end with the smaller score is returned.
fn safeguarded_newton(
    mut score: impl FnMut(f64) -> (f64, f64),
    bracket: (f64, f64),
    start: f64,
    tol: f64,
) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    let (f_lo, _) = score(lo);
    let (f_hi, _) = score(hi);
    if !(f_lo.is_finite() && f_hi.is_finite()) {
        return Err(Error::NoConvergence(0));
    }
    if f_lo.abs() <= tol {
        return Ok(lo);
    }
    if f_hi.abs() <= tol {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        // root outside the bracket: the likelihood peaks at the nearer end
        return Ok(if f_lo.abs() < f_hi.abs() { lo } else { hi });
    }
    let lo_positive = f_lo > 0.0;
    let mut x = start.clamp(lo, hi);
    for _ in 0..MAX_ITER {
        let (f, df) = score(x);
        if !f.is_finite() {
            return Err(Error::NoConvergence(MAX_ITER));
        }
        if f.abs() <= tol {
            return Ok(x);
        }
        if (f > 0.0) == lo_positive {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - f / df;
        x = if df != 0.0 && newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            libm::sqrt(lo * hi)
        };
        if (hi - lo) <= 4.0 * f64::EPSILON * hi {
            return Ok(x);
        }
    }
    Err(Error::NoConvergence(MAX_ITER))
}

/// Weibull maximum-likelihood fit. Samples `≤ floor` are discarded first.
pub fn weibull_fit(samples: &[f64], floor: f64) -> Result<WeibullParams> {
    if !(floor >= 0.0) {
        return Err(Error::InvalidParameter(format!("floor {floor}")));
    }
    let kept: Vec<f64> = samples
        .iter()
        .copied()
        .filter(|&x| x > floor && x.is_finite())
        .collect();
    if kept.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_SAMPLES,
            got: kept.len(),
        });
    }
    let logs: Vec<f64> = kept.iter().map(|&x| libm::log(x)).collect();
    let n = logs.len() as f64;
    let mean = logs.iter().sum::<f64>() / n;
    let centered: Vec<f64> = logs.iter().map(|l| l - mean).collect();
    let var = centered.iter().map(|l| l * l).sum::<f64>() / n;
    if !(var > 0.0) || kept.iter().all(|&x| x == kept[0]) {
        return Err(Error::DegenerateSample);
    }
    let k0 = PI / (libm::sqrt(6.0) * libm::sqrt(var));
    let k = safeguarded_newton(|k| shape_score(&centered, k), K_BRACKET, k0, 1e-9 * n)?;
    let lambda = weibull_lambda_star(&kept, k)?;
    WeibullParams::new(lambda, k)
}

/// GGD maximum-likelihood fit (shape equation solved for β, closed-form α).
pub fn ggd_fit(samples: &[f64]) -> Result<GgdParams> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_SAMPLES,
            got: samples.len(),
        });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("non-finite sample".to_string()));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let rms = libm::sqrt(samples.iter().map(|x| x * x).sum::<f64>() / n);
    if !(var > 0.0) || !(rms > 0.0) {
        return Err(Error::DegenerateSample);
    }
    // work on |x| / rms; β is scale-free and α is rescaled at the end
    let logs: Vec<f64> = samples
        .iter()
        .filter(|&&x| x != 0.0)
        .map(|&x| libm::log(x.abs() / rms))
        .collect();
    let moments = |beta: f64| {
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for &l in &logs {
            let w = libm::exp(beta * l);
            s0 += w;
            s1 += w * l;
            s2 += w * l * l;
        }
        (s0, s1, s2)
    };
    let score = |beta: f64| {
        let (s0, s1, s2) = moments(beta);
        let inv = 1.0 / beta;
        let ln_m = libm::log(beta * s0 / n);
        let g = 1.0 + digamma(inv) * inv - s1 / s0 + ln_m * inv;
        let dg = -trigamma(inv) * inv * inv * inv - digamma(inv) * inv * inv - (s2 * s0 - s1 * s1) / (s0 * s0)
            + (inv + s1 / s0) * inv
            - ln_m * inv * inv;
        (g, dg)
    };
    // kurtosis-free start: Gaussian
    let beta = safeguarded_newton(score, BETA_BRACKET, 2.0, 1e-9)?;
    let (s0, _, _) = moments(beta);
    let alpha = rms * libm::pow(beta * s0 / n, 1.0 / beta);
    GgdParams::new(alpha, beta)
}

fn annotate(path: impl ToString, err: Error) -> Error {
    Error::Subband {
        path: path.to_string(),
        source: alloc::boxed::Box::new(err),
    }
}

/// Weibull fits of every layer ≥ 1 subband, in canonical path order.
pub fn fit_scattering(rep: &ScatteringRep, floor_rel: f64) -> Result<Signature> {
    let cfg = rep.config();
    let method = if cfg.normalized {
        Method::NwstWeibull
    } else {
        Method::WstWeibull
    };
    let config = SignatureConfig {
        method,
        scales: cfg.scales,
        rotations: cfg.rotations,
        order: cfg.max_order,
        normalized: cfg.normalized,
        epsilon_rel: if cfg.normalized { cfg.epsilon_rel } else { 0.0 },
    };
    let mut entries = Vec::with_capacity(rep.len().saturating_sub(1));
    for (path, grid) in rep.iter().filter(|(p, _)| p.layer() >= 1) {
        let peak = grid.samples().iter().fold(0.0f64, |m, &v| m.max(v));
        let fit = weibull_fit(grid.samples(), floor_rel * peak).map_err(|e| annotate(path, e))?;
        entries.push(SubbandParams::new(path.to_string(), fit.lambda, fit.k));
    }
    Signature::new(config, entries)
}

/// GGD fits of every detail subband, finest level first.
pub fn fit_dwt(pyramid: &DwtPyramid) -> Result<Signature> {
    let config = SignatureConfig {
        method: Method::FwtGgd,
        scales: pyramid.levels(),
        rotations: 3,
        order: 1,
        normalized: false,
        epsilon_rel: 0.0,
    };
    let mut entries = Vec::with_capacity(3 * pyramid.levels());
    for ((level, orientation), grid) in pyramid.details() {
        let label = format!("{level}{orientation}");
        let fit = ggd_fit(grid.samples()).map_err(|e| annotate(&label, e))?;
        entries.push(SubbandParams::new(label, fit.alpha, fit.beta));
    }
    Signature::new(config, entries)
}
