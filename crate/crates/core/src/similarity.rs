//! Distribution similarities: the Weibull Bhattacharyya kernel, the summed
//! log-kernel scattering distance and the GGD Kullback–Leibler baseline.

use core::cmp::Ordering;
use core::fmt;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, Interval};
use crate::signature::{Method, Signature};
use crate::special::ln_gamma;
use crate::statmodel::{GgdParams, WeibullParams};

/// Non-negative dissimilarity; smaller means more similar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityValue(f64);

impl SimilarityValue {
    /// Round-off negatives (down to `-1e-9`) clamp to zero; anything else
    /// negative or non-finite is rejected.
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value < -1e-9 {
            return Err(Error::InvalidParameter(alloc::format!("similarity value {value}")));
        }
        Ok(Self(value.max(0.0)))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Eq for SimilarityValue {}

impl PartialOrd for SimilarityValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SimilarityValue {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Display for SimilarityValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// `ln(2/(e^d + e^-d))`, stable for large `|d|`.
fn ln_sech(d: f64) -> f64 {
    let d = d.abs();
    if d == 0.0 {
        return 0.0;
    }
    core::f64::consts::LN_2 - d - libm::log1p(libm::exp(-2.0 * d))
}

/// Natural log of the Weibull kernel. The `λ^k` terms never leave log space.
pub fn ln_weibull_kernel(p1: WeibullParams, p2: WeibullParams) -> Result<f64> {
    let k = 0.5 * (p1.k + p2.k);
    let a = k * libm::log(p1.lambda);
    let b = k * libm::log(p2.lambda);
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Overflow("weibull kernel"));
    }
    // geometric over arithmetic mean of (e^a, e^b) is sech((a - b) / 2);
    // the shape ratio 2 sqrt(k1 k2) / (k1 + k2) is the same form in ln k
    let scale_term = ln_sech(0.5 * (a - b));
    let shape_term = ln_sech(0.5 * (libm::log(p1.k) - libm::log(p2.k)));
    let ln = scale_term + shape_term;
    if !ln.is_finite() {
        return Err(Error::Overflow("weibull kernel"));
    }
    Ok(ln.min(0.0))
}

/// Bhattacharyya-derived Weibull kernel in `(0, 1]`.
pub fn weibull_kernel(p1: WeibullParams, p2: WeibullParams) -> Result<f64> {
    ln_weibull_kernel(p1, p2).map(libm::exp)
}

/// Metric induced by the kernel: `sqrt(2 - 2K)`.
pub fn kernel_distance(p1: WeibullParams, p2: WeibullParams) -> Result<f64> {
    Ok(libm::sqrt((2.0 - 2.0 * weibull_kernel(p1, p2)?).max(0.0)))
}

/// Bhattacharyya coefficient `∫ sqrt(p q)` by adaptive quadrature.
pub fn bc_numeric(p: impl Fn(f64) -> f64, q: impl Fn(f64) -> f64, support: Interval) -> Result<f64> {
    integrate(|x| libm::sqrt(p(x) * q(x)), support, 1e-10)
}

/// Bhattacharyya coefficient of two Weibull densities by quadrature.
pub fn weibull_bc_numeric(p1: WeibullParams, p2: WeibullParams) -> Result<f64> {
    bc_numeric(|x| p1.pdf(x), |x| p2.pdf(x), Interval::Upper(0.0))
}

/// Scattering similarity `-Σ ln K` over all subbands.
pub fn sm_scat(s1: &Signature, s2: &Signature) -> Result<SimilarityValue> {
    s1.check_compatible(s2)?;
    if !s1.method().is_scattering() {
        return Err(Error::ConfigMismatch(alloc::format!(
            "{} signatures have no Weibull entries",
            s1.method()
        )));
    }
    let mut total = 0.0;
    for i in 0..s1.len() {
        total -= ln_weibull_kernel(s1.weibull(i), s2.weibull(i))?;
    }
    SimilarityValue::new(total)
}

/// Cross-entropy `H(p1, p2) = -∫ p1 ln p2` of two GGDs.
pub fn ggd_cross_entropy(p1: GgdParams, p2: GgdParams) -> Result<f64> {
    let ln_moment =
        p2.beta * libm::log(p1.alpha / p2.alpha) + ln_gamma((p2.beta + 1.0) / p1.beta) - ln_gamma(1.0 / p1.beta);
    if ln_moment > 700.0 || !ln_moment.is_finite() {
        return Err(Error::Overflow("ggd cross-entropy"));
    }
    let h = libm::log(2.0 * p2.alpha / p2.beta) + ln_gamma(1.0 / p2.beta) + libm::exp(ln_moment);
    if !h.is_finite() {
        return Err(Error::Overflow("ggd cross-entropy"));
    }
    Ok(h)
}

/// Kullback–Leibler divergence of two GGDs.
pub fn ggd_kld(p1: GgdParams, p2: GgdParams) -> Result<f64> {
    Ok(ggd_cross_entropy(p1, p2)? - ggd_cross_entropy(p1, p1)?)
}

/// Sum of per-subband GGD divergences.
pub fn ggd_kld_sm(s1: &Signature, s2: &Signature) -> Result<SimilarityValue> {
    s1.check_compatible(s2)?;
    if s1.method() != Method::FwtGgd {
        return Err(Error::ConfigMismatch(alloc::format!(
            "{} signatures have no GGD entries",
            s1.method()
        )));
    }
    let mut total = 0.0;
    for i in 0..s1.len() {
        total += ggd_kld(s1.ggd(i), s2.ggd(i))?;
    }
    SimilarityValue::new(total)
}

/// The canonical distance for the signatures' method.
pub fn distance(s1: &Signature, s2: &Signature) -> Result<SimilarityValue> {
    match s1.method() {
        Method::FwtGgd => ggd_kld_sm(s1, s2),
        _ => sm_scat(s1, s2),
    }
}
