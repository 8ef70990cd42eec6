//! Finite-path windowed scattering transform and its normalized variant.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::filterbank::FilterBank;
use crate::grid::ImageGrid;

/// Sequence of `(scale, rotation)` steps from the root of the scattering
/// tree. Orders by length first, then lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Path {
    steps: Vec<(usize, usize)>,
}

impl Path {
    pub fn root() -> Self {
        Self::default()
    }

    pub fn new(steps: Vec<(usize, usize)>) -> Self {
        Self { steps }
    }

    pub fn steps(&self) -> &[(usize, usize)] {
        &self.steps
    }

    pub fn layer(&self) -> usize {
        self.steps.len()
    }

    pub fn last_scale(&self) -> Option<usize> {
        self.steps.last().map(|s| s.0)
    }

    pub fn child(&self, j: usize, r: usize) -> Self {
        let mut steps = self.steps.clone();
        steps.push((j, r));
        Self { steps }
    }

    pub fn parent(&self) -> Option<Self> {
        if self.steps.is_empty() {
            return None;
        }
        Some(Self {
            steps: self.steps[..self.steps.len() - 1].to_vec(),
        })
    }

    /// True when all indices are in range and scales strictly increase.
    pub fn is_admissible(&self, scales: usize, rotations: usize) -> bool {
        self.steps.iter().all(|&(j, r)| j < scales && r < rotations) && self.steps.windows(2).all(|w| w[0].0 < w[1].0)
    }
}

impl Ord for Path {
    fn cmp(&self, other: &Self) -> Ordering {
        self.steps
            .len()
            .cmp(&other.steps.len())
            .then_with(|| self.steps.cmp(&other.steps))
    }
}

impl PartialOrd for Path {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// `j:r/j:r/...`; the root path prints as `phi`.
impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.steps.is_empty() {
            return f.write_str("phi");
        }
        for (i, (j, r)) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str("/")?;
            }
            write!(f, "{j}:{r}")?;
        }
        Ok(())
    }
}

impl FromStr for Path {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "phi" || s.is_empty() {
            return Ok(Self::root());
        }
        let steps = s
            .split('/')
            .map(|step| {
                let (j, r) = step
                    .split_once(':')
                    .ok_or_else(|| Error::InvalidParameter(format!("bad path step '{step}'")))?;
                let parse = |v: &str| {
                    v.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::InvalidParameter(format!("bad path step '{step}'")))
                };
                Ok((parse(j)?, parse(r)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { steps })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringConfig {
    pub scales: usize,
    pub rotations: usize,
    pub max_order: usize,
    pub normalized: bool,
    pub epsilon_rel: f64,
    /// Power-of-two oversampling relative to critical sampling (1 = critical).
    pub oversampling: usize,
}

/// Scattering subbands keyed by path, in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringRep {
    subbands: BTreeMap<Path, ImageGrid>,
    config: ScatteringConfig,
    input_width: usize,
    input_height: usize,
}

impl ScatteringRep {
    pub fn config(&self) -> &ScatteringConfig {
        &self.config
    }

    pub fn subbands(&self) -> &BTreeMap<Path, ImageGrid> {
        &self.subbands
    }

    pub fn get(&self, path: &Path) -> Option<&ImageGrid> {
        self.subbands.get(path)
    }

    pub fn len(&self) -> usize {
        self.subbands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subbands.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Path, &ImageGrid)> {
        self.subbands.iter()
    }

    /// Samples of the input grid per subband sample.
    fn area_factor(&self, grid: &ImageGrid) -> f64 {
        (self.input_width * self.input_height) as f64 / grid.len() as f64
    }

    /// Area-weighted squared norm of the subbands up to and including `order`.
    pub fn energy_up_to(&self, order: usize) -> f64 {
        self.subbands
            .iter()
            .filter(|(p, _)| p.layer() <= order)
            .map(|(_, g)| self.area_factor(g) * g.energy())
            .sum()
    }

    /// Scattering norm: square root of the area-weighted subband energies.
    pub fn scattering_norm(&self) -> Result<f64> {
        if self.config.normalized {
            return Err(Error::NormalizedRep);
        }
        Ok(libm::sqrt(self.energy_up_to(usize::MAX)))
    }

    /// Scattering norm of `self - other`.
    pub fn distance(&self, other: &ScatteringRep) -> Result<f64> {
        if self.config.normalized || other.config.normalized {
            return Err(Error::NormalizedRep);
        }
        if self.config != other.config || self.subbands.len() != other.subbands.len() {
            return Err(Error::ConfigMismatch(
                "scattering representations differ in layout".into(),
            ));
        }
        let mut total = 0.0;
        for ((pa, ga), (pb, gb)) in self.subbands.iter().zip(&other.subbands) {
            if pa != pb || ga.len() != gb.len() {
                return Err(Error::ConfigMismatch(format!("subband {pa} vs {pb}")));
            }
            let diff: f64 = ga
                .samples()
                .iter()
                .zip(gb.samples())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            total += self.area_factor(ga) * diff;
        }
        Ok(libm::sqrt(total))
    }
}

/// Output of one propagation step.
#[derive(Debug, Clone)]
pub struct Propagation {
    /// `|ψ_{j,r} * x|` at sampling rate `2^j` (up to oversampling).
    pub moduli: BTreeMap<(usize, usize), ImageGrid>,
    /// `φ_J * x` at sampling rate `2^J` (up to oversampling).
    pub lowpass: ImageGrid,
}

/// One application of the modulus operator: band-pass moduli for scales
/// `j ≥ j_min` plus the low-pass output, at critical sampling.
pub fn propagate(signal: &ImageGrid, bank: &FilterBank, j_min: usize) -> Result<Propagation> {
    propagate_sampled(signal, bank, j_min, 0)
}

fn resolution_of(signal: &ImageGrid, bank: &FilterBank) -> Result<usize> {
    for res in 0..bank.levels() {
        if signal.width() << res == bank.width() && signal.height() << res == bank.height() {
            return Ok(res);
        }
    }
    Err(Error::Dimensions(format!(
        "{}x{} signal does not match the {}x{} filterbank at any sampling level",
        signal.width(),
        signal.height(),
        bank.width(),
        bank.height()
    )))
}

fn propagate_sampled(
    signal: &ImageGrid,
    bank: &FilterBank,
    j_min: usize,
    oversampling_log: usize,
) -> Result<Propagation> {
    let res = resolution_of(signal, bank)?;
    let level = bank.level(res);
    let (w, h) = (level.width(), level.height());
    let mut spectrum: Vec<Complex64> = signal.samples().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    level.fft().forward(&mut spectrum);

    let scales = bank.scales();
    let target_res = |j: usize| j.saturating_sub(oversampling_log).max(res);

    let low_res = target_res(scales);
    let lowpass = filter_and_subsample(&spectrum, level.lowpass(), w, h, 1 << (low_res - res), bank, low_res)
        .into_iter()
        .map(|c| c.re)
        .collect();
    let (lw, lh) = (w >> (low_res - res), h >> (low_res - res));
    let lowpass = ImageGrid::from_raw(lw, lh, lowpass);

    let mut moduli = BTreeMap::new();
    for j in j_min.max(level.first_scale())..scales {
        let out_res = target_res(j);
        let factor = 1usize << (out_res - res);
        for r in 0..bank.rotations() {
            let filter = level.bandpass(j, r, bank.rotations());
            let band = filter_and_subsample(&spectrum, filter, w, h, factor, bank, out_res);
            let modulus = band.into_iter().map(|c| c.norm()).collect();
            moduli.insert((j, r), ImageGrid::from_raw(w / factor, h / factor, modulus));
        }
    }
    Ok(Propagation { moduli, lowpass })
}

/// Multiplies by `filter`, decimates by `factor` through spectral aliasing and
/// returns to the spatial domain on the coarse grid.
fn filter_and_subsample(
    spectrum: &[Complex64],
    filter: &[f64],
    w: usize,
    h: usize,
    factor: usize,
    bank: &FilterBank,
    out_res: usize,
) -> Vec<Complex64> {
    let (sw, sh) = (w / factor, h / factor);
    let mut out = vec![Complex64::new(0.0, 0.0); sw * sh];
    for ky in 0..h {
        let row = ky % sh;
        for kx in 0..w {
            out[row * sw + kx % sw] += spectrum[ky * w + kx] * filter[ky * w + kx];
        }
    }
    let scale = 1.0 / (factor * factor) as f64;
    out.iter_mut().for_each(|v| *v *= scale);
    inverse_on(bank, out_res, sw, sh, &mut out);
    out
}

fn inverse_on(bank: &FilterBank, res: usize, w: usize, h: usize, buf: &mut [Complex64]) {
    let plan = bank.fft_at(res);
    debug_assert_eq!((plan.width(), plan.height()), (w, h));
    plan.inverse(buf);
}

fn config_for(
    bank: &FilterBank,
    max_order: usize,
    normalized: bool,
    epsilon_rel: f64,
    oversampling: usize,
) -> ScatteringConfig {
    ScatteringConfig {
        scales: bank.scales(),
        rotations: bank.rotations(),
        max_order,
        normalized,
        epsilon_rel,
        oversampling,
    }
}

fn oversampling_log(oversampling: usize) -> Result<usize> {
    if oversampling == 0 || !oversampling.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "oversampling factor {oversampling} must be a power of two"
        )));
    }
    Ok(oversampling.trailing_zeros() as usize)
}

/// Windowed scattering transform over all increasing-scale paths of length
/// `0..=max_order`, critically sampled.
pub fn wst(image: &ImageGrid, bank: &FilterBank, max_order: usize) -> Result<ScatteringRep> {
    wst_oversampled(image, bank, max_order, 1)
}

pub fn wst_oversampled(
    image: &ImageGrid,
    bank: &FilterBank,
    max_order: usize,
    oversampling: usize,
) -> Result<ScatteringRep> {
    let os = oversampling_log(oversampling)?;
    if image.width() != bank.width() || image.height() != bank.height() {
        return Err(Error::Dimensions(format!(
            "{}x{} image for a {}x{} filterbank",
            image.width(),
            image.height(),
            bank.width(),
            bank.height()
        )));
    }
    let scales = bank.scales();
    let mut subbands = BTreeMap::new();
    let mut frontier: Vec<(Path, ImageGrid)> = vec![(Path::root(), image.clone())];
    for layer in 0..=max_order {
        let mut next = Vec::new();
        for (path, signal) in frontier {
            let j_min = match (layer < max_order, path.last_scale()) {
                (false, _) => scales,
                (true, None) => 0,
                (true, Some(j)) => j + 1,
            };
            let prop = propagate_sampled(&signal, bank, j_min, os)?;
            let low = if layer == 0 {
                prop.lowpass
            } else {
                // lowpass of a nonnegative signal; clears FFT round-off
                prop.lowpass.map(|v| v.max(0.0))
            };
            subbands.insert(path.clone(), low);
            for ((j, r), modulus) in prop.moduli {
                next.push((path.child(j, r), modulus));
            }
        }
        frontier = next;
    }
    Ok(ScatteringRep {
        subbands,
        config: config_for(bank, max_order, false, 0.0, oversampling),
        input_width: image.width(),
        input_height: image.height(),
    })
}

/// Normalized scattering transform: layer-1 subbands divided by the blurred
/// input modulus `|f| * ϕ`, deeper subbands by their parent subband. Each
/// denominator gets `epsilon_rel` times its own mean added.
pub fn nwst(image: &ImageGrid, bank: &FilterBank, max_order: usize, epsilon_rel: f64) -> Result<ScatteringRep> {
    nwst_oversampled(image, bank, max_order, epsilon_rel, 1)
}

pub fn nwst_oversampled(
    image: &ImageGrid,
    bank: &FilterBank,
    max_order: usize,
    epsilon_rel: f64,
    oversampling: usize,
) -> Result<ScatteringRep> {
    if !(epsilon_rel > 0.0) || !epsilon_rel.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "epsilon_rel {epsilon_rel} must be positive"
        )));
    }
    let plain = wst_oversampled(image, bank, max_order, oversampling)?;
    let (sw, sh) = match plain.subbands.values().next() {
        Some(g) => (g.width(), g.height()),
        None => return Err(Error::Dimensions("empty scattering representation".into())),
    };
    let blurred = blurred_modulus(image, bank, sw, sh);

    let mut subbands = BTreeMap::new();
    for (path, grid) in &plain.subbands {
        let normalized = match path.parent() {
            None => grid.clone(),
            Some(parent) if parent.layer() == 0 => divide(grid, &blurred, epsilon_rel),
            Some(parent) => divide(grid, &plain.subbands[&parent], epsilon_rel),
        };
        subbands.insert(path.clone(), normalized);
    }
    Ok(ScatteringRep {
        subbands,
        config: config_for(bank, max_order, true, epsilon_rel, oversampling),
        input_width: plain.input_width,
        input_height: plain.input_height,
    })
}

/// `|f| * ϕ` sampled on the `w`×`h` subband grid.
fn blurred_modulus(image: &ImageGrid, bank: &FilterBank, w: usize, h: usize) -> ImageGrid {
    let level = bank.level(0);
    let mut spectrum: Vec<Complex64> = image.samples().iter().map(|&v| Complex64::new(v.abs(), 0.0)).collect();
    level.fft().forward(&mut spectrum);
    let factor = bank.width() / w;
    let res = factor.trailing_zeros() as usize;
    let out = filter_and_subsample(&spectrum, bank.blur(), bank.width(), bank.height(), factor, bank, res);
    ImageGrid::from_raw(w, h, out.into_iter().map(|c| c.re.max(0.0)).collect())
}

fn divide(numerator: &ImageGrid, denominator: &ImageGrid, epsilon_rel: f64) -> ImageGrid {
    let mean = denominator.mean();
    let eps = if mean > 0.0 {
        epsilon_rel * mean
    } else {
        f64::MIN_POSITIVE
    };
    let samples = numerator
        .samples()
        .iter()
        .zip(denominator.samples())
        .map(|(n, d)| n / (d + eps))
        .collect();
    ImageGrid::from_raw(numerator.width(), numerator.height(), samples)
}

/// Number of increasing-scale paths of exactly `layer` steps.
pub fn path_count(scales: usize, rotations: usize, layer: usize) -> usize {
    binomial(scales, layer) * rotations.pow(layer as u32)
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Canonical label list for a configuration (same order as the subband map).
pub fn path_labels(scales: usize, rotations: usize, max_order: usize) -> Vec<String> {
    let mut paths = vec![Path::root()];
    let mut frontier = vec![Path::root()];
    for _ in 0..max_order {
        let mut next = Vec::new();
        for p in &frontier {
            let start = p.last_scale().map_or(0, |j| j + 1);
            for j in start..scales {
                for r in 0..rotations {
                    next.push(p.child(j, r));
                }
            }
        }
        paths.extend(next.iter().cloned());
        frontier = next;
    }
    paths.sort();
    paths.iter().map(|p| format!("{p}")).collect()
}

#[cfg(test)]
mod tests {
    extern crate std;

    use super::*;
    use crate::filterbank::MorletParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bank(n: usize, scales: usize) -> FilterBank {
        FilterBank::morlet(n, n, scales, 4, MorletParams::default()).unwrap()
    }

    fn noise(n: usize, seed: u64) -> ImageGrid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ImageGrid::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))
            .normalize_patch()
            .unwrap()
    }

    #[test]
    fn path_order_is_layer_then_lexicographic() {
        let a = Path::new(vec![(2, 3)]);
        let b = Path::new(vec![(0, 0), (1, 0)]);
        assert!(Path::root() < a);
        assert!(a < b);
        assert!(Path::new(vec![(0, 1)]) < Path::new(vec![(1, 0)]));
    }

    #[test]
    fn path_text_roundtrip() {
        let p = Path::new(vec![(0, 1), (2, 3)]);
        assert_eq!(format!("{p}"), "0:1/2:3");
        assert_eq!("0:1/2:3".parse::<Path>().unwrap(), p);
        assert_eq!("phi".parse::<Path>().unwrap(), Path::root());
        assert!("0-1".parse::<Path>().is_err());
        assert!(p.is_admissible(3, 4));
        assert!(!Path::new(vec![(1, 0), (1, 2)]).is_admissible(3, 4));
        assert!(!Path::new(vec![(0, 4)]).is_admissible(3, 4));
    }

    #[test]
    fn subband_counts() {
        assert_eq!(path_count(3, 4, 0) + path_count(3, 4, 1) + path_count(3, 4, 2), 61);
        let b = bank(64, 3);
        let rep = wst(&noise(64, 1), &b, 2).unwrap();
        assert_eq!(rep.len(), 61);
        assert!(rep
            .iter()
            .all(|(p, g)| p.is_admissible(3, 4) && g.width() == 8 && g.height() == 8));
        assert_eq!(
            rep.iter().map(|(p, _)| format!("{p}")).collect::<Vec<_>>(),
            path_labels(3, 4, 2)
        );
        let rep0 = wst(&noise(64, 1), &b, 0).unwrap();
        assert_eq!(rep0.len(), 1);
        assert!(rep0.get(&Path::root()).is_some());
    }

    #[test]
    fn constant_signal_has_no_bandpass_energy() {
        let b = bank(32, 2);
        let prop = propagate(&ImageGrid::filled(32, 32, 0.75), &b, 0).unwrap();
        assert_eq!(prop.moduli.len(), 8);
        for m in prop.moduli.values() {
            assert!(m.samples().iter().all(|v| v.abs() < 1e-9));
        }
        assert!(prop.lowpass.samples().iter().all(|v| (v - 0.75).abs() < 1e-9));
        assert_eq!(prop.lowpass.width(), 8);
    }

    #[test]
    fn propagate_is_positively_homogeneous() {
        let b = bank(32, 2);
        let x = noise(32, 4);
        let p1 = propagate(&x, &b, 0).unwrap();
        let p2 = propagate(&x.scaled(3.5), &b, 0).unwrap();
        for (m1, m2) in p1.moduli.values().zip(p2.moduli.values()) {
            for (a, c) in m1.samples().iter().zip(m2.samples()) {
                assert!((3.5 * a - c).abs() < 1e-9);
            }
        }
        assert!(propagate(&ImageGrid::zeros(24, 24), &b, 0).is_err());
    }

    #[test]
    fn single_tone_gives_flat_modulus() {
        let n = 64;
        let b = bank(n, 3);
        // tone at bin (kx, 0): ω = 2π kx / n along the x axis
        let kx = 12usize;
        let omega = 2.0 * core::f64::consts::PI * kx as f64 / n as f64;
        let tone = ImageGrid::from_fn(n, n, |_, c| libm::cos(omega * c as f64));
        let prop = propagate(&tone, &b, 0).unwrap();
        for j in 0..3 {
            // cos = (e^{iωx} + e^{-iωx})/2 and the analytic filter passes one side
            assert_eq!(b.bandpass(j, 0)[n - kx], 0.0);
            let expected = 0.5 * b.bandpass(j, 0)[kx];
            assert!(expected > 1e-3);
            let m = &prop.moduli[&(j, 0)];
            for v in m.samples() {
                assert!((v - expected).abs() < 1e-9, "j={j}: {v} vs {expected}");
            }
        }
    }

    #[test]
    fn energy_is_bounded_and_grows_with_order() {
        let b = bank(64, 3);
        let x = noise(64, 9);
        let rep = wst(&x, &b, 3).unwrap();
        let mut previous = 0.0;
        for order in 0..=3 {
            let e = rep.energy_up_to(order);
            assert!(e >= previous);
            assert!(e <= x.energy() + 1e-6);
            previous = e;
        }
    }

    #[test]
    fn norm_is_homogeneous_and_zero_for_zero() {
        let b = bank(32, 2);
        let x = noise(32, 5);
        let n1 = wst(&x, &b, 2).unwrap().scattering_norm().unwrap();
        let n2 = wst(&x.scaled(2.5), &b, 2).unwrap().scattering_norm().unwrap();
        assert!((2.5 * n1 - n2).abs() < 1e-9);
        assert_eq!(
            wst(&ImageGrid::zeros(32, 32), &b, 2)
                .unwrap()
                .scattering_norm()
                .unwrap(),
            0.0
        );
        let normalized = nwst(&x, &b, 2, 1e-6).unwrap();
        assert_eq!(normalized.scattering_norm(), Err(Error::NormalizedRep));
    }

    #[test]
    fn nwst_zero_image_and_ratios() {
        let b = bank(32, 2);
        let zero = nwst(&ImageGrid::zeros(32, 32), &b, 2, 1e-6).unwrap();
        assert!(zero
            .iter()
            .filter(|(p, _)| p.layer() >= 1)
            .all(|(_, g)| g.samples().iter().all(|&v| v == 0.0)));

        let x = noise(32, 11);
        let plain = wst(&x, &b, 2).unwrap();
        let norm = nwst(&x, &b, 2, 1e-6).unwrap();
        for (path, g) in norm.iter().filter(|(p, _)| p.layer() == 2) {
            let parent = &plain.subbands[&path.parent().unwrap()];
            let child = &plain.subbands[path];
            let eps = 1e-6 * parent.mean();
            for i in 0..g.len() {
                let ratio = child.samples()[i] / (parent.samples()[i] + eps);
                assert!((g.samples()[i] - ratio).abs() <= 1e-12 * ratio.abs().max(1.0));
            }
        }
        assert_eq!(norm.get(&Path::root()), plain.get(&Path::root()));
        assert!(nwst(&x, &b, 2, 0.0).is_err());
    }

    #[test]
    fn oversampling_doubles_subband_size() {
        let b = bank(32, 2);
        let rep = wst_oversampled(&noise(32, 2), &b, 2, 2).unwrap();
        assert!(rep.iter().all(|(_, g)| g.width() == 16));
        assert!(wst_oversampled(&noise(32, 2), &b, 2, 3).is_err());
    }
}
