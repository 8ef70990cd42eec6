//! Patch to signature: transform plus per-subband fits for one method.

use alloc::format;

use crate::dwt::dwt2;
use crate::error::{Error, Result};
use crate::filterbank::{FilterBank, MorletParams};
use crate::grid::ImageGrid;
use crate::scattering::{nwst_oversampled, wst_oversampled, ScatteringRep};
use crate::signature::{Method, Signature, SignatureConfig};
use crate::statmodel::{fit_dwt, fit_scattering, DEFAULT_FLOOR_REL};

/// Deepest supported scattering path.
pub const MAX_ORDER: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractorConfig {
    pub method: Method,
    pub scales: usize,
    pub rotations: usize,
    pub max_order: usize,
    pub epsilon_rel: f64,
    pub morlet: MorletParams,
    pub dwt_levels: usize,
    /// Weibull floor relative to each subband's maximum.
    pub floor_rel: f64,
    pub oversampling: usize,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        Self {
            method: Method::NwstWeibull,
            scales: 3,
            rotations: 4,
            max_order: 2,
            epsilon_rel: 1e-6,
            morlet: MorletParams::default(),
            dwt_levels: 3,
            floor_rel: DEFAULT_FLOOR_REL,
            oversampling: 1,
        }
    }
}

impl ExtractorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.method.is_scattering() {
            if self.scales == 0 || self.rotations == 0 {
                return Err(Error::InvalidParameter(format!(
                    "scales ({}) and rotations ({}) must be at least 1",
                    self.scales, self.rotations
                )));
            }
            if self.max_order > MAX_ORDER {
                return Err(Error::InvalidParameter(format!(
                    "path length {} exceeds {MAX_ORDER}",
                    self.max_order
                )));
            }
            if self.max_order == 0 {
                return Err(Error::InvalidParameter(
                    "path length 0 leaves no subbands to fit".into(),
                ));
            }
            if !(self.epsilon_rel > 0.0 && self.epsilon_rel.is_finite()) {
                return Err(Error::InvalidParameter(format!("epsilon_rel {}", self.epsilon_rel)));
            }
            if !(self.floor_rel >= 0.0 && self.floor_rel < 1.0) {
                return Err(Error::InvalidParameter(format!("floor_rel {}", self.floor_rel)));
            }
            self.morlet.validate()?;
        } else if self.dwt_levels == 0 {
            return Err(Error::InvalidParameter("dwt levels must be at least 1".into()));
        }
        Ok(())
    }

    /// Config stamped on the signatures this extractor produces.
    pub fn signature_config(&self) -> SignatureConfig {
        match self.method {
            Method::FwtGgd => SignatureConfig {
                method: Method::FwtGgd,
                scales: self.dwt_levels,
                rotations: 3,
                order: 1,
                normalized: false,
                epsilon_rel: 0.0,
            },
            m => {
                let normalized = m == Method::NwstWeibull;
                SignatureConfig {
                    method: m,
                    scales: self.scales,
                    rotations: self.rotations,
                    order: self.max_order,
                    normalized,
                    epsilon_rel: if normalized { self.epsilon_rel } else { 0.0 },
                }
            }
        }
    }

    /// Number of dyadic decimations the method applies to a patch.
    pub fn decimation_levels(&self) -> usize {
        if self.method.is_scattering() {
            self.scales
        } else {
            self.dwt_levels
        }
    }
}

/// Holds the filterbank for one patch size so it is built once per run.
#[derive(Debug, Clone)]
pub struct Extractor {
    config: ExtractorConfig,
    width: usize,
    height: usize,
    bank: Option<FilterBank>,
}

impl Extractor {
    pub fn new(config: ExtractorConfig, width: usize, height: usize) -> Result<Self> {
        config.validate()?;
        let step = 1usize << config.decimation_levels();
        if !width.is_multiple_of(step) || !height.is_multiple_of(step) {
            return Err(Error::Dimensions(format!(
                "{width}x{height} patches are not divisible by {step}"
            )));
        }
        let bank = if config.method.is_scattering() {
            Some(FilterBank::morlet(
                width,
                height,
                config.scales,
                config.rotations,
                config.morlet,
            )?)
        } else {
            None
        };
        Ok(Self {
            config,
            width,
            height,
            bank,
        })
    }

    pub fn config(&self) -> &ExtractorConfig {
        &self.config
    }

    pub fn bank(&self) -> Option<&FilterBank> {
        self.bank.as_ref()
    }

    fn check(&self, patch: &ImageGrid) -> Result<()> {
        if patch.width() != self.width || patch.height() != self.height {
            return Err(Error::Dimensions(format!(
                "{}x{} patch for a {}x{} extractor",
                patch.width(),
                patch.height(),
                self.width,
                self.height
            )));
        }
        Ok(())
    }

    /// Scattering representation of a patch (scattering methods only).
    pub fn scatter(&self, patch: &ImageGrid) -> Result<ScatteringRep> {
        self.check(patch)?;
        let bank = self
            .bank
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter(format!("{} has no scattering transform", self.config.method)))?;
        let c = &self.config;
        match c.method {
            Method::NwstWeibull => nwst_oversampled(patch, bank, c.max_order, c.epsilon_rel, c.oversampling),
            _ => wst_oversampled(patch, bank, c.max_order, c.oversampling),
        }
    }

    /// Transform and fit. The patch is used as given; callers normalize.
    pub fn signature(&self, patch: &ImageGrid) -> Result<Signature> {
        self.check(patch)?;
        match self.config.method {
            Method::FwtGgd => fit_dwt(&dwt2(patch, self.config.dwt_levels)?),
            _ => fit_scattering(&self.scatter(patch)?, self.config.floor_rel),
        }
    }

    /// Normalize to zero mean and unit energy, then [`Self::signature`].
    pub fn signature_normalized(&self, patch: &ImageGrid) -> Result<Signature> {
        self.signature(&patch.normalize_patch()?)
    }
}

#[cfg(test)]
mod tests {
    extern crate std;

    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn texture(n: usize, seed: u64) -> ImageGrid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = ImageGrid::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        noise.gaussian_blur(0.8).unwrap()
    }

    #[test]
    fn signature_sizes() {
        let patch = texture(64, 1).normalize_patch().unwrap();
        let scat = Extractor::new(ExtractorConfig::default(), 64, 64).unwrap();
        let s = scat.signature(&patch).unwrap();
        assert_eq!(s.len(), 60);
        assert_eq!(s.features().len(), 120);
        let fwt = Extractor::new(
            ExtractorConfig {
                method: Method::FwtGgd,
                ..Default::default()
            },
            64,
            64,
        )
        .unwrap();
        assert_eq!(fwt.signature(&patch).unwrap().len(), 9);
    }

    #[test]
    fn identical_inputs_give_identical_signatures() {
        let patch = texture(64, 4).normalize_patch().unwrap();
        for method in Method::ALL {
            let e = Extractor::new(
                ExtractorConfig {
                    method,
                    ..Default::default()
                },
                64,
                64,
            )
            .unwrap();
            let a = e.signature(&patch).unwrap();
            let b = e.signature(&patch.clone()).unwrap();
            assert_eq!(*a.config(), e.config().signature_config());
            assert_eq!(
                a.features().iter().map(|v| v.to_bits()).collect::<std::vec::Vec<_>>(),
                b.features().iter().map(|v| v.to_bits()).collect::<std::vec::Vec<_>>()
            );
        }
    }

    #[test]
    fn config_validation() {
        let bad = |f: fn(&mut ExtractorConfig)| {
            let mut c = ExtractorConfig::default();
            f(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.scales = 0));
        assert!(bad(|c| c.rotations = 0));
        assert!(bad(|c| c.max_order = 4));
        assert!(bad(|c| c.epsilon_rel = 0.0));
        assert!(Extractor::new(ExtractorConfig::default(), 100, 100).is_err());
    }

    #[test]
    fn fit_errors_name_the_subband() {
        let e = Extractor::new(
            ExtractorConfig {
                method: Method::WstWeibull,
                ..Default::default()
            },
            32,
            32,
        )
        .unwrap();
        let err = e.signature(&ImageGrid::zeros(32, 32)).unwrap_err();
        assert!(matches!(err, Error::Subband { .. }), "{err:?}");
    }
}
