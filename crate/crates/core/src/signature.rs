//! Retrieval feature vectors: one two-parameter fit per subband.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::statmodel::{GgdParams, WeibullParams};

/// Feature extraction method. The discriminants are the on-disk ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Method {
    WstWeibull = 0,
    NwstWeibull = 1,
    FwtGgd = 2,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::WstWeibull, Method::NwstWeibull, Method::FwtGgd];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.id() == id)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method id {id}")))
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::WstWeibull => "wst-weibull",
            Method::NwstWeibull => "nwst-weibull",
            Method::FwtGgd => "fwt-ggd",
        }
    }

    pub fn is_scattering(self) -> bool {
        !matches!(self, Method::FwtGgd)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method '{s}'")))
    }
}

/// What produced a signature. Two signatures are comparable only when their
/// configs are equal.
///
/// For `fwt-ggd`, `scales` holds the number of DWT levels, `rotations` the
/// three detail orientations and `order` is 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignatureConfig {
    pub method: Method,
    pub scales: usize,
    pub rotations: usize,
    pub order: usize,
    pub normalized: bool,
    pub epsilon_rel: f64,
}

impl SignatureConfig {
    /// 64-bit FNV-1a over the method id and the config fields.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.write(&[self.method.id()]);
        h.write(&(self.scales as u64).to_le_bytes());
        h.write(&(self.rotations as u64).to_le_bytes());
        h.write(&(self.order as u64).to_le_bytes());
        h.write(&[self.normalized as u8]);
        h.write(&self.epsilon_rel.to_bits().to_le_bytes());
        h.finish()
    }
}

struct Fnv1a(u64);

impl Fnv1a {
    fn new() -> Self {
        Self(0xcbf2_9ce4_8422_2325)
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

/// Fitted parameters of one subband: `(λ, k)` for Weibull methods,
/// `(α, β)` for the GGD baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandParams {
    pub label: String,
    pub p1: f64,
    pub p2: f64,
}

impl SubbandParams {
    pub fn new(label: impl Into<String>, p1: f64, p2: f64) -> Self {
        Self {
            label: label.into(),
            p1,
            p2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    config: SignatureConfig,
    entries: Vec<SubbandParams>,
    class_label: String,
    patch_id: u32,
}

impl Signature {
    pub fn new(config: SignatureConfig, entries: Vec<SubbandParams>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParameter("signature without subbands".into()));
        }
        if let Some(bad) = entries
            .iter()
            .find(|e| !(e.p1 > 0.0 && e.p1.is_finite() && e.p2 > 0.0 && e.p2.is_finite()))
        {
            return Err(Error::InvalidParameter(format!(
                "subband {} has parameters ({}, {})",
                bad.label, bad.p1, bad.p2
            )));
        }
        Ok(Self {
            config,
            entries,
            class_label: String::new(),
            patch_id: 0,
        })
    }

    pub fn with_source(mut self, class_label: impl Into<String>, patch_id: u32) -> Self {
        self.class_label = class_label.into();
        self.patch_id = patch_id;
        self
    }

    pub fn config(&self) -> &SignatureConfig {
        &self.config
    }

    pub fn method(&self) -> Method {
        self.config.method
    }

    pub fn fingerprint(&self) -> u64 {
        self.config.fingerprint()
    }

    pub fn entries(&self) -> &[SubbandParams] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn class_label(&self) -> &str {
        &self.class_label
    }

    pub fn patch_id(&self) -> u32 {
        self.patch_id
    }

    /// Flat `[p1, p2, p1, p2, ...]` feature vector of length `2N`.
    pub fn features(&self) -> Vec<f64> {
        self.entries.iter().flat_map(|e| [e.p1, e.p2]).collect()
    }

    pub fn weibull(&self, i: usize) -> WeibullParams {
        let e = &self.entries[i];
        WeibullParams { lambda: e.p1, k: e.p2 }
    }

    pub fn ggd(&self, i: usize) -> GgdParams {
        let e = &self.entries[i];
        GgdParams {
            alpha: e.p1,
            beta: e.p2,
        }
    }

    /// Errors unless `other` has the same config and subband labels.
    pub fn check_compatible(&self, other: &Signature) -> Result<()> {
        if self.config != other.config {
            return Err(Error::ConfigMismatch(format!(
                "{} vs {}",
                self.config.method, other.config.method
            )));
        }
        if self.entries.len() != other.entries.len() {
            return Err(Error::ConfigMismatch(format!(
                "{} vs {} subbands",
                self.entries.len(),
                other.entries.len()
            )));
        }
        if let Some((a, b)) = self
            .entries
            .iter()
            .zip(&other.entries)
            .find(|(a, b)| a.label != b.label)
        {
            return Err(Error::ConfigMismatch(format!("subband {} vs {}", a.label, b.label)));
        }
        Ok(())
    }
}
