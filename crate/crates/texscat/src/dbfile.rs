//! Binary feature database files.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! header   "SCRT"  version:u16  method:u8
//!          scales:u32  rotations:u32  order:u32  normalized:u8  epsilon_rel:f64
//!          fingerprint:u64  records:u32
//! record   label_len:u32  label:[u8; label_len] (UTF-8)  patch_id:u32
//!          entries:u32  (p1:f64, p2:f64) * entries
//! ```
//!
//! For `fwt-ggd`, `scales` is the number of DWT levels. Subband labels are
//! not stored: entries are in canonical subband order and the labels are
//! rebuilt from the config on load. The stored fingerprint must match the
//! one recomputed from the config block.

use std::fs;
use std::path::Path;

use texscat_core::dwt::Orientation;
use texscat_core::scattering::path_labels;
use texscat_core::{FeatureDb, Method, Signature, SignatureConfig, SubbandParams};

use crate::error::{AppError, AppResult};

pub const MAGIC: &[u8; 4] = b"SCRT";
pub const VERSION: u16 = 1;

/// Canonical subband labels for a config.
pub fn subband_labels(config: &SignatureConfig) -> Vec<String> {
    match config.method {
        Method::FwtGgd => (1..=config.scales)
            .flat_map(|level| Orientation::ALL.iter().map(move |o| format!("{level}{o}")))
            .collect(),
        _ => path_labels(config.scales, config.rotations, config.order)
            .into_iter()
            .filter(|l| l != "phi")
            .collect(),
    }
}

pub fn encode(db: &FeatureDb) -> Vec<u8> {
    let c = db.config();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(c.method.id());
    for v in [c.scales, c.rotations, c.order] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    out.push(c.normalized as u8);
    out.extend_from_slice(&c.epsilon_rel.to_le_bytes());
    out.extend_from_slice(&c.fingerprint().to_le_bytes());
    out.extend_from_slice(&(db.len() as u32).to_le_bytes());
    for r in db.records() {
        let label = r.class_label().as_bytes();
        out.extend_from_slice(&(label.len() as u32).to_le_bytes());
        out.extend_from_slice(label);
        out.extend_from_slice(&r.patch_id().to_le_bytes());
        out.extend_from_slice(&(r.len() as u32).to_le_bytes());
        for e in r.entries() {
            out.extend_from_slice(&e.p1.to_le_bytes());
            out.extend_from_slice(&e.p2.to_le_bytes());
        }
    }
    out
}

/// Little-endian cursor shared with the subband dump decoder.
pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub(crate) fn is_done(&self) -> bool {
        self.pos == self.bytes.len()
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| format!("truncated at byte {}", self.pos))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], String> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    pub(crate) fn u8(&mut self) -> Result<u8, String> {
        Ok(self.array::<1>()?[0])
    }

    pub(crate) fn u16(&mut self) -> Result<u16, String> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    pub(crate) fn u32(&mut self) -> Result<u32, String> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    pub(crate) fn u64(&mut self) -> Result<u64, String> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    pub(crate) fn f64(&mut self) -> Result<f64, String> {
        Ok(f64::from_le_bytes(self.array()?))
    }
}

pub fn decode(bytes: &[u8]) -> Result<FeatureDb, String> {
    let mut rd = Reader::new(bytes);
    if rd.take(4)? != MAGIC {
        return Err("not a feature database (bad magic)".into());
    }
    let version = rd.u16()?;
    if version != VERSION {
        return Err(format!("unsupported format version {version}"));
    }
    let method = Method::from_id(rd.u8()?).map_err(|e| e.to_string())?;
    let scales = rd.u32()? as usize;
    let rotations = rd.u32()? as usize;
    let order = rd.u32()? as usize;
    let normalized = match rd.u8()? {
        0 => false,
        1 => true,
        v => return Err(format!("bad normalized flag {v}")),
    };
    let config = SignatureConfig {
        method,
        scales,
        rotations,
        order,
        normalized,
        epsilon_rel: rd.f64()?,
    };
    let stored = rd.u64()?;
    if stored != config.fingerprint() {
        return Err(format!(
            "fingerprint {stored:016x} does not match config ({:016x})",
            config.fingerprint()
        ));
    }
    let count = rd.u32()?;
    let labels = subband_labels(&config);
    let mut db = FeatureDb::new(config);
    for i in 0..count {
        let len = rd.u32()? as usize;
        let class = std::str::from_utf8(rd.take(len)?)
            .map_err(|_| format!("record {i}: class label is not UTF-8"))?
            .to_owned();
        let patch_id = rd.u32()?;
        let n = rd.u32()? as usize;
        if n != labels.len() {
            return Err(format!("record {i}: {n} entries, config implies {}", labels.len()));
        }
        let entries = labels
            .iter()
            .map(|l| Ok(SubbandParams::new(l.clone(), rd.f64()?, rd.f64()?)))
            .collect::<Result<Vec<_>, String>>()?;
        let sig = Signature::new(config, entries)
            .map_err(|e| format!("record {i}: {e}"))?
            .with_source(class, patch_id);
        db.insert(sig).map_err(|e| format!("record {i}: {e}"))?;
    }
    if !rd.is_done() {
        return Err(format!("{} trailing bytes", bytes.len() - rd.pos));
    }
    Ok(db)
}

pub fn save(db: &FeatureDb, path: &Path) -> AppResult<()> {
    fs::write(path, encode(db)).map_err(|e| AppError::io(path, e))
}

pub fn load(path: &Path) -> AppResult<FeatureDb> {
    let bytes = fs::read(path).map_err(|e| AppError::io(path, e))?;
    decode(&bytes).map_err(|message| AppError::Format {
        path: path.to_path_buf(),
        message,
    })
}
