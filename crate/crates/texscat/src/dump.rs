//! Binary dump of scattering subbands for external inspection.
//!
//! Little-endian throughout:
//!
//! ```text
//! header  "SCDP"  version:u16  paths:u32
//! path    layer:u32  (j:u32, r:u32) * layer  width:u32  height:u32
//!         samples:[f64; width * height] (row-major)
//! ```
//!
//! Paths appear in canonical order, starting with the layer-0 low-pass.

use std::fs;
use std::path::Path as FsPath;

use texscat_core::{ImageGrid, Path, ScatteringRep};

use crate::dbfile::Reader;
use crate::error::{AppError, AppResult};

pub const MAGIC: &[u8; 4] = b"SCDP";
pub const VERSION: u16 = 1;

pub fn encode(rep: &ScatteringRep) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(rep.len() as u32).to_le_bytes());
    for (path, grid) in rep.iter() {
        out.extend_from_slice(&(path.layer() as u32).to_le_bytes());
        for &(j, r) in path.steps() {
            out.extend_from_slice(&(j as u32).to_le_bytes());
            out.extend_from_slice(&(r as u32).to_le_bytes());
        }
        out.extend_from_slice(&(grid.width() as u32).to_le_bytes());
        out.extend_from_slice(&(grid.height() as u32).to_le_bytes());
        for v in grid.samples() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Parses a dump back into `(path, grid)` pairs.
pub fn decode(bytes: &[u8]) -> Result<Vec<(Path, ImageGrid)>, String> {
    let mut rd = Reader::new(bytes);
    if rd.take(4)? != MAGIC {
        return Err("not a subband dump (bad magic)".into());
    }
    let version = rd.u16()?;
    if version != VERSION {
        return Err(format!("unsupported dump version {version}"));
    }
    let count = rd.u32()? as usize;
    let mut out = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let layer = rd.u32()?;
        let steps = (0..layer)
            .map(|_| Ok((rd.u32()? as usize, rd.u32()? as usize)))
            .collect::<Result<Vec<_>, String>>()?;
        let (w, h) = (rd.u32()? as usize, rd.u32()? as usize);
        let samples = (0..w * h).map(|_| rd.f64()).collect::<Result<Vec<_>, String>>()?;
        let grid = ImageGrid::new(w, h, samples).map_err(|e| e.to_string())?;
        out.push((Path::new(steps), grid));
    }
    if !rd.is_done() {
        return Err("trailing bytes".into());
    }
    Ok(out)
}

pub fn save(rep: &ScatteringRep, path: &FsPath) -> AppResult<()> {
    fs::write(path, encode(rep)).map_err(|e| AppError::io(path, e))
}
