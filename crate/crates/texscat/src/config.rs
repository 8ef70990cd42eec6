//! Run configuration: a `key = value` text file plus command-line overrides.
//!
//! Text after `#` is a comment and blank lines are ignored. Keys use the same
//! spelling as the long flags with `-` replaced by `_`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use texscat_core::extract::MAX_ORDER;
use texscat_core::{ExtractorConfig, Method, MorletParams};

use crate::error::{AppError, AppResult};

/// How patches are cut from each source image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    /// Non-overlapping grid covering the image from the top-left corner.
    Tiles,
    /// The four corners plus the center.
    Five,
    /// The whole image is one patch.
    Whole,
}

impl FromStr for Layout {
    type Err = AppError;

    fn from_str(s: &str) -> AppResult<Self> {
        match s {
            "tiles" => Ok(Layout::Tiles),
            "five" => Ok(Layout::Five),
            "whole" => Ok(Layout::Whole),
            _ => Err(AppError::usage(format!("unknown layout '{s}' (tiles, five, whole)"))),
        }
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layout::Tiles => "tiles",
            Layout::Five => "five",
            Layout::Whole => "whole",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    #[serde(serialize_with = "method_name")]
    pub method: Method,
    pub scales: usize,
    pub rotations: usize,
    pub max_order: usize,
    pub epsilon_rel: f64,
    pub oversampling: usize,
    pub floor_rel: f64,
    pub morlet_center_freq: f64,
    pub morlet_bandwidth_factor: f64,
    pub slant: f64,
    pub lowpass_width: f64,
    pub blur_width: f64,
    pub dwt_levels: usize,
    pub patch_size: usize,
    pub layout: Layout,
    pub downscale: bool,
    pub root: Option<PathBuf>,
    pub db: Option<PathBuf>,
    pub seed: u64,
}

fn method_name<S: serde::Serializer>(m: &Method, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(m.name())
}

impl Default for RunConfig {
    fn default() -> Self {
        let e = ExtractorConfig::default();
        Self {
            method: e.method,
            scales: e.scales,
            rotations: e.rotations,
            max_order: e.max_order,
            epsilon_rel: e.epsilon_rel,
            oversampling: e.oversampling,
            floor_rel: e.floor_rel,
            morlet_center_freq: e.morlet.center_freq,
            morlet_bandwidth_factor: e.morlet.bandwidth_factor,
            slant: e.morlet.slant,
            lowpass_width: e.morlet.lowpass_width,
            blur_width: e.morlet.blur_width,
            dwt_levels: e.dwt_levels,
            patch_size: 128,
            layout: Layout::Tiles,
            downscale: false,
            root: None,
            db: None,
            seed: 0,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> AppResult<T> {
    value
        .parse()
        .map_err(|_| AppError::usage(format!("invalid value '{value}' for {key}")))
}

fn parse_bool(key: &str, value: &str) -> AppResult<bool> {
    match value {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(AppError::usage(format!("invalid value '{value}' for {key}"))),
    }
}

impl RunConfig {
    /// Sets one key. Unknown keys are usage errors.
    pub fn set(&mut self, key: &str, value: &str) -> AppResult<()> {
        let key = key.trim().to_ascii_lowercase().replace('-', "_");
        let value = value.trim();
        match key.as_str() {
            "method" => {
                self.method = value
                    .parse()
                    .map_err(|e: texscat_core::Error| AppError::usage(e.to_string()))?
            }
            "scales" | "j" => self.scales = parse(&key, value)?,
            "rotations" | "l" => self.rotations = parse(&key, value)?,
            "max_order" | "m" => self.max_order = parse(&key, value)?,
            "epsilon_rel" => self.epsilon_rel = parse(&key, value)?,
            "oversampling" => self.oversampling = parse(&key, value)?,
            "floor_rel" => self.floor_rel = parse(&key, value)?,
            "morlet_center_freq" => self.morlet_center_freq = parse(&key, value)?,
            "morlet_bandwidth_factor" => self.morlet_bandwidth_factor = parse(&key, value)?,
            "slant" => self.slant = parse(&key, value)?,
            "lowpass_width" => self.lowpass_width = parse(&key, value)?,
            "blur_width" => self.blur_width = parse(&key, value)?,
            "dwt_levels" => self.dwt_levels = parse(&key, value)?,
            "patch_size" => self.patch_size = parse(&key, value)?,
            "layout" => self.layout = value.parse()?,
            "downscale" => self.downscale = parse_bool(&key, value)?,
            "root" => self.root = Some(PathBuf::from(value)),
            "db" => self.db = Some(PathBuf::from(value)),
            "seed" => self.seed = parse(&key, value)?,
            _ => return Err(AppError::usage(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text`.
    pub fn apply_text(&mut self, text: &str) -> AppResult<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split_once('#').map_or(line, |(before, _)| before).trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| AppError::usage(format!("config line {}: expected key = value", n + 1)))?;
            self.set(k, v)
                .map_err(|e| AppError::usage(format!("config line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn morlet(&self) -> MorletParams {
        MorletParams {
            center_freq: self.morlet_center_freq,
            bandwidth_factor: self.morlet_bandwidth_factor,
            slant: self.slant,
            lowpass_width: self.lowpass_width,
            blur_width: self.blur_width,
        }
    }

    pub fn extractor(&self) -> ExtractorConfig {
        ExtractorConfig {
            method: self.method,
            scales: self.scales,
            rotations: self.rotations,
            max_order: self.max_order,
            epsilon_rel: self.epsilon_rel,
            morlet: self.morlet(),
            dwt_levels: self.dwt_levels,
            floor_rel: self.floor_rel,
            oversampling: self.oversampling,
        }
    }

    /// All checks that can be made before touching any data.
    pub fn validate(&self) -> AppResult<()> {
        if self.scales < 1 || self.rotations < 1 {
            return Err(AppError::usage(format!(
                "scales ({}) and rotations ({}) must be at least 1",
                self.scales, self.rotations
            )));
        }
        if self.max_order > MAX_ORDER {
            return Err(AppError::usage(format!(
                "max_order {} exceeds {MAX_ORDER}",
                self.max_order
            )));
        }
        if self.oversampling == 0 || !self.oversampling.is_power_of_two() {
            return Err(AppError::usage(format!(
                "oversampling {} is not a power of two",
                self.oversampling
            )));
        }
        let ex = self.extractor();
        let step = 1usize << ex.decimation_levels().min(usize::BITS as usize - 1);
        if self.patch_size == 0 || !self.patch_size.is_multiple_of(step) {
            return Err(AppError::usage(format!(
                "patch_size {} is not divisible by 2^{} = {step}",
                self.patch_size,
                ex.decimation_levels()
            )));
        }
        ex.validate().map_err(|e| AppError::usage(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_overrides_defaults() {
        let mut c = RunConfig::default();
        c.apply_text("# comment\nmethod = wst-weibull\nJ = 2\nmax-order=3\n\nlayout = five\ndownscale = yes\n")
            .unwrap();
        assert_eq!(c.method, Method::WstWeibull);
        assert_eq!((c.scales, c.max_order), (2, 3));
        assert_eq!(c.layout, Layout::Five);
        assert!(c.downscale);
        assert_eq!(c.rotations, 4);
    }

    #[test]
    fn inline_comments() {
        let mut c = RunConfig::default();
        c.apply_text("scales = 2          # -J\nrotations = 6 #\n# root = /x\n").unwrap();
        assert_eq!((c.scales, c.rotations), (2, 6));
        assert_eq!(c.root, None);
    }

    #[test]
    fn readme_sample_parses() {
        let readme = include_str!("../../../README.md");
        let sample = readme
            .split("```text\n")
            .find(|block| block.contains("method = "))
            .and_then(|block| block.split("```").next())
            .unwrap();
        let mut c = RunConfig::default();
        c.apply_text(sample).unwrap();
        assert_eq!(c.db, Some(PathBuf::from("textures.db")));
        assert!(c.validate().is_ok());
    }

    #[test]
    fn bad_lines_are_usage_errors() {
        for text in ["scales", "scales = x", "colour = red", "method = sift", "layout = grid"] {
            let err = RunConfig::default().apply_text(text).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}: {err}");
        }
    }

    #[test]
    fn validation() {
        assert!(RunConfig::default().validate().is_ok());
        let bad = |f: fn(&mut RunConfig)| {
            let mut c = RunConfig::default();
            f(&mut c);
            c.validate().unwrap_err().exit_code()
        };
        assert_eq!(bad(|c| c.patch_size = 100), 2);
        assert_eq!(bad(|c| c.scales = 0), 2);
        assert_eq!(bad(|c| c.rotations = 0), 2);
        assert_eq!(bad(|c| c.max_order = 4), 2);
        assert_eq!(bad(|c| c.oversampling = 3), 2);
        // the DWT baseline only needs divisibility by its own level count
        let mut c = RunConfig {
            method: Method::FwtGgd,
            scales: 7,
            patch_size: 24,
            ..Default::default()
        };
        assert!(c.validate().is_ok());
        c.dwt_levels = 4;
        assert!(c.validate().is_err());
    }
}
