//! Files, datasets and evaluation reports around `texscat-core`.
//!
//! * [`image_io`]: 8-bit PGM / PNG decoding to luminance grids.
//! * [`dataset`]: class-per-directory datasets, patching and parallel
//!   indexing into a feature database.
//! * [`dbfile`]: the versioned binary feature database format.
//! * [`dump`]: binary subband dumps for inspection.
//! * [`report`]: text and JSON evaluation reports.
//! * [`config`]: the key-value run configuration.
//! * [`synth`]: small generated texture datasets for tests and demos.
//! * [`inspect`]: subband histograms next to their Weibull fits.

// `!(x >= 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dataset;
pub mod dbfile;
pub mod dump;
pub mod error;
pub mod image_io;
pub mod inspect;
pub mod report;
pub mod synth;

pub use error::{AppError, AppResult};
