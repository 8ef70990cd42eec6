//! Texture signatures from the windowed scattering transform.
//!
//! The crate is `no_std` and only needs `alloc`. It covers the numerical
//! part of a texture retrieval pipeline:
//!
//! * [`grid`]: real-valued sample grids and the patch-level preprocessing
//!   (cropping, normalization, half-size box downscaling, periodic blur).
//! * [`filterbank`]: frequency-domain Morlet / Gaussian filterbanks and their
//!   Littlewood–Paley sum.
//! * [`scattering`]: the finite-path windowed scattering transform and its
//!   parent-normalized variant.
//! * [`dwt`]: the separable Daubechies-2 pyramid used by the baseline.
//! * [`statmodel`]: maximum-likelihood Weibull and generalized Gaussian fits.
//! * [`similarity`]: the Weibull Bhattacharyya kernel, the multi-subband
//!   scattering similarity and the GGD Kullback–Leibler baseline.
//! * [`retrieval`]: in-memory feature databases, ranked queries and retrieval
//!   rates.
//!
//! File formats, image decoding and the command-line driver live in the
//! companion `texscat` crate.

#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod dwt;
pub mod error;
pub mod extract;
pub mod fft;
pub mod filterbank;
pub mod grid;
pub mod quadrature;
pub mod retrieval;
pub mod scattering;
pub mod signature;
pub mod similarity;
pub mod special;
pub mod statmodel;

pub use error::{Error, Result};
pub use extract::{Extractor, ExtractorConfig};
pub use filterbank::{FilterBank, MorletParams};
pub use grid::{ImageGrid, PatchSet};
pub use retrieval::{FeatureDb, Hit};
pub use scattering::{Path, ScatteringRep};
pub use signature::{Method, Signature, SignatureConfig, SubbandParams};
pub use statmodel::{GgdParams, WeibullParams};
