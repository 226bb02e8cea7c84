//! Frequency-domain explanations for face verification models.
//!
//! An image pair is transformed into the centered 2-D spectrum, split into
//! concentric bands, and each band is removed in turn from both images. The
//! change in embedding similarity per band is that band's importance. Per-pair
//! importances aggregate into per-group profiles, cross-group rankings and
//! verification bias metrics.

pub mod aggregate;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod embedder;
pub mod error;
pub mod image;
pub mod importance;
pub mod metrics;
pub mod report;
pub mod spectral;
pub mod synthfix;

pub use error::{Error, Result};
pub use image::SpatialImage;
