//! Bimodal (RGB + NIR) camouflaged-object segmentation.
//!
//! Two independent pyramid encoders feed a per-stage gated fusion with CBAM
//! attention; a progressive decoder with deep supervision and an edge head
//! produces a boundary-refined probability map. The crate also carries the
//! structure loss, the standard camouflaged-object metrics, a synthetic
//! spectral-camouflage generator and a small training pipeline.

pub mod attention;
pub mod autograd;
pub mod backbone;
pub mod blocks;
pub mod data;
pub mod decoder;
pub mod error;
pub mod fusion;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod pipeline;
pub mod tensor;

pub use decoder::{Ablation, PredictionBundle};
pub use error::{Error, Result};
pub use metrics::MetricReport;
pub use model::{ModelConfig, SwNet};
