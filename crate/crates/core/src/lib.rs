//! Correlation-filter visual tracking toolkit.
//!
//! Building blocks: dense tensor + FFT core, a hand-crafted/compressed
//! feature pipeline, a differentiable correlation-filter loss layer with a
//! small SGD trainer, channel-reliability selection, a basic DCF tracker, a
//! continuous-convolution-operator tracker, and an OTB-style evaluation
//! harness with a CLI.

pub mod cco;
pub mod cftrain;
pub mod crm;
pub mod dcf;
pub mod error;
pub mod eval;
pub mod features;
pub mod tensor;

pub use error::{Error, Result};
