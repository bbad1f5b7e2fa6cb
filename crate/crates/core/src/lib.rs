//! Fog-based adversarial perturbations for image classifiers.
//!
//! The pipeline: synthesize a multi-octave gradient-noise fog field, blend
//! it into a clean image through a differentiable formation chain, and
//! optimize the fog mask with momentum sign-gradient steps until the
//! classifier flips. Evaluation utilities cover success-rate metrics,
//! transfer across models, preprocessing defenses (DCT quantization,
//! total-variation reconstruction), and representation-shift analysis.
//!
//! Everything is seeded and reproducible at desk scale: the crate ships a
//! synthetic texture dataset and a small trainable CNN so the whole attack
//! loop runs in seconds on a CPU.

pub mod attack;
pub mod classifier;
pub mod cli;
pub mod error;
pub mod eval;
pub mod field;
pub mod fog;
pub mod io;
pub mod noise;
pub mod rng;

pub use error::{Error, Result};
