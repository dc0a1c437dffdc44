//! Grid-of-origin classification for audio and power recordings from the
//! electric network frequency (ENF) hum they carry.
//!
//! The pipeline runs in stages:
//!
//! 1. [`signal`]: WAV ingestion, resampling to the working rate, peak
//!    normalization and overlapped framing.
//! 2. [`spectral`]: spectrograms, 50/60 Hz nominal detection from harmonic
//!    energy, and a zero-phase Butterworth bandpass around the nominal.
//! 3. [`nn`] and [`model`]: a small CPU tensor engine and the shallow
//!    RawNet-style classifier built from it, one model per data group.
//! 4. [`decision`]: entropy-based frame rejection and recording-level
//!    majority voting.
//! 5. [`datasetgen`]: synthetic ENF corpora, on-disk layouts and evaluation.

pub mod datasetgen;
pub mod decision;
pub mod error;
pub mod model;
pub mod nn;
pub mod signal;
pub mod spectral;

mod seed;

pub use error::{Error, Result};
pub use seed::SeedSplitter;
pub use signal::{FrameBatch, FrameSpec, Grid, RecType, Recording};
pub use spectral::Nominal;
