//! Spectrograms, 50/60 Hz nominal detection and ENF bandpass isolation.

mod butterworth;
mod detect;
mod stft;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use butterworth::{bandpass, butter_bandpass, sosfilt, sosfiltfilt, Biquad, BANDPASS_HALFWIDTH_HZ, BANDPASS_ORDER};
pub use detect::{detect_nominal, detect_nominal_with, DetectConfig, NominalDecision};
pub use stft::{harmonic_band_mean, spectrogram, Spectrogram};

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("invalid STFT window: {0}")]
    InvalidWindow(String),
    #[error("band {lo:.3}..{hi:.3} Hz is outside the spectrum or contains no bins")]
    BandOutOfRange { lo: f64, hi: f64 },
    #[error("passband edge {edge_hz} Hz is not below Nyquist ({nyquist_hz} Hz)")]
    NyquistViolation { edge_hz: f64, nyquist_hz: f64 },
}

/// Nominal mains frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Nominal {
    Hz50,
    Hz60,
}

impl Nominal {
    pub fn hz(&self) -> f64 {
        match self {
            Nominal::Hz50 => 50.0,
            Nominal::Hz60 => 60.0,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Nominal::Hz50 => "50",
            Nominal::Hz60 => "60",
        }
    }
}

impl fmt::Display for Nominal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Nominal {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().trim_end_matches("Hz").trim_end_matches("hz") {
            "50" => Ok(Nominal::Hz50),
            "60" => Ok(Nominal::Hz60),
            other => Err(format!("unknown nominal frequency {other:?}")),
        }
    }
}
