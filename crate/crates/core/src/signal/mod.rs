//! Waveform ingestion, peak normalization and fixed-length overlapped framing.

mod archive;
mod frame;
mod resample;
mod wav;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

pub use archive::{read_frame_archive, write_frame_archive, ARCHIVE_MAGIC};
pub use frame::{frame, normalize, normalize_in_place, FrameBatch, FrameSpec};
pub use resample::resample;
pub use wav::{decode_wav, parse_wav, write_wav_pcm16, encode_wav_pcm16};

/// Sample rate every recording is brought to before framing.
pub const WORKING_RATE: u32 = 1000;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("malformed WAV: {0}")]
    MalformedWav(String),
    #[error("unsupported WAV encoding: format tag {format}, {bits} bits per sample")]
    UnsupportedEncoding { format: u16, bits: u16 },
    #[error("WAV file has an empty data chunk")]
    EmptyPayload,
    #[error("recording too short: {len} samples, need at least {needed}")]
    RecordingTooShort { len: usize, needed: usize },
    #[error("invalid framing parameters: {0}")]
    InvalidFraming(String),
    #[error("malformed frame archive: {0}")]
    MalformedArchive(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SignalError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SignalError::Io { path: path.into(), source }
    }
}

/// How a recording was captured. Power recordings carry a much stronger hum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RecType {
    Audio,
    Power,
    Unknown,
}

impl RecType {
    pub fn as_str(&self) -> &'static str {
        match self {
            RecType::Audio => "audio",
            RecType::Power => "power",
            RecType::Unknown => "unknown",
        }
    }
}

impl fmt::Display for RecType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RecType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "audio" => Ok(RecType::Audio),
            "power" => Ok(RecType::Power),
            "unknown" | "" => Ok(RecType::Unknown),
            other => Err(format!("unknown recording type {other:?}")),
        }
    }
}

/// Grid labels. `N` marks a recording from none of the enrolled grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Grid {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    H,
    I,
    N,
}

impl Grid {
    /// All labels in confusion-matrix order.
    pub const ALL: [Grid; 10] = [
        Grid::A,
        Grid::B,
        Grid::C,
        Grid::D,
        Grid::E,
        Grid::F,
        Grid::G,
        Grid::H,
        Grid::I,
        Grid::N,
    ];

    pub fn letter(&self) -> char {
        b"ABCDEFGHIN"[self.index()] as char
    }

    pub fn index(&self) -> usize {
        *self as usize
    }

    pub fn from_letter(c: char) -> Option<Grid> {
        Grid::ALL.iter().copied().find(|g| g.letter() == c.to_ascii_uppercase())
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Grid::from_letter(c).ok_or_else(|| format!("unknown grid {s:?}")),
            _ => Err(format!("unknown grid {s:?}")),
        }
    }
}

/// A mono waveform with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub rec_type: RecType,
    /// `None` when the grid of origin is not known.
    pub grid: Option<Grid>,
    pub source_id: String,
}

impl Recording {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Self {
        assert!(sample_rate > 0, "sample rate must be positive");
        Recording {
            samples,
            sample_rate,
            rec_type: RecType::Unknown,
            grid: None,
            source_id: String::new(),
        }
    }

    pub fn with_source(mut self, source_id: impl Into<String>) -> Self {
        self.source_id = source_id.into();
        self
    }

    pub fn with_type(mut self, rec_type: RecType) -> Self {
        self.rec_type = rec_type;
        self
    }

    pub fn with_grid(mut self, grid: Option<Grid>) -> Self {
        self.grid = grid;
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Returns the recording at `rate`, resampling when needed.
    pub fn at_rate(self, rate: u32) -> Recording {
        if self.sample_rate == rate {
            return self;
        }
        let samples = resample(&self.samples, self.sample_rate, rate);
        Recording { samples, sample_rate: rate, ..self }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_letters_round_trip() {
        for g in Grid::ALL {
            assert_eq!(g.letter().to_string().parse::<Grid>().unwrap(), g);
        }
        assert!("Z".parse::<Grid>().is_err());
        assert!("AB".parse::<Grid>().is_err());
    }

    #[test]
    fn rec_type_parse() {
        assert_eq!("Audio".parse::<RecType>().unwrap(), RecType::Audio);
        assert_eq!("power".parse::<RecType>().unwrap(), RecType::Power);
        assert!("video".parse::<RecType>().is_err());
    }
}
