//! Synthetic ENF corpora, the on-disk corpus layout, and evaluation of
//! verdicts against ground truth.
//!
//! Layout: `root/{train,practice,test}/{audio,power}/<A..I or N>/*.wav`.

mod corpus;
mod eval;
mod synth;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::signal::{Grid, RecType, SignalError};
use crate::spectral::Nominal;

pub use corpus::{load_layout, make_corpus, CorpusItem, Source, MANIFEST_FILE};
pub use eval::{evaluate, Accuracy, Evaluation};
pub use synth::{band_moments, reference_profile, synth_enf, synth_noise, GridProfile};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("invalid grid profile: {0}")]
    InvalidProfile(String),
    #[error("{path}: {reason}")]
    Layout { path: PathBuf, reason: String },
    #[error("verdict for {0} has no manifest entry")]
    UnknownSource(String),
    #[error("manifest line {line}: {msg}")]
    Manifest { line: usize, msg: String },
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl DatasetError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DatasetError::Io { path: path.into(), source }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Practice,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Practice, Split::Test];

    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Practice => "practice",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Split::ALL.iter().copied().find(|x| x.as_str() == s).ok_or_else(|| format!("unknown split {s:?}"))
    }
}

/// One recording in a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    /// Path relative to the corpus root, with `/` separators.
    pub path: String,
    pub grid: Grid,
    pub rec_type: RecType,
    /// Known nominal; unset for test recordings and for N.
    pub nominal: Option<Nominal>,
    pub duration_s: f64,
    /// Generator seed, for synthetic recordings.
    pub seed: Option<u64>,
}

impl ManifestEntry {
    /// Split named by the first path component.
    pub fn split(&self) -> Option<Split> {
        self.path.split('/').next().and_then(|s| s.parse().ok())
    }
}

pub const MANIFEST_HEADER: &str = "path,grid,rec_type,nominal,duration_s,seed";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
}

impl CorpusManifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, path: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.path == path)
    }

    pub fn in_split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split() == Some(split))
    }

    /// The same manifest with generator seeds dropped, as recovered from a
    /// directory scan.
    pub fn without_seeds(&self) -> Self {
        CorpusManifest { entries: self.entries.iter().map(|e| ManifestEntry { seed: None, ..e.clone() }).collect() }
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{MANIFEST_HEADER}\n");
        for e in &self.entries {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                e.path,
                e.grid,
                e.rec_type,
                e.nominal.map(|n| n.as_str()).unwrap_or(""),
                e.duration_s,
                e.seed.map(|v| v.to_string()).unwrap_or_default()
            ));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self, DatasetError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == MANIFEST_HEADER => {}
            None => return Ok(CorpusManifest::default()),
            Some(_) => return Err(DatasetError::Manifest { line: 1, msg: format!("expected header {MANIFEST_HEADER}") }),
        }
        let entries = lines
            .map(|(i, line)| {
                let bad = |msg: String| DatasetError::Manifest { line: i + 1, msg };
                let f: Vec<&str> = line.split(',').map(str::trim).collect();
                if f.len() != 6 {
                    return Err(bad(format!("{} fields, expected 6", f.len())));
                }
                Ok(ManifestEntry {
                    path: f[0].to_string(),
                    grid: f[1].parse().map_err(bad)?,
                    rec_type: f[2].parse().map_err(|e| bad(format!("{e}")))?,
                    nominal: if f[3].is_empty() { None } else { Some(f[3].parse().map_err(bad)?) },
                    duration_s: f[4].parse().map_err(|_| bad(format!("bad duration {:?}", f[4])))?,
                    seed: if f[5].is_empty() {
                        None
                    } else {
                        Some(f[5].parse().map_err(|_| bad(format!("bad seed {:?}", f[5])))?)
                    },
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CorpusManifest { entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_csv_round_trip() {
        let m = CorpusManifest {
            entries: vec![
                ManifestEntry {
                    path: "train/audio/A/a.wav".into(),
                    grid: Grid::A,
                    rec_type: RecType::Audio,
                    nominal: Some(Nominal::Hz60),
                    duration_s: 64.0,
                    seed: Some(17),
                },
                ManifestEntry {
                    path: "test/power/N/n.wav".into(),
                    grid: Grid::N,
                    rec_type: RecType::Power,
                    nominal: None,
                    duration_s: 20.5,
                    seed: None,
                },
            ],
        };
        let text = m.to_csv();
        assert!(text.starts_with("path,grid,rec_type,nominal,duration_s,seed\n"));
        assert_eq!(CorpusManifest::from_csv(&text).unwrap(), m);
        assert_eq!(m.entries[1].split(), Some(Split::Test));
        assert!(CorpusManifest::from_csv("a,b\n").is_err());
        assert!(matches!(
            CorpusManifest::from_csv(&format!("{MANIFEST_HEADER}\nx,Q,audio,,1,\n")),
            Err(DatasetError::Manifest { line: 2, .. })
        ));
    }
}
