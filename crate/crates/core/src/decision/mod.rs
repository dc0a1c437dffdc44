//! Open-set frame rejection by softmax entropy and recording-level majority
//! voting, plus the full classification pipeline for one recording.

mod pipeline;

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::model::DataGroupId;
use crate::signal::{Grid, RecType};
use crate::spectral::Nominal;

pub use pipeline::{classify_recording, prepare_frames, ClassifyOptions, ModelSet};

#[derive(Debug, Error, PartialEq)]
pub enum DecisionError {
    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),
    #[error("no frame labels to aggregate")]
    EmptyInput,
    #[error("invalid threshold: {0}")]
    InvalidThreshold(String),
    #[error("frame label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("{0}: recording type unknown and no override given")]
    UnknownRecType(String),
    #[error("no model loaded for data group {0}")]
    MissingModel(DataGroupId),
    #[error("verdict csv line {line}: {msg}")]
    MalformedVerdicts { line: usize, msg: String },
}

/// Entropy and vote thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// A frame is accepted when its entropy is below `alpha1 * log2(n)`.
    pub alpha1: f64,
    /// A class wins when it takes at least this fraction of all frames.
    pub alpha2: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { alpha1: 0.8, alpha2: 0.75 }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), DecisionError> {
        if !(self.alpha1.is_finite() && self.alpha1 >= 0.0) {
            return Err(DecisionError::InvalidThreshold(format!("alpha1 {} must be a non-negative number", self.alpha1)));
        }
        if !(self.alpha2 > 0.5 && self.alpha2 <= 1.0) {
            return Err(DecisionError::InvalidThreshold(format!("alpha2 {} outside (0.5, 1]", self.alpha2)));
        }
        Ok(())
    }
}

/// Largest tolerated `|sum(p) - 1|`.
const SUM_TOLERANCE: f64 = 1e-4;

fn check_distribution(probs: &[f64]) -> Result<(), DecisionError> {
    if probs.len() < 2 {
        return Err(DecisionError::InvalidDistribution(format!("{} classes, need at least 2", probs.len())));
    }
    if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        return Err(DecisionError::InvalidDistribution(format!("entry {p} is negative or not finite")));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(DecisionError::InvalidDistribution(format!("entries sum to {sum}")));
    }
    Ok(())
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn entropy_bits(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.log2()).sum::<f64>()
}

/// Accepts a frame prediction when `H(p) < alpha1 * log2(n)`.
pub fn entropy_accept(probs: &[f64], alpha1: f64, n: usize) -> Result<bool, DecisionError> {
    check_distribution(probs)?;
    if probs.len() != n {
        return Err(DecisionError::InvalidDistribution(format!("{} entries for {n} classes", probs.len())));
    }
    Ok(entropy_bits(probs) < alpha1 * (n as f64).log2())
}

/// One frame's softmax output and what the entropy rule made of it.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePrediction {
    pub probs: Vec<f64>,
    pub accepted: bool,
    /// Most probable class for accepted frames, `None` for rejected ones.
    pub label: Option<usize>,
}

impl FramePrediction {
    pub fn from_probs(probs: Vec<f64>, alpha1: f64) -> Result<Self, DecisionError> {
        let n = probs.len();
        let accepted = entropy_accept(&probs, alpha1, n)?;
        let label = accepted.then(|| crate::model::argmax_probs(&probs));
        Ok(FramePrediction { probs, accepted, label })
    }
}

/// Vote counts over one recording's frames.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteSummary {
    pub counts: Vec<usize>,
    pub none_count: usize,
    /// Share of all frames, rejected ones included, won by the top class.
    pub top_fraction: f64,
    /// Winning class index, `None` when the recording is labelled N.
    pub winner: Option<usize>,
}

impl VoteSummary {
    pub fn total(&self) -> usize {
        self.counts.iter().sum::<usize>() + self.none_count
    }
}

/// Majority vote. The most frequent class wins if it holds at least
/// `alpha2` of all frames; rejected frames stay in the denominator and a tie
/// for first place yields N.
pub fn aggregate(frame_labels: &[Option<usize>], alpha2: f64, n: usize) -> Result<VoteSummary, DecisionError> {
    if frame_labels.is_empty() {
        return Err(DecisionError::EmptyInput);
    }
    Thresholds { alpha1: 0.0, alpha2 }.validate()?;
    let mut counts = vec![0usize; n];
    let mut none_count = 0;
    for l in frame_labels {
        match *l {
            Some(c) if c < n => counts[c] += 1,
            Some(c) => return Err(DecisionError::LabelOutOfRange { label: c, classes: n }),
            None => none_count += 1,
        }
    }
    let top = counts.iter().copied().max().unwrap_or(0);
    let top_fraction = top as f64 / frame_labels.len() as f64;
    let leaders: Vec<usize> = (0..n).filter(|&c| counts[c] == top).collect();
    let winner = (top > 0 && leaders.len() == 1 && top_fraction >= alpha2).then(|| leaders[0]);
    Ok(VoteSummary { counts, none_count, top_fraction, winner })
}

/// Final label for one recording.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordingVerdict {
    pub source_id: String,
    pub rec_type: RecType,
    pub group: DataGroupId,
    pub final_grid: Grid,
    pub votes: VoteSummary,
    pub thresholds: Thresholds,
    pub frames: Vec<FramePrediction>,
}

impl RecordingVerdict {
    /// Maps the vote winner through the group's class table.
    pub fn new(
        source_id: impl Into<String>,
        group: DataGroupId,
        votes: VoteSummary,
        thresholds: Thresholds,
        frames: Vec<FramePrediction>,
    ) -> Self {
        let final_grid = votes.winner.map(|c| group.classes()[c]).unwrap_or(Grid::N);
        RecordingVerdict {
            source_id: source_id.into(),
            rec_type: group.rec_type,
            group,
            final_grid,
            votes,
            thresholds,
            frames,
        }
    }

    pub fn record(&self) -> VerdictRecord {
        let mut grid_counts = [0usize; 9];
        for (c, &count) in self.votes.counts.iter().enumerate() {
            grid_counts[self.group.classes()[c].index()] = count;
        }
        VerdictRecord {
            source_id: self.source_id.clone(),
            rec_type: self.rec_type,
            nominal: Some(self.group.nominal),
            final_grid: self.final_grid,
            top_fraction: self.votes.top_fraction,
            grid_counts,
            none_count: self.votes.none_count,
            thresholds: self.thresholds,
        }
    }
}

/// One verdict CSV row. Vote counts are kept per grid letter A..I, zero for
/// grids outside the recording's group.
#[derive(Debug, Clone, PartialEq)]
pub struct VerdictRecord {
    pub source_id: String,
    pub rec_type: RecType,
    pub nominal: Option<Nominal>,
    pub final_grid: Grid,
    pub top_fraction: f64,
    pub grid_counts: [usize; 9],
    pub none_count: usize,
    /// Thresholds the verdict was reached with.
    pub thresholds: Thresholds,
}

pub const VERDICT_HEADER: &str =
    "source_id,rec_type,nominal,final,top_fraction,A,B,C,D,E,F,G,H,I,none_count,alpha1,alpha2";

impl VerdictRecord {
    pub fn csv_row(&self) -> String {
        let mut s = format!(
            "{},{},{},{},{}",
            self.source_id,
            self.rec_type,
            self.nominal.map(|n| n.as_str()).unwrap_or(""),
            self.final_grid,
            self.top_fraction
        );
        for c in self.grid_counts {
            let _ = write!(s, ",{c}");
        }
        let _ = write!(s, ",{},{},{}", self.none_count, self.thresholds.alpha1, self.thresholds.alpha2);
        s
    }
}

pub fn write_verdicts_csv(records: &[VerdictRecord]) -> String {
    let mut s = format!("{VERDICT_HEADER}\n");
    for r in records {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

pub fn parse_verdicts_csv(text: &str) -> Result<Vec<VerdictRecord>, DecisionError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == VERDICT_HEADER => {}
        _ => return Err(DecisionError::MalformedVerdicts { line: 1, msg: "missing header".into() }),
    }
    lines
        .map(|(i, line)| {
            let bad = |msg: String| DecisionError::MalformedVerdicts { line: i + 1, msg };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 17 {
                return Err(bad(format!("{} fields, expected 17", f.len())));
            }
            let alpha = |s: &str| f64::from_str(s.trim()).map_err(|_| bad(format!("bad threshold {s:?}")));
            let num = |s: &str| usize::from_str(s.trim()).map_err(|_| bad(format!("bad count {s:?}")));
            let mut grid_counts = [0usize; 9];
            for (k, c) in grid_counts.iter_mut().enumerate() {
                *c = num(f[5 + k])?;
            }
            Ok(VerdictRecord {
                source_id: f[0].to_string(),
                rec_type: f[1].parse().map_err(|e| bad(format!("{e}")))?,
                nominal: match f[2].trim() {
                    "" => None,
                    s => Some(s.parse().map_err(|e| bad(format!("{e}")))?),
                },
                final_grid: f[3].parse().map_err(bad)?,
                top_fraction: f[4].trim().parse().map_err(|_| bad(format!("bad fraction {:?}", f[4])))?,
                grid_counts,
                none_count: num(f[14])?,
                thresholds: Thresholds { alpha1: alpha(f[15])?, alpha2: alpha(f[16])? },
            })
        })
        .collect()
}
