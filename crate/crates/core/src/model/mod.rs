//! The shallow RawNet classifier: configuration, assembly, training, frame
//! inference and random-search tuning. One independent model is trained per
//! data group.

mod config;
mod nas;
mod rawnet;
mod train;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::nn::NnError;
use crate::signal::{Grid, RecType};
use crate::spectral::Nominal;

pub use config::{RawNetConfig, ShapeTrace, REFERENCE_TIME_CHAIN};
pub use nas::{nas_search, SearchResult, SearchSpace, TrialRecord};
pub use rawnet::{build_rawnet, load_model, save_model, RawNet, ResBlock};
pub use train::{train, EpochStats, LabeledFrames, TrainOptions, TrainReport};
pub(crate) use train::argmax as argmax_probs;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    ConfigInvalid(String),
    #[error("config line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },
    #[error("class {0} has no training frames")]
    EmptyClass(usize),
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error("checkpoint was written for config hash {found:016x}, expected {expected:016x}")]
    ConfigHashMismatch { expected: u64, found: u64 },
    #[error("checkpoint is missing tensor {0}")]
    MissingTensor(String),
    #[error("no search trial completed")]
    NoSuccessfulTrial,
    #[error("search budget must be at least 1")]
    EmptyBudget,
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl ModelError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ModelError::Io { path: path.into(), source }
    }
}

const GRIDS_60: [Grid; 3] = [Grid::A, Grid::C, Grid::I];
const GRIDS_50: [Grid; 6] = [Grid::B, Grid::D, Grid::E, Grid::F, Grid::G, Grid::H];

/// Nominal frequency of an enrolled grid; `None` for [`Grid::N`].
pub fn grid_nominal(grid: Grid) -> Option<Nominal> {
    if GRIDS_60.contains(&grid) {
        Some(Nominal::Hz60)
    } else if GRIDS_50.contains(&grid) {
        Some(Nominal::Hz50)
    } else {
        None
    }
}

/// One of the four classification problems: recording type by nominal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DataGroupId {
    pub rec_type: RecType,
    pub nominal: Nominal,
}

impl DataGroupId {
    pub const ALL: [DataGroupId; 4] = [
        DataGroupId { rec_type: RecType::Audio, nominal: Nominal::Hz50 },
        DataGroupId { rec_type: RecType::Audio, nominal: Nominal::Hz60 },
        DataGroupId { rec_type: RecType::Power, nominal: Nominal::Hz50 },
        DataGroupId { rec_type: RecType::Power, nominal: Nominal::Hz60 },
    ];

    pub fn new(rec_type: RecType, nominal: Nominal) -> Result<Self, ModelError> {
        if rec_type == RecType::Unknown {
            return Err(ModelError::ConfigInvalid("a data group needs a known recording type".into()));
        }
        Ok(DataGroupId { rec_type, nominal })
    }

    /// Grids this group's classifier distinguishes, in class-index order.
    pub fn classes(&self) -> &'static [Grid] {
        match self.nominal {
            Nominal::Hz60 => &GRIDS_60,
            Nominal::Hz50 => &GRIDS_50,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.classes().len()
    }

    pub fn class_index(&self, grid: Grid) -> Option<usize> {
        self.classes().iter().position(|&g| g == grid)
    }

    /// Tuned Adam settings `(lr, beta1, beta2)` for this group.
    pub fn default_optimizer(&self) -> (f64, f64, f64) {
        match (self.rec_type, self.nominal) {
            (RecType::Audio, Nominal::Hz50) => (6.5e-4, 0.96, 0.998),
            (RecType::Audio, Nominal::Hz60) => (7e-4, 0.97, 0.998),
            (RecType::Power, Nominal::Hz50) => (1.1e-3, 0.98, 0.992),
            _ => (9.7e-4, 0.98, 0.993),
        }
    }

    /// Full-size architecture with this group's class count and optimizer.
    pub fn default_config(&self) -> RawNetConfig {
        let (lr, beta1, beta2) = self.default_optimizer();
        RawNetConfig { num_classes: self.num_classes(), lr, beta1, beta2, ..RawNetConfig::default() }
    }

    pub fn name(&self) -> String {
        format!("{}{}", self.rec_type.as_str(), self.nominal.as_str())
    }
}

impl fmt::Display for DataGroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for DataGroupId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DataGroupId::ALL
            .iter()
            .copied()
            .find(|g| g.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ModelError::ConfigInvalid(format!("unknown data group {s:?} (audio50, audio60, power50, power60)")))
    }
}
