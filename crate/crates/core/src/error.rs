//! Crate-wide error type. Each module has its own error enum; this one
//! wraps them so pipeline-level operations can propagate any of them.

use thiserror::Error;

use crate::datasetgen::DatasetError;
use crate::decision::DecisionError;
use crate::model::ModelError;
use crate::nn::NnError;
use crate::signal::SignalError;
use crate::spectral::SpectralError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Decision(#[from] DecisionError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}
