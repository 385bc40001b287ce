use thiserror::Error;

use crate::config::ConfigError;
use crate::data::DataError;
use crate::flops::FlopsError;
use crate::law::{FitError, MetricError};
use crate::validation::ValidationError;

/// Any error raised by this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Flops(#[from] FlopsError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
}
