// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("invalid time series: {0}")]
    InvalidSeries(String),

    #[error("signal too short: need {needed} samples, have {available}")]
    SignalTooShort { needed: usize, available: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("insufficient valid residuals: need {needed}, have {available}")]
    InsufficientResiduals { needed: usize, available: usize },

    #[error("rank deficiency detected at column {column}")]
    RankDeficient { column: usize },

    #[error("singular triangular system at diagonal {index}")]
    Singular { index: usize },

    #[error("normal matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("AR coefficients are not stable (root on or outside the unit circle)")]
    UnstableCoefficients,

    #[error("spectra are defined on different frequency grids")]
    GridMismatch,

    #[error("spectrum bin {index} is not strictly positive")]
    NonPositiveBin { index: usize },
}

impl Error {
    /// True for failures caused by the numbers themselves rather than by the
    /// shape of the request.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RankDeficient { .. }
                | Error::Singular { .. }
                | Error::NotPositiveDefinite
                | Error::UnstableCoefficients
                | Error::NonPositiveBin { .. }
                | Error::NonFinite { .. }
        )
    }
}
