// SPDX-License-Identifier: MIT OR Apache-2.0

//! Output-only identification of vibration signals with AR/ARMA models,
//! analytic spectra, and peak-shift damage detection.

pub mod detect;
pub mod error;
pub mod footprint;
pub mod matrix;
pub mod model;
pub mod oracle;
pub mod parallel;
pub mod qr;
pub mod real;
pub mod spectrum;
pub mod sysid;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use model::{ModelKind, ModelSpec, RegressionProblem, TimeSeries};
pub use parallel::ExecContext;
pub use qr::{QrFactors, QrMethod};
pub use real::{Precision, Real};
pub use spectrum::{Spectrum, TrigMode, TrigTable};
pub use sysid::SysIdModel;
