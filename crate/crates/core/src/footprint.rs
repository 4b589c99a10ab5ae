// SPDX-License-Identifier: MIT OR Apache-2.0

//! Closed-form memory and operation-count estimates for the QR kernels and
//! the whole identification pipeline.

use crate::error::{Error, Result};
use crate::qr::QrMethod;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResourceEstimate {
    /// Elements of working storage for the factorization.
    pub working_words: u64,
    pub flops_estimate: f64,
    /// Pipeline storage at the requested element width.
    pub pipeline_bytes: u64,
}

/// Working storage in elements for an `n × np` input.
///
/// Givens `2 n np + 4 n`, Gram-Schmidt `2 n np + np²`, Householder
/// `np + n + 5 n np + n²`.
pub fn working_words(method: QrMethod, n: u64, np: u64) -> u64 {
    match method {
        QrMethod::Givens => 2 * n * np + 4 * n,
        QrMethod::GramSchmidt => 2 * n * np + np * np,
        QrMethod::Householder => np + n + 5 * n * np + n * n,
    }
}

/// Approximate operation count.
///
/// Givens `(6 np n² - np³) / 3`, Gram-Schmidt `np n²`, Householder
/// `(6 np² n² + n⁴ - 4 np n³) / 12`. The Householder expression is not
/// monotone in `np`.
pub fn complexity(method: QrMethod, n: u64, np: u64) -> f64 {
    let (n, np) = (n as f64, np as f64);
    match method {
        QrMethod::Givens => (6.0 * np * n * n - np.powi(3)) / 3.0,
        QrMethod::GramSchmidt => np * n * n,
        QrMethod::Householder => (6.0 * np * np * n * n + n.powi(4) - 4.0 * np * n.powi(3)) / 12.0,
    }
}

/// Bytes for `Psi`, `Q`, `R`, `S` and `Theta`:
/// `(2 n np + np² + n + np) * elem_bytes`.
pub fn estimate_pipeline_bytes(n: u64, np: u64, elem_bytes: u64) -> u64 {
    (2 * n * np + np * np + n + np) * elem_bytes
}

pub fn estimate_qr_footprint(
    method: QrMethod,
    n: usize,
    np: usize,
    elem_bytes: usize,
) -> Result<ResourceEstimate> {
    if np == 0 || n < np {
        return Err(Error::Dimension(format!(
            "footprint needs n >= np >= 1, got n = {n}, np = {np}"
        )));
    }
    let (n, np) = (n as u64, np as u64);
    Ok(ResourceEstimate {
        working_words: working_words(method, n, np),
        flops_estimate: complexity(method, n, np),
        pipeline_bytes: estimate_pipeline_bytes(n, np, elem_bytes as u64),
    })
}
