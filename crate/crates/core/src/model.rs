// SPDX-License-Identifier: MIT OR Apache-2.0

//! Time series and regression-problem construction for AR / ARMA fits.
//!
//! Lag convention: an AR model with order `q` has `q + 1` parameters and
//! regresses each target `s[k]` on the strictly-past lags
//! `s[k-1] .. s[k-(q+1)]`. An ARMA(q, p) model regresses `s[k]` on
//! `s[k-1] .. s[k-q]` followed by the residual lags `e[k] .. e[k-p]`.
//! Rows always use the most recent `n_rows` targets of the signal; earlier
//! samples only serve as lag history.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::real::Real;

/// Uniformly sampled scalar signal.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries<T> {
    samples: Vec<T>,
    sample_rate_hz: f64,
}

impl<T: Real> TimeSeries<T> {
    pub fn new(samples: Vec<T>, sample_rate_hz: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidSeries(format!(
                "need at least 2 samples, got {}",
                samples.len()
            )));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::InvalidSeries(format!(
                "sample rate must be positive and finite, got {sample_rate_hz}"
            )));
        }
        if let Some(index) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    /// Sampling period `1 / sample_rate_hz`.
    pub fn period(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    pub fn cast<U: Real>(&self) -> TimeSeries<U> {
        TimeSeries {
            samples: self.samples.iter().map(|&x| U::of(x.as_f64())).collect(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Ar,
    Arma,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Ar => "AR",
            ModelKind::Arma => "ARMA",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ar" => Ok(ModelKind::Ar),
            "arma" => Ok(ModelKind::Arma),
            other => Err(format!(
                "unknown model kind '{other}' (expected ar or arma)"
            )),
        }
    }
}

/// Model structure and regression size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// AR order.
    pub q: usize,
    /// MA order (always 0 for AR).
    pub p: usize,
    /// Lag count of the auxiliary AR fit used to estimate residuals (ARMA only).
    pub stage1_order: usize,
    /// Number of regression rows `N`.
    pub n_rows: usize,
}

impl ModelSpec {
    pub fn ar(q: usize, n_rows: usize) -> Self {
        Self {
            kind: ModelKind::Ar,
            q,
            p: 0,
            stage1_order: 0,
            n_rows,
        }
    }

    /// ARMA spec with the default stage-1 order `min(2 * Np, N / 4)`.
    pub fn arma(q: usize, p: usize, n_rows: usize) -> Self {
        let np = q + p + 1;
        Self {
            kind: ModelKind::Arma,
            q,
            p,
            stage1_order: (2 * np).min(n_rows / 4),
            n_rows,
        }
    }

    pub fn with_stage1_order(mut self, order: usize) -> Self {
        self.stage1_order = order;
        self
    }

    /// Parameter count `Np`.
    pub fn n_params(&self) -> usize {
        match self.kind {
            ModelKind::Ar => self.q + 1,
            ModelKind::Arma => self.q + self.p + 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q < 1 {
            return Err(Error::InvalidSpec("AR order q must be at least 1".into()));
        }
        match self.kind {
            ModelKind::Ar if self.p != 0 => {
                return Err(Error::InvalidSpec("AR model must have p = 0".into()));
            }
            ModelKind::Arma if self.stage1_order < 1 => {
                return Err(Error::InvalidSpec("stage-1 order must be positive".into()));
            }
            ModelKind::Arma if self.stage1_order < self.q + self.p => {
                return Err(Error::InvalidSpec(format!(
                    "stage-1 order {} must be at least q + p = {}",
                    self.stage1_order,
                    self.q + self.p
                )));
            }
            _ => {}
        }
        let np = self.n_params();
        if self.n_rows <= np {
            return Err(Error::InvalidSpec(format!(
                "n_rows ({}) must exceed the parameter count ({np})",
                self.n_rows
            )));
        }
        Ok(())
    }

    /// Samples needed by [`build_ar_regression`] (AR only).
    pub fn min_ar_samples(&self) -> usize {
        self.n_rows + self.n_params()
    }
}

/// Least-squares problem `S = Psi * Theta`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionProblem<T> {
    pub psi: Matrix<T>,
    pub s_vec: Vec<T>,
    pub spec: ModelSpec,
}

impl<T: Real> RegressionProblem<T> {
    /// Wraps an arbitrary least-squares problem, checking shapes and finiteness.
    pub fn new(psi: Matrix<T>, s_vec: Vec<T>, spec: ModelSpec) -> Result<Self> {
        if psi.rows() != s_vec.len() {
            return Err(Error::Dimension(format!(
                "psi has {} rows but target has {} entries",
                psi.rows(),
                s_vec.len()
            )));
        }
        if psi.rows() < psi.cols() || psi.cols() == 0 {
            return Err(Error::Dimension(format!(
                "regression matrix must be tall with at least one column, got {}x{}",
                psi.rows(),
                psi.cols()
            )));
        }
        if let Some(index) = psi.as_slice().iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if let Some(index) = s_vec.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { psi, s_vec, spec })
    }

    pub fn n_rows(&self) -> usize {
        self.psi.rows()
    }

    pub fn n_params(&self) -> usize {
        self.psi.cols()
    }

    pub fn cast<U: Real>(&self) -> RegressionProblem<U> {
        RegressionProblem {
            psi: self.psi.cast(),
            s_vec: self.s_vec.iter().map(|&x| U::of(x.as_f64())).collect(),
            spec: self.spec,
        }
    }
}

/// Stage-1 residual estimates. Entries before `valid_from` lie in the
/// warm-up region of the auxiliary fit and must not be used.
#[derive(Clone, Debug, PartialEq)]
pub struct Residuals<T> {
    pub values: Vec<T>,
    pub valid_from: usize,
}

impl<T: Real> Residuals<T> {
    pub fn all_valid(values: Vec<T>) -> Self {
        Self {
            values,
            valid_from: 0,
        }
    }
}

/// Regression on `lags` strictly-past samples using the last `n_rows` targets.
pub(crate) fn lagged_regression<T: Real>(
    samples: &[T],
    lags: usize,
    n_rows: usize,
) -> Result<(Matrix<T>, Vec<T>)> {
    let needed = n_rows + lags;
    if samples.len() < needed {
        return Err(Error::SignalTooShort {
            needed,
            available: samples.len(),
        });
    }
    let first = samples.len() - n_rows;
    let psi = Matrix::from_fn(n_rows, lags, |r, j| samples[first + r - (j + 1)]);
    let s_vec = samples[first..].to_vec();
    Ok((psi, s_vec))
}

/// AR regression: row `r` holds `[s[k-1], ..., s[k-Np]]` for target `s[k]`.
pub fn build_ar_regression<T: Real>(
    ts: &TimeSeries<T>,
    spec: &ModelSpec,
) -> Result<RegressionProblem<T>> {
    if spec.kind != ModelKind::Ar {
        return Err(Error::InvalidSpec(
            "build_ar_regression needs an AR spec".into(),
        ));
    }
    spec.validate()?;
    let (psi, s_vec) = lagged_regression(ts.samples(), spec.n_params(), spec.n_rows)?;
    Ok(RegressionProblem {
        psi,
        s_vec,
        spec: *spec,
    })
}

/// ARMA second-stage regression: row `r` is
/// `[s[k-1], ..., s[k-q], e[k], ..., e[k-p]]` for target `s[k]`.
pub fn build_arma_stage2_regression<T: Real>(
    ts: &TimeSeries<T>,
    residuals: &Residuals<T>,
    spec: &ModelSpec,
) -> Result<RegressionProblem<T>> {
    if spec.kind != ModelKind::Arma {
        return Err(Error::InvalidSpec(
            "build_arma_stage2_regression needs an ARMA spec".into(),
        ));
    }
    if spec.q < 1 {
        return Err(Error::InvalidSpec("AR order q must be at least 1".into()));
    }
    let np = spec.n_params();
    // Square systems are constructible; the variance estimate in the solver
    // is what needs N > Np.
    if spec.n_rows < np {
        return Err(Error::InvalidSpec(format!(
            "n_rows ({}) must be at least the parameter count ({np})",
            spec.n_rows
        )));
    }
    let s = ts.samples();
    if residuals.values.len() != s.len() {
        return Err(Error::Dimension(format!(
            "residuals have {} entries, series has {}",
            residuals.values.len(),
            s.len()
        )));
    }
    if let Some(index) = residuals.values[residuals.valid_from.min(s.len())..]
        .iter()
        .position(|x| !x.is_finite())
    {
        return Err(Error::NonFinite {
            index: index + residuals.valid_from,
        });
    }
    // First target with a full output history and valid residual lags.
    let k_min = spec.q.max(residuals.valid_from + spec.p);
    let available = s.len().saturating_sub(k_min);
    if available < spec.n_rows {
        return Err(Error::InsufficientResiduals {
            needed: spec.n_rows,
            available,
        });
    }
    let first = s.len() - spec.n_rows;
    let e = &residuals.values;
    let psi = Matrix::from_fn(spec.n_rows, np, |r, j| {
        let k = first + r;
        if j < spec.q {
            s[k - (j + 1)]
        } else {
            e[k - (j - spec.q)]
        }
    });
    Ok(RegressionProblem {
        psi,
        s_vec: s[first..].to_vec(),
        spec: *spec,
    })
}
