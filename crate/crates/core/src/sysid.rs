// SPDX-License-Identifier: MIT OR Apache-2.0

//! Least-squares identification of AR and ARMA models.
//!
//! `theta` holds the raw regression solution. For the AR part these are
//! prediction coefficients `a_j` in `s[k] ≈ a_1 s[k-1] + ... + a_m s[k-m]`;
//! the characteristic polynomial is `1 - Σ a_j z^-j`. For ARMA the trailing
//! block holds `c_0 ... c_p`, the weights of `ê[k] ... ê[k-p]`, with `c_0`
//! close to one on well-posed problems.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{
    build_ar_regression, build_arma_stage2_regression, lagged_regression, ModelKind, ModelSpec,
    RegressionProblem, Residuals, TimeSeries,
};
use crate::parallel::ExecContext;
use crate::qr::{back_substitution, factorize, QrMethod};
use crate::real::{Precision, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct FitDiagnostics {
    /// `||S - Psi Theta||_2` of the final regression.
    pub residual_norm: f64,
    pub qr_method: QrMethod,
    pub precision: Precision,
    /// QR flops summed over every solve in the fit.
    pub qr_flops: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SysIdModel<T> {
    pub spec: ModelSpec,
    pub theta: Vec<T>,
    pub sigma2: T,
    pub diagnostics: FitDiagnostics,
}

impl<T: Real> SysIdModel<T> {
    /// Prediction coefficients of the autoregressive part.
    pub fn ar_coefficients(&self) -> &[T] {
        match self.spec.kind {
            ModelKind::Ar => &self.theta,
            ModelKind::Arma => &self.theta[..self.spec.q],
        }
    }

    /// Weights of `ê[k] ... ê[k-p]` (empty for AR).
    pub fn ma_coefficients(&self) -> &[T] {
        match self.spec.kind {
            ModelKind::Ar => &[],
            ModelKind::Arma => &self.theta[self.spec.q..],
        }
    }

    pub fn cast<U: Real>(&self) -> SysIdModel<U> {
        SysIdModel {
            spec: self.spec,
            theta: self.theta.iter().map(|&x| U::of(x.as_f64())).collect(),
            sigma2: U::of(self.sigma2.as_f64()),
            diagnostics: self.diagnostics.clone(),
        }
    }
}

/// `Qᵀ S`, one column dot product per entry, read straight from `Q`.
pub fn project_target<T: Real>(q: &Matrix<T>, s: &[T], ctx: &ExecContext) -> Vec<T> {
    assert_eq!(q.rows(), s.len(), "target length does not match Q");
    let mut out = vec![T::zero(); q.cols()];
    ctx.for_each_chunk_mut(&mut out, 1, |range, chunk| {
        for (slot, j) in chunk.iter_mut().zip(range) {
            *slot = crate::real::dot(q.col(j), s);
        }
    });
    out
}

/// `||S - Psi Theta||²`, reduced over rows in fixed partition order.
pub fn residual_sum_of_squares<T: Real>(
    psi: &Matrix<T>,
    s: &[T],
    theta: &[T],
    ctx: &ExecContext,
) -> T {
    assert_eq!(psi.cols(), theta.len());
    ctx.map_reduce(
        psi.rows(),
        |rows| {
            let mut acc = T::zero();
            for r in rows {
                let mut pred = T::zero();
                for (j, &t) in theta.iter().enumerate() {
                    pred = pred + psi[(r, j)] * t;
                }
                let d = s[r] - pred;
                acc = acc + d * d;
            }
            acc
        },
        |a, b| a + b,
    )
}

/// `RSS / (N - Np)`.
pub fn noise_variance<T: Real>(rss: T, n_rows: usize, n_params: usize) -> Result<T> {
    if n_rows <= n_params {
        return Err(Error::InsufficientResiduals {
            needed: n_params + 1,
            available: n_rows,
        });
    }
    Ok(rss / T::of((n_rows - n_params) as f64))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeastSquares<T> {
    pub theta: Vec<T>,
    pub sigma2: T,
    pub rss: T,
    pub qr_flops: u64,
}

/// Solves `S = Psi Theta` through `R Theta = Qᵀ S`.
pub fn solve_regression<T: Real>(
    prob: &RegressionProblem<T>,
    method: QrMethod,
    ctx: &ExecContext,
) -> Result<LeastSquares<T>> {
    let (n, np) = (prob.n_rows(), prob.n_params());
    if n <= np {
        return Err(Error::InsufficientResiduals {
            needed: np + 1,
            available: n,
        });
    }
    let f = factorize(&prob.psi, method, ctx)?;
    let qts = project_target(&f.q_mat, &prob.s_vec, ctx);
    let theta = back_substitution(&f.r_mat, &qts)?;
    let rss = residual_sum_of_squares(&prob.psi, &prob.s_vec, &theta, ctx);
    let sigma2 = noise_variance(rss, n, np)?;
    if !sigma2.is_finite() || theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite { index: 0 });
    }
    Ok(LeastSquares {
        theta,
        sigma2,
        rss,
        qr_flops: f.flops,
    })
}

/// One-step prediction errors of an AR fit with `order` lags, using every
/// sample that has a full lag history. Entries before `order` are invalid.
pub fn ar_residuals<T: Real>(
    ts: &TimeSeries<T>,
    order: usize,
    method: QrMethod,
    ctx: &ExecContext,
) -> Result<(Residuals<T>, u64)> {
    let s = ts.samples();
    let rows = s.len().saturating_sub(order);
    if order == 0 || rows <= order {
        return Err(Error::SignalTooShort {
            needed: 2 * order + 1,
            available: s.len(),
        });
    }
    let (psi, s_vec) = lagged_regression(s, order, rows)?;
    let spec = ModelSpec::ar(order.saturating_sub(1).max(1), rows);
    let prob = RegressionProblem { psi, s_vec, spec };
    let fit = solve_regression(&prob, method, ctx)?;
    let mut values = vec![T::zero(); s.len()];
    let theta = &fit.theta;
    let psi = &prob.psi;
    let target = &prob.s_vec;
    ctx.for_each_chunk_mut(&mut values[order..], 1, |range, chunk| {
        for (e, r) in chunk.iter_mut().zip(range) {
            let mut pred = T::zero();
            for (j, &t) in theta.iter().enumerate() {
                pred = pred + psi[(r, j)] * t;
            }
            *e = target[r] - pred;
        }
    });
    Ok((
        Residuals {
            values,
            valid_from: order,
        },
        fit.qr_flops,
    ))
}

/// Full identification: one solve for AR, two for ARMA.
pub fn fit<T: Real>(
    ts: &TimeSeries<T>,
    spec: &ModelSpec,
    method: QrMethod,
    ctx: &ExecContext,
) -> Result<SysIdModel<T>> {
    spec.validate()?;
    let (prob, stage1_flops) = match spec.kind {
        ModelKind::Ar => (build_ar_regression(ts, spec)?, 0),
        ModelKind::Arma => {
            if spec.p == 0 {
                return Err(Error::InvalidSpec(
                    "ARMA needs p >= 1; use an AR spec for p = 0".into(),
                ));
            }
            let (res, flops) = ar_residuals(ts, spec.stage1_order, method, ctx)?;
            (build_arma_stage2_regression(ts, &res, spec)?, flops)
        }
    };
    let ls = solve_regression(&prob, method, ctx)?;
    Ok(SysIdModel {
        spec: *spec,
        theta: ls.theta,
        sigma2: ls.sigma2,
        diagnostics: FitDiagnostics {
            residual_norm: ls.rss.as_f64().sqrt(),
            qr_method: method,
            precision: T::PRECISION,
            qr_flops: stage1_flops + ls.qr_flops,
        },
    })
}
