// SPDX-License-Identifier: MIT OR Apache-2.0

//! Double-precision reference implementations and synthetic signals.
//!
//! Nothing here touches the QR kernels or the table-driven PSD: least
//! squares goes through normal equations and a Cholesky factorization, the
//! density through complex polynomial evaluation, and the nonparametric
//! check through an FFT periodogram. All of it is single-threaded.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::model::{ModelKind, ModelSpec, RegressionProblem, TimeSeries};
use crate::qr::QrMethod;
use crate::real::{Precision, Real};
use crate::spectrum::{frequency_grid, Spectrum};
use crate::sysid::{FitDiagnostics, SysIdModel};

/// Identifier of the generator behind every synthetic series.
pub const PRNG_ALGORITHM: &str = "chacha20";

/// Least squares via `(ΨᵀΨ) θ = ΨᵀS` and Cholesky, in `f64`.
pub fn normal_equations_solve<T: Real>(prob: &RegressionProblem<T>) -> Result<(Vec<f64>, f64)> {
    let (n, np) = (prob.n_rows(), prob.n_params());
    let psi = DMatrix::from_fn(n, np, |i, j| prob.psi[(i, j)].as_f64());
    let s = DVector::from_iterator(n, prob.s_vec.iter().map(|x| x.as_f64()));
    lstsq(&psi, &s)
}

fn lstsq(psi: &DMatrix<f64>, s: &DVector<f64>) -> Result<(Vec<f64>, f64)> {
    let (n, np) = psi.shape();
    if n <= np {
        return Err(Error::InsufficientResiduals {
            needed: np + 1,
            available: n,
        });
    }
    let gram = psi.transpose() * psi;
    let rhs = psi.transpose() * s;
    let chol = gram.cholesky().ok_or(Error::NotPositiveDefinite)?;
    let theta = chol.solve(&rhs);
    let resid = s - psi * &theta;
    let sigma2 = resid.norm_squared() / (n - np) as f64;
    Ok((theta.iter().copied().collect(), sigma2))
}

/// Regression matrix rows `[s[k-1] .. s[k-lags]]` for the last `rows` targets.
fn lag_matrix(s: &[f64], lags: usize, rows: usize) -> (DMatrix<f64>, DVector<f64>) {
    let first = s.len() - rows;
    let psi = DMatrix::from_fn(rows, lags, |r, j| s[first + r - j - 1]);
    let target = DVector::from_iterator(rows, s[first..].iter().copied());
    (psi, target)
}

/// Independent `f64` identification by normal equations, same conventions
/// as the main pipeline. The diagnostics name Gram-Schmidt, the method the
/// reference stands in for; no QR is run.
pub fn reference_fit(ts: &TimeSeries<f64>, spec: &ModelSpec) -> Result<SysIdModel<f64>> {
    spec.validate()?;
    let s = ts.samples();
    let (theta, sigma2) = match spec.kind {
        ModelKind::Ar => {
            let lags = spec.q + 1;
            if s.len() < spec.n_rows + lags {
                return Err(Error::SignalTooShort {
                    needed: spec.n_rows + lags,
                    available: s.len(),
                });
            }
            let (psi, target) = lag_matrix(s, lags, spec.n_rows);
            lstsq(&psi, &target)?
        }
        ModelKind::Arma => {
            let order = spec.stage1_order;
            let rows1 = s.len().saturating_sub(order);
            if rows1 <= order {
                return Err(Error::SignalTooShort {
                    needed: 2 * order + 1,
                    available: s.len(),
                });
            }
            let (psi1, target1) = lag_matrix(s, order, rows1);
            let (a, _) = lstsq(&psi1, &target1)?;
            let mut e = vec![0.0; s.len()];
            for k in order..s.len() {
                let pred: f64 = (0..order).map(|j| a[j] * s[k - j - 1]).sum();
                e[k] = s[k] - pred;
            }
            let first = s.len() - spec.n_rows;
            if first < spec.q.max(order + spec.p) {
                return Err(Error::InsufficientResiduals {
                    needed: spec.n_rows,
                    available: s.len().saturating_sub(spec.q.max(order + spec.p)),
                });
            }
            let np = spec.n_params();
            let psi = DMatrix::from_fn(spec.n_rows, np, |r, j| {
                let k = first + r;
                if j < spec.q {
                    s[k - j - 1]
                } else {
                    e[k - (j - spec.q)]
                }
            });
            let target = DVector::from_iterator(spec.n_rows, s[first..].iter().copied());
            lstsq(&psi, &target)?
        }
    };
    Ok(SysIdModel {
        spec: *spec,
        theta,
        sigma2,
        diagnostics: FitDiagnostics {
            residual_norm: (sigma2 * (spec.n_rows - spec.n_params()) as f64).sqrt(),
            qr_method: QrMethod::GramSchmidt,
            precision: Precision::F64,
            qr_flops: 0,
        },
    })
}

/// Density of `model` at the standard grid, by complex polynomial evaluation.
pub fn reference_psd<T: Real>(
    model: &SysIdModel<T>,
    l_points: usize,
    sample_rate_hz: f64,
) -> Spectrum<f64> {
    let freqs = frequency_grid(l_points, sample_rate_hz);
    let ar: Vec<f64> = model.ar_coefficients().iter().map(|x| x.as_f64()).collect();
    let ma: Vec<f64> = match model.spec.kind {
        ModelKind::Ar => vec![1.0],
        ModelKind::Arma => model.ma_coefficients().iter().map(|x| x.as_f64()).collect(),
    };
    let sigma2 = model.sigma2.as_f64();
    let psd = freqs
        .iter()
        .map(|&f| {
            let z = Complex::from_polar(1.0, -std::f64::consts::TAU * f / sample_rate_hz);
            // Horner in z = e^{-iω}.
            let num = ma
                .iter()
                .rev()
                .fold(Complex::new(0.0, 0.0), |acc, &c| acc * z + c);
            let den = ar
                .iter()
                .rev()
                .fold(Complex::new(0.0, 0.0), |acc, &a| acc * z + a);
            let den = Complex::new(1.0, 0.0) - den * z;
            sigma2 * num.norm_sqr() / den.norm_sqr()
        })
        .collect();
    Spectrum {
        psd,
        freqs,
        sample_rate_hz,
        saturated_bins: 0,
    }
}

/// Whether `1 + Σ beta_j z^-j` has every root strictly inside the unit
/// circle, by the reflection-coefficient step-down recursion.
pub fn is_stable(beta: &[f64]) -> bool {
    let mut a = beta.to_vec();
    while let Some(&k) = a.last() {
        if !(k.abs() < 1.0) {
            return false;
        }
        let m = a.len();
        let denom = 1.0 - k * k;
        let next: Vec<f64> = (0..m - 1)
            .map(|i| (a[i] - k * a[m - 2 - i]) / denom)
            .collect();
        a = next;
    }
    true
}

/// `beta` of a pole pair at `radius * e^{±i angle}`:
/// `1 + beta_1 z^-1 + beta_2 z^-2 = (1 - p z^-1)(1 - p̄ z^-1)`.
pub fn pole_pair(radius: f64, angle: f64) -> [f64; 2] {
    [-2.0 * radius * angle.cos(), radius * radius]
}

/// `beta` of a cascade of pole pairs.
pub fn cascade(pairs: &[(f64, f64)]) -> Vec<f64> {
    let mut poly = vec![1.0];
    for &(r, w) in pairs {
        let [b1, b2] = pole_pair(r, w);
        let mut next = vec![0.0; poly.len() + 2];
        for (i, &c) in poly.iter().enumerate() {
            next[i] += c;
            next[i + 1] += c * b1;
            next[i + 2] += c * b2;
        }
        poly = next;
    }
    poly[1..].to_vec()
}

/// `s[k] = -Σ beta_j s[k-j] + e[k] + Σ alpha_s e[k-s]`, `e ~ N(0, sigma²)`,
/// with `10 * max(q, p)` warm-up samples dropped.
pub fn gen_arma_process(
    beta: &[f64],
    alpha: &[f64],
    sigma: f64,
    n: usize,
    sample_rate_hz: f64,
    seed: u64,
) -> Result<TimeSeries<f64>> {
    if !is_stable(beta) {
        return Err(Error::UnstableCoefficients);
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidSpec(
            "noise level must be finite and non-negative".into(),
        ));
    }
    let burn = 10 * beta.len().max(alpha.len());
    let total = n + burn;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let e: Vec<f64> = (0..total).map(|_| noise.sample(&mut rng)).collect();
    let mut s = vec![0.0; total];
    for k in 0..total {
        let mut v = e[k];
        for (j, &b) in beta.iter().enumerate() {
            if k > j {
                v -= b * s[k - j - 1];
            }
        }
        for (j, &a) in alpha.iter().enumerate() {
            if k > j {
                v += a * e[k - j - 1];
            }
        }
        s[k] = v;
    }
    TimeSeries::new(s.split_off(burn), sample_rate_hz)
}

pub fn gen_ar_process(
    beta: &[f64],
    sigma: f64,
    n: usize,
    sample_rate_hz: f64,
    seed: u64,
) -> Result<TimeSeries<f64>> {
    gen_arma_process(beta, &[], sigma, n, sample_rate_hz, seed)
}

/// Welch periodogram on the standard grid: Hann segments of `2L` samples,
/// half overlap, one-sided density.
pub fn fft_psd_check(ts: &TimeSeries<f64>, l_points: usize) -> Result<Spectrum<f64>> {
    let seg = 2 * l_points;
    let s = ts.samples();
    if l_points < 2 || s.len() < seg {
        return Err(Error::SignalTooShort {
            needed: seg,
            available: s.len(),
        });
    }
    let window: Vec<f64> = (0..seg)
        .map(|i| 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / seg as f64).cos())
        .collect();
    let energy: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(seg);
    let hop = seg / 2;
    let mut acc = vec![0.0; l_points];
    let mut count = 0usize;
    let mut start = 0;
    let mut buf = vec![Complex::new(0.0, 0.0); seg];
    while start + seg <= s.len() {
        let chunk = &s[start..start + seg];
        let mean = chunk.iter().sum::<f64>() / seg as f64;
        for ((b, &x), &w) in buf.iter_mut().zip(chunk).zip(&window) {
            *b = Complex::new((x - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        count += 1;
        start += hop;
    }
    let fs = ts.sample_rate_hz();
    let scale = 2.0 / (fs * energy * count as f64);
    Ok(Spectrum {
        psd: acc.into_iter().map(|v| v * scale).collect(),
        freqs: frequency_grid(l_points, fs),
        sample_rate_hz: fs,
        saturated_bins: 0,
    })
}
