// SPDX-License-Identifier: MIT OR Apache-2.0

//! Analytic power spectral density of fitted models.
//!
//! Bins sit on `f_i = i * fs / (2L)`, `i = 0..L`, so the grid covers
//! `[0, fs/2)`. At bin `i` and lag `j` the phase is `π * i * j / L`, which is
//! reduced exactly in integers (`i * j mod 2L`) before any trig is evaluated.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};
use crate::model::ModelKind;
use crate::parallel::ExecContext;
use crate::real::Real;
use crate::sysid::SysIdModel;

pub const DEFAULT_L_POINTS: usize = 2048;
pub const DEFAULT_TABLE_SIZE: usize = 512;
/// Bins are clamped to `SATURATION_FACTOR * sigma2`.
pub const SATURATION_FACTOR: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum TrigMode {
    /// Closest stored sample; error up to half a table step.
    Nearest,
    /// Chord between neighbouring samples.
    #[default]
    Linear,
}

impl TrigMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TrigMode::Nearest => "nearest",
            TrigMode::Linear => "linear",
        }
    }
}

impl std::str::FromStr for TrigMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nearest" => Ok(TrigMode::Nearest),
            "linear" => Ok(TrigMode::Linear),
            other => Err(format!(
                "unknown trig mode '{other}' (expected nearest or linear)"
            )),
        }
    }
}

/// Quarter-wave cosine table.
///
/// Stores `cos(k π / (2T))` for `k = 0..T`; the `k = T` sample is exactly
/// zero and is not stored, so `T` entries cover the closed quarter period.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigTable<T> {
    entries: Vec<T>,
    mode: TrigMode,
}

impl<T: Real> TrigTable<T> {
    pub fn new(size: usize, mode: TrigMode) -> Result<Self> {
        if size < 2 {
            return Err(Error::InvalidSpec(
                "trig table needs at least 2 entries".into(),
            ));
        }
        let step = FRAC_PI_2 / size as f64;
        let entries = (0..size).map(|k| T::of((k as f64 * step).cos())).collect();
        Ok(Self { entries, mode })
    }

    pub fn with_mode(mode: TrigMode) -> Self {
        Self::new(DEFAULT_TABLE_SIZE, mode).expect("default table size is valid")
    }

    /// Resolution `T`.
    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn mode(&self) -> TrigMode {
        self.mode
    }

    /// Sample `k` in `0..=T`.
    #[inline]
    pub fn entry(&self, k: usize) -> T {
        self.entries.get(k).copied().unwrap_or_else(T::zero)
    }

    pub fn memory_bytes(&self) -> usize {
        self.entries.len() * std::mem::size_of::<T>()
    }

    /// Cosine over the quarter period at position `t` in `[0, T]` table units.
    #[inline]
    fn quarter_cos(&self, t: f64) -> T {
        match self.mode {
            TrigMode::Nearest => self.entry(t.round() as usize),
            TrigMode::Linear => {
                let k = (t.floor() as usize).min(self.size());
                let w = T::of(t - k as f64);
                let (a, b) = (self.entry(k), self.entry(k + 1));
                a + (b - a) * w
            }
        }
    }

    /// `(cos, sin)` at `x` in `[0, 4T)` table units.
    fn lookup_units(&self, x: f64) -> (T, T) {
        let size = self.size() as f64;
        let quadrant = ((x / size) as usize).min(3);
        let t = (x - quadrant as f64 * size).clamp(0.0, size);
        let (c, s) = (self.quarter_cos(t), self.quarter_cos(size - t));
        match quadrant {
            0 => (c, s),
            1 => (-s, c),
            2 => (-c, -s),
            _ => (s, -c),
        }
    }

    /// `(cos(phase), sin(phase))` by quadrant folding.
    pub fn lookup(&self, phase: f64) -> (T, T) {
        let x = phase.rem_euclid(TAU) / FRAC_PI_2 * self.size() as f64;
        self.lookup_units(if x >= 4.0 * self.size() as f64 {
            0.0
        } else {
            x
        })
    }

    /// `(cos, sin)` of `2π m / period`, for `m < period`.
    pub fn lookup_fraction(&self, m: usize, period: usize) -> (T, T) {
        debug_assert!(m < period);
        self.lookup_units((m * 4 * self.size()) as f64 / period as f64)
    }
}

/// Largest `|cos|` or `|sin|` error over `samples` evenly spaced phases in
/// `[0, 2π)`.
pub fn max_table_error<T: Real>(table: &TrigTable<T>, samples: usize) -> f64 {
    (0..samples)
        .map(|k| {
            let phase = TAU * k as f64 / samples as f64;
            let (c, s) = table.lookup(phase);
            (c.as_f64() - phase.cos())
                .abs()
                .max((s.as_f64() - phase.sin()).abs())
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum<T> {
    pub psd: Vec<T>,
    pub freqs: Vec<f64>,
    pub sample_rate_hz: f64,
    /// Bins clamped to the saturation ceiling.
    pub saturated_bins: usize,
}

impl<T: Real> Spectrum<T> {
    pub fn l_points(&self) -> usize {
        self.psd.len()
    }

    /// Spacing between adjacent bins.
    pub fn bin_width_hz(&self) -> f64 {
        self.sample_rate_hz / (2.0 * self.psd.len() as f64)
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.psd.iter().enumerate() {
            if v > self.psd[best] {
                best = i;
            }
        }
        best
    }

    pub fn same_grid<U: Real>(&self, other: &Spectrum<U>) -> bool {
        self.psd.len() == other.psd.len() && self.sample_rate_hz == other.sample_rate_hz
    }

    pub fn cast<U: Real>(&self) -> Spectrum<U> {
        Spectrum {
            psd: self.psd.iter().map(|&x| U::of(x.as_f64())).collect(),
            freqs: self.freqs.clone(),
            sample_rate_hz: self.sample_rate_hz,
            saturated_bins: self.saturated_bins,
        }
    }
}

pub fn frequency_grid(l_points: usize, sample_rate_hz: f64) -> Vec<f64> {
    (0..l_points)
        .map(|i| i as f64 * sample_rate_hz / (2.0 * l_points as f64))
        .collect()
}

fn check_grid(l_points: usize, sample_rate_hz: f64) -> Result<()> {
    if l_points < 2 {
        return Err(Error::InvalidSpec("l_points must be at least 2".into()));
    }
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(Error::InvalidSpec("sample rate must be positive".into()));
    }
    Ok(())
}

/// `σ² |Σ c_s e^{-iωs}|² / |1 - Σ a_j e^{-iωj}|²` on the standard grid.
///
/// `ma = [1]` gives the pure AR density.
fn rational_psd<T: Real>(
    ar: &[T],
    ma: &[T],
    sigma2: T,
    l_points: usize,
    sample_rate_hz: f64,
    table: Option<&TrigTable<T>>,
    ctx: &ExecContext,
) -> Result<Spectrum<T>> {
    check_grid(l_points, sample_rate_hz)?;
    if !sigma2.is_finite() || sigma2 < T::zero() {
        return Err(Error::NonFinite { index: 0 });
    }
    let period = 2 * l_points;
    let trig = |i: usize, j: usize| -> (T, T) {
        let m = (i * j) % period;
        match table {
            Some(t) => t.lookup_fraction(m, period),
            None => {
                let phase = PI * m as f64 / l_points as f64;
                (T::of(phase.cos()), T::of(phase.sin()))
            }
        }
    };
    let ceiling = T::of(SATURATION_FACTOR) * sigma2;
    let saturated = AtomicUsize::new(0);
    let mut psd = vec![T::zero(); l_points];
    ctx.for_each_chunk_mut(&mut psd, 1, |range, out| {
        let mut local = 0;
        for (slot, i) in out.iter_mut().zip(range) {
            let (mut den_re, mut den_im) = (T::one(), T::zero());
            for (j, &a) in ar.iter().enumerate() {
                let (c, s) = trig(i, j + 1);
                den_re = den_re - a * c;
                den_im = den_im + a * s;
            }
            let (mut num_re, mut num_im) = (T::zero(), T::zero());
            for (j, &b) in ma.iter().enumerate() {
                let (c, s) = trig(i, j);
                num_re = num_re + b * c;
                num_im = num_im - b * s;
            }
            let value =
                sigma2 * (num_re * num_re + num_im * num_im) / (den_re * den_re + den_im * den_im);
            *slot = if value.is_finite() && value <= ceiling {
                value
            } else {
                local += 1;
                ceiling
            };
        }
        saturated.fetch_add(local, Ordering::Relaxed);
    });
    Ok(Spectrum {
        psd,
        freqs: frequency_grid(l_points, sample_rate_hz),
        sample_rate_hz,
        saturated_bins: saturated.into_inner(),
    })
}

pub fn psd_ar<T: Real>(
    model: &SysIdModel<T>,
    l_points: usize,
    sample_rate_hz: f64,
    table: Option<&TrigTable<T>>,
    ctx: &ExecContext,
) -> Result<Spectrum<T>> {
    if model.spec.kind != ModelKind::Ar {
        return Err(Error::InvalidSpec("psd_ar needs an AR model".into()));
    }
    rational_psd(
        &model.theta,
        &[T::one()],
        model.sigma2,
        l_points,
        sample_rate_hz,
        table,
        ctx,
    )
}

pub fn psd_arma<T: Real>(
    model: &SysIdModel<T>,
    l_points: usize,
    sample_rate_hz: f64,
    table: Option<&TrigTable<T>>,
    ctx: &ExecContext,
) -> Result<Spectrum<T>> {
    if model.spec.kind != ModelKind::Arma {
        return Err(Error::InvalidSpec("psd_arma needs an ARMA model".into()));
    }
    rational_psd(
        model.ar_coefficients(),
        model.ma_coefficients(),
        model.sigma2,
        l_points,
        sample_rate_hz,
        table,
        ctx,
    )
}

/// Dispatches on the model kind.
pub fn psd<T: Real>(
    model: &SysIdModel<T>,
    l_points: usize,
    sample_rate_hz: f64,
    table: Option<&TrigTable<T>>,
    ctx: &ExecContext,
) -> Result<Spectrum<T>> {
    match model.spec.kind {
        ModelKind::Ar => psd_ar(model, l_points, sample_rate_hz, table, ctx),
        ModelKind::Arma => psd_arma(model, l_points, sample_rate_hz, table, ctx),
    }
}

/// Density at an arbitrary frequency, in `f64` with library trig.
pub fn psd_at<T: Real>(model: &SysIdModel<T>, freq_hz: f64, sample_rate_hz: f64) -> f64 {
    let omega = TAU * freq_hz / sample_rate_hz;
    let one = [T::one()];
    let ma: &[T] = match model.spec.kind {
        ModelKind::Ar => &one,
        ModelKind::Arma => model.ma_coefficients(),
    };
    let (mut den_re, mut den_im) = (1.0, 0.0);
    for (j, &a) in model.ar_coefficients().iter().enumerate() {
        let ph = omega * (j + 1) as f64;
        den_re -= a.as_f64() * ph.cos();
        den_im += a.as_f64() * ph.sin();
    }
    let (mut num_re, mut num_im) = (0.0, 0.0);
    for (j, &b) in ma.iter().enumerate() {
        let ph = omega * j as f64;
        num_re += b.as_f64() * ph.cos();
        num_im -= b.as_f64() * ph.sin();
    }
    model.sigma2.as_f64() * (num_re * num_re + num_im * num_im)
        / (den_re * den_re + den_im * den_im)
}
