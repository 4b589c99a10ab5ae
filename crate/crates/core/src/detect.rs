// SPDX-License-Identifier: MIT OR Apache-2.0

//! Peak-based damage detection and spectral divergence.

use crate::error::{Error, Result};
use crate::parallel::ExecContext;
use crate::real::Real;
use crate::spectrum::{psd, Spectrum, TrigTable};
use crate::sysid::SysIdModel;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    pub bin: usize,
    pub freq_hz: f64,
    pub magnitude: f64,
    /// Height above the higher of the two flanking minima.
    pub prominence: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct PeakSet {
    /// Ascending in frequency.
    pub peaks: Vec<Peak>,
    pub source: String,
}

impl PeakSet {
    pub fn freqs(&self) -> Vec<f64> {
        self.peaks.iter().map(|p| p.freq_hz).collect()
    }

    /// Peaks at the given frequencies, for matching tests and tooling.
    pub fn from_freqs(freqs: &[f64]) -> Self {
        let peaks = freqs
            .iter()
            .map(|&f| Peak {
                bin: 0,
                freq_hz: f,
                magnitude: 1.0,
                prominence: 1.0,
            })
            .collect();
        Self {
            peaks,
            source: String::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeakConfig {
    /// Minimum prominence as a fraction of the spectrum maximum.
    pub min_prominence_ratio: f64,
    pub max_peaks: usize,
}

impl Default for PeakConfig {
    fn default() -> Self {
        Self {
            min_prominence_ratio: 0.05,
            max_peaks: 8,
        }
    }
}

/// Prominence of the strict local maximum at `i`.
fn prominence(v: &[f64], i: usize) -> f64 {
    let h = v[i];
    let mut left = h;
    for &x in v[..i].iter().rev() {
        if x > h {
            break;
        }
        left = left.min(x);
    }
    let mut right = h;
    for &x in &v[i + 1..] {
        if x > h {
            break;
        }
        right = right.min(x);
    }
    h - left.max(right)
}

pub fn find_peaks<T: Real>(spec: &Spectrum<T>, cfg: &PeakConfig) -> PeakSet {
    let v: Vec<f64> = spec.psd.iter().map(|x| x.as_f64()).collect();
    let max = v.iter().copied().fold(0.0f64, f64::max);
    let floor = cfg.min_prominence_ratio * max;
    let mut peaks: Vec<Peak> = (1..v.len().saturating_sub(1))
        .filter(|&i| v[i - 1] < v[i] && v[i] > v[i + 1])
        .map(|i| Peak {
            bin: i,
            freq_hz: spec.freqs[i],
            magnitude: v[i],
            prominence: prominence(&v, i),
        })
        .filter(|p| p.prominence >= floor)
        .collect();
    peaks.sort_by(|a, b| {
        b.prominence
            .total_cmp(&a.prominence)
            .then(a.bin.cmp(&b.bin))
    });
    peaks.truncate(cfg.max_peaks);
    peaks.sort_by_key(|p| p.bin);
    PeakSet {
        peaks,
        source: String::new(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchedPair {
    pub f_safe: f64,
    pub f_def: f64,
    pub delta_f_percent: f64,
}

/// `100 (1 - f_def / f_safe)`.
pub fn delta_f_percent(f_safe: f64, f_def: f64) -> f64 {
    100.0 * (1.0 - f_def / f_safe)
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct PeakMatching {
    /// Ascending in `f_safe`.
    pub pairs: Vec<MatchedPair>,
    pub unmatched_healthy: Vec<f64>,
    pub unmatched_test: Vec<f64>,
}

/// Greedy matching: closest relative distance first, each peak used once,
/// pairs farther apart than `max_rel_shift` never formed.
pub fn match_peaks(healthy: &PeakSet, test: &PeakSet, max_rel_shift: f64) -> PeakMatching {
    let h = healthy.freqs();
    let t = test.freqs();
    let mut candidates = Vec::new();
    for (i, &fh) in h.iter().enumerate() {
        for (j, &ft) in t.iter().enumerate() {
            let rel = (ft - fh).abs() / fh.abs();
            if rel <= max_rel_shift {
                candidates.push((rel, i, j));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_h = vec![false; h.len()];
    let mut used_t = vec![false; t.len()];
    let mut pairs = Vec::new();
    for (_, i, j) in candidates {
        if used_h[i] || used_t[j] {
            continue;
        }
        used_h[i] = true;
        used_t[j] = true;
        pairs.push(MatchedPair {
            f_safe: h[i],
            f_def: t[j],
            delta_f_percent: delta_f_percent(h[i], t[j]),
        });
    }
    pairs.sort_by(|a, b| a.f_safe.total_cmp(&b.f_safe));
    PeakMatching {
        pairs,
        unmatched_healthy: (0..h.len()).filter(|&i| !used_h[i]).map(|i| h[i]).collect(),
        unmatched_test: (0..t.len()).filter(|&j| !used_t[j]).map(|j| t[j]).collect(),
    }
}

/// Smallest bin value accepted by [`isd`].
pub const ISD_MIN_BIN: f64 = 1e-30;

/// Itakura-Saito divergence `(1/L) Σ (r - ln r - 1)`, `r = a / b`.
///
/// Asymmetric in its arguments. Evaluated in `f64` whatever the inputs' types.
pub fn isd<A: Real, B: Real>(a: &Spectrum<A>, b: &Spectrum<B>) -> Result<f64> {
    if !a.same_grid(b) {
        return Err(Error::GridMismatch);
    }
    let mut acc = 0.0;
    for (i, (&x, &y)) in a.psd.iter().zip(&b.psd).enumerate() {
        let (x, y) = (x.as_f64(), y.as_f64());
        if !(x >= ISD_MIN_BIN && y >= ISD_MIN_BIN) {
            return Err(Error::NonPositiveBin { index: i });
        }
        // r - ln r - 1 with d = r - 1, without cancellation near r = 1.
        let d = (x - y) / y;
        acc += d - d.ln_1p();
    }
    Ok(acc / a.psd.len() as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssessConfig {
    pub l_points: usize,
    pub sample_rate_hz: f64,
    pub peaks: PeakConfig,
    pub max_rel_shift: f64,
    pub threshold_percent: f64,
    /// Raise the alarm when a healthy peak has no counterpart.
    pub alarm_on_unmatched: bool,
}

impl AssessConfig {
    pub fn new(sample_rate_hz: f64) -> Self {
        Self {
            l_points: crate::spectrum::DEFAULT_L_POINTS,
            sample_rate_hz,
            peaks: PeakConfig::default(),
            max_rel_shift: 0.25,
            threshold_percent: 2.0,
            alarm_on_unmatched: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DamageReport {
    pub matched_pairs: Vec<MatchedPair>,
    pub unmatched_healthy: Vec<f64>,
    pub unmatched_test: Vec<f64>,
    /// Smallest `|ΔF|` over matched pairs.
    pub min_delta_f: Option<f64>,
    /// Largest `|ΔF|` over matched pairs.
    pub max_delta_f: Option<f64>,
    pub alarm: bool,
    pub threshold_percent: f64,
}

/// Report from two spectra on the same grid.
pub fn assess_spectra<T: Real>(
    healthy: &Spectrum<T>,
    test: &Spectrum<T>,
    cfg: &AssessConfig,
) -> Result<DamageReport> {
    if !healthy.same_grid(test) {
        return Err(Error::GridMismatch);
    }
    let m = match_peaks(
        &find_peaks(healthy, &cfg.peaks),
        &find_peaks(test, &cfg.peaks),
        cfg.max_rel_shift,
    );
    let mags = m.pairs.iter().map(|p| p.delta_f_percent.abs());
    let min_delta_f = mags.clone().reduce(f64::min);
    let max_delta_f = mags.reduce(f64::max);
    let shifted = max_delta_f.is_some_and(|d| d >= cfg.threshold_percent);
    let lost = cfg.alarm_on_unmatched && !m.unmatched_healthy.is_empty();
    Ok(DamageReport {
        matched_pairs: m.pairs,
        unmatched_healthy: m.unmatched_healthy,
        unmatched_test: m.unmatched_test,
        min_delta_f,
        max_delta_f,
        alarm: shifted || lost,
        threshold_percent: cfg.threshold_percent,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Assessment<T> {
    pub report: DamageReport,
    pub healthy: Spectrum<T>,
    pub test: Spectrum<T>,
}

/// Synthesizes both spectra and compares their peaks.
pub fn assess<T: Real>(
    healthy_model: &SysIdModel<T>,
    test_model: &SysIdModel<T>,
    cfg: &AssessConfig,
    table: Option<&TrigTable<T>>,
    ctx: &ExecContext,
) -> Result<Assessment<T>> {
    if healthy_model.spec.kind != test_model.spec.kind {
        return Err(Error::InvalidSpec(format!(
            "cannot compare {} model with {} model",
            healthy_model.spec.kind.as_str(),
            test_model.spec.kind.as_str()
        )));
    }
    let healthy = psd(healthy_model, cfg.l_points, cfg.sample_rate_hz, table, ctx)?;
    let test = psd(test_model, cfg.l_points, cfg.sample_rate_hz, table, ctx)?;
    let report = assess_spectra(&healthy, &test, cfg)?;
    Ok(Assessment {
        report,
        healthy,
        test,
    })
}
