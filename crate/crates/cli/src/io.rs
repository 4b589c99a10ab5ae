// SPDX-License-Identifier: MIT OR Apache-2.0

//! File formats.
//!
//! Series: UTF-8 text, one sample per line. Lines starting with `#` are
//! comments; `# sample_rate_hz=<value>` sets the rate. Alternatively raw
//! little-endian `f32` with the rate given on the command line.
//!
//! Models and reports: JSON objects with a mandatory `version` field.
//! Spectra: two whitespace-separated columns `freq_hz psd`, one row per bin.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use vibsysid::sysid::FitDiagnostics;
use vibsysid::{ModelKind, ModelSpec, Precision, QrMethod, Real, Spectrum, SysIdModel, TimeSeries};

use crate::error::CliError;

pub const FORMAT_VERSION: u32 = 1;
pub const RATE_HEADER: &str = "sample_rate_hz=";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SeriesFormat {
    #[default]
    Text,
    F32Le,
}

impl FromStr for SeriesFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(SeriesFormat::Text),
            "f32le" => Ok(SeriesFormat::F32Le),
            other => Err(format!(
                "unknown input format '{other}' (expected text or f32le)"
            )),
        }
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::io(path.display(), e))
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path.display(), e))
}

/// Parses a text series. `rate` overrides the header.
pub fn parse_text_series(
    text: &str,
    rate: Option<f64>,
    origin: &str,
) -> Result<TimeSeries<f64>, CliError> {
    let mut header_rate = None;
    let mut samples = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(v) = comment.trim().strip_prefix(RATE_HEADER) {
                let r = v.trim().parse::<f64>().map_err(|e| {
                    CliError::Io(format!("{origin}:{}: bad sample rate: {e}", lineno + 1))
                })?;
                header_rate = Some(r);
            }
            continue;
        }
        let v = line
            .parse::<f64>()
            .map_err(|e| CliError::Io(format!("{origin}:{}: '{line}': {e}", lineno + 1)))?;
        samples.push(v);
    }
    let rate = rate.or(header_rate).ok_or_else(|| {
        CliError::Config(format!(
            "{origin}: no sample rate (add '# {RATE_HEADER}<hz>' or pass --rate)"
        ))
    })?;
    TimeSeries::new(samples, rate).map_err(|e| match e {
        vibsysid::Error::NonFinite { index } => {
            CliError::Io(format!("{origin}: sample {index} is not finite"))
        }
        other => CliError::Config(format!("{origin}: {other}")),
    })
}

pub fn parse_f32le_series(
    bytes: &[u8],
    rate: Option<f64>,
    origin: &str,
) -> Result<TimeSeries<f64>, CliError> {
    let rate =
        rate.ok_or_else(|| CliError::Config(format!("{origin}: f32le input needs --rate")))?;
    if bytes.len() % 4 != 0 {
        return Err(CliError::Io(format!(
            "{origin}: {} bytes is not a whole number of f32 samples",
            bytes.len()
        )));
    }
    let samples = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    TimeSeries::new(samples, rate).map_err(|e| match e {
        vibsysid::Error::NonFinite { index } => {
            CliError::Io(format!("{origin}: sample {index} is not finite"))
        }
        other => CliError::Config(format!("{origin}: {other}")),
    })
}

pub fn read_series(
    path: &Path,
    format: SeriesFormat,
    rate: Option<f64>,
) -> Result<TimeSeries<f64>, CliError> {
    let bytes = read_bytes(path)?;
    let origin = path.display().to_string();
    match format {
        SeriesFormat::Text => {
            let text = String::from_utf8(bytes)
                .map_err(|e| CliError::Io(format!("{origin}: not UTF-8 text: {e}")))?;
            parse_text_series(&text, rate, &origin)
        }
        SeriesFormat::F32Le => parse_f32le_series(&bytes, rate, &origin),
    }
}

/// Text series with the rate header and optional extra comment lines.
pub fn format_text_series(ts: &TimeSeries<f64>, comments: &[String]) -> String {
    let mut out = String::new();
    writeln!(out, "# {RATE_HEADER}{}", ts.sample_rate_hz()).unwrap();
    for c in comments {
        writeln!(out, "# {c}").unwrap();
    }
    for v in ts.samples() {
        writeln!(out, "{v}").unwrap();
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub residual_norm: f64,
    pub qr_method: String,
    pub precision: String,
    pub qr_flops: u64,
}

/// Fitted model as written by `fit`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub version: u32,
    pub kind: String,
    pub q: usize,
    pub p: usize,
    pub stage1_order: usize,
    pub n_rows: usize,
    pub sample_rate_hz: f64,
    pub theta: Vec<f64>,
    pub sigma2: f64,
    pub diagnostics: DiagnosticsRecord,
}

impl ModelRecord {
    pub fn from_model<T: Real>(model: &SysIdModel<T>, sample_rate_hz: f64) -> Self {
        let d = &model.diagnostics;
        Self {
            version: FORMAT_VERSION,
            kind: model.spec.kind.as_str().to_string(),
            q: model.spec.q,
            p: model.spec.p,
            stage1_order: model.spec.stage1_order,
            n_rows: model.spec.n_rows,
            sample_rate_hz,
            theta: model.theta.iter().map(|x| x.as_f64()).collect(),
            sigma2: model.sigma2.as_f64(),
            diagnostics: DiagnosticsRecord {
                residual_norm: d.residual_norm,
                qr_method: d.qr_method.as_str().to_string(),
                precision: d.precision.as_str().to_string(),
                qr_flops: d.qr_flops,
            },
        }
    }

    /// Rebuilds the model at element type `T`.
    pub fn to_model<T: Real>(&self) -> Result<SysIdModel<T>, CliError> {
        let bad = |m: String| CliError::Io(format!("model record: {m}"));
        if self.version != FORMAT_VERSION {
            return Err(bad(format!("unsupported version {}", self.version)));
        }
        let kind = ModelKind::from_str(&self.kind).map_err(bad)?;
        let spec = ModelSpec {
            kind,
            q: self.q,
            p: self.p,
            stage1_order: self.stage1_order,
            n_rows: self.n_rows,
        };
        if self.theta.len() != spec.n_params() {
            return Err(bad(format!(
                "theta has {} entries, {} expected for {} q={} p={}",
                self.theta.len(),
                spec.n_params(),
                self.kind,
                self.q,
                self.p
            )));
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(bad("sample_rate_hz must be positive".into()));
        }
        if !(self.sigma2.is_finite() && self.sigma2 >= 0.0)
            || self.theta.iter().any(|t| !t.is_finite())
        {
            return Err(bad("non-finite coefficients".into()));
        }
        let qr_method = QrMethod::from_str(&self.diagnostics.qr_method).map_err(bad)?;
        let precision = Precision::from_str(&self.diagnostics.precision).map_err(bad)?;
        Ok(SysIdModel {
            spec,
            theta: self.theta.iter().map(|&x| T::of(x)).collect(),
            sigma2: T::of(self.sigma2),
            diagnostics: FitDiagnostics {
                residual_norm: self.diagnostics.residual_norm,
                qr_method,
                precision,
                qr_flops: self.diagnostics.qr_flops,
            },
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model record serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Io(format!("model record: {e}")))
    }
}

/// `freq_hz psd` rows, exactly one per bin.
pub fn format_spectrum<T: Real>(spec: &Spectrum<T>) -> String {
    let mut out = String::with_capacity(spec.psd.len() * 32);
    for (f, v) in spec.freqs.iter().zip(&spec.psd) {
        writeln!(out, "{f} {v}").unwrap();
    }
    out
}

/// Either a fitted model record or a raw series.
pub enum Input {
    Model(ModelRecord),
    Series(TimeSeries<f64>),
}

/// Model records are recognised by a leading `{`.
pub fn read_input(path: &Path, format: SeriesFormat, rate: Option<f64>) -> Result<Input, CliError> {
    let bytes = read_bytes(path)?;
    let first = bytes.iter().find(|b| !b.is_ascii_whitespace());
    if first == Some(&b'{') {
        let text = std::str::from_utf8(&bytes)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        return Ok(Input::Model(ModelRecord::from_json(text)?));
    }
    let origin = path.display().to_string();
    match format {
        SeriesFormat::Text => {
            let text = String::from_utf8(bytes)
                .map_err(|e| CliError::Io(format!("{origin}: not UTF-8 text: {e}")))?;
            parse_text_series(&text, rate, &origin).map(Input::Series)
        }
        SeriesFormat::F32Le => parse_f32le_series(&bytes, rate, &origin).map(Input::Series),
    }
}
