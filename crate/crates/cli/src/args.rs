// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use vibsysid::{ModelKind, ModelSpec, Precision, QrMethod, TrigMode};

use crate::error::CliError;
use crate::io::SeriesFormat;

/// Parameter count used when no order is given.
pub const DEFAULT_NP: usize = 16;
/// Rows per parameter when `--n-rows` is not given.
pub const ROWS_PER_PARAM: usize = 30;

#[derive(Parser, Debug)]
#[command(
    name = "vibsysid",
    version,
    about = "AR/ARMA identification, analytic spectra and peak-shift damage detection"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Worker threads [default: $VIBSYSID_THREADS, else available cores].
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Element type of the numerical pipeline.
    #[arg(long, global = true, default_value = "f32")]
    pub precision: Precision,
    /// QR method: givens, gs or hh.
    #[arg(long = "qr", global = true, default_value = "gs")]
    pub qr: QrMethod,
    /// Seed for synthetic data.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit a model to a series and write the model record.
    Fit(FitArgs),
    /// Compare a healthy and a test condition and report peak shifts.
    Assess(AssessArgs),
    /// Time the pipeline components over the standard problem sizes.
    Bench(BenchArgs),
    /// Print memory and operation estimates for a QR problem size.
    Footprint(FootprintArgs),
    /// Write a synthetic ARMA series.
    Generate(GenerateArgs),
}

#[derive(Args, Debug, Clone)]
pub struct InputOpts {
    /// Input encoding: text or f32le.
    #[arg(long, default_value = "text")]
    pub format: SeriesFormat,
    /// Sample rate in Hz (overrides the file header).
    #[arg(long)]
    pub rate: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct ModelOpts {
    /// Model family: ar or arma.
    #[arg(long = "model", default_value = "ar")]
    pub kind: ModelKind,
    /// AR order [default: 15 for AR, 10 for ARMA].
    #[arg(long)]
    pub q: Option<usize>,
    /// MA order [default: 5 for ARMA].
    #[arg(long)]
    pub p: Option<usize>,
    /// Lags of the auxiliary AR fit (ARMA) [default: min(2 Np, N/4)].
    #[arg(long)]
    pub stage1_order: Option<usize>,
    /// Regression rows N [default: 30 Np].
    #[arg(long)]
    pub n_rows: Option<usize>,
}

impl ModelOpts {
    pub fn spec(&self) -> Result<ModelSpec, CliError> {
        let spec = match self.kind {
            ModelKind::Ar => {
                if self.p.is_some_and(|p| p != 0) {
                    return Err(CliError::Config("AR model takes no --p".into()));
                }
                let q = self.q.unwrap_or(DEFAULT_NP - 1);
                let n = self.n_rows.unwrap_or(ROWS_PER_PARAM * (q + 1));
                ModelSpec::ar(q, n)
            }
            ModelKind::Arma => {
                let q = self.q.unwrap_or(10);
                let p = self.p.unwrap_or(5);
                let n = self.n_rows.unwrap_or(ROWS_PER_PARAM * (q + p + 1));
                let spec = ModelSpec::arma(q, p, n);
                match self.stage1_order {
                    Some(o) => spec.with_stage1_order(o),
                    None => spec,
                }
            }
        };
        if spec.kind == ModelKind::Arma && spec.p == 0 {
            return Err(CliError::Config("ARMA needs --p >= 1".into()));
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args, Debug, Clone)]
pub struct SpectrumOpts {
    /// Frequency bins over [0, fs/2).
    #[arg(long, default_value_t = vibsysid::spectrum::DEFAULT_L_POINTS)]
    pub l_points: usize,
    /// Cosine table lookup: nearest or linear.
    #[arg(long, default_value = "linear")]
    pub trig: TrigMode,
}

#[derive(Args, Debug, Clone)]
pub struct DetectOpts {
    /// Minimum peak prominence as a fraction of the spectrum maximum.
    #[arg(long, default_value_t = 0.05)]
    pub min_prominence: f64,
    /// Peaks kept per spectrum.
    #[arg(long, default_value_t = 8)]
    pub max_peaks: usize,
    /// Largest relative frequency shift for a healthy/test pair.
    #[arg(long, default_value_t = 0.25)]
    pub max_rel_shift: f64,
    /// Alarm threshold on |ΔF| in percent.
    #[arg(long, default_value_t = 2.0)]
    pub threshold: f64,
    /// Do not raise the alarm for healthy peaks without a counterpart.
    #[arg(long)]
    pub no_unmatched_alarm: bool,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Series file.
    pub input: PathBuf,
    /// Output path [default: standard output].
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub input_opts: InputOpts,
    #[command(flatten)]
    pub model: ModelOpts,
}

#[derive(Args, Debug)]
pub struct AssessArgs {
    /// Healthy condition: series or model record.
    pub healthy: PathBuf,
    /// Test condition: series or model record.
    pub test: PathBuf,
    /// Directory for report.json and the two spectra.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub input_opts: InputOpts,
    #[command(flatten)]
    pub model: ModelOpts,
    #[command(flatten)]
    pub spectrum: SpectrumOpts,
    #[command(flatten)]
    pub detect: DetectOpts,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Problem sizes as NxNp, comma separated.
    #[arg(long, default_value = "200x8,480x16,2520x56", value_delimiter = ',')]
    pub sizes: Vec<String>,
    /// Thread counts to sweep [default: --threads].
    #[arg(long, value_delimiter = ',')]
    pub thread_list: Vec<usize>,
    /// Repetitions per measurement; the median is reported.
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[arg(long, default_value_t = vibsysid::spectrum::DEFAULT_L_POINTS)]
    pub l_points: usize,
    /// Emit JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct FootprintArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub np: usize,
    /// Restrict to one method [default: --qr].
    #[arg(long)]
    pub method: Option<QrMethod>,
    /// Bytes per element.
    #[arg(long, default_value_t = 4)]
    pub elem_bytes: usize,
    /// Report every method.
    #[arg(long)]
    pub all: bool,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// Output series file.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Samples to write.
    #[arg(long, default_value_t = 4096)]
    pub samples: usize,
    /// Sample rate in Hz.
    #[arg(long, default_value_t = 100.0)]
    pub rate: f64,
    /// Resonance as RADIUS:FREQ_HZ; repeatable.
    #[arg(long = "pole", value_parser = parse_pole)]
    pub poles: Vec<(f64, f64)>,
    /// Explicit AR polynomial coefficients beta_1..beta_q (instead of --pole).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub beta: Vec<f64>,
    /// MA coefficients alpha_1..alpha_p.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub alpha: Vec<f64>,
    /// Driving noise standard deviation.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
}

fn parse_pole(s: &str) -> Result<(f64, f64), String> {
    let (r, f) = s
        .split_once(':')
        .ok_or_else(|| format!("pole '{s}' is not RADIUS:FREQ_HZ"))?;
    let r: f64 = r.trim().parse().map_err(|e| format!("pole radius: {e}"))?;
    let f: f64 = f
        .trim()
        .parse()
        .map_err(|e| format!("pole frequency: {e}"))?;
    if !(0.0..1.0).contains(&r) {
        return Err(format!("pole radius {r} must be in [0, 1)"));
    }
    Ok((r, f))
}

/// `NxNp` pairs.
pub fn parse_size(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Config(format!("size '{s}' is not NxNp"));
    let (n, np) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((
        n.parse().map_err(|_| bad())?,
        np.parse().map_err(|_| bad())?,
    ))
}
