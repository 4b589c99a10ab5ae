// SPDX-License-Identifier: MIT OR Apache-2.0

//! Subcommand drivers. Every command returns its textual stdout so the
//! binary and the tests share one code path.

use std::path::Path;

use clap::Parser;
use serde::Serialize;
use vibsysid::detect::{assess, find_peaks, isd, AssessConfig, PeakConfig};
use vibsysid::footprint::estimate_qr_footprint;
use vibsysid::oracle::{cascade, gen_arma_process, is_stable, pole_pair, PRNG_ALGORITHM};
use vibsysid::parallel::threads_from_env;
use vibsysid::sysid::fit;
use vibsysid::{ExecContext, Precision, QrMethod, Real, SysIdModel, TimeSeries, TrigTable};

use crate::args::{
    AssessArgs, BenchArgs, Cli, Command, FitArgs, FootprintArgs, GenerateArgs, GlobalOpts,
    ModelOpts,
};
use crate::bench::{run_bench, BenchPlan};
use crate::error::CliError;
use crate::io::{
    format_spectrum, format_text_series, read_input, read_series, write_file, Input, ModelRecord,
    FORMAT_VERSION,
};

/// Worker count: `--threads`, then the environment, then available cores.
pub fn resolve_threads(flag: Option<usize>) -> Result<usize, CliError> {
    match flag {
        Some(0) => Err(CliError::Config("--threads must be >= 1".into())),
        Some(n) => Ok(n),
        None => Ok(threads_from_env()
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))),
    }
}

fn context(global: &GlobalOpts) -> Result<ExecContext, CliError> {
    Ok(ExecContext::new(resolve_threads(global.threads)?)?)
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code. Errors go to stderr as one JSON line.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion)
                || matches!(
                    e.kind(),
                    ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
                )
            {
                let _ = e.print();
                return 0;
            }
            let msg = e.to_string();
            let first = msg
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ")
                .to_string();
            eprintln!("{}", CliError::Config(first).to_json_line());
            return 2;
        }
    };
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<String, CliError> {
    let g = &cli.global;
    match &cli.command {
        Command::Fit(a) => match g.precision {
            Precision::F32 => cmd_fit::<f32>(g, a),
            Precision::F64 => cmd_fit::<f64>(g, a),
        },
        Command::Assess(a) => match g.precision {
            Precision::F32 => cmd_assess::<f32>(g, a),
            Precision::F64 => cmd_assess::<f64>(g, a),
        },
        Command::Bench(a) => cmd_bench(g, a),
        Command::Footprint(a) => cmd_footprint(g, a),
        Command::Generate(a) => cmd_generate(g, a),
    }
}

fn fit_series<T: Real>(
    ts: &TimeSeries<f64>,
    model: &ModelOpts,
    method: QrMethod,
    ctx: &ExecContext,
) -> Result<SysIdModel<T>, CliError> {
    let spec = model.spec()?;
    Ok(fit(&ts.cast::<T>(), &spec, method, ctx)?)
}

fn cmd_fit<T: Real>(g: &GlobalOpts, a: &FitArgs) -> Result<String, CliError> {
    let spec = a.model.spec()?;
    let ctx = context(g)?;
    let ts = read_series(&a.input, a.input_opts.format, a.input_opts.rate)?;
    let model = fit(&ts.cast::<T>(), &spec, g.qr, &ctx)?;
    let json = ModelRecord::from_model(&model, ts.sample_rate_hz()).to_json();
    match &a.output {
        Some(path) => {
            write_file(path, json.as_bytes())?;
            Ok(String::new())
        }
        None => Ok(json),
    }
}

/// Model for one side of an assessment, with its sample rate.
fn load_model<T: Real>(
    path: &Path,
    g: &GlobalOpts,
    a: &AssessArgs,
    ctx: &ExecContext,
) -> Result<(SysIdModel<T>, f64), CliError> {
    match read_input(path, a.input_opts.format, a.input_opts.rate)? {
        Input::Model(rec) => {
            let rate = a.input_opts.rate.unwrap_or(rec.sample_rate_hz);
            Ok((rec.to_model::<T>()?, rate))
        }
        Input::Series(ts) => {
            let m = fit_series::<T>(&ts, &a.model, g.qr, ctx)?;
            Ok((m, ts.sample_rate_hz()))
        }
    }
}

#[derive(Serialize)]
struct PairOut {
    f_safe: f64,
    f_def: f64,
    delta_f_percent: f64,
}

#[derive(Serialize)]
struct PeakOut {
    freq_hz: f64,
    magnitude: f64,
    prominence: f64,
}

#[derive(Serialize)]
struct SaturationOut {
    healthy: usize,
    test: usize,
}

/// Damage report as written to `report.json`.
#[derive(Serialize)]
struct ReportOut {
    version: u32,
    alarm: bool,
    threshold_percent: f64,
    min_delta_f: Option<f64>,
    max_delta_f: Option<f64>,
    matched_pairs: Vec<PairOut>,
    unmatched_healthy: Vec<f64>,
    unmatched_test: Vec<f64>,
    healthy_peaks: Vec<PeakOut>,
    test_peaks: Vec<PeakOut>,
    isd: Option<f64>,
    saturated_bins: SaturationOut,
    l_points: usize,
    sample_rate_hz: f64,
    model_kind: String,
    precision: String,
    qr_method: String,
    trig: String,
}

fn peaks_out<T: Real>(spec: &vibsysid::Spectrum<T>, cfg: &PeakConfig) -> Vec<PeakOut> {
    find_peaks(spec, cfg)
        .peaks
        .iter()
        .map(|p| PeakOut {
            freq_hz: p.freq_hz,
            magnitude: p.magnitude,
            prominence: p.prominence,
        })
        .collect()
}

fn cmd_assess<T: Real>(g: &GlobalOpts, a: &AssessArgs) -> Result<String, CliError> {
    a.model.spec()?;
    let ctx = context(g)?;
    let (healthy, rate_h) = load_model::<T>(&a.healthy, g, a, &ctx)?;
    let (test, rate_t) = load_model::<T>(&a.test, g, a, &ctx)?;
    if rate_h != rate_t {
        return Err(CliError::Config(format!(
            "sample rates differ: healthy {rate_h} Hz, test {rate_t} Hz"
        )));
    }
    let d = &a.detect;
    let cfg = AssessConfig {
        l_points: a.spectrum.l_points,
        sample_rate_hz: rate_h,
        peaks: PeakConfig {
            min_prominence_ratio: d.min_prominence,
            max_peaks: d.max_peaks,
        },
        max_rel_shift: d.max_rel_shift,
        threshold_percent: d.threshold,
        alarm_on_unmatched: !d.no_unmatched_alarm,
    };
    let table = TrigTable::<T>::with_mode(a.spectrum.trig);
    let out = assess(&healthy, &test, &cfg, Some(&table), &ctx)?;
    let r = &out.report;
    let report = ReportOut {
        version: FORMAT_VERSION,
        alarm: r.alarm,
        threshold_percent: r.threshold_percent,
        min_delta_f: r.min_delta_f,
        max_delta_f: r.max_delta_f,
        matched_pairs: r
            .matched_pairs
            .iter()
            .map(|p| PairOut {
                f_safe: p.f_safe,
                f_def: p.f_def,
                delta_f_percent: p.delta_f_percent,
            })
            .collect(),
        unmatched_healthy: r.unmatched_healthy.clone(),
        unmatched_test: r.unmatched_test.clone(),
        healthy_peaks: peaks_out(&out.healthy, &cfg.peaks),
        test_peaks: peaks_out(&out.test, &cfg.peaks),
        // Undefined when either spectrum has bins at or below the floor.
        isd: isd(&out.test, &out.healthy).ok(),
        saturated_bins: SaturationOut {
            healthy: out.healthy.saturated_bins,
            test: out.test.saturated_bins,
        },
        l_points: cfg.l_points,
        sample_rate_hz: rate_h,
        model_kind: healthy.spec.kind.as_str().to_string(),
        precision: T::PRECISION.as_str().to_string(),
        qr_method: g.qr.as_str().to_string(),
        trig: a.spectrum.trig.as_str().to_string(),
    };
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');

    let dir = &a.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))?;
    write_file(&dir.join("report.json"), json.as_bytes())?;
    write_file(
        &dir.join("healthy_spectrum.txt"),
        format_spectrum(&out.healthy).as_bytes(),
    )?;
    write_file(
        &dir.join("test_spectrum.txt"),
        format_spectrum(&out.test).as_bytes(),
    )?;
    write_file(
        &dir.join("healthy_model.json"),
        ModelRecord::from_model(&healthy, rate_h)
            .to_json()
            .as_bytes(),
    )?;
    write_file(
        &dir.join("test_model.json"),
        ModelRecord::from_model(&test, rate_t).to_json().as_bytes(),
    )?;
    Ok(json)
}

fn cmd_bench(g: &GlobalOpts, a: &BenchArgs) -> Result<String, CliError> {
    let sizes = a
        .sizes
        .iter()
        .map(|s| crate::args::parse_size(s))
        .collect::<Result<Vec<_>, _>>()?;
    let threads = if a.thread_list.is_empty() {
        vec![resolve_threads(g.threads)?]
    } else {
        a.thread_list.clone()
    };
    if threads.contains(&0) {
        return Err(CliError::Config("thread counts must be >= 1".into()));
    }
    if a.reps == 0 {
        return Err(CliError::Config("--reps must be >= 1".into()));
    }
    let plan = BenchPlan {
        sizes,
        threads,
        methods: QrMethod::ALL.to_vec(),
        reps: a.reps,
        l_points: a.l_points,
        seed: g.seed,
    };
    let report = match g.precision {
        Precision::F32 => run_bench::<f32>(&plan)?,
        Precision::F64 => run_bench::<f64>(&plan)?,
    };
    Ok(if a.json {
        report.to_json()
    } else {
        report.to_table()
    })
}

#[derive(Serialize)]
struct FootprintOut {
    method: &'static str,
    n: usize,
    np: usize,
    elem_bytes: usize,
    working_words: u64,
    flops_estimate: f64,
    pipeline_bytes: u64,
}

fn cmd_footprint(g: &GlobalOpts, a: &FootprintArgs) -> Result<String, CliError> {
    let methods: Vec<QrMethod> = if a.all {
        QrMethod::ALL.to_vec()
    } else {
        vec![a.method.unwrap_or(g.qr)]
    };
    let rows = methods
        .into_iter()
        .map(|m| {
            let e = estimate_qr_footprint(m, a.n, a.np, a.elem_bytes)?;
            Ok(FootprintOut {
                method: m.as_str(),
                n: a.n,
                np: a.np,
                elem_bytes: a.elem_bytes,
                working_words: e.working_words,
                flops_estimate: e.flops_estimate,
                pipeline_bytes: e.pipeline_bytes,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    if a.json {
        let mut s = serde_json::to_string_pretty(&rows).expect("footprint serializes");
        s.push('\n');
        return Ok(s);
    }
    let mut s = String::new();
    for r in rows {
        s += &format!(
            "method={} n={} np={} elem_bytes={}\nworking_words={}\nflops_estimate={}\npipeline_bytes={}\n",
            r.method, r.n, r.np, r.elem_bytes, r.working_words, r.flops_estimate, r.pipeline_bytes
        );
    }
    Ok(s)
}

fn fmt_list(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn cmd_generate(g: &GlobalOpts, a: &GenerateArgs) -> Result<String, CliError> {
    if !(a.rate.is_finite() && a.rate > 0.0) {
        return Err(CliError::Config("--rate must be positive".into()));
    }
    let beta = match (a.poles.is_empty(), a.beta.is_empty()) {
        (false, true) => {
            let pairs: Vec<(f64, f64)> = a
                .poles
                .iter()
                .map(|&(r, f)| (r, std::f64::consts::TAU * f / a.rate))
                .collect();
            cascade(&pairs)
        }
        (true, false) => a.beta.clone(),
        (true, true) => pole_pair(0.95, std::f64::consts::TAU * 0.1).to_vec(),
        (false, false) => {
            return Err(CliError::Config(
                "give either --pole or --beta, not both".into(),
            ))
        }
    };
    if !is_stable(&beta) {
        return Err(CliError::Config(format!(
            "generator coefficients [{}] have a root on or outside the unit circle",
            fmt_list(&beta)
        )));
    }
    let ts = gen_arma_process(&beta, &a.alpha, a.sigma, a.samples, a.rate, g.seed)?;
    let mut comments = vec![
        format!("prng={PRNG_ALGORITHM} seed={}", g.seed),
        format!("beta={}", fmt_list(&beta)),
        format!("alpha={}", fmt_list(&a.alpha)),
        format!("sigma={}", a.sigma),
    ];
    for &(r, f) in &a.poles {
        comments.push(format!("pole={r}:{f}"));
    }
    write_file(&a.output, format_text_series(&ts, &comments).as_bytes())?;
    Ok(String::new())
}
