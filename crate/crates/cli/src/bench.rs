// SPDX-License-Identifier: MIT OR Apache-2.0

//! Wall-clock timing of the pipeline components.

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;
use vibsysid::model::build_ar_regression;
use vibsysid::oracle::{cascade, gen_ar_process};
use vibsysid::qr::{back_substitution, factorize};
use vibsysid::spectrum::psd;
use vibsysid::sysid::{fit, noise_variance, project_target, residual_sum_of_squares};
use vibsysid::{
    ExecContext, ModelSpec, QrMethod, Real, SysIdModel, TimeSeries, TrigMode, TrigTable,
};

use crate::error::CliError;
use crate::io::FORMAT_VERSION;

/// Component names in pipeline order.
pub const COMPONENTS: [&str; 4] = ["regression", "qr", "solve", "psd"];

#[derive(Clone, Debug)]
pub struct BenchPlan {
    /// `(N, Np)` pairs.
    pub sizes: Vec<(usize, usize)>,
    pub threads: Vec<usize>,
    pub methods: Vec<QrMethod>,
    pub reps: usize,
    pub l_points: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub component: String,
    pub method: String,
    pub size: String,
    pub threads: usize,
    /// Median over repetitions.
    pub wall_ns: u64,
    /// Counted for `qr`; closed-form operation counts elsewhere.
    pub flops: u64,
}

/// Synchronization points of one Gram-Schmidt fit + PSD run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BarrierCount {
    pub size: String,
    pub threads: usize,
    pub count: u64,
    /// Two consecutive runs produced the same count.
    pub stable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub version: u32,
    pub precision: String,
    pub l_points: usize,
    pub reps: usize,
    pub rows: Vec<BenchRow>,
    pub barriers: Option<BarrierCount>,
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("bench report serializes");
        s.push('\n');
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "{:<11} {:<7} {:<9} {:>7} {:>14} {:>14}",
            "component", "method", "size", "threads", "wall_ns", "flops"
        )
        .unwrap();
        for r in &self.rows {
            writeln!(
                s,
                "{:<11} {:<7} {:<9} {:>7} {:>14} {:>14}",
                r.component, r.method, r.size, r.threads, r.wall_ns, r.flops
            )
            .unwrap();
        }
        if let Some(b) = &self.barriers {
            writeln!(
                s,
                "barriers gs {} threads={}: {} ({})",
                b.size,
                b.threads,
                b.count,
                if b.stable { "stable" } else { "unstable" }
            )
            .unwrap();
        }
        s
    }

    /// Median time of `component` rows matching `method`, `size`, `threads`.
    pub fn wall_ns(
        &self,
        component: &str,
        method: QrMethod,
        size: &str,
        threads: usize,
    ) -> Option<u64> {
        self.rows
            .iter()
            .find(|r| {
                r.component == component
                    && r.method == method.as_str()
                    && r.size == size
                    && r.threads == threads
            })
            .map(|r| r.wall_ns)
    }
}

fn median_ns(reps: usize, mut f: impl FnMut()) -> u64 {
    let mut t: Vec<u64> = (0..reps)
        .map(|_| {
            let start = Instant::now();
            f();
            start.elapsed().as_nanos() as u64
        })
        .collect();
    t.sort_unstable();
    t[t.len() / 2]
}

/// Series with three resonances, long enough for an `n`-row AR fit with `np` lags.
pub fn bench_series(n: usize, np: usize, seed: u64) -> Result<TimeSeries<f64>, CliError> {
    let beta = cascade(&[(0.95, 0.5), (0.9, 1.3), (0.85, 2.4)]);
    Ok(gen_ar_process(&beta, 1.0, n + np, 100.0, seed)?)
}

/// Multiply-adds per bin for the rational spectrum, counted as two flops each,
/// plus the final magnitude ratio.
fn psd_flops(np: usize, l_points: usize) -> u64 {
    (l_points * (4 * (np + 1) + 8)) as u64
}

pub fn size_label(n: usize, np: usize) -> String {
    format!("{n}x{np}")
}

fn time_size<T: Real>(
    plan: &BenchPlan,
    n: usize,
    np: usize,
    rows: &mut Vec<BenchRow>,
) -> Result<(), CliError> {
    let spec = ModelSpec::ar(np - 1, n);
    spec.validate()?;
    let ts = bench_series(n, np, plan.seed)?.cast::<T>();
    let table = TrigTable::<T>::with_mode(TrigMode::Linear);
    let size = size_label(n, np);
    let reps = plan.reps;
    for &threads in &plan.threads {
        let ctx = ExecContext::new(threads)?;
        for &method in &plan.methods {
            let row = |component: &str, wall_ns, flops| BenchRow {
                component: component.to_string(),
                method: method.as_str().to_string(),
                size: size.clone(),
                threads,
                wall_ns,
                flops,
            };
            let wall = median_ns(reps, || {
                build_ar_regression(&ts, &spec).unwrap();
            });
            rows.push(row("regression", wall, 0));
            let prob = build_ar_regression(&ts, &spec)?;

            let f = factorize(&prob.psi, method, &ctx)?;
            let wall = median_ns(reps, || {
                factorize(&prob.psi, method, &ctx).unwrap();
            });
            rows.push(row("qr", wall, f.flops));

            let solve = || -> Result<(Vec<T>, T), vibsysid::Error> {
                let qts = project_target(&f.q_mat, &prob.s_vec, &ctx);
                let theta = back_substitution(&f.r_mat, &qts)?;
                let rss = residual_sum_of_squares(&prob.psi, &prob.s_vec, &theta, &ctx);
                Ok((theta, noise_variance(rss, n, np)?))
            };
            let (theta, sigma2) = solve()?;
            let wall = median_ns(reps, || {
                solve().unwrap();
            });
            let solve_flops = (4 * n * np + np * np + 2 * n) as u64;
            rows.push(row("solve", wall, solve_flops));

            let model = SysIdModel {
                spec,
                theta,
                sigma2,
                diagnostics: vibsysid::sysid::FitDiagnostics {
                    residual_norm: 0.0,
                    qr_method: method,
                    precision: T::PRECISION,
                    qr_flops: f.flops,
                },
            };
            let wall = median_ns(reps, || {
                psd(
                    &model,
                    plan.l_points,
                    ts.sample_rate_hz(),
                    Some(&table),
                    &ctx,
                )
                .unwrap();
            });
            rows.push(row("psd", wall, psd_flops(np, plan.l_points)));
        }
    }
    Ok(())
}

/// Barriers of one full GS run at `(n, np)` on `threads` workers.
pub fn gs_barriers<T: Real>(
    n: usize,
    np: usize,
    threads: usize,
    l_points: usize,
    seed: u64,
) -> Result<u64, CliError> {
    let ts = bench_series(n, np, seed)?.cast::<T>();
    let ctx = ExecContext::new(threads)?;
    let table = TrigTable::<T>::with_mode(TrigMode::Linear);
    let model = fit(&ts, &ModelSpec::ar(np - 1, n), QrMethod::GramSchmidt, &ctx)?;
    psd(&model, l_points, ts.sample_rate_hz(), Some(&table), &ctx)?;
    Ok(ctx.barrier_count())
}

pub fn run_bench<T: Real>(plan: &BenchPlan) -> Result<BenchReport, CliError> {
    if plan.sizes.iter().any(|&(n, np)| np < 2 || n <= np) {
        return Err(CliError::Config("bench sizes need N > Np >= 2".into()));
    }
    let mut rows = Vec::new();
    for &(n, np) in &plan.sizes {
        time_size::<T>(plan, n, np, &mut rows)?;
    }
    // Medium size: the middle entry of the sweep.
    let (n, np) = plan.sizes[plan.sizes.len() / 2];
    let threads = plan.threads.iter().copied().max().unwrap_or(1).max(2);
    let first = gs_barriers::<T>(n, np, threads, plan.l_points, plan.seed)?;
    let second = gs_barriers::<T>(n, np, threads, plan.l_points, plan.seed)?;
    Ok(BenchReport {
        version: FORMAT_VERSION,
        precision: T::PRECISION.as_str().to_string(),
        l_points: plan.l_points,
        reps: plan.reps,
        rows,
        barriers: Some(BarrierCount {
            size: size_label(n, np),
            threads,
            count: first,
            stable: first == second,
        }),
    })
}
