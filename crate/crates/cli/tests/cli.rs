// SPDX-License-Identifier: MIT OR Apache-2.0

mod common;

use common::{fixture, fixture_beta, read_json, stderr, stdout, vibsysid};
use tempfile::tempdir;
use vibsysid::spectrum::psd;
use vibsysid::sysid::fit;
use vibsysid::{ExecContext, ModelSpec, QrMethod, TrigMode, TrigTable};
use vibsysid_cli::bench::{run_bench, BenchPlan};
use vibsysid_cli::io::{format_spectrum, read_series, SeriesFormat};

const HEALTHY: &str = "ar2_healthy.txt";
const SHIFTED: &str = "ar2_shifted.txt";

fn error_line(o: &std::process::Output) -> serde_json::Value {
    let err = stderr(o);
    assert_eq!(err.lines().count(), 1, "stderr: {err}");
    serde_json::from_str(err.trim()).expect("stderr is one JSON object")
}

#[test]
fn default_fit_recovers_fixture_coefficients() {
    let o = vibsysid(["fit".as_ref(), fixture(HEALTHY).as_os_str()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rec: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rec["version"], 1);
    assert_eq!(rec["kind"], "AR");
    assert_eq!(rec["q"], 15);
    assert_eq!(rec["n_rows"], 480);
    assert_eq!(rec["diagnostics"]["qr_method"], "gs");
    assert_eq!(rec["diagnostics"]["precision"], "f32");
    let theta: Vec<f64> = serde_json::from_value(rec["theta"].clone()).unwrap();
    assert_eq!(theta.len(), 16);
    let beta = fixture_beta(HEALTHY);
    for (t, b) in theta.iter().zip(&beta) {
        assert!((t + b).abs() <= 0.05, "theta {t} vs generator {}", -b);
    }
    assert!(rec["sigma2"].as_f64().unwrap() > 0.0);
}

#[test]
fn zero_order_exits_with_config_code() {
    let o = vibsysid([
        "fit".as_ref(),
        fixture(HEALTHY).as_os_str(),
        "--q".as_ref(),
        "0".as_ref(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let e = error_line(&o);
    assert_eq!(e["error"], "config");
    assert_eq!(e["code"], 2);
}

#[test]
fn unreadable_and_malformed_inputs_exit_with_io_code() {
    let dir = tempdir().unwrap();
    let missing = dir.path().join("nope.txt");
    let o = vibsysid(["fit".as_ref(), missing.as_os_str()]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_line(&o)["error"], "io");

    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "# sample_rate_hz=10\n1.0\nnot-a-number\n").unwrap();
    let o = vibsysid(["fit".as_ref(), bad.as_os_str()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn degenerate_series_exits_with_numerical_code() {
    let dir = tempdir().unwrap();
    let flat = dir.path().join("flat.txt");
    let body = "0\n".repeat(600);
    std::fs::write(&flat, format!("# sample_rate_hz=10\n{body}")).unwrap();
    for qr in ["givens", "gs", "hh"] {
        let o = vibsysid([
            "fit".as_ref(),
            flat.as_os_str(),
            "--qr".as_ref(),
            qr.as_ref(),
        ]);
        assert_eq!(o.status.code(), Some(4), "{qr}: {}", stderr(&o));
        assert_eq!(error_line(&o)["error"], "numerical");
    }
}

#[test]
fn bad_flags_give_json_errors_and_help_succeeds() {
    let o = vibsysid(["fit", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_line(&o)["error"], "config");
    let o = vibsysid(["--qr", "lu", "footprint", "--n", "10", "--np", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = vibsysid(["--help"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("assess"));
}

#[test]
fn thread_count_does_not_change_fit_output() {
    let dir = tempdir().unwrap();
    let mut outputs = Vec::new();
    for t in ["1", "8"] {
        let out = dir.path().join(format!("model_{t}.json"));
        let o = vibsysid([
            "--threads".as_ref(),
            t.as_ref(),
            "fit".as_ref(),
            fixture(HEALTHY).as_os_str(),
            "-o".as_ref(),
            out.as_os_str(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn env_var_sets_threads_when_flag_is_absent() {
    let o = std::process::Command::new(env!("CARGO_BIN_EXE_vibsysid"))
        .args(["fit", "--model", "arma"])
        .arg(fixture(HEALTHY))
        .env("VIBSYSID_THREADS", "3")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let plain = vibsysid([
        "fit".as_ref(),
        "--model".as_ref(),
        "arma".as_ref(),
        fixture(HEALTHY).as_os_str(),
    ]);
    assert_eq!(o.stdout, plain.stdout);
    let o = std::process::Command::new(env!("CARGO_BIN_EXE_vibsysid"))
        .args(["--threads", "0", "fit"])
        .arg(fixture(HEALTHY))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

fn assess(
    healthy: &std::path::Path,
    test: &std::path::Path,
    out: &std::path::Path,
    extra: &[&str],
) {
    let mut args: Vec<std::ffi::OsString> = extra.iter().map(Into::into).collect();
    args.extend([
        "assess".into(),
        healthy.into(),
        test.into(),
        "--out-dir".into(),
        out.into(),
    ]);
    let o = vibsysid(&args);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn assess_against_itself_is_quiet() {
    let dir = tempdir().unwrap();
    assess(&fixture(HEALTHY), &fixture(HEALTHY), dir.path(), &[]);
    let r = read_json(&dir.path().join("report.json"));
    assert_eq!(r["version"], 1);
    assert_eq!(r["alarm"], false);
    let pairs = r["matched_pairs"].as_array().unwrap();
    assert!(!pairs.is_empty());
    assert!(pairs
        .iter()
        .all(|p| p["delta_f_percent"].as_f64() == Some(0.0)));
    assert_eq!(r["isd"].as_f64(), Some(0.0));
}

#[test]
fn assess_flags_the_shifted_pole() {
    let dir = tempdir().unwrap();
    assess(&fixture(HEALTHY), &fixture(SHIFTED), dir.path(), &[]);
    let r = read_json(&dir.path().join("report.json"));
    assert_eq!(r["alarm"], true);
    assert_eq!(r["threshold_percent"].as_f64(), Some(2.0));
    let max = r["max_delta_f"].as_f64().unwrap();
    assert!((4.0..=6.0).contains(&max), "ΔF = {max}");
    for name in ["healthy_spectrum.txt", "test_spectrum.txt"] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert_eq!(text.lines().count(), 2048, "{name}");
        for line in text.lines() {
            let cols: Vec<f64> = line.split(' ').map(|v| v.parse().unwrap()).collect();
            assert_eq!(cols.len(), 2);
            assert!(cols[1] > 0.0);
        }
    }
}

#[test]
fn spectra_rows_follow_l_points() {
    let dir = tempdir().unwrap();
    let o = vibsysid([
        "assess".as_ref(),
        fixture(HEALTHY).as_os_str(),
        fixture(SHIFTED).as_os_str(),
        "--out-dir".as_ref(),
        dir.path().as_os_str(),
        "--l-points".as_ref(),
        "300".as_ref(),
        "--trig".as_ref(),
        "nearest".as_ref(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("test_spectrum.txt")).unwrap();
    assert_eq!(text.lines().count(), 300);
    assert_eq!(
        read_json(&dir.path().join("report.json"))["trig"],
        "nearest"
    );
}

#[test]
fn fitted_record_reproduces_in_process_spectrum() {
    let dir = tempdir().unwrap();
    let model_path = dir.path().join("model.json");
    let o = vibsysid([
        "fit".as_ref(),
        fixture(HEALTHY).as_os_str(),
        "-o".as_ref(),
        model_path.as_os_str(),
    ]);
    assert!(o.status.success());
    let out = dir.path().join("out");
    assess(&model_path, &model_path, &out, &[]);
    let from_cli = std::fs::read_to_string(out.join("healthy_spectrum.txt")).unwrap();

    let ts = read_series(&fixture(HEALTHY), SeriesFormat::Text, None).unwrap();
    let ctx = ExecContext::sequential();
    let model = fit(
        &ts.cast::<f32>(),
        &ModelSpec::ar(15, 480),
        QrMethod::GramSchmidt,
        &ctx,
    )
    .unwrap();
    let table = TrigTable::<f32>::with_mode(TrigMode::Linear);
    let spec = psd(&model, 2048, ts.sample_rate_hz(), Some(&table), &ctx).unwrap();
    assert_eq!(from_cli, format_spectrum(&spec));

    // The series path and the record path agree too.
    let direct = dir.path().join("direct");
    assess(&fixture(HEALTHY), &fixture(HEALTHY), &direct, &[]);
    assert_eq!(
        std::fs::read(direct.join("healthy_spectrum.txt")).unwrap(),
        from_cli.as_bytes()
    );
}

#[test]
fn mismatched_sample_rates_are_rejected() {
    let dir = tempdir().unwrap();
    let text = std::fs::read_to_string(fixture(SHIFTED)).unwrap();
    let other = dir.path().join("other.txt");
    std::fs::write(
        &other,
        text.replacen("sample_rate_hz=100", "sample_rate_hz=200", 1),
    )
    .unwrap();
    let o = vibsysid([
        "assess".as_ref(),
        fixture(HEALTHY).as_os_str(),
        other.as_os_str(),
        "--out-dir".as_ref(),
        dir.path().join("o").as_os_str(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn binary_f32_input_matches_text_input() {
    let dir = tempdir().unwrap();
    let ts = read_series(&fixture(HEALTHY), SeriesFormat::Text, None).unwrap();
    let bytes: Vec<u8> = ts
        .samples()
        .iter()
        .flat_map(|&v| (v as f32).to_le_bytes())
        .collect();
    let bin = dir.path().join("h.f32");
    std::fs::write(&bin, bytes).unwrap();
    let o = vibsysid([
        "fit".as_ref(),
        bin.as_os_str(),
        "--format".as_ref(),
        "f32le".as_ref(),
    ]);
    assert_eq!(o.status.code(), Some(2), "rate is required");
    let o = vibsysid([
        "fit".as_ref(),
        bin.as_os_str(),
        "--format".as_ref(),
        "f32le".as_ref(),
        "--rate".as_ref(),
        "100".as_ref(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    // The default pipeline runs in f32, so rounding the input first changes nothing.
    let text = vibsysid(["fit".as_ref(), fixture(HEALTHY).as_os_str()]);
    assert_eq!(o.stdout, text.stdout);
}

#[test]
fn every_method_and_precision_runs() {
    for qr in ["givens", "gs", "hh"] {
        for prec in ["f32", "f64"] {
            for model in ["ar", "arma"] {
                let o = vibsysid([
                    "--qr".as_ref(),
                    qr.as_ref(),
                    "--precision".as_ref(),
                    prec.as_ref(),
                    "fit".as_ref(),
                    fixture(HEALTHY).as_os_str(),
                    "--model".as_ref(),
                    model.as_ref(),
                ]);
                assert!(o.status.success(), "{qr} {prec} {model}: {}", stderr(&o));
                let rec: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
                assert_eq!(rec["diagnostics"]["qr_method"], qr);
                assert_eq!(rec["diagnostics"]["precision"], prec);
                assert_eq!(rec["theta"].as_array().unwrap().len(), 16);
            }
        }
    }
}

#[test]
fn footprint_prints_table_values() {
    for (n, np, bytes) in [
        ("200", "8", 13888),
        ("480", "16", 64448),
        ("2520", "56", 1151808),
    ] {
        let o = vibsysid(["footprint", "--n", n, "--np", np]);
        assert!(o.status.success());
        assert!(
            stdout(&o)
                .lines()
                .any(|l| l == format!("pipeline_bytes={bytes}")),
            "{}",
            stdout(&o)
        );
    }
    let o = vibsysid(["footprint", "--n", "480", "--np", "16", "--all", "--json"]);
    let rows: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let words: Vec<u64> = rows
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["working_words"].as_u64().unwrap())
        .collect();
    assert_eq!(
        words,
        vec![
            2 * 480 * 16 + 4 * 480,
            2 * 480 * 16 + 256,
            16 + 480 + 5 * 480 * 16 + 480 * 480
        ]
    );
    let o = vibsysid(["footprint", "--n", "4", "--np", "8"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn generate_is_reproducible_from_the_seed() {
    let dir = tempdir().unwrap();
    let paths: Vec<_> = (0..3)
        .map(|i| dir.path().join(format!("g{i}.txt")))
        .collect();
    for (p, seed) in paths.iter().zip(["5", "5", "6"]) {
        let o = vibsysid([
            "--seed".as_ref(),
            seed.as_ref(),
            "generate".as_ref(),
            "-o".as_ref(),
            p.as_os_str(),
            "--samples".as_ref(),
            "500".as_ref(),
            "--pole".as_ref(),
            "0.9:12".as_ref(),
            "--alpha".as_ref(),
            "0.3".as_ref(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let read = |p: &std::path::Path| std::fs::read_to_string(p).unwrap();
    assert_eq!(read(&paths[0]), read(&paths[1]));
    assert_ne!(read(&paths[0]), read(&paths[2]));
    assert!(read(&paths[0]).contains("# prng=chacha20 seed=5"));
    let ts = read_series(&paths[0], SeriesFormat::Text, None).unwrap();
    assert_eq!(ts.len(), 500);

    let o = vibsysid(["generate", "-o", "/dev/null", "--beta", "-2.5,1.6"]);
    assert_eq!(o.status.code(), Some(2), "unstable generator is rejected");
}

#[test]
fn bench_reports_rows_in_both_forms() {
    let o = vibsysid([
        "bench",
        "--sizes",
        "60x4",
        "--thread-list",
        "1,2",
        "--reps",
        "1",
        "--json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["rows"].as_array().unwrap().len(), 2 * 3 * 4);
    assert_eq!(r["barriers"]["stable"], true);
    let o = vibsysid(["bench", "--sizes", "60x4", "--reps", "1", "--threads", "1"]);
    let text = stdout(&o);
    assert!(text.starts_with("component"));
    assert!(text.contains("barriers gs 60x4"));
}

fn medium_plan(threads: Vec<usize>, l_points: usize) -> BenchPlan {
    BenchPlan {
        sizes: vec![(480, 16)],
        threads,
        methods: vec![QrMethod::GramSchmidt, QrMethod::Householder],
        reps: 7,
        l_points,
        seed: 0,
    }
}

#[test]
fn qr_and_psd_dominate_medium_pipeline() {
    let r = run_bench::<f32>(&medium_plan(vec![1], 2048)).unwrap();
    let t = |c: &str| r.wall_ns(c, QrMethod::GramSchmidt, "480x16", 1).unwrap() as f64;
    let total = t("regression") + t("qr") + t("solve") + t("psd");
    let share = (t("qr") + t("psd")) / total;
    assert!(share > 0.6, "QR + PSD share {share:.3}");
}

#[test]
fn gram_schmidt_is_faster_than_householder_at_medium_size() {
    let r = run_bench::<f32>(&medium_plan(vec![1], 2048)).unwrap();
    let gs = r.wall_ns("qr", QrMethod::GramSchmidt, "480x16", 1).unwrap();
    let hh = r.wall_ns("qr", QrMethod::Householder, "480x16", 1).unwrap();
    assert!(gs < hh, "gs {gs} ns, hh {hh} ns");
}

#[test]
fn psd_speedup_grows_with_workers() {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    if cores < 4 {
        eprintln!("skipped: {cores} cores available, scaling needs at least 4");
        return;
    }
    let r = run_bench::<f32>(&medium_plan(vec![1, 2, 8], 2048 * 8)).unwrap();
    let t = |w| {
        r.wall_ns("psd", QrMethod::GramSchmidt, "480x16", w)
            .unwrap() as f64
    };
    let (s2, s8) = (t(1) / t(2), t(1) / t(8));
    assert!(s8 > s2, "speedup 2: {s2:.2}, 8: {s8:.2}");
}
