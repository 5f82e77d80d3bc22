//! Drives the installed binary end to end: flag wiring, output shapes,
//! exit codes, and re-ingestion of everything the tool itself emits.

use std::path::{Path, PathBuf};
use std::process::Command;

use evalsnr::ingest::{write_measurements_csv, write_models_csv};
use evalsnr::store::{Measurement, ModelMeta, StoreBuilder};
use evalsnr::synth::{synth_ladder, synth_population, LadderConfig, PopulationSpec};

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_evalsnr"))
        .args(args)
        .output()
        .expect("binary should run");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).expect("stdout is utf-8"),
        String::from_utf8(out.stderr).expect("stderr is utf-8"),
    )
}

fn run_ok(args: &[&str]) -> String {
    let (code, stdout, stderr) = run(args);
    assert_eq!(code, 0, "args {args:?} failed: {stderr}");
    stdout
}

fn write_store(dir: &Path, store: &evalsnr::store::EvalStore) -> (PathBuf, PathBuf) {
    let models: Vec<&ModelMeta> = store.models().collect();
    let models_path = dir.join("models.csv");
    let meas_path = dir.join("measurements.csv");
    std::fs::write(&models_path, write_models_csv(&models)).unwrap();
    std::fs::write(&meas_path, write_measurements_csv(&store.measurement_rows())).unwrap();
    (models_path, meas_path)
}

// 4 groups at two scales, one benchmark, light noise.
fn population_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let store = synth_population(&PopulationSpec {
        groups: 4,
        steps: 12,
        noise_scale: 0.02,
        rng_seed: 3,
        benchmark: "bench".into(),
        metric: "primary".into(),
    })
    .unwrap();
    write_store(dir, &store)
}

// 5x5 noiseless ladder plus target, loss curve only.
fn ladder_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let mut cfg = LadderConfig::grid(
        vec![100_000_000, 170_000_000, 300_000_000, 520_000_000, 900_000_000],
        vec![2_000_000_000, 4_000_000_000, 8_000_000_000, 16_000_000_000, 32_000_000_000],
        3_000_000_000,
        60_000_000_000,
    );
    cfg.steps = 12;
    cfg.with_metric = false;
    write_store(dir, &synth_ladder(&cfg).unwrap())
}

const SUBCOMMANDS: [&str; 18] = [
    "validate", "snr", "noise", "signal", "decision-acc", "scaling-fit", "scaling-predict",
    "filter-subtasks", "average", "ema", "early-stop", "min-n", "within-tolerance", "resample",
    "subsample", "metric-compare", "synth", "correlate",
];

#[test]
fn help_lists_every_subcommand_and_exits_zero() {
    let stdout = run_ok(&["--help"]);
    for name in SUBCOMMANDS {
        assert!(stdout.contains(name), "--help does not mention {name}");
    }
    let (code, stdout, _) = run(&["--version"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("evalsnr"));
}

#[test]
fn usage_problems_exit_two() {
    let (code, _, _) = run(&["frobnicate"]);
    assert_eq!(code, 2, "unknown subcommand");
    let (code, _, _) = run(&["snr", "--no-such-flag"]);
    assert_eq!(code, 2, "unknown flag");
    let (code, _, stderr) = run(&["--input", "x.csv", "--models", "m.csv", "resample"]);
    assert_eq!(code, 2, "missing required flags: {stderr}");

    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("evalsnr.conf");
    std::fs::write(&config, "window_m = 5\n").unwrap();
    let (code, _, stderr) = run(&["--config", config.to_str().unwrap(), "min-n"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("usage error:"), "{stderr}");
    assert!(stderr.contains("window_m") && stderr.contains(":1"), "{stderr}");
}

#[test]
fn missing_input_exits_one_and_names_the_path() {
    let (code, _, stderr) =
        run(&["--input", "/no/such/meas.csv", "--models", "/no/such/models.csv", "validate"]);
    assert_eq!(code, 1);
    assert!(stderr.starts_with("error:"), "{stderr}");
    assert!(stderr.contains("/no/such/"), "{stderr}");
}

#[test]
fn validate_counts_the_store() {
    let dir = tempfile::tempdir().unwrap();
    let (models, meas) = population_fixture(dir.path());
    let stdout = run_ok(&["--input", meas.to_str().unwrap(), "--models", models.to_str().unwrap(), "validate"]);
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("models,measurements,instances,benchmarks,metrics"));
    assert_eq!(lines.next(), Some("8,96,0,1,1"));
    assert_eq!(lines.next(), None);
}

// Constant curves: zero noise, so the ratio must come out as the
// infinite marker rather than a number.
fn constant_pair_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let mut b = StoreBuilder::new();
    for (mi, value) in [(0usize, 0.2f64), (1, 0.4)] {
        let id = format!("m{mi}");
        b.add_model(ModelMeta::new(id.clone(), id.clone(), 1000, 1000, None, None, None).unwrap())
            .unwrap();
        for step in 0..6 {
            b.add_measurement(Measurement {
                model_id: id.clone(),
                step,
                benchmark: "bench".into(),
                subtask: None,
                metric: "primary".into(),
                value,
            })
            .unwrap();
        }
    }
    write_store(dir, &b.build())
}

#[test]
fn snr_reports_infinite_ratio_on_noiseless_curves() {
    let dir = tempfile::tempdir().unwrap();
    let (models, meas) = constant_pair_fixture(dir.path());
    let stdout = run_ok(&["--input", meas.to_str().unwrap(), "--models", models.to_str().unwrap(), "snr"]);
    let mut lines = stdout.lines();
    assert_eq!(
        lines.next(),
        Some("benchmark,metric,signal,noise,snr,window_n,population_size")
    );
    let row = lines.next().unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[0], "bench");
    assert_eq!(fields[1], "primary");
    let signal: f64 = fields[2].parse().unwrap();
    assert!((signal - 0.2 / 0.3).abs() < 1e-12, "{row}");
    assert_eq!(fields[3], "0");
    assert_eq!(fields[4], "inf");
    assert_eq!(fields[5], "5");
    assert_eq!(fields[6], "2");
}

#[test]
fn json_format_emits_valid_typed_rows() {
    let dir = tempfile::tempdir().unwrap();
    let (models, meas) = constant_pair_fixture(dir.path());
    let stdout = run_ok(&[
        "--input", meas.to_str().unwrap(), "--models", models.to_str().unwrap(),
        "--format", "json", "snr",
    ]);
    let rows: serde_json::Value = serde_json::from_str(&stdout).expect("valid json");
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["benchmark"], "bench");
    assert_eq!(rows[0]["noise"], 0.0);
    // Non-finite ratios cannot be json numbers; they degrade to strings.
    assert_eq!(rows[0]["snr"], "inf");
    assert_eq!(rows[0]["population_size"], 2);
}

#[test]
fn out_flag_writes_the_table_and_keeps_stdout_quiet() {
    let dir = tempfile::tempdir().unwrap();
    let (models, meas) = population_fixture(dir.path());
    let out = dir.path().join("snr.csv");
    let stdout = run_ok(&[
        "--input", meas.to_str().unwrap(), "--models", models.to_str().unwrap(),
        "--out", out.to_str().unwrap(), "snr",
    ]);
    assert!(stdout.is_empty(), "stdout should stay quiet: {stdout}");
    let written = std::fs::read_to_string(&out).unwrap();
    assert!(written.starts_with("benchmark,metric,signal,noise,snr"), "{written}");
    assert_eq!(written.lines().count(), 2);
}

#[test]
fn config_file_supplies_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let (models, meas) = population_fixture(dir.path());
    let config = dir.path().join("evalsnr.conf");
    std::fs::write(
        &config,
        format!(
            "# fixture config\ninput = {}\nmodels = {}\nbenchmark = bench\nwindow_n = 4\n",
            meas.display(),
            models.display()
        ),
    )
    .unwrap();
    let stdout = run_ok(&["--config", config.to_str().unwrap(), "snr"]);
    assert!(stdout.lines().nth(1).unwrap().ends_with(",4,8"), "{stdout}");
}

#[test]
fn decision_acc_pairs_the_scales() {
    let dir = tempfile::tempdir().unwrap();
    let (models, meas) = population_fixture(dir.path());
    let smalls = "g00-small,g01-small,g02-small,g03-small";
    let larges = "g00-large,g01-large,g02-large,g03-large";
    for scoring in ["final", "avg_both"] {
        let stdout = run_ok(&[
            "--input", meas.to_str().unwrap(), "--models", models.to_str().unwrap(),
            "decision-acc", "--small", smalls, "--large", larges, "--scoring", scoring,
        ]);
        let mut lines = stdout.lines();
        assert_eq!(
            lines.next(),
            Some("benchmark,metric,scoring_variant,decision_accuracy,kendall_tau,spearman_rho,n_pairs,tie_count")
        );
        let row = lines.next().unwrap();
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[2], scoring);
        // 4 cleanly separated groups: every ranking decision is right.
        assert_eq!(fields[3], "1", "{row}");
        assert_eq!(fields[6], "6");
        assert_eq!(fields[7], "0");
    }
}

#[test]
fn scaling_fit_then_predict_on_a_clean_ladder() {
    let dir = tempfile::tempdir().unwrap();
    let (models, meas) = ladder_fixture(dir.path());
    let m = meas.to_str().unwrap();
    let mo = models.to_str().unwrap();
    let header = "benchmark,metric,A,B,E,alpha,beta,a,b,k,L0,fit_loss,predicted,actual,rel_error,target_noise,within_noise_flag";

    // No --train: the fit stage takes every model in the store.
    let fit_out = run_ok(&["--input", m, "--models", mo, "--metric", "loss", "scaling-fit"]);
    let mut lines = fit_out.lines();
    assert_eq!(lines.next(), Some(header));
    let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(fields.len(), 17);
    assert_eq!(fields[1], "loss");
    // Loss-only fit: the sigmoid and prediction columns stay empty.
    assert_eq!(&fields[7..11], &["", "", "", ""]);
    assert_eq!(&fields[12..17], &["", "", "", "", ""]);

    // No --train here either: everything except the target trains.
    let pred_out = run_ok(&["--input", m, "--models", mo, "--metric", "loss", "--window-n", "4",
        "scaling-predict", "--target", "target"]);
    let mut lines = pred_out.lines();
    assert_eq!(lines.next(), Some(header));
    let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
    let rel_error: f64 = fields[14].parse().unwrap();
    assert!(rel_error < 0.005, "noiseless ladder should predict its target: {rel_error}");
    assert_eq!(fields[16], "true");

    // Predicting a model that was fitted on is refused as a usage error.
    let (code, _, stderr) = run(&["--input", m, "--models", mo, "--metric", "loss",
        "--window-n", "4", "scaling-predict", "--target", "n100000000-d4000000000",
        "--train", "n100000000-d4000000000,n300000000-d8000000000"]);
    assert_eq!(code, 2, "{stderr}");
    assert!(stderr.contains("usage error:"), "{stderr}");
}

#[test]
fn average_ema_and_early_stop_cover_the_window_flags() {
    let dir = tempfile::tempdir().unwrap();
    let (models, meas) = population_fixture(dir.path());
    let m = meas.to_str().unwrap();
    let mo = models.to_str().unwrap();

    let avg = run_ok(&["--input", m, "--models", mo, "--avg-k", "3", "average"]);
    let mut lines = avg.lines();
    assert_eq!(lines.next(), Some("benchmark,metric,model_id,k,final,average"));
    assert_eq!(lines.count(), 8);
    assert!(avg.lines().nth(1).unwrap().contains(",3,"));

    // EMA emits measurement-schema rows that must re-ingest cleanly.
    let ema_out = dir.path().join("ema.csv");
    run_ok(&["--input", m, "--models", mo, "--ema-alpha", "0.5", "--out",
        ema_out.to_str().unwrap(), "ema"]);
    let text = std::fs::read_to_string(&ema_out).unwrap();
    assert!(text.starts_with("model_id,step,benchmark,subtask,metric,value"), "{text}");
    let revalidated = run_ok(&["--input", ema_out.to_str().unwrap(), "--models", mo, "validate"]);
    assert!(revalidated.lines().nth(1).unwrap().starts_with("8,96,"), "{revalidated}");

    let sweep = run_ok(&["--input", m, "--models", mo, "--ema-alpha", "0.4", "early-stop"]);
    let mut lines = sweep.lines();
    assert_eq!(lines.next(), Some("benchmark,metric,step,raw_da,smoothed_da"));
    assert_eq!(lines.count(), 12);
}

#[test]
fn min_n_needs_no_input_and_matches_the_closed_form() {
    let stdout = run_ok(&["min-n"]);
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("k,alpha,n"));
    assert_eq!(lines.count(), 12);
    // The widest tolerance already holds at the smallest legal sample.
    assert!(stdout.lines().any(|l| l == "1,0.95,2"), "{stdout}");
}

#[test]
fn metric_compare_reports_one_row_per_metric() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = LadderConfig::grid(
        vec![100_000_000, 300_000_000, 900_000_000],
        vec![4_000_000_000, 16_000_000_000],
        2_000_000_000,
        40_000_000_000,
    );
    cfg.steps = 12;
    cfg.noise_scale = 0.01;
    let (models, meas) = write_store(dir.path(), &synth_ladder(&cfg).unwrap());
    let stdout = run_ok(&[
        "--input", meas.to_str().unwrap(), "--models", models.to_str().unwrap(),
        "--benchmark", "bench", "--window-n", "4", "metric-compare",
        "--metric-a", "primary", "--metric-b", "loss",
    ]);
    let mut lines = stdout.lines();
    assert_eq!(
        lines.next(),
        Some("benchmark,metric,signal,noise,snr,decision_accuracy,scaling_error")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("bench,primary,"), "{}", rows[0]);
    assert!(rows[1].starts_with("bench,loss,"), "{}", rows[1]);
}

// Three benchmarks with noise rising from harmless to drowning, so the
// snr and agreement tables have something to correlate.
fn multi_benchmark_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let mut b = StoreBuilder::new();
    for g in 0..3 {
        for side in ["small", "large"] {
            let id = format!("g{g}-{side}");
            b.add_model(
                ModelMeta::new(id, format!("g{g}"), 1000 + g as u64, 1000, None, None, None)
                    .unwrap(),
            )
            .unwrap();
        }
    }
    for (bi, bench) in ["b0", "b1", "b2"].iter().enumerate() {
        let amp = [0.001, 0.03, 0.12][bi];
        for g in 0..3usize {
            for (si, side) in ["small", "large"].iter().enumerate() {
                let base = 0.3 + 0.1 * g as f64 + 0.05 * si as f64;
                for step in 0..8u64 {
                    // The large side is the clean reference ordering; the
                    // small side jitters out of phase per group, enough to
                    // flip a ranking on the noisiest benchmark.
                    let sign = if (step + g as u64).is_multiple_of(2) { 1.0 } else { -1.0 };
                    let jitter = if si == 0 { amp * sign } else { 0.0 };
                    b.add_measurement(Measurement {
                        model_id: format!("g{g}-{side}"),
                        step,
                        benchmark: bench.to_string(),
                        subtask: None,
                        metric: "primary".into(),
                        value: base + jitter,
                    })
                    .unwrap();
                }
            }
        }
    }
    write_store(dir, &b.build())
}

#[test]
fn correlate_joins_emitted_tables() {
    let dir = tempfile::tempdir().unwrap();
    let (models, meas) = multi_benchmark_fixture(dir.path());
    let m = meas.to_str().unwrap();
    let mo = models.to_str().unwrap();
    let snr_path = dir.path().join("snr.csv");
    let da_path = dir.path().join("da.csv");
    let smalls = "g0-small,g1-small,g2-small";
    let larges = "g0-large,g1-large,g2-large";

    let snr_out = run_ok(&["--input", m, "--models", mo, "--window-n", "4", "--out",
        snr_path.to_str().unwrap(), "snr", "--population", smalls]);
    assert!(snr_out.is_empty());
    run_ok(&["--input", m, "--models", mo, "--out", da_path.to_str().unwrap(),
        "decision-acc", "--small", smalls, "--large", larges]);

    let stdout = run_ok(&["correlate", "--x-file", snr_path.to_str().unwrap(), "--y-file",
        da_path.to_str().unwrap()]);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "x,y,label");
    assert_eq!(lines.len(), 5, "{stdout}");
    for (i, bench) in ["b0", "b1", "b2"].iter().enumerate() {
        assert!(lines[1 + i].ends_with(&format!(",{bench}")), "{}", lines[1 + i]);
    }
    let summary: Vec<&str> = lines[4].split(',').collect();
    assert_eq!(summary[2], "summary");
    let r: f64 = summary[0].parse().unwrap();
    let r2: f64 = summary[1].parse().unwrap();
    assert!((r * r - r2).abs() < 1e-12, "{stdout}");
    assert!((0.0..=1.0).contains(&r2));
}

#[test]
fn filter_subtasks_reports_the_greedy_trace() {
    let dir = tempfile::tempdir().unwrap();
    let mut b = StoreBuilder::new();
    for mi in 0..3u64 {
        let id = format!("m{mi}");
        b.add_model(ModelMeta::new(id, format!("m{mi}"), 1000 + mi, 1000, None, None, None).unwrap())
            .unwrap();
    }
    for (si, sub) in ["quiet", "mid", "wild"].iter().enumerate() {
        let amp = [0.002, 0.02, 0.09][si];
        for mi in 0..3u64 {
            for step in 0..8u64 {
                let sign = if step % 2 == 0 { 1.0 } else { -1.0 };
                b.add_measurement(Measurement {
                    model_id: format!("m{mi}"),
                    step,
                    benchmark: "bench".into(),
                    subtask: Some(sub.to_string()),
                    metric: "primary".into(),
                    value: 0.3 + 0.12 * mi as f64 + amp * sign,
                })
                .unwrap();
            }
        }
    }
    let (models, meas) = write_store(dir.path(), &b.build());
    let stdout = run_ok(&[
        "--input", meas.to_str().unwrap(), "--models", models.to_str().unwrap(),
        "--benchmark", "bench", "--window-n", "4", "--seed", "5",
        "filter-subtasks", "--baseline-trials", "4",
    ]);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(
        lines[0],
        "prefix_len,subtask_added,snr,decision_accuracy,target_noise,baseline_mean_snr,baseline_std_snr"
    );
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("1,quiet,"), "{}", lines[1]);
    assert!(lines[2].starts_with("2,mid,"), "{}", lines[2]);
    assert!(lines[3].starts_with("3,wild,"), "{}", lines[3]);
    // Full-set baseline: every permutation aggregates identically.
    assert!(lines[3].ends_with(",0"), "{}", lines[3]);
}

#[test]
fn synth_modes_validate_and_reingest() {
    let dir = tempfile::tempdir().unwrap();
    for (mode, extra, expect_models) in [
        ("population", vec!["--groups", "3", "--steps", "6"], "6,"),
        ("ladder", vec!["--steps", "6"], "26,"),
        ("curve", vec!["--steps", "6"], "1,"),
    ] {
        let out_dir = dir.path().join(mode);
        let mut args: Vec<&str> =
            vec!["--seed", "1", "synth", "--mode", mode, "--out-dir", out_dir.to_str().unwrap()];
        args.extend(extra);
        run_ok(&args);
        let models = out_dir.join("models.csv");
        let meas = out_dir.join("measurements.csv");
        let stdout = run_ok(&[
            "--input", meas.to_str().unwrap(), "--models", models.to_str().unwrap(), "validate",
        ]);
        assert!(
            stdout.lines().nth(1).unwrap().starts_with(expect_models),
            "{mode}: {stdout}"
        );
    }
}
