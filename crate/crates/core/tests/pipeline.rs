//! End-to-end pipeline stage tests on a small model.

use std::path::Path;
use std::process::Command;

use faultid::gp::{GpSurface, SurfaceRecord};
use faultid::pipeline::{MeasurementFile, OutputLayout, Pipeline, PipelineConfig, PipelineError};
use faultid::voting::SolutionKey;

fn small_config(out_dir: &Path, seed: u64) -> PipelineConfig {
    let json = format!(
        r#"{{
        "seed": {seed},
        "output_dir": {:?},
        "model": {{ "segments": 6, "segment_mass": 0.5, "segment_stiffness": 2.0e5,
                    "coupling_segment": 2, "coupling_strength": 4.0e5, "k_c": 5.0e6 }},
        "sweep": {{ "resonance_indices": [3, 5], "points_per_band": 3, "band_halfwidth_frac": 0.002 }},
        "training": {{ "scenarios": 40, "noise_level": 0.001 }},
        "calibration": {{ "mcmc_samples": 60 }},
        "ensemble": {{ "runs": 3, "objectives_per_run": 2, "budget": 800 }},
        "truth": {{ "segment": 4, "severity": 0.05 }}
    }}"#,
        out_dir.to_str().unwrap()
    );
    serde_json::from_str(&json).unwrap()
}

fn run_all(pipeline: &Pipeline) {
    pipeline.simulate(true).unwrap();
    pipeline.calibrate(&pipeline.out.training()).unwrap();
    pipeline
        .identify(&pipeline.out.surfaces_dir(), &pipeline.out.measurement())
        .unwrap();
    let root = pipeline.out.root.clone();
    pipeline.report(&root).unwrap();
}

#[test]
fn stages_produce_byte_identical_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let pipeline = Pipeline::new(small_config(out, 99), dir.path());
        run_all(&pipeline);
    }
    let mut compared = 0;
    for name in [
        "training.csv",
        "measurement.csv",
        "model.json",
        "calibration_diagnostics.csv",
        "tally_solution.csv",
        "tally_range.csv",
        "tally_partial_solution.csv",
        "tally_partial_range.csv",
        "tally_baseline.csv",
        "identify_meta.json",
        "validation.json",
        "report.md",
        "surfaces/surface_000.json",
        "archives/run_000.csv",
        "archives/run_002.csv",
    ] {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "artifact {name} differs between identical reruns");
        compared += 1;
    }
    assert_eq!(compared, 15);
}

#[test]
fn zero_noise_healthy_truth_measures_zero() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(&dir.path().join("out"), 1);
    config.training.noise_level = 0.0;
    config.truth = Some(faultid::pipeline::TruthSpec {
        segment: 1,
        severity: 0.0,
    });
    let pipeline = Pipeline::new(config, dir.path());
    pipeline.simulate(true).unwrap();
    let text = std::fs::read_to_string(pipeline.out.measurement()).unwrap();
    let measurement = MeasurementFile::read_csv(text.as_bytes()).unwrap();
    assert!(measurement.rows.iter().all(|r| r.delta_y == 0.0));
}

#[test]
fn missing_truth_is_a_config_error_in_truth_mode() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(&dir.path().join("out"), 1);
    config.truth = None;
    let pipeline = Pipeline::new(config, dir.path());
    match pipeline.simulate(true) {
        Err(PipelineError::Config(msg)) => assert!(msg.contains("truth")),
        other => panic!("expected config error, got {other:?}"),
    }
    // Without the truth requirement the training data still lands.
    pipeline.simulate(false).unwrap();
    assert!(pipeline.out.training().exists());
    assert!(!pipeline.out.measurement().exists());
}

#[test]
fn persisted_surfaces_reload_and_predict() {
    let dir = tempfile::tempdir().unwrap();
    let pipeline = Pipeline::new(small_config(&dir.path().join("out"), 7), dir.path());
    pipeline.simulate(true).unwrap();
    pipeline.calibrate(&pipeline.out.training()).unwrap();
    let record: SurfaceRecord =
        serde_json::from_str(&std::fs::read_to_string(pipeline.out.surface(0)).unwrap()).unwrap();
    let surface = GpSurface::try_from(record).unwrap();
    let (mean, var) = surface.predict([3.0, 0.04]);
    assert!(mean.is_finite());
    assert!(var >= 0.0);

    // Round trip again: predictions reproduce exactly.
    let text = serde_json::to_string(&SurfaceRecord::from(&surface)).unwrap();
    let again = GpSurface::try_from(serde_json::from_str::<SurfaceRecord>(&text).unwrap()).unwrap();
    for q in [[1.0, 0.0], [4.0, 0.08], [6.0, 0.033]] {
        let (m0, v0) = surface.predict(q);
        let (m1, v1) = again.predict(q);
        assert!((m0 - m1).abs() <= 1e-12 * (1.0 + m0.abs()));
        assert!((v0 - v1).abs() <= 1e-12 * (1.0 + v0.abs()));
    }
}

#[test]
fn identify_rejects_misaligned_measurements() {
    let dir = tempfile::tempdir().unwrap();
    let pipeline = Pipeline::new(small_config(&dir.path().join("out"), 3), dir.path());
    pipeline.simulate(true).unwrap();
    pipeline.calibrate(&pipeline.out.training()).unwrap();

    // Corrupt one omega beyond the 1e-9 relative tolerance.
    let text = std::fs::read_to_string(pipeline.out.measurement()).unwrap();
    let mut measurement = MeasurementFile::read_csv(text.as_bytes()).unwrap();
    measurement.rows[2].omega *= 1.0 + 1e-6;
    let bad_path = pipeline.out.root.join("bad_measurement.csv");
    let mut buf = Vec::new();
    measurement.write_csv(&mut buf).unwrap();
    std::fs::write(&bad_path, buf).unwrap();

    match pipeline.identify(&pipeline.out.surfaces_dir(), &bad_path) {
        Err(PipelineError::Alignment(msg)) => {
            assert!(msg.contains("index 2"), "message: {msg}")
        }
        other => panic!("expected alignment error, got {other:?}"),
    }

    // Dropping a row trips the count check.
    measurement.rows.pop();
    let mut buf = Vec::new();
    measurement.write_csv(&mut buf).unwrap();
    std::fs::write(&bad_path, buf).unwrap();
    assert!(matches!(
        pipeline.identify(&pipeline.out.surfaces_dir(), &bad_path),
        Err(PipelineError::Alignment(_))
    ));
}

#[test]
fn single_run_full_subset_tally_is_the_weighted_archive() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(&dir.path().join("out"), 5);
    config.ensemble.runs = 1;
    config.ensemble.objectives_per_run = 6; // N = l
    let pipeline = Pipeline::new(config, dir.path());
    pipeline.simulate(true).unwrap();
    pipeline.calibrate(&pipeline.out.training()).unwrap();
    pipeline
        .identify(&pipeline.out.surfaces_dir(), &pipeline.out.measurement())
        .unwrap();

    let archive_text = std::fs::read_to_string(pipeline.out.archive(0)).unwrap();
    let members: Vec<(usize, f64)> = archive_text
        .lines()
        .skip(1)
        .map(|line| {
            let mut fields = line.split(',');
            let seg: usize = fields.next().unwrap().parse().unwrap();
            let sev: f64 = fields.next().unwrap().parse().unwrap();
            (seg, sev)
        })
        .collect();
    let tally = faultid::pipeline::read_tally_csv(&pipeline.out.tally("solution")).unwrap();
    let weight = 1.0 / members.len() as f64;
    let total: f64 = tally.iter().map(|r| r.score).sum();
    assert!((total - 1.0).abs() < 1e-9);
    // Every archived solution appears with weight 1/|A| (keys may merge).
    for (seg, sev) in &members {
        let key = SolutionKey::new(*seg, *sev);
        let row = tally
            .iter()
            .find(|r| r.segment == key.segment() && r.severity_or_range == key.severity_string())
            .unwrap_or_else(|| panic!("missing tally row for ({seg}, {sev})"));
        assert!(row.score >= weight - 1e-12);
    }
}

#[test]
fn report_renders_panels_and_omits_missing_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let pipeline = Pipeline::new(small_config(&dir.path().join("out"), 11), dir.path());
    run_all(&pipeline);
    let report = std::fs::read_to_string(pipeline.out.report()).unwrap();
    for panel in [
        "## I: Voting score per fault scenario",
        "## II: Voting score per severity range",
        "## III: Partial voting score per fault scenario",
        "## IV: Partial voting score per severity range",
        "## Baseline: Occurrence counts (majority voting)",
    ] {
        assert!(report.contains(panel), "missing panel {panel}");
    }
    // Percentages within each panel sum to at most 100%.
    for name in ["solution", "range", "partial_solution", "partial_range"] {
        let rows = faultid::pipeline::read_tally_csv(&pipeline.out.tally(name)).unwrap();
        let sum: f64 = rows.iter().map(|r| r.percentage).sum();
        assert!(sum <= 100.0 + 1e-6, "tally {name} sums to {sum}%");
    }

    // Remove the baseline: the panel is omitted with a notice.
    std::fs::remove_file(pipeline.out.tally("baseline")).unwrap();
    let root = pipeline.out.root.clone();
    let summary = pipeline.report(&root).unwrap();
    assert_eq!(summary.omitted, vec!["baseline".to_string()]);
    let report = std::fs::read_to_string(pipeline.out.report()).unwrap();
    assert!(report.contains("No baseline tally present"));

    // Plot-ready grids exist.
    let layout = OutputLayout::new(&root);
    assert!(layout.plot_grid("solution").exists());
    assert!(layout.plot_grid("range").exists());
}

#[test]
fn validation_mode_reports_truth_ranks() {
    let dir = tempfile::tempdir().unwrap();
    let pipeline = Pipeline::new(small_config(&dir.path().join("out"), 13), dir.path());
    pipeline.simulate(true).unwrap();
    pipeline.calibrate(&pipeline.out.training()).unwrap();
    let summary = pipeline
        .identify(&pipeline.out.surfaces_dir(), &pipeline.out.measurement())
        .unwrap();
    let validation = summary.validation.expect("truth configured");
    assert_eq!(validation.truth.segment, 4);
    assert!(pipeline.out.validation().exists());
    // Ranks are 1-based when present.
    for rank in [
        validation.solution_rank,
        validation.range_rank,
        validation.partial_solution_rank,
        validation.partial_range_rank,
        validation.baseline_rank,
    ]
    .into_iter()
    .flatten()
    {
        assert!(rank >= 1);
    }
}

#[test]
fn cli_runs_the_full_workflow_with_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    let config = small_config(Path::new("cli_out"), 21);
    std::fs::write(&config_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    let exe = env!("CARGO_BIN_EXE_faultid");

    let run = |args: &[&str]| {
        Command::new(exe)
            .args(args)
            .current_dir(dir.path())
            .output()
            .unwrap()
    };
    let config_arg = config_path.to_str().unwrap();
    for args in [
        vec!["simulate", "--config", config_arg, "--threads", "2"],
        vec!["calibrate", "--config", config_arg],
        vec!["identify", "--config", config_arg],
        vec!["report", "--config", config_arg, "--top", "3"],
    ] {
        let output = run(&args);
        assert!(
            output.status.success(),
            "{args:?} failed: {}",
            String::from_utf8_lossy(&output.stderr)
        );
    }
    let report = std::fs::read_to_string(dir.path().join("cli_out/report.md")).unwrap();
    assert!(report.contains("## I:"));

    // Seed override changes outputs; exit code is nonzero on bad config.
    let output = run(&[
        "simulate", "--config", config_arg, "--seed", "22", "--out", "cli_out2",
    ]);
    assert!(output.status.success());
    let a = std::fs::read(dir.path().join("cli_out/training.csv")).unwrap();
    let b = std::fs::read(dir.path().join("cli_out2/training.csv")).unwrap();
    assert_ne!(a, b);

    let missing = run(&["identify", "--config", "nope.json"]);
    assert!(!missing.status.success());
    let stderr = String::from_utf8_lossy(&missing.stderr);
    assert!(stderr.contains("error[identify]"), "stderr: {stderr}");
}

#[test]
fn outputs_are_invariant_to_the_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    std::fs::write(
        &config_path,
        serde_json::to_string_pretty(&small_config(Path::new("o"), 31)).unwrap(),
    )
    .unwrap();
    let exe = env!("CARGO_BIN_EXE_faultid");
    let config_arg = config_path.to_str().unwrap();

    for threads in ["1", "2"] {
        for stage in ["simulate", "calibrate", "identify"] {
            let output = Command::new(exe)
                .args([
                    stage,
                    "--config",
                    config_arg,
                    "--threads",
                    threads,
                    "--out",
                    &format!("o{threads}"),
                ])
                .current_dir(dir.path())
                .output()
                .unwrap();
            assert!(
                output.status.success(),
                "{stage} with {threads} threads: {}",
                String::from_utf8_lossy(&output.stderr)
            );
        }
    }
    for name in [
        "training.csv",
        "surfaces/surface_003.json",
        "tally_solution.csv",
        "tally_partial_range.csv",
        "identify_meta.json",
    ] {
        let one = std::fs::read(dir.path().join("o1").join(name)).unwrap();
        let two = std::fs::read(dir.path().join("o2").join(name)).unwrap();
        assert_eq!(one, two, "{name} depends on the worker thread count");
    }
}
