use std::fs;

use idl_core::harness::emit::{
    self, SUMMARY_JSON, TRIAL_CSV, WEIGHTS_JSON, WEIGHT_DISTANCE_CSV, WEIGHT_MAP_PGM,
};
use idl_core::harness::metrics::{self, success_step};
use idl_core::harness::{self, run_grid, Execution, SweepGrid, TrialConfig, TrialStatus};
use proptest::prelude::*;

fn learning(eta: f64, seed: u64) -> TrialConfig {
    TrialConfig {
        eta,
        seed,
        ..TrialConfig::default()
    }
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

/// First 1-based step whose trailing 100-sample mean |e| is at most a
/// quarter of the baseline, found by summing every window from scratch.
fn brute_success(series: &[f64], baseline: f64) -> Option<usize> {
    (100..=series.len()).find(|&end| {
        let mean = series[end - 100..end].iter().map(|e| e.abs()).sum::<f64>() / 100.0;
        mean <= 0.25 * baseline
    })
}

#[test]
fn emitted_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let log = harness::run_with_reflex_baseline(&learning(1e-2, 0)).unwrap();
    let written = harness::emit(&log, dir.path()).unwrap();
    assert_eq!(written.len(), 5);

    let text = fs::read_to_string(dir.path().join(TRIAL_CSV)).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "k,e_c,a_p,v_left,v_right,x,y,heading,on_track"
    );
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 1000);
    let e: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let rms = (e.iter().map(|v| v * v).sum::<f64>() / e.len() as f64).sqrt();

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join(SUMMARY_JSON)).unwrap()).unwrap();
    assert!((summary["rms"].as_f64().unwrap() - rms).abs() < 1e-9);
    assert_eq!(summary["status"]["kind"], "completed");
    assert_eq!(summary["config"]["eta"].as_f64(), Some(1e-2));
    assert_eq!(
        summary["success_step"].as_u64().map(|s| s as usize),
        brute_success(&e, log.reflex_baseline.unwrap())
    );

    let pgm = fs::read(dir.path().join(WEIGHT_MAP_PGM)).unwrap();
    let header = b"P5\n12 40\n255\n";
    assert_eq!(&pgm[..header.len()], header);
    assert_eq!(pgm.len(), header.len() + 12 * 40);
    assert!(pgm[header.len()..].contains(&255));

    let wd = csv_rows(&fs::read_to_string(dir.path().join(WEIGHT_DISTANCE_CSV)).unwrap());
    assert_eq!(wd.len(), 1000);
    for l in 1..wd[0].len() {
        let col: Vec<f64> = wd.iter().map(|r| r[l]).collect();
        assert!(col.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!(col.contains(&1.0));
    }

    let weights: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join(WEIGHTS_JSON)).unwrap()).unwrap();
    assert_eq!(weights["0"].as_array().unwrap().len(), 40);
    assert_eq!(weights["2"][0].as_array().unwrap().len(), 1);
}

#[test]
fn reflex_only_emits_no_weight_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = TrialConfig {
        reflex_only: true,
        n_steps: 200,
        ..TrialConfig::default()
    };
    let log = harness::run_with_reflex_baseline(&cfg).unwrap();
    assert_eq!(log.success_step, None);
    harness::emit(&log, dir.path()).unwrap();
    assert!(dir.path().join(TRIAL_CSV).exists());
    assert!(!dir.path().join(WEIGHT_MAP_PGM).exists());
}

#[test]
fn repeated_trials_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let log = harness::run_with_reflex_baseline(&learning(1e-2, 3)).unwrap();
        harness::emit(&log, dir.path()).unwrap();
    }
    for f in [
        TRIAL_CSV,
        WEIGHT_MAP_PGM,
        WEIGHT_DISTANCE_CSV,
        SUMMARY_JSON,
        WEIGHTS_JSON,
    ] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn zero_steps_rejected() {
    let cfg = TrialConfig {
        n_steps: 0,
        ..TrialConfig::default()
    };
    assert!(cfg.validate().is_err());
    assert!(harness::run(&cfg).is_err());
    let mut log = harness::run(&TrialConfig {
        n_steps: 5,
        ..TrialConfig::default()
    })
    .unwrap();
    log.steps.clear();
    let dir = tempfile::tempdir().unwrap();
    assert!(emit::emit(&log, dir.path()).is_err());
}

#[test]
fn invalid_configs_rejected() {
    for bad in [-1.0, f64::NAN, f64::INFINITY] {
        assert!(learning(bad, 0).validate().is_err());
    }
    let cfg = TrialConfig {
        error_gain_sign: 0.5,
        ..TrialConfig::default()
    };
    assert!(cfg.validate().is_err());
    assert!(serde_json::from_str::<TrialConfig>(r#"{"etaa": 1.0}"#).is_err());
}

#[test]
fn learning_beats_reflex_late_in_the_trial() {
    let reflex = harness::run(&TrialConfig {
        reflex_only: true,
        ..TrialConfig::default()
    })
    .unwrap();
    let log = harness::run(&learning(1e-2, 0)).unwrap();
    assert_eq!(log.status, TrialStatus::Completed);
    let e = log.errors();
    let tail = metrics::mean_abs(&e[e.len() * 4 / 5..]).unwrap();
    assert!(
        tail <= 0.25 * reflex.mean_abs_error,
        "{tail} vs {}",
        reflex.mean_abs_error
    );
}

#[test]
fn sweep_covers_every_cell_once() {
    let grid = SweepGrid {
        base: TrialConfig {
            n_steps: 300,
            ..TrialConfig::default()
        },
        etas: vec![1e-3, 1e-2, 1e-1],
        seeds: vec![0, 1, 2],
    };
    let summary = run_grid(&grid, Execution::Parallel).unwrap();
    assert_eq!(summary.cells.len(), 3 * 4);
    assert_eq!(summary.reflex.n_cells, 3);
    for &eta in &grid.etas {
        assert_eq!(summary.group(eta).unwrap().n_cells, 3);
        for &seed in &grid.seeds {
            let cell = summary.cell(eta, seed).unwrap();
            assert_eq!(cell.steps_run, 300);
        }
    }
    let sequential = run_grid(&grid, Execution::Sequential).unwrap();
    assert_eq!(summary, sequential);

    let dir = tempfile::tempdir().unwrap();
    emit::emit_sweep(&summary, dir.path()).unwrap();
    let cells = fs::read_to_string(dir.path().join(emit::SWEEP_CELLS_CSV)).unwrap();
    assert_eq!(cells.lines().count(), 1 + 12);
}

#[test]
fn reflex_only_grid_has_no_successes() {
    let grid = SweepGrid {
        base: TrialConfig {
            n_steps: 400,
            ..TrialConfig::default()
        },
        etas: vec![],
        seeds: vec![0, 1, 2, 3],
    };
    let summary = run_grid(&grid, Execution::default()).unwrap();
    assert_eq!(summary.cells.len(), 4);
    assert!(summary
        .cells
        .iter()
        .all(|c| c.reflex_only && c.success_step.is_none()));
    assert_eq!(summary.reflex.n_success, 0);
    assert_eq!(summary.reflex.success_step_median, None);
}

#[test]
fn invalid_grids_rejected() {
    let dup = SweepGrid {
        seeds: vec![1, 1],
        ..SweepGrid::default()
    };
    assert!(dup.validate().is_err());
    let neg = SweepGrid {
        etas: vec![1e-2, 0.0],
        ..SweepGrid::default()
    };
    assert!(neg.validate().is_err());
    assert!(run_grid(&neg, Execution::Sequential).is_err());
}

#[test]
fn success_step_edge_cases() {
    assert_eq!(success_step(&[0.0; 100], 1.0), Some(100));
    assert_eq!(success_step(&[0.0; 99], 1.0), None);
    assert_eq!(success_step(&[1.0; 500], 1.0), None);
    let mut s = vec![1.0; 150];
    s.extend(vec![0.0; 200]);
    // window ending at step k holds (250 - k) ones once k >= 150
    assert_eq!(success_step(&s, 1.0), Some(225));
}

proptest! {
    #[test]
    fn success_step_matches_brute_force(
        series in prop::collection::vec(-1.0f64..1.0, 0..400),
        baseline in 0.01f64..2.0,
    ) {
        prop_assert_eq!(success_step(&series, baseline), brute_success(&series, baseline));
    }

    #[test]
    fn rms_and_mean_abs_match_definitions(series in prop::collection::vec(-5.0f64..5.0, 1..200)) {
        let n = series.len() as f64;
        let rms = (series.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
        let mean = series.iter().map(|e| e.abs()).sum::<f64>() / n;
        prop_assert!((metrics::rms(&series).unwrap() - rms).abs() < 1e-12);
        prop_assert!((metrics::mean_abs(&series).unwrap() - mean).abs() < 1e-12);
        prop_assert!(metrics::rms(&series).unwrap() + 1e-12 >= metrics::mean_abs(&series).unwrap());
    }

    #[test]
    fn normalized_series_peaks_at_one(series in prop::collection::vec(0.0f64..10.0, 1..100)) {
        let out = metrics::normalize_by_max(&series);
        prop_assert!(out.iter().all(|&v| (0.0..=1.0).contains(&v)));
        if series.iter().any(|&v| v > 0.0) {
            prop_assert!(out.contains(&1.0));
        }
    }
}
