//! Trial artifacts: CSV logs, a PGM weight map and JSON summaries.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::TrialConfig;
use super::metrics;
use super::sweep::SweepSummary;
use super::trial::{TrialLog, TrialStatus};
use crate::error::{Error, Result};
use crate::network::Matrix;

pub const TRIAL_CSV: &str = "trial.csv";
pub const WEIGHT_MAP_PGM: &str = "weights_layer0.pgm";
pub const WEIGHT_DISTANCE_CSV: &str = "weight_distance.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const WEIGHTS_JSON: &str = "weights.json";
pub const SWEEP_JSON: &str = "sweep_summary.json";
pub const SWEEP_CELLS_CSV: &str = "cells.csv";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialSummary<'a> {
    pub rms: f64,
    pub mean_abs: f64,
    pub success_step: Option<usize>,
    pub reflex_baseline: Option<f64>,
    pub steps_run: usize,
    pub status: &'a TrialStatus,
    pub config: &'a TrialConfig,
}

impl<'a> TrialSummary<'a> {
    pub fn of(log: &'a TrialLog) -> Self {
        Self {
            rms: log.rms_error,
            mean_abs: log.mean_abs_error,
            success_step: log.success_step,
            reflex_baseline: log.reflex_baseline,
            steps_run: log.steps.len(),
            status: &log.status,
            config: &log.config,
        }
    }
}

struct Sink {
    path: PathBuf,
    out: BufWriter<File>,
}

impl Sink {
    fn create(path: PathBuf) -> Result<Self> {
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Self {
            out: BufWriter::new(file),
            path,
        })
    }

    fn write(&mut self, bytes: &[u8]) -> Result<()> {
        self.out
            .write_all(bytes)
            .map_err(|e| Error::io(&self.path, e))
    }

    fn line(&mut self, text: &str) -> Result<()> {
        self.write(text.as_bytes())?;
        self.write(b"\n")
    }

    fn finish(mut self) -> Result<PathBuf> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(self.path)
    }
}

fn write_json(path: PathBuf, value: &impl Serialize) -> Result<PathBuf> {
    let text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.clone(),
        source,
    })?;
    let mut sink = Sink::create(path)?;
    sink.line(&text)?;
    sink.finish()
}

/// Writes `trial.csv` with one row per executed step.
pub fn write_trial_csv(log: &TrialLog, path: PathBuf) -> Result<PathBuf> {
    let mut sink = Sink::create(path)?;
    sink.line("k,e_c,a_p,v_left,v_right,x,y,heading,on_track")?;
    for s in &log.steps {
        sink.line(&format!(
            "{},{},{},{},{},{},{},{},{}",
            s.k,
            s.e_c,
            s.a_p,
            s.v_left,
            s.v_right,
            s.pose.x,
            s.pose.y,
            s.pose.heading,
            u8::from(s.on_track)
        ))?;
    }
    sink.finish()
}

/// Binary greymap of a matrix already scaled to `[0, 1]`: one row per
/// network input, one column per first-layer neuron.
pub fn write_pgm(map: &Matrix, path: PathBuf) -> Result<PathBuf> {
    let mut sink = Sink::create(path)?;
    sink.write(format!("P5\n{} {}\n255\n", map.cols(), map.rows()).as_bytes())?;
    let pixels: Vec<u8> = map
        .as_slice()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    sink.write(&pixels)?;
    sink.finish()
}

/// Writes `weight_distance.csv`, each layer divided by its own maximum.
pub fn write_weight_distance_csv(log: &TrialLog, path: PathBuf) -> Result<PathBuf> {
    let layers = log.weight_distances.first().map_or(0, Vec::len);
    let normalized: Vec<Vec<f64>> = (0..layers)
        .map(|l| {
            let series: Vec<f64> = log.weight_distances.iter().map(|d| d[l]).collect();
            metrics::normalize_by_max(&series)
        })
        .collect();
    let mut sink = Sink::create(path)?;
    let header: Vec<String> = (0..layers).map(|l| format!("d_{l}")).collect();
    sink.line(&format!("k,{}", header.join(",")))?;
    for (row, step) in log.steps.iter().enumerate() {
        let cols: Vec<String> = normalized.iter().map(|s| s[row].to_string()).collect();
        sink.line(&format!("{},{}", step.k, cols.join(",")))?;
    }
    sink.finish()
}

/// Writes every artifact of one trial into `dir` (created if missing).
/// Weight files are skipped for reflex-only trials. Returns the paths
/// written.
pub fn emit(log: &TrialLog, dir: &Path) -> Result<Vec<PathBuf>> {
    if log.steps.is_empty() {
        return Err(Error::Config(
            "refusing to emit a trial with no steps".into(),
        ));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = vec![write_trial_csv(log, dir.join(TRIAL_CSV))?];
    if let Some(map) = &log.final_weight_map {
        written.push(write_pgm(map, dir.join(WEIGHT_MAP_PGM))?);
    }
    if !log.weight_distances.is_empty() {
        written.push(write_weight_distance_csv(
            log,
            dir.join(WEIGHT_DISTANCE_CSV),
        )?);
    }
    if let Some(net) = &log.final_weights {
        written.push(write_json(dir.join(WEIGHTS_JSON), &net.snapshot())?);
    }
    written.push(write_json(dir.join(SUMMARY_JSON), &TrialSummary::of(log))?);
    Ok(written)
}

/// Writes `sweep_summary.json` and a flat `cells.csv`.
pub fn emit_sweep(summary: &SweepSummary, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json = write_json(dir.join(SWEEP_JSON), summary)?;
    let mut sink = Sink::create(dir.join(SWEEP_CELLS_CSV))?;
    sink.line("eta,seed,reflex_only,rms,mean_abs,steps_run,success_step,status")?;
    for c in &summary.cells {
        let status = match &c.status {
            TrialStatus::Completed => "completed",
            TrialStatus::LostLine { .. } => "lost_line",
            TrialStatus::NumericAbort { .. } => "numeric_abort",
        };
        sink.line(&format!(
            "{},{},{},{},{},{},{},{}",
            c.eta,
            c.seed,
            u8::from(c.reflex_only),
            c.rms,
            c.mean_abs,
            c.steps_run,
            c.success_step.map(|s| s.to_string()).unwrap_or_default(),
            status
        ))?;
    }
    Ok(vec![json, sink.finish()?])
}
