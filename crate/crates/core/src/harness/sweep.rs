//! Grids of independent trials.
//!
//! Cells run in parallel when the `parallel` feature is enabled and are
//! merged in `(eta, seed)` order, so the summary never depends on
//! completion order.

use std::cmp::Ordering;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::TrialConfig;
use super::metrics::{self, Quartiles};
use super::trial::{self, TrialLog, TrialStatus};
use crate::error::{Error, Result};
use crate::plant::Track;

pub const DEFAULT_ETAS: [f64; 5] = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1];

/// Contents of `grid.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    /// Template for every cell; `eta`, `seed` and `reflex_only` are
    /// overwritten per cell.
    pub base: TrialConfig,
    pub etas: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            base: TrialConfig::default(),
            etas: DEFAULT_ETAS.to_vec(),
            seeds: (0..10).collect(),
        }
    }
}

impl SweepGrid {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let grid: Self = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("sweep needs at least one seed".into()));
        }
        if let Some(eta) = self.etas.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
            return Err(Error::Config(format!(
                "sweep learning rates must be positive, got {eta}"
            )));
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return Err(Error::Config("duplicate seeds in sweep grid".into()));
        }
        let mut etas = self.etas.clone();
        etas.sort_by(f64::total_cmp);
        etas.dedup();
        if etas.len() != self.etas.len() {
            return Err(Error::Config(
                "duplicate learning rates in sweep grid".into(),
            ));
        }
        self.base.validate()
    }

    /// Every cell of the grid: the reflex-only cells (one per seed) first,
    /// then each learning rate.
    pub fn cells(&self) -> Vec<TrialConfig> {
        let reflex = self.seeds.iter().map(|&seed| TrialConfig {
            seed,
            ..trial::reflex_config(&self.base)
        });
        let learning = self.etas.iter().flat_map(|&eta| {
            self.seeds.iter().map(move |&seed| TrialConfig {
                eta,
                seed,
                reflex_only: false,
                ..self.base.clone()
            })
        });
        reflex.chain(learning).collect()
    }
}

/// How cells are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[derive(Default)]
pub enum Execution {
    Sequential,
    /// Falls back to sequential without the `parallel` feature.
    #[default]
    Parallel,
}


/// Outcome of one `(eta, seed)` cell. `eta` is 0 for reflex-only cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub eta: f64,
    pub seed: u64,
    pub reflex_only: bool,
    pub rms: f64,
    pub mean_abs: f64,
    pub steps_run: usize,
    pub success_step: Option<usize>,
    pub status: TrialStatus,
}

impl CellResult {
    fn from_log(log: &TrialLog) -> Self {
        Self {
            eta: log.config.eta,
            seed: log.config.seed,
            reflex_only: log.config.reflex_only,
            rms: log.rms_error,
            mean_abs: log.mean_abs_error,
            steps_run: log.steps.len(),
            success_step: log.success_step,
            status: log.status.clone(),
        }
    }

    fn key_cmp(&self, other: &Self) -> Ordering {
        other
            .reflex_only
            .cmp(&self.reflex_only)
            .then(self.eta.total_cmp(&other.eta))
            .then(self.seed.cmp(&other.seed))
    }
}

/// Median and quartiles of one group of cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    /// 0 for the reflex group.
    pub eta: f64,
    pub reflex_only: bool,
    pub n_cells: usize,
    pub n_aborted: usize,
    pub rms: Quartiles,
    /// Quartiles over the cells that reached success; `None` if none did.
    pub success_step: Option<Quartiles>,
    pub n_success: usize,
    /// Median success step with misses ranked above every hit. `None` when
    /// at least half the cells missed.
    pub success_step_median: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    /// Mean |e_c| over the reflex-only cells; the success reference.
    pub reflex_baseline: f64,
    pub reflex: GroupSummary,
    pub groups: Vec<GroupSummary>,
    pub cells: Vec<CellResult>,
}

impl SweepSummary {
    pub fn group(&self, eta: f64) -> Option<&GroupSummary> {
        self.groups.iter().find(|g| g.eta == eta)
    }

    pub fn cell(&self, eta: f64, seed: u64) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| !c.reflex_only && c.eta == eta && c.seed == seed)
    }
}

fn run_cells(cells: &[TrialConfig], track: &Arc<Track>, exec: Execution) -> Result<Vec<TrialLog>> {
    let one = |cfg: &TrialConfig| trial::run_on_track(cfg, Arc::clone(track));
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            cells.par_iter().map(one).collect()
        }
        _ => cells.iter().map(one).collect(),
    }
}

/// Median of `values` where `None` ranks above every `Some`.
fn censored_median(values: &[Option<usize>]) -> Option<f64> {
    let mut ranked: Vec<f64> = values
        .iter()
        .map(|v| v.map_or(f64::INFINITY, |s| s as f64))
        .collect();
    ranked.sort_by(f64::total_cmp);
    let m = metrics::quantile(&ranked, 0.5);
    m.is_finite().then_some(m)
}

fn summarize(eta: f64, reflex_only: bool, cells: &[&CellResult]) -> GroupSummary {
    let rms: Vec<f64> = cells.iter().map(|c| c.rms).collect();
    let hits: Vec<f64> = cells
        .iter()
        .filter_map(|c| c.success_step.map(|s| s as f64))
        .collect();
    let steps: Vec<Option<usize>> = cells.iter().map(|c| c.success_step).collect();
    GroupSummary {
        eta,
        reflex_only,
        n_cells: cells.len(),
        n_aborted: cells.iter().filter(|c| !c.status.is_completed()).count(),
        rms: metrics::quartiles(&rms).unwrap_or(Quartiles {
            q1: f64::NAN,
            median: f64::NAN,
            q3: f64::NAN,
        }),
        success_step: metrics::quartiles(&hits),
        n_success: hits.len(),
        success_step_median: censored_median(&steps),
    }
}

/// Runs every cell of `grid`. Aborted trials are kept with their status.
pub fn run_grid(grid: &SweepGrid, exec: Execution) -> Result<SweepSummary> {
    grid.validate()?;
    let track = trial::load_track(&grid.base)?;
    let configs = grid.cells();
    let mut logs = run_cells(&configs, &track, exec)?;

    let reflex_means: Vec<f64> = logs
        .iter()
        .filter(|l| l.config.reflex_only)
        .map(|l| l.mean_abs_error)
        .collect();
    let baseline = reflex_means.iter().sum::<f64>() / reflex_means.len() as f64;
    for log in &mut logs {
        log.set_baseline(baseline);
    }

    let mut cells: Vec<CellResult> = logs.iter().map(CellResult::from_log).collect();
    cells.sort_by(CellResult::key_cmp);

    let reflex_cells: Vec<&CellResult> = cells.iter().filter(|c| c.reflex_only).collect();
    let reflex = summarize(0.0, true, &reflex_cells);
    let mut etas = grid.etas.clone();
    etas.sort_by(f64::total_cmp);
    let groups = etas
        .iter()
        .map(|&eta| {
            let group: Vec<&CellResult> = cells
                .iter()
                .filter(|c| !c.reflex_only && c.eta == eta)
                .collect();
            summarize(eta, false, &group)
        })
        .collect();
    Ok(SweepSummary {
        reflex_baseline: baseline,
        reflex,
        groups,
        cells,
    })
}

/// Learning-rate sweep over `etas x seeds` on top of `base`.
pub fn sweep_eta(base: &TrialConfig, etas: &[f64], seeds: &[u64]) -> Result<SweepSummary> {
    run_grid(
        &SweepGrid {
            base: base.clone(),
            etas: etas.to_vec(),
            seeds: seeds.to_vec(),
        },
        Execution::default(),
    )
}

/// Seed sweep at the learning rate of `base`.
pub fn sweep_seed(base: &TrialConfig, seeds: &[u64]) -> Result<SweepSummary> {
    sweep_eta(base, &[base.eta], seeds)
}
