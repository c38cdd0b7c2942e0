use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::{PresetConfig, TrialConfig};
use super::metrics;
use crate::error::{Error, Result};
use crate::filterbank::FilterBank;
use crate::network::{LayeredNetwork, Matrix};
use crate::plant::{ClosedLoop, Learner, StepRecord, Track, World};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrialStatus {
    Completed,
    LostLine { at: usize },
    NumericAbort { at: usize, message: String },
}

impl TrialStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, TrialStatus::Completed)
    }

    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            TrialStatus::Completed => 0,
            TrialStatus::LostLine { .. } => 2,
            TrialStatus::NumericAbort { .. } => 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrialLog {
    pub config: TrialConfig,
    pub status: TrialStatus,
    pub steps: Vec<StepRecord>,
    /// Per step, the distance of each layer from its initial weights. Empty
    /// for reflex-only trials.
    pub weight_distances: Vec<Vec<f64>>,
    pub rms_error: f64,
    pub mean_abs_error: f64,
    pub reflex_baseline: Option<f64>,
    pub success_step: Option<usize>,
    pub final_weight_map: Option<Matrix>,
    pub final_weights: Option<LayeredNetwork>,
}

impl TrialLog {
    pub fn errors(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.e_c).collect()
    }

    /// Recomputes the success step against a reflex baseline.
    pub fn set_baseline(&mut self, baseline: f64) {
        self.reflex_baseline = Some(baseline);
        self.success_step = if self.config.reflex_only {
            None
        } else {
            metrics::success_step(&self.errors(), baseline)
        };
    }
}

/// Builds the closed loop for a config.
pub fn build(
    config: &TrialConfig,
    resolved: &PresetConfig,
    track: Arc<Track>,
) -> Result<ClosedLoop> {
    let plant = &resolved.plant;
    let world = World::new(
        track,
        plant.wheelbase,
        plant.sensors.clone(),
        plant.steering,
        plant.dt,
    )?;
    let bank = FilterBank::new(plant.sensors.n_predictors(), &resolved.filter)?;
    let learner = if config.reflex_only {
        None
    } else {
        Some(Learner {
            net: LayeredNetwork::new(bank.output_len(), &resolved.network, config.seed)?,
            eta: config.eta,
            t_r: config.transfer_function()?,
            error_gain_sign: config.error_gain_sign,
        })
    };
    let mut cl = ClosedLoop::new(world, bank, learner)?;
    cl.off_track_limit = plant.off_track_limit;
    Ok(cl)
}

/// Runs one trial. Aborts (lost line, numeric blow-up) end the trial early
/// and are reported in the status; configuration problems are errors.
pub fn run_on_track(config: &TrialConfig, track: Arc<Track>) -> Result<TrialLog> {
    config.validate()?;
    let resolved = config.resolve();
    let mut cl = build(config, &resolved, track)?;
    let mut steps = Vec::with_capacity(config.n_steps);
    let mut weight_distances = Vec::new();
    let mut status = TrialStatus::Completed;
    for _ in 0..config.n_steps {
        match cl.run_step() {
            Ok(rec) => {
                steps.push(rec);
                if let Some(l) = &cl.learner {
                    weight_distances.push(l.net.weight_distance());
                }
            }
            Err(Error::LostLine { at, .. }) => {
                status = TrialStatus::LostLine { at };
                break;
            }
            Err(e @ (Error::Numeric { .. } | Error::Signal { .. })) => {
                status = TrialStatus::NumericAbort {
                    at: cl.steps_taken(),
                    message: e.to_string(),
                };
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let errors: Vec<f64> = steps.iter().map(|s| s.e_c).collect();
    Ok(TrialLog {
        config: config.clone(),
        status,
        rms_error: metrics::rms(&errors).unwrap_or(0.0),
        mean_abs_error: metrics::mean_abs(&errors).unwrap_or(0.0),
        steps,
        weight_distances,
        reflex_baseline: None,
        success_step: None,
        final_weight_map: cl.learner.as_ref().map(|l| l.net.first_layer_map()),
        final_weights: cl.learner.map(|l| l.net),
    })
}

pub fn load_track(config: &TrialConfig) -> Result<Arc<Track>> {
    Ok(Arc::new(Track::new(config.resolve().plant.track)?))
}

pub fn run(config: &TrialConfig) -> Result<TrialLog> {
    run_on_track(config, load_track(config)?)
}

/// Reflex-only counterpart of `config` (same preset, plant and seed).
pub fn reflex_config(config: &TrialConfig) -> TrialConfig {
    TrialConfig {
        reflex_only: true,
        eta: 0.0,
        ..config.clone()
    }
}

/// Runs the trial together with its reflex-only counterpart and fills in
/// the success step relative to that baseline.
pub fn run_with_reflex_baseline(config: &TrialConfig) -> Result<TrialLog> {
    let track = load_track(config)?;
    let reflex = run_on_track(&reflex_config(config), Arc::clone(&track))?;
    let mut log = run_on_track(config, track)?;
    log.set_baseline(reflex.mean_abs_error);
    Ok(log)
}
