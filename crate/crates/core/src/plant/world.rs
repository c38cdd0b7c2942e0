use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::robot::{steering, ErrorReading, Pose, RobotState, SensorGeometry, SteeringConfig};
use super::track::Track;
use crate::error::{Error, Result};
use crate::filterbank::FilterBank;
use crate::loop_algebra::TransferFunction;
use crate::network::{LayeredNetwork, LearningSignal};

pub const DEFAULT_OFF_TRACK_LIMIT: usize = 200;

/// Track plus robot: everything the control loop acts on.
#[derive(Debug, Clone)]
pub struct World {
    pub track: Arc<Track>,
    pub robot: RobotState,
    pub steering: SteeringConfig,
    pub dt: f64,
}

impl World {
    /// Places the robot at the start of the track.
    pub fn new(
        track: Arc<Track>,
        wheelbase: f64,
        sensors: SensorGeometry,
        steering: SteeringConfig,
        dt: f64,
    ) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
        let (p, heading) = track.start_pose();
        let robot = RobotState::new(
            Pose {
                x: p[0],
                y: p[1],
                heading,
            },
            wheelbase,
            sensors,
        )?;
        Ok(Self {
            track,
            robot,
            steering,
            dt,
        })
    }

    pub fn read_error(&self) -> ErrorReading {
        self.robot.read_error(&self.track)
    }
}

/// Network plus its learning-path settings.
#[derive(Debug, Clone)]
pub struct Learner {
    pub net: LayeredNetwork,
    pub eta: f64,
    /// Reflex-loop transfer function applied to the error before it enters
    /// the internal errors.
    pub t_r: TransferFunction,
    pub error_gain_sign: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub k: usize,
    pub e_c: f64,
    pub a_p: f64,
    pub v_left: f64,
    pub v_right: f64,
    pub pose: Pose,
    pub on_track: bool,
}

/// One trial's control and learning loop.
///
/// Per step: read predictors, filter, forward pass, steer with the current
/// reflex error and the predictive action, move, then measure the error
/// again and learn from it.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    pub world: World,
    pub bank: FilterBank,
    /// `None` runs the reflex alone.
    pub learner: Option<Learner>,
    pub off_track_limit: usize,
    k: usize,
    off_track_run: usize,
    last: ErrorReading,
    predictors: Vec<f64>,
    inputs: Vec<f64>,
}

impl ClosedLoop {
    pub fn new(world: World, bank: FilterBank, learner: Option<Learner>) -> Result<Self> {
        let n_pred = world.robot.sensors.n_predictors();
        if bank.n_predictors() != n_pred {
            return Err(Error::shape(
                "filter bank predictors",
                n_pred,
                bank.n_predictors(),
            ));
        }
        if let Some(l) = &learner {
            if l.net.n_inputs() != bank.output_len() {
                return Err(Error::shape(
                    "network inputs",
                    bank.output_len(),
                    l.net.n_inputs(),
                ));
            }
            if !(l.eta >= 0.0) {
                return Err(Error::Config(format!(
                    "eta must be non-negative, got {}",
                    l.eta
                )));
            }
        }
        let last = world.read_error();
        let inputs = vec![0.0; bank.output_len()];
        Ok(Self {
            world,
            bank,
            learner,
            off_track_limit: DEFAULT_OFF_TRACK_LIMIT,
            k: 0,
            off_track_run: 0,
            last,
            predictors: vec![0.0; n_pred],
            inputs,
        })
    }

    pub fn steps_taken(&self) -> usize {
        self.k
    }

    pub fn last_error(&self) -> ErrorReading {
        self.last
    }

    pub fn run_step(&mut self) -> Result<StepRecord> {
        let track = Arc::clone(&self.world.track);
        self.world
            .robot
            .read_predictors_into(&track, &mut self.predictors)?;
        self.bank.step_into(&self.predictors, &mut self.inputs)?;
        let a_p = match &mut self.learner {
            Some(l) => l.net.forward(&self.inputs)?,
            None => 0.0,
        };
        let (v_left, v_right) = steering(&self.world.steering, self.last.e_c, a_p);
        self.world.robot.set_speeds(v_left, v_right);
        self.world.robot.step(self.world.dt)?;

        let reading = self.world.read_error();
        if let Some(l) = &mut self.learner {
            if l.eta > 0.0 {
                let sig = LearningSignal::through(reading.e_c, &mut l.t_r, l.error_gain_sign);
                l.net.learn(&sig, l.eta)?;
            }
        }

        let record = StepRecord {
            k: self.k,
            e_c: reading.e_c,
            a_p,
            v_left,
            v_right,
            pose: self.world.robot.pose,
            on_track: reading.on_track,
        };
        self.last = reading;
        self.k += 1;
        if reading.on_track {
            self.off_track_run = 0;
        } else {
            self.off_track_run += 1;
            if self.off_track_run > self.off_track_limit {
                return Err(Error::LostLine {
                    at: record.k,
                    steps: self.off_track_run,
                });
            }
        }
        Ok(record)
    }
}
