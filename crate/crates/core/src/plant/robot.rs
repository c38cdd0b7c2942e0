use serde::{Deserialize, Serialize};

use super::track::{Point, Track};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    /// World position of a point given in the robot frame (forward, left).
    #[inline]
    pub fn to_world(&self, forward: f64, left: f64) -> Point {
        let (s, c) = self.heading.sin_cos();
        [
            self.x + forward * c - left * s,
            self.y + forward * s + left * c,
        ]
    }
}

/// One row of forward-looking sensors. `offsets` are the lateral distances
/// of the left-hand sensors, outermost first; each has a mirrored partner on
/// the right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorRow {
    pub lookahead: f64,
    pub offsets: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorGeometry {
    /// Distance of the ground-sensor pair ahead of the wheel axle.
    pub ground_forward: f64,
    /// Lateral offset of each ground sensor from the heading axis.
    pub ground_lateral: f64,
    pub rows: Vec<SensorRow>,
}

impl SensorGeometry {
    pub fn n_predictors(&self) -> usize {
        self.rows.iter().map(|r| r.offsets.len()).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ground_lateral > 0.0) {
            return Err(Error::Config(
                "ground sensors need a positive lateral offset".into(),
            ));
        }
        for row in &self.rows {
            if row.offsets.iter().any(|&o| !(o > 0.0) || !o.is_finite())
                || !row.lookahead.is_finite()
            {
                return Err(Error::Config(
                    "predictor offsets must be positive distances to the left".into(),
                ));
            }
        }
        if self.n_predictors() == 0 {
            return Err(Error::Config(
                "at least one predictor pair is required".into(),
            ));
        }
        Ok(())
    }
}

/// `n` offsets evenly spaced over `[inner, outer]`, outermost first.
pub fn spread(n: usize, inner: f64, outer: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if n == 1 {
                outer
            } else {
                outer - (outer - inner) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Wheel-speed law: `V_R = V0 + alpha E + beta A`, `V_L = V0 - alpha E - beta A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SteeringConfig {
    pub v0: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for SteeringConfig {
    fn default() -> Self {
        Self {
            v0: 40.0,
            alpha: 200.0,
            beta: 100.0,
        }
    }
}

/// Returns `(v_left, v_right)`.
#[inline]
pub fn steering(cfg: &SteeringConfig, e_c: f64, a_p: f64) -> (f64, f64) {
    let turn = cfg.alpha * e_c + cfg.beta * a_p;
    (cfg.v0 - turn, cfg.v0 + turn)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReading {
    pub e_c: f64,
    pub on_track: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotState {
    pub pose: Pose,
    pub v_left: f64,
    pub v_right: f64,
    pub wheelbase: f64,
    pub sensors: SensorGeometry,
}

impl RobotState {
    pub fn new(pose: Pose, wheelbase: f64, sensors: SensorGeometry) -> Result<Self> {
        if !(wheelbase > 0.0) {
            return Err(Error::Config(format!(
                "wheelbase must be positive, got {wheelbase}"
            )));
        }
        sensors.validate()?;
        Ok(Self {
            pose,
            v_left: 0.0,
            v_right: 0.0,
            wheelbase,
            sensors,
        })
    }

    pub fn set_speeds(&mut self, v_left: f64, v_right: f64) {
        self.v_left = v_left;
        self.v_right = v_right;
    }

    /// One explicit-Euler step of the differential-drive kinematics.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
        }
        let v = 0.5 * (self.v_left + self.v_right);
        let omega = (self.v_right - self.v_left) / self.wheelbase;
        let (s, c) = self.pose.heading.sin_cos();
        self.pose.x += v * c * dt;
        self.pose.y += v * s * dt;
        self.pose.heading += omega * dt;
        Ok(())
    }

    pub fn stepped(&self, dt: f64) -> Result<RobotState> {
        let mut next = self.clone();
        next.step(dt)?;
        Ok(next)
    }

    /// `E_c = G_L - G_R`. Positive when the line lies to the robot's left.
    pub fn read_error(&self, track: &Track) -> ErrorReading {
        let g = &self.sensors;
        let left = track.line_intensity(self.pose.to_world(g.ground_forward, g.ground_lateral));
        let right = track.line_intensity(self.pose.to_world(g.ground_forward, -g.ground_lateral));
        ErrorReading {
            e_c: left - right,
            on_track: left > 0.0 || right > 0.0,
        }
    }

    /// `P = I_j - I_j*` for every mirrored pair, row by row, outermost pair
    /// first within a row.
    pub fn read_predictors_into(&self, track: &Track, out: &mut [f64]) -> Result<()> {
        let n = self.sensors.n_predictors();
        if out.len() != n {
            return Err(Error::shape("predictor vector", n, out.len()));
        }
        let mut idx = 0;
        for row in &self.sensors.rows {
            for &o in &row.offsets {
                let left = track.line_intensity(self.pose.to_world(row.lookahead, o));
                let right = track.line_intensity(self.pose.to_world(row.lookahead, -o));
                out[idx] = left - right;
                idx += 1;
            }
        }
        Ok(())
    }

    pub fn read_predictors(&self, track: &Track) -> Vec<f64> {
        let mut out = vec![0.0; self.sensors.n_predictors()];
        self.read_predictors_into(track, &mut out)
            .expect("buffer sized from geometry");
        out
    }
}
