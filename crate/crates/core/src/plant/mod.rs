//! Line-follower world: track, differential-drive robot, ground sensors
//! producing the reflex error and the forward-looking predictor array.

pub mod robot;
pub mod track;
pub mod world;

pub use robot::{
    spread, steering, ErrorReading, Pose, RobotState, SensorGeometry, SensorRow, SteeringConfig,
};
pub use track::{rounded_rectangle, Point, Track, TrackSpec};
pub use world::{ClosedLoop, Learner, StepRecord, World, DEFAULT_OFF_TRACK_LIMIT};
