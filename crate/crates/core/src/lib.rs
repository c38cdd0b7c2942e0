//! Online learning of forward models inside a reflex loop.
//!
//! A fixed reflex controller reacts to a closed-loop error after a
//! disturbance has already hit. A layered network fed with filtered
//! predictive cues learns, online and from that same error, to act before
//! the disturbance arrives. The crate contains:
//!
//! - [`loop_algebra`]: z-domain transfer functions and the linear reflex loop
//! - [`filterbank`]: second-order low-pass taps that delay the predictors
//! - [`network`]: the learning unit with z-domain backpropagation
//! - [`plant`]: a differential-drive line follower
//! - [`harness`]: presets, trials, sweeps, metrics and file output

pub mod error;
pub mod filterbank;
pub mod harness;
pub mod loop_algebra;
pub mod network;
pub mod plant;

pub use error::{Error, Result};
