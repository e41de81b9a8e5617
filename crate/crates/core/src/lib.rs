//! Simulation of UAV-based RF signal-source search and localization.
//!
//! A UAV flies a parallel-track survey, takes one RSSI-derived range per
//! waypoint and repeatedly localizes the emitter by linear least squares over
//! an algorithmically chosen subset of waypoints.
//!
//! The numeric core ([`trajectory`], [`channel`], [`lls`], [`selection`],
//! [`metrics`]) is generic over [`Scalar`] (`f32` or `f64`); the experiment
//! [`harness`] runs in `f64`.

// `!(x > 0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod harness;
pub mod lls;
pub mod metrics;
pub mod scalar;
pub mod selection;
pub mod trajectory;

pub use channel::{ChannelParams, Measurement};
pub use error::{Error, Result};
pub use lls::{AnchorSet, Estimate, LinearSystem, ReferenceMode};
pub use metrics::{MetricParams, RunMetrics, StepOutcome};
pub use scalar::{Scalar, Vec3};
pub use selection::{Algorithm, Selector};
pub use trajectory::{Trajectory, Waypoint};

pub type Vec3f64 = Vec3<f64>;
pub type Vec3f32 = Vec3<f32>;
pub type Trajectory64 = Trajectory<f64>;
pub type Trajectory32 = Trajectory<f32>;
pub type ChannelParams64 = ChannelParams<f64>;
pub type ChannelParams32 = ChannelParams<f32>;
pub type Measurement64 = Measurement<f64>;
pub type Measurement32 = Measurement<f32>;
pub type Estimate64 = Estimate<f64>;
pub type Estimate32 = Estimate<f32>;
pub type RunMetrics64 = RunMetrics<f64>;
pub type RunMetrics32 = RunMetrics<f32>;
