//! Desk-scale reinforcement-learning lab for a simulated one-step precise
//! pick-and-place task.
//!
//! The environment hides a per-scene systematic perception bias; a small
//! categorical policy proposes discrete pose adjustments to cancel it.
//! Four training procedures are provided: plain policy-gradient, policy-
//! gradient with a replay buffer, role-model training (online steps plus
//! offline supervised passes over self-labeled data), and role-model
//! training from a pretrained initialization. The [`metrics`] module scores
//! runs; [`datasets`] persists traces, labeled datasets, and checkpoints.
//!
//! Numeric code is generic over the scalar type via [`Real`] (`f32` or
//! `f64`); the aliases below pin the default double-precision instantiation.

pub mod config;
pub mod datasets;
pub mod env;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod learn;
pub mod metrics;
pub mod policy;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

/// Default-precision aliases.
pub type Pose = geometry::PlanarPose<f64>;
pub type Transform = geometry::RigidTransform3D<f64>;
pub type Intrinsics = geometry::CameraIntrinsics<f64>;
pub type Grid = grid::GridSpec<f64>;
pub type Environment = env::Env<f64>;
pub type Observation = env::Observation<f64>;
pub type Policy = policy::PolicyParams<f64>;
pub type Distribution = policy::ActionDistribution<f64>;
pub type RunResult = learn::RunResult<f64>;
pub type EvalSummary = metrics::EvalSummary<f64>;

/// Single-precision pose, for callers that stay in `f32`.
pub type Pose32 = geometry::PlanarPose<f32>;
