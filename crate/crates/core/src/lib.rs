//! Belief tracking and planning for an autonomous vehicle passing an occluded
//! region that may hide a pedestrian.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64` for the common case.

pub mod agent;
pub mod baselines;
pub mod belief;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod planner;
pub mod rng;
pub mod scalar;
pub mod world;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Vec2 = geometry::Vec2<f64>;
pub type Occluder = geometry::Occluder<f64>;
pub type EnvConfig = world::EnvConfig<f64>;
pub type Env = world::Env<f64>;
pub type Belief = belief::Belief<f64>;
pub type BeliefConfig = belief::BeliefConfig<f64>;
pub type PlannerConfig = planner::PlannerConfig<f64>;
pub type Planner = planner::Planner<f64>;
pub type AgentConfig = agent::AgentConfig<f64>;
pub type Agent = agent::Agent<f64>;
pub type ExperimentConfig = harness::ExperimentConfig<f64>;
pub type EpisodeRecord = harness::EpisodeRecord<f64>;

pub type Belief32 = belief::Belief<f32>;
pub type Planner32 = planner::Planner<f32>;
pub type Agent32 = agent::Agent<f32>;
