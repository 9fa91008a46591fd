//! Session-oriented HTTP API and command-line front end for the planner.

pub mod http;
pub mod planner;

pub use planner::{Layer, Planner, PlannerConfig, ServiceError, StageName, StageOptions, StageRequest};
