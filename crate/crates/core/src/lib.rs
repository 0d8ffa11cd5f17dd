//! Deterministic simulators for three tool-use environments (SpellAnyWord,
//! BlocksWorld, Logistics), the execution-record model shared by them, and
//! verified planners.
//!
//! Every environment is a pure transition function `step(state, action)`.
//! Invalid actions come back as [`StepOutcome::Invalid`] with a stable reason
//! code and never change the state.

pub mod env;
pub mod error;
pub mod hash;
pub mod planner;
pub mod replay;
pub mod rng;
pub mod search;
pub mod types;

pub use env::{EnvDescriptor, InstanceParams};
pub use error::{Error, PlanError};
pub use hash::hash_state;
pub use planner::Plan;
pub use replay::{replay_trace, ReplayReport};
pub use types::{
    Action, EnvId, ExecutionRecord, Goal, Instance, InvalidReason, Param, State, StepOutcome,
    Tool,
};
