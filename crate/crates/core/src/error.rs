use thiserror::Error;

use crate::types::EnvId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown environment `{0}`")]
    UnknownEnv(String),
    #[error("malformed {env} state: {detail}")]
    MalformedState { env: EnvId, detail: String },
    #[error("invalid instance parameters: {0}")]
    InstanceParams(String),
    #[error("state and goal belong to different environments")]
    EnvMismatch,
    #[error(transparent)]
    Plan(#[from] PlanError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("goal is unreachable from the initial state")]
    Unsolvable,
    #[error("search budget exhausted after {0} expanded states")]
    BudgetExceeded(usize),
    #[error("goal is malformed: {0}")]
    BadGoal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
