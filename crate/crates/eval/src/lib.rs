//! Evaluation of agents inside the simulated environments: the observe/act
//! loop, bundled scripted agents, and success-rate reports.

pub mod agents;
pub mod harness;
pub mod protocol;

pub use agents::{agent_from_descriptor, Agent, AgentError, AlwaysInvalidAgent, OracleAgent, RandomAgent};
pub use harness::{default_budget, run_episode, run_suite, EpisodeConfig, EpisodeResult, EvalReport, SuiteOptions};
pub use protocol::{parse_action, AgentRequest, AgentResponse, ParseDiagnostic};
