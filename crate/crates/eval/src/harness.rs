//! Episode loop and suite runner.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use toolsim_core::env::{self, render_goal, render_outcome, render_state, sample_instance, InstanceParams};
use toolsim_core::rng::eval_seed;
use toolsim_core::{planner, Action, EnvDescriptor, EnvId, Goal, Instance, State, StepOutcome};

use crate::agents::{Agent, AgentError};
use crate::protocol::{response_action, AgentRequest, HistoryEntry};

/// Smallest step budget handed to an agent.
pub const MIN_BUDGET: usize = 30;

/// `max(30, 2 * plan_len + 4)`.
pub fn default_budget(plan_len: usize) -> usize {
    (2 * plan_len + 4).max(MIN_BUDGET)
}

/// Instance sizes of the default suites. SAW leaves out length-2 targets,
/// which a random agent hits too easily to separate it from a planner.
pub fn suite_params(env_id: EnvId) -> InstanceParams {
    let mut params = InstanceParams::default();
    if env_id == EnvId::Saw {
        params.saw_min_len = 3;
    }
    params
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub env_id: EnvId,
    pub seed: u64,
    /// Fixed budget; `None` uses [`default_budget`] of the oracle plan.
    pub max_steps: Option<usize>,
    pub params: InstanceParams,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    BudgetExhausted,
    ProtocolError,
    Timeout,
    /// The instance itself could not be set up.
    Setup,
}

/// What happened to one submitted action.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TurnResult {
    /// The response named an action; the environment's outcome follows.
    Executed { action: Action, outcome: StepOutcome },
    /// The response could not be read as an action in this environment.
    Unparsed { code: String, message: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub step: usize,
    pub thought: String,
    pub result: TurnResult,
    pub state_after: State,
}

impl TranscriptEntry {
    fn is_invalid(&self) -> bool {
        !matches!(&self.result, TurnResult::Executed { outcome, .. } if outcome.is_success())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub episode_id: String,
    pub env_id: EnvId,
    pub seed: u64,
    pub init_state: Option<State>,
    pub goal: Option<Goal>,
    pub max_steps: usize,
    pub solved: bool,
    pub steps_used: usize,
    pub invalid_action_count: usize,
    pub failure: Option<FailureReason>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub transcript: Vec<TranscriptEntry>,
}

impl EpisodeResult {
    /// Replays the transcript from the initial state: every executed action
    /// must reproduce its outcome and recorded state, and every invalid turn
    /// must leave the state unchanged.
    pub fn replays(&self) -> bool {
        let Some(mut cur) = self.init_state.clone() else {
            return self.transcript.is_empty();
        };
        for entry in &self.transcript {
            let next = match &entry.result {
                TurnResult::Executed { action, outcome } => {
                    let recomputed = env::step(&cur, action);
                    if recomputed != *outcome {
                        return false;
                    }
                    recomputed.state_after().cloned().unwrap_or_else(|| cur.clone())
                }
                TurnResult::Unparsed { .. } => cur.clone(),
            };
            if entry.is_invalid() && next != cur {
                return false;
            }
            if next != entry.state_after {
                return false;
            }
            cur = next;
        }
        let at_goal = self.goal.as_ref().is_some_and(|g| env::is_goal(&cur, g));
        at_goal == self.solved
    }
}

pub fn episode_id(env_id: EnvId, seed: u64) -> String {
    format!("{env_id}-ep-{seed:016x}")
}

fn setup_failure(config: &EpisodeConfig, detail: String) -> EpisodeResult {
    EpisodeResult {
        episode_id: episode_id(config.env_id, config.seed),
        env_id: config.env_id,
        seed: config.seed,
        init_state: None,
        goal: None,
        max_steps: config.max_steps.unwrap_or(0),
        solved: false,
        steps_used: 0,
        invalid_action_count: 0,
        failure: Some(FailureReason::Setup),
        detail: Some(detail),
        transcript: Vec::new(),
    }
}

fn result_text(result: &TurnResult) -> String {
    match result {
        TurnResult::Executed { outcome, .. } => render_outcome(outcome),
        TurnResult::Unparsed { code, message } => format!("invalid ({code}): {message}"),
    }
}

/// Runs one agent on one instance until the goal holds, the budget is spent
/// or the agent breaks the protocol.
pub fn run_episode(config: &EpisodeConfig, agent: &dyn Agent) -> EpisodeResult {
    let inst = match sample_instance(config.env_id, config.seed, &config.params) {
        Ok(inst) => inst,
        Err(e) => return setup_failure(config, e.to_string()),
    };
    let max_steps = match config.max_steps {
        Some(n) => n.max(1),
        None => match planner::plan(&inst.init, &inst.goal) {
            Ok(plan) => default_budget(plan.len()),
            Err(e) => return setup_failure(config, format!("no reference plan: {e}")),
        },
    };
    run_instance(&inst, max_steps, agent)
}

/// The episode loop on an already sampled instance.
pub fn run_instance(inst: &Instance, max_steps: usize, agent: &dyn Agent) -> EpisodeResult {
    let id = episode_id(inst.env_id, inst.seed);
    let docs = EnvDescriptor::for_env(inst.env_id).docs_text();
    let goal_text = render_goal(&inst.goal);
    let mut state = inst.init.clone();
    let mut history: Vec<HistoryEntry> = Vec::new();
    let mut transcript = Vec::new();
    let mut last_error = None;
    let mut invalid = 0;
    let mut failure = None;
    let mut detail = None;

    while !env::is_goal(&state, &inst.goal) {
        if transcript.len() >= max_steps {
            failure = Some(FailureReason::BudgetExhausted);
            break;
        }
        let request = AgentRequest {
            episode_id: id.clone(),
            step: transcript.len(),
            env_id: inst.env_id,
            tool_docs: docs.clone(),
            goal: inst.goal.clone(),
            goal_text: goal_text.clone(),
            state: state.clone(),
            state_text: render_state(&state),
            history: history.clone(),
            last_error: last_error.take(),
        };
        let response = match agent.act(&request) {
            Ok(r) => r,
            Err(e) => {
                failure = Some(match e {
                    AgentError::Timeout(_) => FailureReason::Timeout,
                    AgentError::Protocol(_) | AgentError::Transport(_) => FailureReason::ProtocolError,
                });
                detail = Some(e.to_string());
                break;
            }
        };
        let (result, action_text) = match response_action(&response, inst.env_id) {
            Ok(action) => {
                let outcome = env::step(&state, &action);
                let text = action.to_string();
                (TurnResult::Executed { action, outcome }, text)
            }
            Err(diag) => (
                TurnResult::Unparsed {
                    code: diag.code,
                    message: diag.message,
                },
                response.tool.clone(),
            ),
        };
        match &result {
            TurnResult::Executed {
                outcome: StepOutcome::Success { state_after },
                ..
            } => state = state_after.clone(),
            TurnResult::Executed {
                outcome: StepOutcome::Invalid { reason },
                ..
            } => {
                invalid += 1;
                last_error = Some(format!("{}: {}", reason.code(), reason.describe()));
            }
            TurnResult::Unparsed { code, message } => {
                invalid += 1;
                last_error = Some(format!("{code}: {message}"));
            }
        }
        history.push(HistoryEntry {
            thought: response.thought.clone(),
            action: action_text,
            result: result_text(&result),
        });
        transcript.push(TranscriptEntry {
            step: transcript.len(),
            thought: response.thought,
            result,
            state_after: state.clone(),
        });
    }

    EpisodeResult {
        episode_id: id,
        env_id: inst.env_id,
        seed: inst.seed,
        init_state: Some(inst.init.clone()),
        goal: Some(inst.goal.clone()),
        max_steps,
        solved: failure.is_none(),
        steps_used: transcript.len(),
        invalid_action_count: invalid,
        failure,
        detail,
        transcript,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub env_id: EnvId,
    pub suite_seed: u64,
    pub agent: String,
    pub n_cases: usize,
    pub solved_count: usize,
    /// Percentage of solved episodes.
    pub success_rate: f64,
    pub invalid_action_count: usize,
    pub episodes: Vec<EpisodeResult>,
    /// Reserved for judgments from external evaluators; never filled here.
    pub external_judgments: Option<serde_json::Value>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SuiteError {
    #[error("a suite needs at least one case")]
    Empty,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteOptions {
    pub max_steps: Option<usize>,
    pub params: InstanceParams,
}

impl SuiteOptions {
    pub fn for_env(env_id: EnvId) -> Self {
        Self {
            max_steps: None,
            params: suite_params(env_id),
        }
    }
}

/// `n_cases` episodes on evaluation-range seeds of `suite_seed`, run
/// concurrently and reported in case order.
pub fn run_suite(
    env_id: EnvId,
    suite_seed: u64,
    n_cases: usize,
    agent: &dyn Agent,
    options: &SuiteOptions,
) -> Result<EvalReport, SuiteError> {
    if n_cases == 0 {
        return Err(SuiteError::Empty);
    }
    let episodes: Vec<EpisodeResult> = (0..n_cases as u64)
        .into_par_iter()
        .map(|i| {
            let config = EpisodeConfig {
                env_id,
                seed: eval_seed(suite_seed, i),
                max_steps: options.max_steps,
                params: options.params.clone(),
            };
            run_episode(&config, agent)
        })
        .collect();
    let solved_count = episodes.iter().filter(|e| e.solved).count();
    Ok(EvalReport {
        env_id,
        suite_seed,
        agent: agent.name(),
        n_cases,
        solved_count,
        success_rate: 100.0 * solved_count as f64 / n_cases as f64,
        invalid_action_count: episodes.iter().map(|e| e.invalid_action_count).sum(),
        episodes,
        external_judgments: None,
    })
}

/// A few lines for people: rate, counts and failure reasons.
pub fn summarize(report: &EvalReport) -> String {
    let mut reasons = std::collections::BTreeMap::new();
    for e in &report.episodes {
        if let Some(f) = e.failure {
            *reasons.entry(format!("{f:?}")).or_insert(0usize) += 1;
        }
    }
    let steps: usize = report.episodes.iter().map(|e| e.steps_used).sum();
    let mut out = format!(
        "env {} | agent {} | suite seed {}\nsolved {}/{} (SR {:.1}%)\nsteps {} total, {} invalid\n",
        report.env_id,
        report.agent,
        report.suite_seed,
        report.solved_count,
        report.n_cases,
        report.success_rate,
        steps,
        report.invalid_action_count
    );
    for (reason, n) in reasons {
        out.push_str(&format!("failed: {reason} x{n}\n"));
    }
    out
}
