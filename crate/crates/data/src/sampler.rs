//! Execution-record sampling: random walks and planner-guided episodes.
//!
//! Both samplers record one candidate action per visited state together with
//! its true outcome, executable or not. Each walk or episode draws from its
//! own derived seed, so shards run in parallel and are merged in index order.

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use toolsim_core::env::{self, sample_instance, InstanceParams};
use toolsim_core::planner;
use toolsim_core::rng::{training_seed, SeededRng};
use toolsim_core::{hash_state, Action, EnvId, ExecutionRecord, Goal, State, StepOutcome};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    /// Steps per random walk.
    pub max_walk_depth: usize,
    /// Target share of records whose action is not executable.
    pub invalid_ratio: f64,
    /// Probability that the guided policy takes a random action instead of
    /// the planned one.
    pub epsilon: f64,
    /// Drop repeated (state, action) pairs in guided sampling.
    pub dedup: bool,
    pub instance: InstanceParams,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            max_walk_depth: 8,
            invalid_ratio: 0.3,
            epsilon: 0.2,
            dedup: true,
            instance: InstanceParams::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("invalid sampler config: {0}")]
    Config(String),
    #[error(transparent)]
    Instance(#[from] toolsim_core::Error),
    #[error("only {got} of {wanted} distinct records after {episodes} episodes")]
    Exhausted {
        got: usize,
        wanted: usize,
        episodes: usize,
    },
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.max_walk_depth == 0 {
            return Err(SamplerError::Config("max_walk_depth must be at least 1".into()));
        }
        for (name, p) in [("invalid_ratio", self.invalid_ratio), ("epsilon", self.epsilon)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SamplerError::Config(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }
}

pub fn record_id(env_id: EnvId, seed: u64, index: usize) -> String {
    format!("{env_id}-{seed:016x}-{index:06}")
}

/// One exploratory step: picks the invalid class with probability
/// `invalid_ratio` (falling back to the other class when it is empty), then a
/// uniform candidate within the class. The walk moves with that action when
/// it is executable and with a uniform executable action otherwise.
fn explore(rng: &mut SeededRng, state: &State, invalid_ratio: f64) -> (Action, StepOutcome, State) {
    let (valid, invalid): (Vec<_>, Vec<_>) = env::enumerate_actions(state)
        .into_iter()
        .partition(|(_, o)| o.is_success());
    let want_invalid = rng.chance(invalid_ratio);
    let pool = if (want_invalid && !invalid.is_empty()) || valid.is_empty() {
        &invalid
    } else {
        &valid
    };
    let (action, outcome) = pool[rng.index(pool.len())].clone();
    let next = match outcome.state_after() {
        Some(s) => s.clone(),
        None if valid.is_empty() => state.clone(),
        None => valid[rng.index(valid.len())].1.state_after().unwrap().clone(),
    };
    (action, outcome, next)
}

fn invalid_probe(rng: &mut SeededRng, state: &State) -> Option<(Action, StepOutcome)> {
    let invalid: Vec<_> = env::enumerate_actions(state)
        .into_iter()
        .filter(|(_, o)| !o.is_success())
        .collect();
    rng.choose(&invalid).cloned()
}

fn walk_start(env_id: EnvId, seed: u64, params: &InstanceParams) -> Result<State, SamplerError> {
    Ok(sample_instance(env_id, seed, params)?.init)
}

/// `n` records from random walks of `max_walk_depth` steps, each walk
/// starting from a freshly sampled initial state.
pub fn sample_random_records(
    env_id: EnvId,
    seed: u64,
    n: usize,
    config: &SamplerConfig,
) -> Result<Vec<ExecutionRecord>, SamplerError> {
    config.validate()?;
    let depth = config.max_walk_depth;
    let walks = n.div_ceil(depth);
    let chunks: Vec<Vec<(u64, Action, State, StepOutcome)>> = (0..walks as u64)
        .into_par_iter()
        .map(|w| {
            let walk_seed = training_seed(seed, w);
            let mut rng = SeededRng::derived(walk_seed, 1);
            let mut state = walk_start(env_id, walk_seed, &config.instance)?;
            let mut out = Vec::with_capacity(depth);
            for _ in 0..depth {
                let (action, outcome, next) = explore(&mut rng, &state, config.invalid_ratio);
                out.push((walk_seed, action, state, outcome));
                state = next;
            }
            Ok(out)
        })
        .collect::<Result<_, SamplerError>>()?;
    Ok(chunks
        .into_iter()
        .flatten()
        .take(n)
        .enumerate()
        .map(|(i, (walk_seed, action, state_before, outcome))| ExecutionRecord {
            env_id,
            record_id: record_id(env_id, seed, i),
            seed: walk_seed,
            state_before,
            action,
            outcome,
        })
        .collect())
}

/// A verified plan from a mid-episode state. For SAW only the cheapest
/// constructive tier is tried: states reached by random moves often pin
/// letters in place, and proving that costs far more than the episode is
/// worth.
fn replan(state: &State, goal: &Goal) -> Option<Vec<Action>> {
    let actions = match (state, goal) {
        (State::Saw(s), Goal::Saw(g)) => planner::saw::constructive_in_order(s, g)?,
        _ => planner::plan(state, goal).ok()?.actions,
    };
    planner::verify_plan(state, goal, &actions).map(|_| actions)
}

/// Records of one guided episode, before numbering.
fn guided_episode(
    env_id: EnvId,
    episode_seed: u64,
    config: &SamplerConfig,
) -> Result<Vec<(Action, State, StepOutcome)>, SamplerError> {
    let inst = sample_instance(env_id, episode_seed, &config.instance)?;
    let mut rng = SeededRng::derived(episode_seed, 2);
    let mut plan = planner::plan(&inst.init, &inst.goal).map_err(toolsim_core::Error::from)?;
    let budget = 2 * plan.len() + 4 + config.max_walk_depth;
    let mut explored = 0;
    let mut queue: Vec<Action> = plan.actions.drain(..).rev().collect();
    let mut state = inst.init;
    let mut out = Vec::new();
    for _ in 0..budget {
        if env::is_goal(&state, &inst.goal) {
            break;
        }
        if explored == config.max_walk_depth {
            break;
        }
        if rng.chance(config.epsilon) {
            explored += 1;
            let (action, outcome, next) = explore(&mut rng, &state, config.invalid_ratio);
            let moved = next != state;
            out.push((action, state, outcome));
            state = next;
            if moved && config.epsilon < 1.0 {
                // Off the planned path now; plan again from here or stop.
                match replan(&state, &inst.goal) {
                    Some(actions) => queue = actions.into_iter().rev().collect(),
                    None => break,
                }
            }
        } else {
            let Some(action) = queue.pop() else { break };
            let outcome = env::step(&state, &action);
            let next = outcome.state_after().cloned().expect("planned actions are executable");
            // The planned move is always taken; what gets recorded may be an
            // invalid probe of the same state instead.
            let probe = rng
                .chance(config.invalid_ratio)
                .then(|| invalid_probe(&mut rng, &state))
                .flatten();
            match probe {
                Some((bad, reason)) => out.push((bad, state, reason)),
                None => out.push((action, state, outcome)),
            }
            state = next;
        }
    }
    Ok(out)
}

/// `n` records drawn along planner solutions, with probability `epsilon` of
/// an exploratory action at each step (and a replan after it). An episode
/// ends at the goal or after `max_walk_depth` exploratory steps, so with
/// `epsilon = 1` it is exactly a random walk. Episodes are
/// generated in parallel batches and merged in episode order; with `dedup`,
/// repeated (state, action) pairs keep only their first occurrence.
pub fn sample_guided_records(
    env_id: EnvId,
    seed: u64,
    n: usize,
    config: &SamplerConfig,
) -> Result<Vec<ExecutionRecord>, SamplerError> {
    config.validate()?;
    let max_episodes = 20 * n + 100;
    let batch = rayon::current_num_threads().max(1) * 8;
    let mut seen: HashSet<(u64, Action)> = HashSet::new();
    let mut records = Vec::with_capacity(n);
    let mut next_episode = 0usize;
    let mut invalid = 0usize;
    while records.len() < n {
        if next_episode >= max_episodes {
            return Err(SamplerError::Exhausted {
                got: records.len(),
                wanted: n,
                episodes: next_episode,
            });
        }
        let end = (next_episode + batch).min(max_episodes);
        let episodes: Vec<(u64, Vec<_>)> = (next_episode..end)
            .into_par_iter()
            .map(|e| {
                let episode_seed = training_seed(seed, e as u64);
                guided_episode(env_id, episode_seed, config).map(|r| (episode_seed, r))
            })
            .collect::<Result<_, _>>()?;
        next_episode = end;
        for (episode_seed, steps) in episodes {
            for (action, state_before, outcome) in steps {
                if records.len() == n {
                    break;
                }
                // Rejection control: dedup removes repeated executable pairs
                // far more often than invalid ones, so invalid records are
                // only taken while their share stays within the target.
                let over_share = (invalid + 1) as f64 > config.invalid_ratio * (records.len() + 1) as f64 + 1.0;
                if !outcome.is_success() && over_share {
                    continue;
                }
                if config.dedup && !seen.insert((hash_state(&state_before), action.clone())) {
                    continue;
                }
                if !outcome.is_success() {
                    invalid += 1;
                }
                records.push(ExecutionRecord {
                    env_id,
                    record_id: record_id(env_id, seed, records.len()),
                    seed: episode_seed,
                    state_before,
                    action,
                    outcome,
                });
            }
        }
    }
    Ok(records)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CoverageStats {
    pub records: usize,
    pub distinct_states: usize,
    pub executable: usize,
    pub invalid: usize,
    pub invalid_ratio: f64,
    pub per_tool: BTreeMap<String, usize>,
    pub per_reason: BTreeMap<String, usize>,
}

pub fn coverage_report(records: &[ExecutionRecord]) -> CoverageStats {
    let mut stats = CoverageStats {
        records: records.len(),
        ..Default::default()
    };
    let mut states = HashSet::new();
    for r in records {
        states.insert(hash_state(&r.state_before));
        *stats.per_tool.entry(r.action.tool.name().to_string()).or_default() += 1;
        match r.outcome.reason() {
            None => stats.executable += 1,
            Some(reason) => {
                stats.invalid += 1;
                *stats.per_reason.entry(reason.code().to_string()).or_default() += 1;
            }
        }
    }
    stats.distinct_states = states.len();
    if !records.is_empty() {
        stats.invalid_ratio = stats.invalid as f64 / records.len() as f64;
    }
    stats
}
