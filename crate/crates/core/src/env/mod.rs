//! The three environments and uniform dispatch over them.

pub mod blocksworld;
pub mod logistics;
pub mod saw;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::types::{Action, EnvId, Goal, Instance, InvalidReason, State, StepOutcome, Tool};

fn outcome(result: Result<State, InvalidReason>) -> StepOutcome {
    match result {
        Ok(state_after) => StepOutcome::Success { state_after },
        Err(reason) => StepOutcome::Invalid { reason },
    }
}

/// Applies `action` to `state`. Pure; invalid actions never change anything.
pub fn step(state: &State, action: &Action) -> StepOutcome {
    outcome(try_step(state, action))
}

pub fn try_step(state: &State, action: &Action) -> Result<State, InvalidReason> {
    match state {
        State::Saw(s) => saw::step(s, action).map(State::Saw),
        State::Bw(s) => blocksworld::step(s, action).map(State::Bw),
        State::Log(s) => logistics::step(s, action).map(State::Log),
    }
}

pub fn candidates(state: &State) -> Vec<Action> {
    match state {
        State::Saw(_) => saw::candidates(),
        State::Bw(s) => blocksworld::candidates(s),
        State::Log(s) => logistics::candidates(s),
    }
}

pub fn enumerate_actions(state: &State) -> Vec<(Action, StepOutcome)> {
    match state {
        State::Saw(s) => saw::enumerate_actions(s),
        State::Bw(s) => blocksworld::enumerate_actions(s),
        State::Log(s) => logistics::enumerate_actions(s),
    }
}

/// Executable actions and the states they lead to.
pub fn successors(state: &State) -> Vec<(Action, State)> {
    match state {
        State::Saw(s) => wrap(saw::successors(s)),
        State::Bw(s) => wrap(blocksworld::successors(s)),
        State::Log(s) => wrap(logistics::successors(s)),
    }
}

fn wrap<S: Into<State>>(v: Vec<(Action, S)>) -> Vec<(Action, State)> {
    v.into_iter().map(|(a, s)| (a, s.into())).collect()
}

/// False when state and goal come from different environments.
pub fn is_goal(state: &State, goal: &Goal) -> bool {
    match (state, goal) {
        (State::Saw(s), Goal::Saw(g)) => saw::is_goal(s, g),
        (State::Bw(s), Goal::Bw(g)) => blocksworld::is_goal(s, g),
        (State::Log(s), Goal::Log(g)) => logistics::is_goal(s, g),
        _ => false,
    }
}

pub fn validate_state(state: &State) -> Result<(), Error> {
    match state {
        State::Saw(s) => s.validate(),
        State::Bw(s) => s.validate(),
        State::Log(s) => s.validate(),
    }
}

pub fn render_state(state: &State) -> String {
    match state {
        State::Saw(s) => s.render(),
        State::Bw(s) => s.render(),
        State::Log(s) => s.render(),
    }
}

pub fn render_goal(goal: &Goal) -> String {
    match goal {
        Goal::Saw(g) => format!("a string containing {} as a contiguous substring", g.render()),
        Goal::Bw(g) => format!("{} (hand empty)", g.render()),
        Goal::Log(g) => g.render(),
    }
}

pub fn render_outcome(outcome: &StepOutcome) -> String {
    match outcome {
        StepOutcome::Success { state_after } => render_state(state_after),
        StepOutcome::Invalid { reason } => format!("invalid ({reason})"),
    }
}

/// Instance-size knobs for the generators.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InstanceParams {
    pub saw_min_len: usize,
    pub saw_max_len: usize,
    pub bw_blocks: usize,
    pub log_cities: usize,
    pub log_locs_per_city: usize,
}

impl Default for InstanceParams {
    fn default() -> Self {
        Self {
            saw_min_len: saw::MIN_TARGET_LEN,
            saw_max_len: saw::MAX_TARGET_LEN,
            bw_blocks: blocksworld::DEFAULT_BLOCKS,
            log_cities: logistics::DEFAULT_CITIES,
            log_locs_per_city: logistics::DEFAULT_LOCS_PER_CITY,
        }
    }
}

/// Draws per SAW instance before giving up on finding a plannable target.
pub const SAW_MAX_DRAWS: usize = 64;

pub fn sample_instance(env: EnvId, seed: u64, params: &InstanceParams) -> Result<Instance, Error> {
    let (init, goal) = match env {
        EnvId::Saw => {
            let (lo, hi) = (params.saw_min_len, params.saw_max_len);
            if lo < saw::MIN_TARGET_LEN || hi > saw::MAX_TARGET_LEN || lo > hi {
                return Err(Error::InstanceParams(format!(
                    "SAW target lengths [{lo}, {hi}] outside [{}, {}]",
                    saw::MIN_TARGET_LEN,
                    saw::MAX_TARGET_LEN
                )));
            }
            // Some targets cannot be spelled at all ('aaa': every 'a' after
            // the first is pinned in front of its own 'b'); redraw those.
            let mut rng = crate::rng::SeededRng::new(seed);
            let empty = saw::SawState::empty();
            let goal = (0..SAW_MAX_DRAWS)
                .map(|_| saw::sample_goal_with(&mut rng, lo, hi))
                .find(|g| crate::planner::saw::constructive(&empty, g).is_some())
                .ok_or(Error::Plan(crate::error::PlanError::Unsolvable))?;
            (State::Saw(empty), Goal::Saw(goal))
        }
        EnvId::Bw => {
            let (s, g) = blocksworld::sample_instance(seed, params.bw_blocks)?;
            (State::Bw(s), Goal::Bw(g))
        }
        EnvId::Log => {
            let (s, g) =
                logistics::sample_instance(seed, params.log_cities, params.log_locs_per_city)?;
            (State::Log(s), Goal::Log(g))
        }
    };
    Ok(Instance {
        env_id: env,
        seed,
        init,
        goal,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolDoc {
    pub tool: Tool,
    pub grammar: String,
    pub doc: String,
}

/// Agent-facing description of an environment. The text is fixed per
/// version; `docs_hash` pins it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvDescriptor {
    pub env_id: EnvId,
    pub version: u32,
    pub overview: String,
    pub tools: Vec<ToolDoc>,
    pub state_rules: String,
    pub action_grammar: String,
    pub invalid_reasons: Vec<InvalidReason>,
}

pub const DESCRIPTOR_VERSION: u32 = 1;

impl EnvDescriptor {
    pub fn for_env(env: EnvId) -> Self {
        let doc = |tool: Tool, grammar: &str, doc: &str| ToolDoc {
            tool,
            grammar: grammar.to_string(),
            doc: doc.to_string(),
        };
        let (overview, tools, state_rules, action_grammar) = match env {
            EnvId::Saw => (
                "SpellAnyWord: starting from an empty string, build a string that contains \
                 the target string as a contiguous substring.",
                vec![
                    doc(
                        Tool::Add,
                        "Add('x')",
                        "Append the letter x and the letter after it in the alphabet to the end \
                         of the string. Add('a') on [] gives ['a','b']. Add('z') is invalid \
                         because 'z' has no next letter.",
                    ),
                    doc(
                        Tool::Swap,
                        "Swap('x')",
                        "Swap the leftmost occurrence of the letter x with the letter to its \
                         right. Swap('a') on ['a','b'] gives ['b','a']. Invalid if x does not \
                         occur, its leftmost occurrence is the last letter, or the letter to \
                         its right is also x.",
                    ),
                ],
                "The string is shown as a list of quoted letters, e.g. ['b','a','n'].",
                "Add('x') | Swap('x') where x is a single lowercase letter",
            ),
            EnvId::Bw => (
                "BlocksWorld: rearrange the blocks with one hand until every goal relation \
                 holds and the hand is empty.",
                vec![
                    doc(
                        Tool::Pick,
                        "Pick('color')",
                        "Pick the block of the given color up into the hand. Invalid if another \
                         block is on top of it or the hand already holds a block.",
                    ),
                    doc(
                        Tool::Stack,
                        "Stack('color') | Stack('table')",
                        "Put the block in the hand onto the block of the given color, or onto \
                         the table. Invalid if the hand is empty or the target block has \
                         another block on top of it.",
                    ),
                ],
                "Stacks are listed bottom to top; the hand holds at most one block.",
                "Pick('color') | Stack('color') | Stack('table') with colors red, blue, green, \
                 yellow, white, orange",
            ),
            EnvId::Log => (
                "Logistics: move the package to the target location. Locations are grouped \
                 into cities and every city has exactly one airport.",
                vec![
                    doc(
                        Tool::Truck,
                        "Truck(from,to)",
                        "Drive a truck from one location to another location of the same city. \
                         Every package at the starting location travels with it. Invalid if no \
                         truck is at the starting location.",
                    ),
                    doc(
                        Tool::Plane,
                        "Plane(from,to)",
                        "Fly an airplane from the airport of one city to the airport of another \
                         city. Every package at the starting location travels with it. Invalid \
                         if no airplane is at the starting location or either location is not \
                         an airport.",
                    ),
                ],
                "Vehicles and packages are listed with their location numbers.",
                "Truck(from,to) | Plane(from,to) with location numbers",
            ),
        };
        Self {
            env_id: env,
            version: DESCRIPTOR_VERSION,
            overview: overview.to_string(),
            tools,
            state_rules: state_rules.to_string(),
            action_grammar: action_grammar.to_string(),
            invalid_reasons: InvalidReason::for_env(env).to_vec(),
        }
    }

    /// Plain-text tool documentation used in system prompts.
    pub fn docs_text(&self) -> String {
        let mut out = format!("{}\n\nTools:\n", self.overview);
        for t in &self.tools {
            out.push_str(&format!("- {}: {}\n", t.grammar, t.doc));
        }
        out.push_str(&format!("\nState: {}\n", self.state_rules));
        out.push_str(&format!("Actions: {}\n", self.action_grammar));
        let codes: Vec<&str> = self.invalid_reasons.iter().map(|r| r.code()).collect();
        out.push_str(&format!("Invalid actions report one of: {}\n", codes.join(", ")));
        out
    }

    pub fn docs_hash(&self) -> u64 {
        crate::hash::fnv64(self.docs_text().as_bytes())
    }
}
