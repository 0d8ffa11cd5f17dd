//! Solution traces: planner output annotated with ReAct-style thoughts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use toolsim_core::env::blocksworld::Support;
use toolsim_core::env::{self, render_goal, render_state, sample_instance, InstanceParams};
use toolsim_core::planner;
use toolsim_core::rng::{derive_seed, training_seed, SeededRng};
use toolsim_core::{Action, EnvDescriptor, EnvId, Goal, Param, State, Tool};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThoughtTemplate {
    pub template_id: String,
    pub env_id: EnvId,
    pub pattern: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ThoughtError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("template {0} has no {{rationale}}, {{tool}} or {{input}} slot")]
    MissingSlot(String),
    #[error("only {found} thought templates for {env}, at least {needed} required")]
    TooFew { env: EnvId, found: usize, needed: usize },
}

pub const MIN_THOUGHTS_PER_ENV: usize = 5;

const BUILTIN: &str = include_str!("../templates/thoughts.jsonl");

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThoughtSet {
    templates: Vec<ThoughtTemplate>,
}

impl ThoughtSet {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("built-in thought templates are valid")
    }

    pub fn parse(text: &str) -> Result<Self, ThoughtError> {
        let mut templates = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let t: ThoughtTemplate = serde_json::from_str(line).map_err(|e| ThoughtError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            if ["{rationale}", "{tool}", "{input}"].iter().any(|s| !t.pattern.contains(s)) {
                return Err(ThoughtError::MissingSlot(t.template_id));
            }
            templates.push(t);
        }
        let set = Self { templates };
        for env in EnvId::ALL {
            let found = set.for_env(env).len();
            if found < MIN_THOUGHTS_PER_ENV {
                return Err(ThoughtError::TooFew {
                    env,
                    found,
                    needed: MIN_THOUGHTS_PER_ENV,
                });
            }
        }
        Ok(set)
    }

    pub fn for_env(&self, env: EnvId) -> Vec<&ThoughtTemplate> {
        self.templates.iter().filter(|t| t.env_id == env).collect()
    }
}

fn sym(action: &Action, i: usize) -> String {
    match action.params.get(i) {
        Some(Param::Sym(s)) => s.clone(),
        Some(Param::Loc(l)) => l.to_string(),
        None => String::new(),
    }
}

fn loc(action: &Action, i: usize) -> u32 {
    match action.params.get(i) {
        Some(Param::Loc(l)) => *l,
        _ => 0,
    }
}

/// A short explanation of why `action` helps in `state`.
pub fn rationale(state: &State, action: &Action, goal: &Goal) -> String {
    match (state, goal) {
        (State::Saw(s), Goal::Saw(g)) => {
            let c = sym(action, 0);
            let letter = c.chars().next().unwrap_or('a');
            if action.tool == Tool::Add {
                let next = (letter as u8 + 1) as char;
                if g.target.contains(&letter) {
                    format!("The target needs '{c}', and adding it also appends '{next}'.")
                } else {
                    format!("Adding '{c}' brings in '{next}', which the target needs.")
                }
            } else {
                let right = s
                    .letters
                    .iter()
                    .position(|&x| x == letter)
                    .and_then(|i| s.letters.get(i + 1))
                    .map_or(String::new(), |r| format!(" past '{r}'"));
                format!("The leftmost '{c}' has to move one place right{right} to line the letters up.")
            }
        }
        (State::Bw(s), Goal::Bw(g)) => {
            let target = sym(action, 0);
            if action.tool == Tool::Pick {
                let wanted = g.on.iter().any(|(c, _)| c.name() == target);
                if wanted {
                    format!("The {target} block is clear and has to go somewhere else for the goal.")
                } else {
                    format!("The {target} block is clear and in the way, so it has to be moved.")
                }
            } else {
                let held = s.hand.map(|c| c.name().to_string()).unwrap_or_default();
                let fits = g.on.iter().any(|(c, sup)| {
                    c.name() == held
                        && match sup {
                            Support::Table => target == "table",
                            Support::Block(b) => b.name() == target,
                        }
                });
                if fits {
                    format!("I hold {held}, and the goal wants it on {target}.")
                } else if target == "table" {
                    format!("I hold {held}; putting it on the table frees the hand.")
                } else {
                    format!("I hold {held} and {target} is clear, so it can rest there for now.")
                }
            }
        }
        (State::Log(s), Goal::Log(g)) => {
            let (from, to) = (loc(action, 0), loc(action, 1));
            let carrying = s.packages.get(&g.package) == Some(&from);
            let vehicle = if action.tool == Tool::Truck { "truck" } else { "airplane" };
            if carrying && to == g.target_location {
                format!("The {vehicle} at {from} can carry {} straight to its target {to}.", g.package)
            } else if carrying {
                format!("{} is at {from}; the {vehicle} takes it on to {to}.", g.package)
            } else {
                format!("The {vehicle} at {from} must first go to {to} to be in position.")
            }
        }
        _ => String::new(),
    }
}

/// Fills a seed-chosen thought template for one planned step.
pub fn render_thought(state: &State, action: &Action, goal: &Goal, set: &ThoughtSet, seed: u64) -> String {
    let choices = set.for_env(state.env());
    let template = choices[SeededRng::new(seed).index(choices.len())];
    template
        .pattern
        .replace("{state}", &render_state(state))
        .replace("{goal}", &render_goal(goal))
        .replace("{rationale}", &rationale(state, action, goal))
        .replace("{tool}", action.tool.name())
        .replace("{input}", &action.render_params())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionStep {
    pub thought: String,
    pub action: Action,
    pub state_after: State,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionTrace {
    pub id: String,
    pub env_id: EnvId,
    pub seed: u64,
    pub goal: Goal,
    pub init_state: State,
    pub steps: Vec<SolutionStep>,
    pub solved: bool,
    /// Whether the plan is proved length-minimal.
    pub optimal: bool,
}

impl SolutionTrace {
    /// Replays the actions; true when every step reproduces its recorded state
    /// and the final state matches `solved`.
    pub fn replays(&self) -> bool {
        let mut cur = self.init_state.clone();
        for step in &self.steps {
            match env::try_step(&cur, &step.action) {
                Ok(next) if next.canonical() == step.state_after.canonical() => cur = next,
                _ => return false,
            }
        }
        env::is_goal(&cur, &self.goal) == self.solved
    }
}

#[derive(Debug, Error)]
pub enum SolutionError {
    #[error("instance seed {seed:#018x}: {source}")]
    Instance { seed: u64, source: toolsim_core::Error },
    #[error("instance seed {seed:#018x}: {source}")]
    Plan { seed: u64, source: toolsim_core::PlanError },
}

/// Plans one instance and annotates every step.
pub fn solve_instance(
    env_id: EnvId,
    instance_seed: u64,
    params: &InstanceParams,
    thoughts: &ThoughtSet,
) -> Result<SolutionTrace, SolutionError> {
    let inst = sample_instance(env_id, instance_seed, params).map_err(|source| SolutionError::Instance {
        seed: instance_seed,
        source,
    })?;
    let plan = planner::plan(&inst.init, &inst.goal).map_err(|source| SolutionError::Plan {
        seed: instance_seed,
        source,
    })?;
    let mut cur = inst.init.clone();
    let mut steps = Vec::with_capacity(plan.len());
    for (i, action) in plan.actions.into_iter().enumerate() {
        let thought = render_thought(&cur, &action, &inst.goal, thoughts, derive_seed(instance_seed, i as u64));
        let next = env::try_step(&cur, &action).expect("planner output is replay-verified");
        steps.push(SolutionStep {
            thought,
            action,
            state_after: next.clone(),
        });
        cur = next;
    }
    Ok(SolutionTrace {
        id: format!("{env_id}-sol-{instance_seed:016x}"),
        env_id,
        seed: instance_seed,
        solved: env::is_goal(&cur, &inst.goal),
        goal: inst.goal,
        init_state: inst.init,
        steps,
        optimal: plan.optimal,
    })
}

/// `n` annotated traces on training-range instance seeds, in index order.
pub fn emit_solution_corpus(
    env_id: EnvId,
    seed: u64,
    n: usize,
    params: &InstanceParams,
    thoughts: &ThoughtSet,
) -> Result<Vec<SolutionTrace>, SolutionError> {
    (0..n as u64)
        .into_par_iter()
        .map(|i| solve_instance(env_id, training_seed(seed, i), params, thoughts))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatTrace {
    pub id: String,
    pub env_id: EnvId,
    pub messages: Vec<ChatMessage>,
}

/// Agent-ready form of a trace: tool docs as the system prompt, one
/// assistant turn per step and the resulting state as the tool's reply.
pub fn to_chat(trace: &SolutionTrace) -> ChatTrace {
    let msg = |role, content: String| ChatMessage { role, content };
    let mut messages = vec![
        msg(Role::System, EnvDescriptor::for_env(trace.env_id).docs_text()),
        msg(
            Role::User,
            format!(
                "Initial state: {}\nGoal: {}",
                render_state(&trace.init_state),
                render_goal(&trace.goal)
            ),
        ),
    ];
    for step in &trace.steps {
        messages.push(msg(
            Role::Assistant,
            format!("Thought: {}\nAction: {}", step.thought, step.action),
        ));
        messages.push(msg(Role::Tool, render_state(&step.state_after)));
    }
    ChatTrace {
        id: trace.id.clone(),
        env_id: trace.env_id,
        messages,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use toolsim_core::env::blocksworld::{BwGoal, BwState, Color};

    #[test]
    fn builtin_thoughts_cover_every_env() {
        let set = ThoughtSet::builtin();
        for env in EnvId::ALL {
            assert_eq!(set.for_env(env).len(), 5);
        }
    }

    #[test]
    fn pick_thought_names_the_block() {
        let state = State::Bw(BwState::new(
            vec![vec![Color::Red, Color::Blue, Color::Yellow, Color::Green]],
            None,
        ));
        let goal = Goal::Bw(BwGoal {
            on: vec![(Color::Green, Support::Block(Color::Yellow))],
        });
        let set = ThoughtSet::builtin();
        for seed in 0..20 {
            let text = render_thought(&state, &Action::pick("green"), &goal, &set, seed);
            assert!(text.contains("green"), "{text}");
            assert!(text.contains("Pick"), "{text}");
            assert_eq!(text, render_thought(&state, &Action::pick("green"), &goal, &set, seed));
        }
    }

    #[test]
    fn template_without_rationale_is_rejected() {
        let line = r#"{"template_id":"x","env_id":"saw","pattern":"{tool} {input}"}"#;
        assert_eq!(ThoughtSet::parse(line), Err(ThoughtError::MissingSlot("x".into())));
    }
}
