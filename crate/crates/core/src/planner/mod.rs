//! Goal-directed planners. Every plan returned here has been replayed through
//! the environment and ends in a goal state.

pub mod blocksworld;
pub mod logistics;
pub mod saw;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::env;
use crate::error::PlanError;
use crate::hash::hash_state;
use crate::types::{Action, Goal, State};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub actions: Vec<Action>,
    /// True only when no shorter plan exists (proved by exhaustive search).
    pub optimal: bool,
}

impl Plan {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Plans from `init` to `goal` with the environment's planner.
pub fn plan(init: &State, goal: &Goal) -> Result<Plan, PlanError> {
    match (init, goal) {
        (State::Saw(s), Goal::Saw(g)) => saw::plan_saw_from(s, g),
        (State::Bw(s), Goal::Bw(g)) => blocksworld::plan_bw(s, g),
        (State::Log(s), Goal::Log(g)) => logistics::plan_log(s, g),
        _ => Err(PlanError::BadGoal("goal and state come from different environments".into())),
    }
}

/// Replays `actions` from `init`; returns the visited states (excluding
/// `init`) when every step is executable and the last state satisfies `goal`.
pub fn verify_plan(init: &State, goal: &Goal, actions: &[Action]) -> Option<Vec<State>> {
    let mut cur = init.clone();
    let mut states = Vec::with_capacity(actions.len());
    for a in actions {
        cur = env::try_step(&cur, a).ok()?;
        states.push(cur.clone());
    }
    env::is_goal(&cur, goal).then_some(states)
}

/// Cuts every cycle out of an executable action sequence so that no state is
/// visited twice. The result reaches the same final state.
pub fn remove_cycles(init: &State, actions: &[Action]) -> Vec<Action> {
    let mut states = vec![init.canonical()];
    let mut kept: Vec<Action> = Vec::with_capacity(actions.len());
    let mut index: HashMap<u64, usize> = HashMap::from([(hash_state(init), 0)]);
    let mut cur = init.clone();
    for (pos, a) in actions.iter().enumerate() {
        let Ok(next) = env::try_step(&cur, a) else {
            // Not executable: leave the remainder untouched for the caller's
            // verification to reject.
            kept.extend(actions[pos..].iter().cloned());
            return kept;
        };
        let h = hash_state(&next);
        match index.get(&h) {
            Some(&i) if states[i] == next.canonical() => {
                for s in states.drain(i + 1..) {
                    index.remove(&hash_state(&s));
                }
                kept.truncate(i);
            }
            _ => {
                kept.push(a.clone());
                states.push(next.canonical());
                index.insert(h, states.len() - 1);
            }
        }
        cur = next;
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::blocksworld::BwState;
    use crate::env::blocksworld::Color::*;

    #[test]
    fn cycles_are_cut() {
        let init = State::Bw(BwState::new(vec![vec![Red, Blue], vec![Green]], None));
        let actions = [
            Action::pick("blue"),
            Action::stack("table"),
            Action::pick("blue"),
            Action::stack("green"),
        ];
        let kept = remove_cycles(&init, &actions);
        assert_eq!(kept, [Action::pick("blue"), Action::stack("green")]);
    }
}
