use std::collections::BTreeMap;

use crate::env::blocksworld::{self, BwGoal, BwState, Color, Support};
use crate::error::PlanError;
use crate::search::{bfs, SearchLimits, SearchOutcome};
use crate::types::{Action, Goal, State};

use super::{remove_cycles, verify_plan, Plan};

/// Instances up to this many blocks are planned optimally by BFS.
pub const BFS_MAX_BLOCKS: usize = 4;

pub fn plan_bw(init: &BwState, goal: &BwGoal) -> Result<Plan, PlanError> {
    goal.validate_for(init)
        .map_err(|e| PlanError::BadGoal(e.to_string()))?;
    if init.block_count() <= BFS_MAX_BLOCKS {
        return plan_bw_bfs(init, goal);
    }
    plan_bw_heuristic(init, goal).or_else(|_| plan_bw_bfs(init, goal))
}

/// Shortest plan by exhaustive breadth-first search.
pub fn plan_bw_bfs(init: &BwState, goal: &BwGoal) -> Result<Plan, PlanError> {
    let init = init.canonical();
    match bfs(
        &init,
        |s| blocksworld::is_goal(s, goal),
        blocksworld::successors,
        SearchLimits::default(),
    ) {
        SearchOutcome::Found(actions) => Ok(Plan {
            actions,
            optimal: true,
        }),
        SearchOutcome::Unreachable => Err(PlanError::Unsolvable),
        SearchOutcome::Budget(n) => Err(PlanError::BudgetExceeded(n)),
    }
}

/// Put the held block down, unstack everything onto the table, then build
/// the goal towers bottom-up. At most two Pick/Stack pairs per block.
pub fn plan_bw_heuristic(init: &BwState, goal: &BwGoal) -> Result<Plan, PlanError> {
    goal.validate_for(init)
        .map_err(|e| PlanError::BadGoal(e.to_string()))?;
    if blocksworld::is_goal(init, goal) {
        return Ok(Plan {
            actions: Vec::new(),
            optimal: true,
        });
    }
    let mut actions = Vec::new();
    if init.hand.is_some() {
        actions.push(Action::stack("table"));
    }
    for stack in &init.canonical().stacks {
        for &block in stack.iter().skip(1).rev() {
            actions.push(Action::pick(block.name()));
            actions.push(Action::stack("table"));
        }
    }
    // Goal towers: each block's goal support, followed upwards.
    let above: BTreeMap<Color, Color> = goal
        .on
        .iter()
        .filter_map(|&(a, s)| match s {
            Support::Block(b) => Some((b, a)),
            Support::Table => None,
        })
        .collect();
    let roots = init
        .blocks()
        .into_iter()
        .filter(|&c| !matches!(goal.support_of(c), Some(Support::Block(_))));
    for root in roots {
        let mut cur = root;
        while let Some(&next) = above.get(&cur) {
            actions.push(Action::pick(next.name()));
            actions.push(Action::stack(cur.name()));
            cur = next;
        }
    }
    let start = State::Bw(init.clone());
    let actions = remove_cycles(&start, &actions);
    verify_plan(&start, &Goal::Bw(goal.clone()), &actions).ok_or(PlanError::Unsolvable)?;
    Ok(Plan {
        actions,
        optimal: false,
    })
}
