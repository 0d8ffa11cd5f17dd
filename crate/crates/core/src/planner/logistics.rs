use crate::env::logistics::{self, City, LocationId, LogGoal, LogState};
use crate::error::PlanError;
use crate::search::{bfs, SearchLimits, SearchOutcome};
use crate::types::{Action, Goal, State};

use super::{remove_cycles, verify_plan, Plan};

/// BFS is used for the optimality check (and as a fallback) while the
/// search stays under this many states.
pub const BFS_STATE_BUDGET: usize = 200_000;

pub fn plan_log(init: &LogState, goal: &LogGoal) -> Result<Plan, PlanError> {
    goal.validate_for(init)
        .map_err(|e| PlanError::BadGoal(e.to_string()))?;
    let optimum = plan_log_bfs(init, goal);
    let start = State::Log(init.clone());
    let wrapped = Goal::Log(goal.clone());
    if let Some(actions) = route(init, goal) {
        let actions = remove_cycles(&start, &actions);
        if verify_plan(&start, &wrapped, &actions).is_some() {
            let optimal = matches!(&optimum, Ok(p) if p.len() == actions.len());
            return Ok(Plan { actions, optimal });
        }
    }
    optimum
}

pub fn plan_log_bfs(init: &LogState, goal: &LogGoal) -> Result<Plan, PlanError> {
    let limits = SearchLimits {
        max_depth: usize::MAX,
        max_states: BFS_STATE_BUDGET,
    };
    match bfs(
        init,
        |s| logistics::is_goal(s, goal),
        logistics::successors,
        limits,
    ) {
        SearchOutcome::Found(actions) => Ok(Plan {
            actions,
            optimal: true,
        }),
        SearchOutcome::Unreachable => Err(PlanError::Unsolvable),
        SearchOutcome::Budget(n) => Err(PlanError::BudgetExceeded(n)),
    }
}

/// Route decomposition: truck to the origin airport, fly, truck to the
/// target, with vehicle repositioning moves where needed. Simulated as it is
/// built; `None` when some leg has no vehicle.
pub fn route(init: &LogState, goal: &LogGoal) -> Option<Vec<Action>> {
    let mut plan = Planner {
        state: init.clone(),
        actions: Vec::new(),
    };
    let pkg = &goal.package;
    let here = *plan.state.packages.get(pkg)?;
    let target = goal.target_location;
    let origin = plan.state.city_of(here)?.clone();
    let dest = plan.state.city_of(target)?.clone();
    if origin.id == dest.id {
        plan.truck_package(&origin, here, target)?;
    } else {
        plan.truck_package(&origin, here, origin.airport)?;
        plan.fly_package(origin.airport, dest.airport)?;
        plan.truck_package(&dest, dest.airport, target)?;
    }
    Some(plan.actions)
}

struct Planner {
    state: LogState,
    actions: Vec<Action>,
}

impl Planner {
    fn apply(&mut self, action: Action) -> Option<()> {
        self.state = logistics::step(&self.state, &action).ok()?;
        self.actions.push(action);
        Some(())
    }

    /// Moves whatever is at `from` to `to` by truck, fetching a truck of the
    /// city first if none is at `from`.
    fn truck_package(&mut self, city: &City, from: LocationId, to: LocationId) -> Option<()> {
        if from == to {
            return Some(());
        }
        if !self.state.trucks.values().any(|&l| l == from) {
            let at = *self
                .state
                .trucks
                .values()
                .find(|l| city.locations.contains(l))?;
            self.apply(Action::truck(at, from))?;
        }
        self.apply(Action::truck(from, to))
    }

    fn fly_package(&mut self, from: LocationId, to: LocationId) -> Option<()> {
        if !self.state.planes.values().any(|&l| l == from) {
            let at = *self.state.planes.values().next()?;
            self.apply(Action::plane(at, from))?;
        }
        self.apply(Action::plane(from, to))
    }
}
