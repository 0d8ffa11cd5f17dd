//! Constructive SpellAnyWord planner.
//!
//! Plans are all `Add`s followed by all `Swap`s; any interleaving can be
//! reordered that way. `Swap(c)` only ever moves the leftmost `c`, and that
//! letter can never pass another `c`, so an element is *mobile* exactly when
//! it is the first occurrence of its letter, and mobility never changes.
//! Consequently a final arrangement is reachable from the laid-down string
//! iff every pair it inverts has a mobile left element and two different
//! letters, and the number of swaps needed is the number of inverted pairs.
//!
//! The planner enumerates layouts (for every target letter `c`: `Add(c)` with
//! a junk successor, `Add(pred(c))` with a junk predecessor, or `Add(c)`
//! harvesting the successor as the next target letter), and for each layout
//! decides per junk letter inside the target window whether it leaves to the
//! left (the window letters before it pass it) or to the right (it passes the
//! window letters after it). Layouts are visited in order of a lower bound and
//! solved exactly by branch and bound.

use crate::env::saw::{self, successor, SawGoal, SawState};
use crate::error::PlanError;
use crate::search::{bfs, SearchLimits, SearchOutcome};
use crate::types::{Action, Goal, Param, State, Tool};

use super::{verify_plan, Plan};

/// Depth limit of the search used when no layout works.
pub const FALLBACK_DEPTH: usize = 12;
const FALLBACK_STATES: usize = 200_000;

/// Plan from the empty string.
pub fn plan_saw(goal: &SawGoal) -> Result<Plan, PlanError> {
    plan_saw_from(&SawState::empty(), goal)
}

/// Plan from an arbitrary string; its letters stay in front of the new word.
pub fn plan_saw_from(start: &SawState, goal: &SawGoal) -> Result<Plan, PlanError> {
    goal.validate().map_err(|e| PlanError::BadGoal(e.to_string()))?;
    if saw::is_goal(start, goal) {
        return Ok(Plan {
            actions: Vec::new(),
            optimal: true,
        });
    }
    if let Some(actions) = constructive(start, goal) {
        let init = State::Saw(start.clone());
        if verify_plan(&init, &Goal::Saw(goal.clone()), &actions).is_some() {
            return Ok(Plan {
                actions,
                optimal: false,
            });
        }
    }
    fallback_search(start, goal)
}

/// Cap on the number of layouts considered per goal.
const MAX_LAYOUTS: usize = 50_000;

#[derive(Clone, Debug)]
struct Layout {
    adds: Vec<char>,
    /// Laid-down letters, start string included.
    letters: Vec<char>,
    /// Position of each target letter, in target order. Not necessarily
    /// increasing: a reused letter may sit left of earlier target letters.
    window: Vec<usize>,
}

/// Every way of covering the target letter by letter, with pieces laid down
/// in `order` (a permutation of target indices): `Add(c)` (successor is junk,
/// or is the next target letter), `Add(pred(c))` (predecessor is junk), or
/// reusing a letter already laid down and not yet claimed.
fn layouts(start: &SawState, goal: &SawGoal, order: &[usize]) -> Vec<Layout> {
    let mut cur = Layout {
        adds: Vec::new(),
        letters: start.letters.clone(),
        window: vec![usize::MAX; goal.target.len()],
    };
    let mut out = Vec::new();
    extend_layouts(&goal.target, order, &mut cur, &mut out);
    out
}

fn extend_layouts(t: &[char], order: &[usize], cur: &mut Layout, out: &mut Vec<Layout>) {
    if out.len() >= MAX_LAYOUTS {
        return;
    }
    let Some((&i, rest)) = order.split_first() else {
        out.push(cur.clone());
        return;
    };
    if cur.window[i] != usize::MAX {
        return extend_layouts(t, rest, cur, out);
    }
    let c = t[i];
    let base = cur.letters.len();
    if let Some(next) = successor(c) {
        let can_harvest = rest.first() == Some(&(i + 1)) && t[i + 1] == next;
        for harvest in [true, false] {
            if harvest && !can_harvest {
                continue;
            }
            cur.adds.push(c);
            cur.letters.extend([c, next]);
            cur.window[i] = base;
            if harvest {
                cur.window[i + 1] = base + 1;
            }
            extend_layouts(t, rest, cur, out);
            if harvest {
                cur.window[i + 1] = usize::MAX;
            }
            cur.window[i] = usize::MAX;
            cur.letters.truncate(base);
            cur.adds.pop();
        }
    }
    if c != 'a' {
        let pred = (c as u8 - 1) as char;
        cur.adds.push(pred);
        cur.letters.extend([pred, c]);
        cur.window[i] = base + 1;
        extend_layouts(t, rest, cur, out);
        cur.window[i] = usize::MAX;
        cur.letters.truncate(base);
        cur.adds.pop();
    }
    for p in 0..base {
        if cur.letters[p] == c && !cur.window.contains(&p) {
            cur.window[i] = p;
            extend_layouts(t, rest, cur, out);
            cur.window[i] = usize::MAX;
        }
    }
}

/// Piece orders in the order they are tried: target order, then one piece
/// moved to the front or the end, then two such moves.
fn order_tiers(k: usize) -> Vec<Vec<Vec<usize>>> {
    let moves = |order: &[usize]| -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for pos in 0..k {
            let mut front = order.to_vec();
            let x = front.remove(pos);
            let mut back = front.clone();
            front.insert(0, x);
            back.push(x);
            out.push(front);
            out.push(back);
        }
        out
    };
    let identity: Vec<usize> = (0..k).collect();
    let mut seen = std::collections::BTreeSet::from([identity.clone()]);
    let mut tiers = vec![vec![identity]];
    for _ in 0..2 {
        let next: Vec<Vec<usize>> = tiers
            .last()
            .unwrap()
            .iter()
            .flat_map(|o| moves(o))
            .filter(|o| seen.insert(o.clone()))
            .collect();
        tiers.push(next);
    }
    tiers
}

fn span(window: &[usize]) -> (usize, usize) {
    let first = *window.iter().min().expect("targets are non-empty");
    let last = *window.iter().max().expect("targets are non-empty");
    (first, last)
}

fn mobile_at(letters: &[char], p: usize) -> bool {
    !letters[..p].contains(&letters[p])
}

/// Which side each inner junk letter leaves the window on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

struct Solver<'a> {
    letters: &'a [char],
    mobile: Vec<bool>,
    window: &'a [usize],
    /// Non-target positions between the outermost target letters.
    inner: Vec<usize>,
    /// Swaps needed to put the target letters themselves in order, if they
    /// can be.
    reorder: Option<usize>,
    best_cost: usize,
    best: Option<Vec<Side>>,
}

impl<'a> Solver<'a> {
    fn new(layout: &'a Layout) -> Self {
        let letters = &layout.letters;
        let mobile = (0..letters.len()).map(|i| mobile_at(letters, i)).collect();
        let (first, last) = span(&layout.window);
        let inner = (first..=last)
            .filter(|p| !layout.window.contains(p))
            .collect();
        let window = &layout.window;
        let mut reorder = Some(0);
        for (i, &a) in window.iter().enumerate() {
            for &b in &window[i + 1..] {
                if b < a {
                    let ok = mobile_at(letters, b) && letters[a] != letters[b];
                    reorder = reorder.filter(|_| ok).map(|n| n + 1);
                }
            }
        }
        Self {
            letters,
            mobile,
            window,
            inner,
            reorder,
            best_cost: usize::MAX,
            best: None,
        }
    }

    /// Cost of sending junk `x` left, if the window letters before it can
    /// all pass it.
    fn left_cost(&self, x: usize) -> Option<usize> {
        let passing: Vec<usize> = self.window.iter().copied().filter(|&w| w < x).collect();
        passing
            .iter()
            .all(|&w| self.mobile[w] && self.letters[w] != self.letters[x])
            .then_some(passing.len())
    }

    /// Cost of sending junk `y` right past the window letters after it.
    fn right_cost(&self, y: usize) -> Option<usize> {
        if !self.mobile[y] {
            return None;
        }
        let passed: Vec<usize> = self.window.iter().copied().filter(|&w| w > y).collect();
        passed
            .iter()
            .all(|&w| self.letters[w] != self.letters[y])
            .then_some(passed.len())
    }

    fn lower_bound(&self) -> Option<usize> {
        self.inner.iter().try_fold(self.reorder?, |acc, &x| {
            let l = self.left_cost(x);
            let r = self.right_cost(x);
            match (l, r) {
                (None, None) => None,
                (a, b) => Some(acc + a.unwrap_or(usize::MAX).min(b.unwrap_or(usize::MAX))),
            }
        })
    }

    /// Branch and bound from the rightmost inner junk leftwards, so that the
    /// left-goers after a right-goer are known when it is decided.
    fn solve(&mut self) {
        let Some(reorder) = self.reorder else {
            return;
        };
        let n = self.inner.len();
        let costs: Vec<(Option<usize>, Option<usize>)> = self
            .inner
            .iter()
            .map(|&x| (self.left_cost(x), self.right_cost(x)))
            .collect();
        // Minimal remaining cost of inner[..i].
        let mut floor = vec![0usize; n + 1];
        for i in 0..n {
            let (l, r) = costs[i];
            let m = l.unwrap_or(usize::MAX).min(r.unwrap_or(usize::MAX));
            floor[i + 1] = floor[i].saturating_add(m);
        }
        let mut sides = vec![Side::Left; n];
        let mut lefts_after: Vec<usize> = Vec::new();
        self.branch(n, reorder, &costs, &floor, &mut sides, &mut lefts_after);
    }

    fn branch(
        &mut self,
        i: usize,
        cost: usize,
        costs: &[(Option<usize>, Option<usize>)],
        floor: &[usize],
        sides: &mut Vec<Side>,
        lefts_after: &mut Vec<usize>,
    ) {
        if cost.saturating_add(floor[i]) >= self.best_cost {
            return;
        }
        if i == 0 {
            self.best_cost = cost;
            self.best = Some(sides.clone());
            return;
        }
        let idx = i - 1;
        let x = self.inner[idx];
        let (l, r) = costs[idx];
        if let Some(c) = l {
            sides[idx] = Side::Left;
            lefts_after.push(x);
            self.branch(idx, cost + c, costs, floor, sides, lefts_after);
            lefts_after.pop();
        }
        if let Some(c) = r {
            let crossings = lefts_after.len();
            if lefts_after.iter().all(|&z| self.letters[z] != self.letters[x]) {
                sides[idx] = Side::Right;
                self.branch(idx, cost + c + crossings, costs, floor, sides, lefts_after);
            }
        }
    }
}

/// Swaps that turn `letters` into the arrangement with the target letters in
/// order and the inner junk gone to its chosen side.
fn swaps_for(layout: &Layout, inner: &[usize], sides: &[Side]) -> Vec<Action> {
    let n = layout.letters.len();
    let (first, last) = span(&layout.window);
    let side_of = |p: usize| inner.iter().position(|&q| q == p).map(|i| sides[i]);
    // Final order: before-window and left-goers, window, right-goers and
    // after-window, each group in original order.
    let mut order: Vec<usize> = (0..n)
        .filter(|&p| p < first || side_of(p) == Some(Side::Left))
        .collect();
    order.extend(layout.window.iter().copied());
    order.extend((0..n).filter(|&p| p > last || side_of(p) == Some(Side::Right)));
    let mut rank = vec![0usize; n];
    for (r, &p) in order.iter().enumerate() {
        rank[p] = r;
    }
    let mut cur: Vec<usize> = (0..n).collect();
    let mut swaps = Vec::new();
    while let Some(i) = (0..n.saturating_sub(1)).find(|&i| rank[cur[i]] > rank[cur[i + 1]]) {
        swaps.push(Action::swap(layout.letters[cur[i]]));
        cur.swap(i, i + 1);
    }
    swaps
}

/// Cheapest constructive plan over all layouts, or `None` when no layout can
/// clear its window.
pub fn constructive(start: &SawState, goal: &SawGoal) -> Option<Vec<Action>> {
    constructive_tiers(start, goal, usize::MAX)
}

/// Like [`constructive`], but only lays the target pieces down in target
/// order. Much cheaper when it fails, at the price of missing plans that
/// need a reordered layout.
pub fn constructive_in_order(start: &SawState, goal: &SawGoal) -> Option<Vec<Action>> {
    constructive_tiers(start, goal, 1)
}

fn constructive_tiers(start: &SawState, goal: &SawGoal, max_tiers: usize) -> Option<Vec<Action>> {
    order_tiers(goal.target.len()).into_iter().take(max_tiers).find_map(|tier| {
        let layouts = tier.iter().flat_map(|o| layouts(start, goal, o)).collect();
        best_layout(layouts)
    })
}

fn best_layout(layouts: Vec<Layout>) -> Option<Vec<Action>> {
    let mut candidates: Vec<(usize, usize, Layout)> = layouts
        .into_iter()
        .enumerate()
        .filter_map(|(i, layout)| {
            let bound = Solver::new(&layout).lower_bound()?;
            Some((layout.adds.len() + bound, i, layout))
        })
        .collect();
    candidates.sort_by_key(|&(bound, i, _)| (bound, i));

    let mut best: Option<(usize, Vec<Action>)> = None;
    for (bound, _, layout) in &candidates {
        if best.as_ref().is_some_and(|(c, _)| *c <= *bound) {
            break;
        }
        let mut solver = Solver::new(layout);
        solver.solve();
        let Some(sides) = solver.best.clone() else {
            continue;
        };
        let total = layout.adds.len() + solver.best_cost;
        if best.as_ref().is_none_or(|(c, _)| total < *c) {
            let mut actions: Vec<Action> = layout.adds.iter().map(|&c| Action::add(c)).collect();
            actions.extend(swaps_for(layout, &solver.inner, &sides));
            debug_assert_eq!(actions.len(), total);
            best = Some((total, actions));
        }
    }
    best.map(|(_, a)| a)
}

fn add_letter(a: &Action) -> Option<char> {
    match (a.tool, a.params.first()) {
        (Tool::Add, Some(Param::Sym(s))) => s.chars().next(),
        _ => None,
    }
}

/// Breadth-first search restricted to `Add`s that can contribute a target
/// letter, plus every `Swap`.
fn fallback_search(start: &SawState, goal: &SawGoal) -> Result<Plan, PlanError> {
    let useful = |c: char| {
        goal.target
            .iter()
            .any(|&t| t == c || successor(c) == Some(t))
    };
    let successors = |s: &SawState| -> Vec<(Action, SawState)> {
        saw::successors(s)
            .into_iter()
            .filter(|(a, _)| add_letter(a).is_none_or(useful))
            .collect()
    };
    let limits = SearchLimits {
        max_depth: FALLBACK_DEPTH,
        max_states: FALLBACK_STATES,
    };
    match bfs(start, |s| saw::is_goal(s, goal), successors, limits) {
        SearchOutcome::Found(actions) => Ok(Plan {
            actions,
            optimal: false,
        }),
        SearchOutcome::Unreachable => Err(PlanError::Unsolvable),
        SearchOutcome::Budget(n) => Err(PlanError::BudgetExceeded(n)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::saw::step;

    fn replay(actions: &[Action]) -> Vec<String> {
        let mut s = SawState::empty();
        actions
            .iter()
            .map(|a| {
                s = step(&s, a).unwrap();
                s.word()
            })
            .collect()
    }

    #[test]
    fn reproduces_the_any_example() {
        let plan = plan_saw(&SawGoal::parse("any").unwrap()).unwrap();
        assert_eq!(
            plan.actions,
            [
                Action::add('a'),
                Action::add('n'),
                Action::add('y'),
                Action::swap('a'),
                Action::swap('o')
            ]
        );
        assert_eq!(replay(&plan.actions), ["ab", "abno", "abnoyz", "banoyz", "banyoz"]);
    }

    #[test]
    fn harvests_successor_letters() {
        let plan = plan_saw(&SawGoal::parse("ab").unwrap()).unwrap();
        assert_eq!(plan.actions, [Action::add('a')]);
    }

    #[test]
    fn z_targets_come_from_y() {
        let plan = plan_saw(&SawGoal::parse("zz").unwrap()).unwrap();
        assert_eq!(plan.actions, [Action::add('y'), Action::add('y'), Action::swap('z')]);
        assert_eq!(replay(&plan.actions).last().unwrap(), "yyzz");
    }

    #[test]
    fn repeated_letters() {
        for word in ["aa", "abab", "momh", "eeuassb", "oujwdwjy", "bear", "yuz", "aag"] {
            let goal = SawGoal::parse(word).unwrap();
            let plan = plan_saw(&goal).unwrap();
            let last = replay(&plan.actions).pop().unwrap();
            assert!(last.contains(word), "{word}: {last}");
        }
    }

    #[test]
    fn triple_letter_without_predecessor_is_unreachable() {
        // Only the first 'a' can move, and each later 'a' is followed by its
        // own 'b' that nothing can displace.
        let goal = SawGoal::parse("aaa").unwrap();
        assert!(constructive(&SawState::empty(), &goal).is_none());
        assert!(plan_saw(&goal).is_err());
    }

    #[test]
    fn plans_from_a_non_empty_start() {
        let start = SawState::parse("qrab").unwrap();
        let goal = SawGoal::parse("bad").unwrap();
        let plan = plan_saw_from(&start, &goal).unwrap();
        let mut s = start;
        for a in &plan.actions {
            s = step(&s, a).unwrap();
        }
        assert!(saw::is_goal(&s, &goal));
    }
}
