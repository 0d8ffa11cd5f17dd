//! Breadth-first search over canonical states.

use std::collections::{HashMap, VecDeque};
use std::hash::Hash;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchLimits {
    pub max_depth: usize,
    pub max_states: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        Self {
            max_depth: usize::MAX,
            max_states: 500_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome<A> {
    Found(Vec<A>),
    /// Exhausted the reachable space (within the depth limit) without a goal.
    Unreachable,
    /// Hit the state budget.
    Budget(usize),
}

/// Shortest action sequence from `start` to a goal state. Successors are
/// expanded in the order `successors` returns them, so the result is
/// deterministic.
pub fn bfs<S, A, G, F>(start: &S, is_goal: G, successors: F, limits: SearchLimits) -> SearchOutcome<A>
where
    S: Clone + Eq + Hash,
    A: Clone,
    G: Fn(&S) -> bool,
    F: Fn(&S) -> Vec<(A, S)>,
{
    if is_goal(start) {
        return SearchOutcome::Found(Vec::new());
    }
    // state -> (parent, action, depth)
    let mut parents: HashMap<S, Option<(S, A)>> = HashMap::new();
    let mut depth: HashMap<S, usize> = HashMap::new();
    parents.insert(start.clone(), None);
    depth.insert(start.clone(), 0);
    let mut queue = VecDeque::from([start.clone()]);
    while let Some(s) = queue.pop_front() {
        let d = depth[&s];
        if d >= limits.max_depth {
            continue;
        }
        for (a, next) in successors(&s) {
            if parents.contains_key(&next) {
                continue;
            }
            parents.insert(next.clone(), Some((s.clone(), a)));
            depth.insert(next.clone(), d + 1);
            if is_goal(&next) {
                return SearchOutcome::Found(unwind(&parents, next));
            }
            if parents.len() >= limits.max_states {
                return SearchOutcome::Budget(parents.len());
            }
            queue.push_back(next);
        }
    }
    SearchOutcome::Unreachable
}

fn unwind<S: Clone + Eq + Hash, A: Clone>(parents: &HashMap<S, Option<(S, A)>>, mut s: S) -> Vec<A> {
    let mut out = Vec::new();
    while let Some(Some((p, a))) = parents.get(&s) {
        out.push(a.clone());
        s = p.clone();
    }
    out.reverse();
    out
}

/// Number of states reachable from `start` (capped at `limit`).
pub fn reachable_count<S, A, F>(start: &S, successors: F, limit: usize) -> usize
where
    S: Clone + Eq + Hash,
    F: Fn(&S) -> Vec<(A, S)>,
{
    let mut seen = std::collections::HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start.clone()]);
    while let Some(s) = queue.pop_front() {
        for (_, n) in successors(&s) {
            if seen.len() >= limit {
                return seen.len();
            }
            if seen.insert(n.clone()) {
                queue.push_back(n);
            }
        }
    }
    seen.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: i32) -> impl Fn(&i32) -> Vec<(i32, i32)> {
        move |&s| {
            [-1, 1]
                .into_iter()
                .map(|d| (d, s + d))
                .filter(|(_, x)| (0..=n).contains(x))
                .collect()
        }
    }

    #[test]
    fn finds_shortest_path() {
        let out = bfs(&0, |&s| s == 5, line(10), SearchLimits::default());
        assert_eq!(out, SearchOutcome::Found(vec![1; 5]));
    }

    #[test]
    fn reports_unreachable_and_budget() {
        assert_eq!(
            bfs(&0, |&s| s == 50, line(10), SearchLimits::default()),
            SearchOutcome::Unreachable
        );
        let tight = SearchLimits {
            max_depth: usize::MAX,
            max_states: 3,
        };
        assert!(matches!(bfs(&0, |&s| s == 9, line(10), tight), SearchOutcome::Budget(_)));
        assert_eq!(reachable_count(&0, line(10), 100), 11);
    }
}
