use std::collections::HashSet;

use toolsim_core::env::blocksworld::{self, BwState};
use toolsim_core::env::saw::{self, SawGoal, SawState};
use toolsim_core::env::{self, sample_instance, InstanceParams};
use toolsim_core::planner::blocksworld::{plan_bw_bfs, plan_bw_heuristic};
use toolsim_core::planner::{self, verify_plan};
use toolsim_core::rng::derive_seed;
use toolsim_core::{hash_state, EnvId, Goal, Instance, State};

fn instances(env_id: EnvId, n: u64, params: &InstanceParams) -> Vec<Instance> {
    (0..n)
        .map(|i| sample_instance(env_id, derive_seed(11, i), params).unwrap())
        .collect()
}

fn assert_sound(inst: &Instance, actions: &[toolsim_core::Action]) {
    let states = verify_plan(&inst.init, &inst.goal, actions)
        .unwrap_or_else(|| panic!("plan for seed {} does not replay to the goal", inst.seed));
    // No state is visited twice, which also rules out self-inverting pairs.
    let mut seen = HashSet::from([hash_state(&inst.init)]);
    for s in &states {
        assert!(seen.insert(hash_state(s)), "seed {} revisits a state", inst.seed);
    }
}

#[test]
fn saw_plans_are_sound_and_within_the_length_bound() {
    for inst in instances(EnvId::Saw, 2000, &InstanceParams::default()) {
        let plan = planner::plan(&inst.init, &inst.goal).unwrap();
        assert_sound(&inst, &plan.actions);
        let Goal::Saw(g) = &inst.goal else { unreachable!() };
        assert!(
            plan.len() <= 3 * g.target.len() + 20,
            "{} needs {} steps",
            g.word(),
            plan.len()
        );
    }
}

#[test]
fn saw_sampling_only_redraws_a_small_fraction() {
    let mut redrawn = 0;
    for i in 0..2000u64 {
        let seed = derive_seed(12, i);
        let inst = sample_instance(EnvId::Saw, seed, &InstanceParams::default()).unwrap();
        let raw = saw::sample_goal_with(&mut toolsim_core::rng::SeededRng::new(seed), 2, 10);
        if Goal::Saw(raw) != inst.goal {
            redrawn += 1;
        }
    }
    assert!(redrawn < 2000 / 20, "{redrawn} redrawn");
}

#[test]
fn saw_short_goals_match_bfs_reachability() {
    // Every target of length 3 over a few letters: whenever breadth-first
    // search finds a plan within its depth limit, so does the planner.
    let letters = ['a', 'b', 'y', 'z'];
    for a in letters {
        for b in letters {
            for c in letters {
                let word: String = [a, b, c].iter().collect();
                let goal = SawGoal::parse(&word).unwrap();
                let bfs = toolsim_core::search::bfs(
                    &SawState::empty(),
                    |s| saw::is_goal(s, &goal),
                    saw::successors,
                    toolsim_core::search::SearchLimits { max_depth: 8, max_states: 400_000 },
                );
                let planned = toolsim_core::planner::saw::plan_saw(&goal);
                let found = matches!(bfs, toolsim_core::search::SearchOutcome::Found(_));
                assert!(planned.is_ok() || !found, "{word}");
            }
        }
    }
}

#[test]
fn bw_heuristic_never_beats_bfs() {
    let params = InstanceParams::default();
    for inst in instances(EnvId::Bw, 200, &params) {
        let (State::Bw(s), Goal::Bw(g)) = (&inst.init, &inst.goal) else { unreachable!() };
        let bfs = plan_bw_bfs(s, g).unwrap();
        let heuristic = plan_bw_heuristic(s, g).unwrap();
        assert!(bfs.optimal);
        assert!(heuristic.len() >= bfs.len());
        assert_sound(&inst, &bfs.actions);
        assert_sound(&inst, &heuristic.actions);
    }
}

#[test]
fn bw_instances_are_solvable_and_never_start_solved() {
    for n in 3..=6 {
        let params = InstanceParams { bw_blocks: n, ..Default::default() };
        for inst in instances(EnvId::Bw, 250, &params) {
            assert!(!env::is_goal(&inst.init, &inst.goal));
            let plan = planner::plan(&inst.init, &inst.goal).unwrap();
            assert_sound(&inst, &plan.actions);
            let State::Bw(s) = &inst.init else { unreachable!() };
            assert!(plan.len() <= 4 * s.block_count());
        }
    }
}

#[test]
fn bw_bfs_is_minimal_on_the_full_four_block_space() {
    // Depth-limited search strictly below the BFS plan length finds nothing,
    // from a spread of states of one 4-block instance.
    let (init, goal) = blocksworld::sample_instance(3, 4).unwrap();
    let states: Vec<BwState> = {
        let mut all = vec![init.canonical()];
        let mut seen = HashSet::from([hash_state(&State::Bw(init.clone()))]);
        let mut i = 0;
        while i < all.len() {
            for (_, n) in blocksworld::successors(&all[i]) {
                if seen.insert(hash_state(&State::Bw(n.clone()))) {
                    all.push(n.canonical());
                }
            }
            i += 1;
        }
        all
    };
    for s in states.iter().step_by(7) {
        let plan = plan_bw_bfs(s, &goal).unwrap();
        for shorter in 0..plan.len() {
            let reached = toolsim_core::search::bfs(
                s,
                |x| blocksworld::is_goal(x, &goal),
                blocksworld::successors,
                toolsim_core::search::SearchLimits { max_depth: shorter, max_states: usize::MAX },
            );
            assert!(!matches!(reached, toolsim_core::search::SearchOutcome::Found(_)));
        }
    }
}

#[test]
fn log_plans_are_sound_and_use_planes_across_cities() {
    for inst in instances(EnvId::Log, 1000, &InstanceParams::default()) {
        let plan = planner::plan(&inst.init, &inst.goal).unwrap();
        assert_sound(&inst, &plan.actions);
        let (State::Log(s), Goal::Log(g)) = (&inst.init, &inst.goal) else { unreachable!() };
        let from = s.city_of(s.packages[&g.package]).unwrap().id;
        let to = s.city_of(g.target_location).unwrap().id;
        if from != to {
            assert!(plan.actions.iter().any(|a| a.tool == toolsim_core::Tool::Plane));
        }
        let planes: Vec<u32> = s.planes.values().copied().collect();
        assert!(planes.iter().all(|&l| s.is_airport(l)));
    }
}

#[test]
fn larger_log_layouts_plan() {
    let params = InstanceParams { log_cities: 3, log_locs_per_city: 4, ..Default::default() };
    for inst in instances(EnvId::Log, 100, &params) {
        let plan = planner::plan(&inst.init, &inst.goal).unwrap();
        assert_sound(&inst, &plan.actions);
    }
}
