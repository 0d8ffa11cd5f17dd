use proptest::prelude::*;

use toolsim_core::env::blocksworld::{self, BwState, Color};
use toolsim_core::env::saw::{self, SawState};
use toolsim_core::env::{self, sample_instance, InstanceParams};
use toolsim_core::{hash_state, Action, EnvId, State, StepOutcome};

fn word() -> impl Strategy<Value = Vec<char>> {
    prop::collection::vec(prop::sample::select(('a'..='z').collect::<Vec<_>>()), 0..14)
}

fn saw_action() -> impl Strategy<Value = Action> {
    (any::<bool>(), prop::sample::select(('a'..='z').collect::<Vec<_>>()))
        .prop_map(|(add, c)| if add { Action::add(c) } else { Action::swap(c) })
}

fn bw_state() -> impl Strategy<Value = BwState> {
    (3usize..=6, any::<u64>(), any::<bool>()).prop_map(|(n, seed, hold)| {
        let (s, _) = blocksworld::sample_instance(seed, n).unwrap();
        if hold {
            let succ = blocksworld::successors(&s);
            succ[seed as usize % succ.len()].1.clone()
        } else {
            s
        }
    })
}

fn bw_action() -> impl Strategy<Value = Action> {
    let names: Vec<&'static str> = Color::PALETTE.iter().map(|c| c.name()).chain(["table", "purple"]).collect();
    (any::<bool>(), prop::sample::select(names))
        .prop_map(|(pick, n)| if pick { Action::pick(n) } else { Action::stack(n) })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn saw_step_is_deterministic_and_pure(letters in word(), a in saw_action()) {
        let s = State::Saw(SawState { letters });
        let before = s.clone();
        let first = env::step(&s, &a);
        prop_assert_eq!(&first, &env::step(&s, &a));
        prop_assert_eq!(&s, &before);
        if let StepOutcome::Success { state_after } = &first {
            prop_assert_ne!(state_after, &s);
        }
    }

    #[test]
    fn saw_add_grows_by_two_and_swap_permutes(letters in word(), a in saw_action()) {
        let s = SawState { letters: letters.clone() };
        if let Ok(next) = saw::step(&s, &a) {
            let mut before = letters.clone();
            let mut after = next.letters.clone();
            if a.tool == toolsim_core::Tool::Add {
                prop_assert_eq!(after.len(), before.len() + 2);
                prop_assert_eq!(&after[..before.len()], &before[..]);
            } else {
                before.sort();
                after.sort();
                prop_assert_eq!(before, after);
            }
        }
    }

    #[test]
    fn saw_swap_is_an_index_level_involution(letters in word(), c in prop::sample::select(('a'..='z').collect::<Vec<_>>())) {
        let s = SawState { letters: letters.clone() };
        if let Ok(next) = saw::step(&s, &Action::swap(c)) {
            let i = saw::swap_index(&letters, c).unwrap();
            let mut back = next.letters.clone();
            back.swap(i, i + 1);
            prop_assert_eq!(back, letters);
        }
    }

    #[test]
    fn bw_steps_conserve_blocks_and_hold_at_most_one(s in bw_state(), actions in prop::collection::vec(bw_action(), 0..12)) {
        let mut cur = s.clone();
        let mut blocks = s.blocks();
        blocks.sort();
        for a in &actions {
            if let Ok(next) = blocksworld::step(&cur, a) {
                let mut now = next.blocks();
                now.sort();
                prop_assert_eq!(&now, &blocks);
                next.validate().unwrap();
                cur = next;
            }
        }
    }

    #[test]
    fn canonicalization_is_idempotent_and_hash_respects_it(s in bw_state()) {
        let mut shuffled = s.clone();
        shuffled.stacks.reverse();
        let a = State::Bw(shuffled);
        let b = State::Bw(s);
        prop_assert_eq!(a.canonical().canonical(), a.canonical());
        prop_assert_eq!(hash_state(&a), hash_state(&b));
    }

    #[test]
    fn records_round_trip_through_json(env_idx in 0usize..3, seed in any::<u64>()) {
        let env_id = EnvId::ALL[env_idx];
        let inst = sample_instance(env_id, seed, &InstanceParams::default()).unwrap();
        for (a, outcome) in env::enumerate_actions(&inst.init) {
            let json = serde_json::to_string(&(&a, &outcome)).unwrap();
            let back: (Action, StepOutcome) = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(back, (a, outcome));
        }
        let json = serde_json::to_string(&inst.init).unwrap();
        let back: State = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back.canonical(), inst.init.canonical());
    }
}

#[test]
fn reachable_saw_strings_have_even_length() {
    let mut frontier = vec![SawState::empty()];
    for _ in 0..3 {
        let mut next = Vec::new();
        for s in &frontier {
            for (_, t) in saw::successors(s) {
                assert_eq!(t.letters.len() % 2, 0);
                next.push(t);
            }
        }
        next.sort_by(|a, b| a.letters.cmp(&b.letters));
        next.dedup();
        frontier = next;
    }
    assert!(frontier.len() > 10_000);
}
