//! Step functions checked against independently written precondition
//! oracles, exhaustively where the state space allows it.

use std::collections::{HashSet, VecDeque};

use toolsim_core::env::blocksworld::{self, BwState, Color, Support};
use toolsim_core::env::logistics::{self, LogState};
use toolsim_core::env::saw::{self, SawState};
use toolsim_core::env::{self, sample_instance, InstanceParams};
use toolsim_core::rng::SeededRng;
use toolsim_core::{Action, EnvId, Param, State, Tool};

fn sym(a: &Action) -> Option<&str> {
    match a.params.as_slice() {
        [Param::Sym(s)] => Some(s),
        _ => None,
    }
}

fn locs(a: &Action) -> Option<(u32, u32)> {
    match a.params.as_slice() {
        [Param::Loc(f), Param::Loc(t)] => Some((*f, *t)),
        _ => None,
    }
}

// ---- SpellAnyWord ----

fn saw_oracle(word: &[char], a: &Action) -> Option<Vec<char>> {
    let c = sym(a)?.chars().next()?;
    match a.tool {
        Tool::Add if c.is_ascii_lowercase() && c != 'z' => {
            let mut w = word.to_vec();
            w.push(c);
            w.push((c as u8 + 1) as char);
            Some(w)
        }
        Tool::Swap => {
            let i = word.iter().position(|&x| x == c)?;
            if i + 1 >= word.len() || word[i + 1] == c {
                return None;
            }
            let mut w = word.to_vec();
            w.swap(i, i + 1);
            Some(w)
        }
        _ => None,
    }
}

fn words_over(alphabet: &[char], max_len: usize) -> Vec<Vec<char>> {
    let mut all = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &frontier {
            for &c in alphabet {
                let mut v: Vec<char> = w.clone();
                v.push(c);
                next.push(v);
            }
        }
        all.extend(next.iter().cloned());
        frontier = next;
    }
    all
}

#[test]
fn saw_step_matches_oracle_on_all_short_strings() {
    // A small alphabet with both ends of the alphabet exercises every rule.
    let words = words_over(&['a', 'b', 'c', 'y', 'z'], 6);
    let mut checked = 0;
    for w in &words {
        let s = SawState { letters: w.clone() };
        for a in saw::candidates() {
            let got = saw::step(&s, &a).ok().map(|s| s.letters);
            assert_eq!(got, saw_oracle(w, &a), "{a} on {w:?}");
            checked += 1;
        }
    }
    assert_eq!(checked, words.len() * 52);
}

#[test]
fn saw_step_matches_oracle_on_reachable_strings_up_to_length_8() {
    let mut seen: HashSet<Vec<char>> = HashSet::from([Vec::new()]);
    let mut queue = VecDeque::from([Vec::<char>::new()]);
    // Reachable space restricted to Adds of a few letters keeps this bounded.
    let adds = ['a', 'b', 'm', 'y'];
    while let Some(w) = queue.pop_front() {
        let s = SawState { letters: w.clone() };
        for a in saw::candidates() {
            let oracle = saw_oracle(&w, &a);
            let got = saw::step(&s, &a);
            assert_eq!(got.as_ref().ok().map(|s| s.letters.clone()), oracle, "{a} on {w:?}");
            let Ok(next) = got else { continue };
            assert!(next.letters.len() % 2 == 0);
            let expand = a.tool == Tool::Swap || adds.contains(&sym(&a).unwrap().chars().next().unwrap());
            if expand && next.letters.len() <= 8 && seen.insert(next.letters.clone()) {
                queue.push_back(next.letters);
            }
        }
    }
    assert!(seen.len() > 1000, "explored {}", seen.len());
}

// ---- BlocksWorld ----

fn bw_oracle(s: &BwState, a: &Action) -> Option<BwState> {
    let name = sym(a)?;
    let mut stacks = s.stacks.clone();
    match a.tool {
        Tool::Pick => {
            let c = Color::from_name(name)?;
            if s.hand.is_some() {
                return None;
            }
            let i = stacks.iter().position(|st| st.last() == Some(&c))?;
            stacks[i].pop();
            stacks.retain(|st| !st.is_empty());
            Some(BwState::new(stacks, Some(c)))
        }
        Tool::Stack => {
            let held = s.hand?;
            if name == "table" {
                stacks.push(vec![held]);
            } else {
                let t = Color::from_name(name)?;
                let i = stacks.iter().position(|st| st.last() == Some(&t))?;
                stacks[i].push(held);
            }
            Some(BwState::new(stacks, None))
        }
        _ => None,
    }
}

fn all_bw_states(blocks: &[Color]) -> Vec<BwState> {
    let start = BwState::new(blocks.iter().map(|&c| vec![c]).collect(), None);
    let mut seen = HashSet::from([State::Bw(start.clone()).canonical()]);
    let mut states = vec![start.canonical()];
    let mut queue = VecDeque::from([start.canonical()]);
    while let Some(s) = queue.pop_front() {
        for (_, next) in blocksworld::successors(&s) {
            if seen.insert(State::Bw(next.clone()).canonical()) {
                states.push(next.canonical());
                queue.push_back(next.canonical());
            }
        }
    }
    states
}

#[test]
fn bw_state_space_sizes() {
    // Arrangements on the table plus arrangements of n-1 blocks with one held.
    let palette = &Color::PALETTE;
    for n in 1..=4 {
        let states = all_bw_states(&palette[..n]);
        let expected = blocksworld::arrangement_count(n) + n * blocksworld::arrangement_count(n - 1);
        assert_eq!(states.len(), expected, "n = {n}");
    }
}

#[test]
fn bw_step_matches_oracle_on_every_state_up_to_four_blocks() {
    let palette = &Color::PALETTE;
    let mut extra = vec![Action::pick("purple"), Action::stack("purple")];
    extra.extend(palette.iter().map(|c| Action::stack(c.name())));
    for n in 1..=4 {
        for s in all_bw_states(&palette[..n]) {
            let total = s.block_count();
            let mut actions = blocksworld::candidates(&s);
            actions.extend(extra.iter().cloned());
            actions.extend(palette.iter().map(|c| Action::pick(c.name())));
            for a in &actions {
                let got = blocksworld::step(&s, a).ok().map(|s| s.canonical());
                let want = bw_oracle(&s, a).map(|s| s.canonical());
                assert_eq!(got, want, "{a} on {}", s.render());
                if let Some(next) = got {
                    assert_eq!(next.block_count(), total);
                    let mut before = s.blocks();
                    let mut after = next.blocks();
                    before.sort();
                    after.sort();
                    assert_eq!(before, after);
                }
            }
        }
    }
}

#[test]
fn bw_pick_then_stack_on_original_support_is_identity() {
    let palette = &Color::PALETTE;
    for s in all_bw_states(&palette[..4]) {
        if s.hand.is_some() {
            continue;
        }
        for c in s.blocks() {
            let Ok(held) = blocksworld::step(&s, &Action::pick(c.name())) else {
                continue;
            };
            let support = match s.support_of(c).unwrap() {
                Support::Table => "table".to_string(),
                Support::Block(b) => b.name().to_string(),
            };
            let back = blocksworld::step(&held, &Action::stack(&support)).unwrap();
            assert_eq!(back.canonical(), s.canonical());
        }
    }
}

// ---- Logistics ----

fn log_oracle(s: &LogState, a: &Action) -> Option<LogState> {
    let (from, to) = locs(a)?;
    let city = |l: u32| s.cities.iter().find(|c| c.locations.contains(&l)).map(|c| c.id);
    let (cf, ct) = (city(from)?, city(to)?);
    if from == to {
        return None;
    }
    let mut next = s.clone();
    match a.tool {
        Tool::Truck => {
            if cf != ct {
                return None;
            }
            let (id, _) = s.trucks.iter().find(|(_, &l)| l == from)?;
            next.trucks.insert(id.clone(), to);
        }
        Tool::Plane => {
            let airport = |l: u32| s.cities.iter().any(|c| c.airport == l);
            if cf == ct || !airport(from) || !airport(to) {
                return None;
            }
            let (id, _) = s.planes.iter().find(|(_, &l)| l == from)?;
            next.planes.insert(id.clone(), to);
        }
        _ => return None,
    }
    for l in next.packages.values_mut() {
        if *l == from {
            *l = to;
        }
    }
    Some(next)
}

#[test]
fn log_step_matches_oracle_on_a_thousand_random_states() {
    let params = InstanceParams::default();
    let mut rng = SeededRng::new(7);
    for i in 0..1000u64 {
        let inst = sample_instance(EnvId::Log, i, &params).unwrap();
        let State::Log(mut s) = inst.init else { unreachable!() };
        for _ in 0..rng.index(6) {
            let succ = logistics::successors(&s);
            s = succ[rng.index(succ.len())].1.clone();
        }
        let mut actions = logistics::candidates(&s);
        actions.extend([Action::truck(0, 1), Action::plane(1, 99)]);
        for a in &actions {
            let got = logistics::step(&s, a).ok();
            assert_eq!(got, log_oracle(&s, a), "{a} on {}", s.render());
            if let Some(next) = got {
                assert_eq!(next.trucks.len(), s.trucks.len());
                assert_eq!(next.planes.len(), s.planes.len());
                assert_eq!(next.packages.len(), s.packages.len());
                assert!(next.planes.values().all(|&l| next.is_airport(l)));
                for (id, &l) in &next.trucks {
                    assert_eq!(s.city_of(s.trucks[id]).unwrap().id, next.city_of(l).unwrap().id);
                }
                let (from, _) = locs(a).unwrap();
                assert!(!next.packages.values().any(|&l| l == from));
            }
        }
    }
}

#[test]
fn invalid_steps_never_change_state() {
    let params = InstanceParams::default();
    for env_id in EnvId::ALL {
        for seed in 0..50 {
            let inst = sample_instance(env_id, seed, &params).unwrap();
            let before = inst.init.clone();
            for (_, outcome) in env::enumerate_actions(&inst.init) {
                if let Some(after) = outcome.state_after() {
                    assert_ne!(after.canonical(), before.canonical());
                }
            }
            assert_eq!(inst.init, before);
        }
    }
}
