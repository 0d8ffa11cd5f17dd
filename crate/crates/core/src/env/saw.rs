//! SpellAnyWord: grow a string until it contains a target word.
//!
//! `Add(c)` appends `c` and the letter after it. `Swap(c)` exchanges the
//! leftmost `c` with its right neighbour. The starting string is empty.
//! No executable action leaves the string unchanged.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::rng::SeededRng;
use crate::types::{Action, EnvId, InvalidReason, Param, State, StepOutcome, Tool};

pub const MIN_TARGET_LEN: usize = 2;
pub const MAX_TARGET_LEN: usize = 10;

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SawState {
    pub letters: Vec<char>,
}

impl SawState {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a state from a plain lowercase word, e.g. `"abno"`.
    pub fn parse(word: &str) -> Result<Self, Error> {
        let state = Self {
            letters: word.chars().collect(),
        };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<(), Error> {
        match self.letters.iter().find(|c| !c.is_ascii_lowercase()) {
            Some(c) => Err(Error::MalformedState {
                env: EnvId::Saw,
                detail: format!("letter {c:?} outside a-z"),
            }),
            None => Ok(()),
        }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn word(&self) -> String {
        self.letters.iter().collect()
    }

    /// Prompt rendering: a list of quoted letters, `['b','a','n']`.
    pub fn render(&self) -> String {
        render_letters(&self.letters)
    }
}

pub fn render_letters(letters: &[char]) -> String {
    let inner: Vec<String> = letters.iter().map(|c| format!("'{c}'")).collect();
    format!("[{}]", inner.join(","))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SawGoal {
    pub target: Vec<char>,
}

impl SawGoal {
    pub fn parse(word: &str) -> Result<Self, Error> {
        let goal = Self {
            target: word.chars().collect(),
        };
        goal.validate()?;
        Ok(goal)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(MIN_TARGET_LEN..=MAX_TARGET_LEN).contains(&self.target.len()) {
            return Err(Error::InstanceParams(format!(
                "target length {} outside [{MIN_TARGET_LEN}, {MAX_TARGET_LEN}]",
                self.target.len()
            )));
        }
        if let Some(c) = self.target.iter().find(|c| !c.is_ascii_lowercase()) {
            return Err(Error::InstanceParams(format!("target letter {c:?} outside a-z")));
        }
        Ok(())
    }

    pub fn word(&self) -> String {
        self.target.iter().collect()
    }

    pub fn render(&self) -> String {
        render_letters(&self.target)
    }
}

pub fn successor(c: char) -> Option<char> {
    match c {
        'a'..='y' => Some((c as u8 + 1) as char),
        _ => None,
    }
}

fn letter_param(action: &Action) -> Result<char, InvalidReason> {
    match action.params.as_slice() {
        [Param::Sym(s)] => {
            let mut chars = s.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) if c.is_ascii_lowercase() => Ok(c),
                _ => Err(InvalidReason::BadParams),
            }
        }
        _ => Err(InvalidReason::BadParams),
    }
}

pub fn step(state: &SawState, action: &Action) -> Result<SawState, InvalidReason> {
    if !matches!(action.tool, Tool::Add | Tool::Swap) {
        return Err(InvalidReason::UnknownTool);
    }
    let c = letter_param(action)?;
    let mut letters = state.letters.clone();
    match action.tool {
        Tool::Add => {
            let next = successor(c).ok_or(InvalidReason::NoSuccessor)?;
            letters.push(c);
            letters.push(next);
        }
        _ => {
            let i = swap_index(&letters, c).ok_or(InvalidReason::LetterNotSwappable)?;
            letters.swap(i, i + 1);
        }
    }
    Ok(SawState { letters })
}

/// Index that `Swap(c)` would exchange with its right neighbour. Swapping two
/// equal letters would leave the string unchanged, so that counts as not
/// swappable.
pub fn swap_index(letters: &[char], c: char) -> Option<usize> {
    letters
        .iter()
        .position(|&l| l == c)
        .filter(|&i| i + 1 < letters.len() && letters[i + 1] != c)
}

/// The 52 candidate actions: `Add('a'..'z')` then `Swap('a'..'z')`.
pub fn candidates() -> Vec<Action> {
    let letters = 'a'..='z';
    letters
        .clone()
        .map(Action::add)
        .chain(letters.map(Action::swap))
        .collect()
}

pub fn enumerate_actions(state: &SawState) -> Vec<(Action, StepOutcome)> {
    candidates()
        .into_iter()
        .map(|a| {
            let outcome = match step(state, &a) {
                Ok(next) => StepOutcome::Success {
                    state_after: State::Saw(next),
                },
                Err(reason) => StepOutcome::Invalid { reason },
            };
            (a, outcome)
        })
        .collect()
}

pub fn successors(state: &SawState) -> Vec<(Action, SawState)> {
    candidates()
        .into_iter()
        .filter_map(|a| step(state, &a).ok().map(|s| (a, s)))
        .collect()
}

pub fn is_goal(state: &SawState, goal: &SawGoal) -> bool {
    !goal.target.is_empty() && state.letters.windows(goal.target.len()).any(|w| w == goal.target)
}

pub fn sample_goal(seed: u64) -> SawGoal {
    sample_goal_with(&mut SeededRng::new(seed), MIN_TARGET_LEN, MAX_TARGET_LEN)
}

/// Target with length uniform in `[min_len, max_len]` and i.i.d. letters.
pub fn sample_goal_with(rng: &mut SeededRng, min_len: usize, max_len: usize) -> SawGoal {
    let len = rng.range_inclusive(min_len as u64, max_len as u64) as usize;
    let target = (0..len).map(|_| (b'a' + rng.below(26) as u8) as char).collect();
    SawGoal { target }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(w: &str) -> SawState {
        SawState::parse(w).unwrap()
    }

    #[test]
    fn add_and_swap_examples() {
        assert_eq!(step(&s(""), &Action::add('a')), Ok(s("ab")));
        assert_eq!(step(&s("ab"), &Action::swap('a')), Ok(s("ba")));
        assert_eq!(step(&s("ab"), &Action::add('z')), Err(InvalidReason::NoSuccessor));
        assert_eq!(
            step(&s("ba"), &Action::swap('a')),
            Err(InvalidReason::LetterNotSwappable)
        );
        assert_eq!(
            step(&s("ab"), &Action::swap('q')),
            Err(InvalidReason::LetterNotSwappable)
        );
    }

    #[test]
    fn swap_takes_leftmost_occurrence() {
        assert_eq!(step(&s("abab"), &Action::swap('a')), Ok(s("baab")));
        assert_eq!(step(&s("abab"), &Action::swap('b')), Ok(s("aabb")));
        // Leftmost 'b' sits next to another 'b': no effect, so not swappable.
        assert_eq!(
            step(&s("abbc"), &Action::swap('b')),
            Err(InvalidReason::LetterNotSwappable)
        );
    }

    #[test]
    fn malformed_params() {
        let bad = [
            Action::new(Tool::Add, vec![]),
            Action::new(Tool::Add, vec![Param::sym("ab")]),
            Action::new(Tool::Add, vec![Param::sym("A")]),
            Action::new(Tool::Swap, vec![Param::Loc(3)]),
        ];
        for a in bad {
            assert_eq!(step(&s("ab"), &a), Err(InvalidReason::BadParams), "{a}");
        }
        assert_eq!(
            step(&s("ab"), &Action::pick("red")),
            Err(InvalidReason::UnknownTool)
        );
    }

    #[test]
    fn enumeration_of_empty_string() {
        let all = enumerate_actions(&s(""));
        assert_eq!(all.len(), 52);
        let exec: Vec<_> = all.iter().filter(|(_, o)| o.is_success()).map(|(a, _)| a.clone()).collect();
        let expected: Vec<_> = ('a'..='y').map(Action::add).collect();
        assert_eq!(exec, expected);
    }

    #[test]
    fn enumeration_of_ab() {
        let all = enumerate_actions(&s("ab"));
        let ok = |a: &Action| all.iter().find(|(x, _)| x == a).unwrap().1.is_success();
        assert!(ok(&Action::swap('a')));
        assert!(!ok(&Action::swap('b')));
    }

    #[test]
    fn goal_checks() {
        assert!(is_goal(&s("banyoz"), &SawGoal::parse("any").unwrap()));
        assert!(!is_goal(&s(""), &SawGoal::parse("any").unwrap()));
        assert!(!is_goal(&s("abab"), &SawGoal::parse("aa").unwrap()));
    }

    #[test]
    fn rendering() {
        assert_eq!(s("").render(), "[]");
        assert_eq!(s("ban").render(), "['b','a','n']");
        assert_eq!(
            serde_json::to_string(&s("ban")).unwrap(),
            r#"{"letters":["b","a","n"]}"#
        );
    }

    #[test]
    fn sampled_goals_are_deterministic_and_bounded() {
        assert_eq!(sample_goal(11), sample_goal(11));
        let mut buckets = [0usize; MAX_TARGET_LEN + 1];
        for seed in 0..10_000u64 {
            let g = sample_goal(crate::rng::derive_seed(5, seed));
            g.validate().unwrap();
            buckets[g.target.len()] += 1;
        }
        assert!(buckets[MIN_TARGET_LEN..].iter().all(|&b| b > 0));
    }
}
