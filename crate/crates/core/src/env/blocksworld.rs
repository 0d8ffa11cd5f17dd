//! BlocksWorld with a single hand: `Pick` a clear block, `Stack` it onto a
//! clear block or the table.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::rng::SeededRng;
use crate::types::{Action, EnvId, InvalidReason, Param, State, StepOutcome, Tool};

pub const MIN_BLOCKS: usize = 3;
pub const MAX_BLOCKS: usize = 6;
pub const DEFAULT_BLOCKS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red,
    Blue,
    Green,
    Yellow,
    White,
    Orange,
}

impl Color {
    pub const PALETTE: [Color; MAX_BLOCKS] = [
        Color::Red,
        Color::Blue,
        Color::Green,
        Color::Yellow,
        Color::White,
        Color::Orange,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Color::Red => "red",
            Color::Blue => "blue",
            Color::Green => "green",
            Color::Yellow => "yellow",
            Color::White => "white",
            Color::Orange => "orange",
        }
    }

    pub fn from_name(name: &str) -> Option<Color> {
        Self::PALETTE.into_iter().find(|c| c.name() == name)
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What a block rests on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Support {
    Table,
    Block(Color),
}

impl From<Support> for String {
    fn from(s: Support) -> String {
        match s {
            Support::Table => "table".to_string(),
            Support::Block(c) => c.name().to_string(),
        }
    }
}

impl TryFrom<String> for Support {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        if s == "table" {
            Ok(Support::Table)
        } else {
            Color::from_name(&s)
                .map(Support::Block)
                .ok_or_else(|| format!("unknown support `{s}`"))
        }
    }
}

impl fmt::Display for Support {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Support::Table => f.write_str("the table"),
            Support::Block(c) => write!(f, "'{c}'"),
        }
    }
}

/// Stacks are listed bottom to top. The set of stacks is unordered; the
/// canonical form sorts stacks by their bottom block.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BwState {
    pub stacks: Vec<Vec<Color>>,
    pub hand: Option<Color>,
}

impl BwState {
    pub fn new(stacks: Vec<Vec<Color>>, hand: Option<Color>) -> Self {
        Self { stacks, hand }.canonical()
    }

    pub fn canonical(&self) -> Self {
        let mut stacks: Vec<Vec<Color>> =
            self.stacks.iter().filter(|s| !s.is_empty()).cloned().collect();
        stacks.sort();
        Self {
            stacks,
            hand: self.hand,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let mut seen = BTreeSet::new();
        for c in self.stacks.iter().flatten().chain(self.hand.iter()) {
            if !seen.insert(*c) {
                return Err(Error::MalformedState {
                    env: EnvId::Bw,
                    detail: format!("block {c} appears twice"),
                });
            }
        }
        if self.stacks.iter().any(|s| s.is_empty()) {
            return Err(Error::MalformedState {
                env: EnvId::Bw,
                detail: "empty stack".into(),
            });
        }
        Ok(())
    }

    /// Every block of the instance, in palette order.
    pub fn blocks(&self) -> Vec<Color> {
        let mut all: Vec<Color> = self.stacks.iter().flatten().copied().collect();
        all.extend(self.hand);
        all.sort();
        all
    }

    pub fn block_count(&self) -> usize {
        self.stacks.iter().map(Vec::len).sum::<usize>() + usize::from(self.hand.is_some())
    }

    /// `(stack index, height)` of a block on the table.
    fn locate(&self, c: Color) -> Option<(usize, usize)> {
        self.stacks
            .iter()
            .enumerate()
            .find_map(|(i, s)| s.iter().position(|&b| b == c).map(|h| (i, h)))
    }

    pub fn is_clear(&self, c: Color) -> bool {
        self.stacks.iter().any(|s| s.last() == Some(&c))
    }

    /// What `c` currently rests on; `None` while it is in the hand.
    pub fn support_of(&self, c: Color) -> Option<Support> {
        let (i, h) = self.locate(c)?;
        Some(if h == 0 {
            Support::Table
        } else {
            Support::Block(self.stacks[i][h - 1])
        })
    }

    pub fn render(&self) -> String {
        let stacks: Vec<String> = self
            .canonical()
            .stacks
            .iter()
            .map(|s| {
                let names: Vec<String> = s.iter().map(|c| format!("'{c}'")).collect();
                format!("[{}]", names.join(","))
            })
            .collect();
        let hand = match self.hand {
            Some(c) => format!("'{c}'"),
            None => "empty".to_string(),
        };
        format!("stacks (bottom to top): {}; hand: {hand}", stacks.join(" "))
    }
}

/// Partial goal: a set of `(block, support)` on-relations that must hold with
/// an empty hand.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BwGoal {
    pub on: Vec<(Color, Support)>,
}

impl BwGoal {
    pub fn validate_for(&self, state: &BwState) -> Result<(), Error> {
        let blocks = state.blocks();
        let bad = |m: String| Err(Error::InstanceParams(m));
        if self.on.is_empty() {
            return bad("goal has no relations".into());
        }
        let mut above = BTreeSet::new();
        let mut below = BTreeSet::new();
        for &(a, s) in &self.on {
            if !blocks.contains(&a) {
                return bad(format!("goal references missing block {a}"));
            }
            if !above.insert(a) {
                return bad(format!("block {a} has two supports"));
            }
            if let Support::Block(b) = s {
                if !blocks.contains(&b) {
                    return bad(format!("goal references missing block {b}"));
                }
                if a == b || !below.insert(b) {
                    return bad(format!("block {b} cannot support that"));
                }
            }
        }
        // Acyclicity: follow supports from every block.
        for &(start, _) in &self.on {
            let mut cur = start;
            for _ in 0..=self.on.len() {
                match self.support_of(cur) {
                    Some(Support::Block(b)) if b == start => {
                        return bad("goal relations are cyclic".into())
                    }
                    Some(Support::Block(b)) => cur = b,
                    _ => break,
                }
            }
        }
        Ok(())
    }

    pub fn support_of(&self, c: Color) -> Option<Support> {
        self.on.iter().find(|(a, _)| *a == c).map(|(_, s)| *s)
    }

    pub fn render(&self) -> String {
        let parts: Vec<String> = self
            .on
            .iter()
            .map(|(a, s)| format!("'{a}' on {s}"))
            .collect();
        parts.join(", ")
    }
}

fn block_param(action: &Action) -> Result<&str, InvalidReason> {
    match action.params.as_slice() {
        [Param::Sym(s)] => Ok(s.as_str()),
        _ => Err(InvalidReason::BadParams),
    }
}

pub fn step(state: &BwState, action: &Action) -> Result<BwState, InvalidReason> {
    let name = match action.tool {
        Tool::Pick | Tool::Stack => block_param(action)?,
        _ => return Err(InvalidReason::UnknownTool),
    };
    let mut next = state.canonical();
    if action.tool == Tool::Pick {
        let c = Color::from_name(name).ok_or(InvalidReason::UnknownBlock)?;
        if next.hand.is_some() {
            return Err(if state.blocks().contains(&c) {
                InvalidReason::HandFull
            } else {
                InvalidReason::UnknownBlock
            });
        }
        let (i, h) = next.locate(c).ok_or(InvalidReason::UnknownBlock)?;
        if h + 1 != next.stacks[i].len() {
            return Err(InvalidReason::BlockCovered);
        }
        next.stacks[i].pop();
        next.hand = Some(c);
    } else {
        let held = next.hand.ok_or(InvalidReason::HandEmpty)?;
        if name == "table" {
            next.stacks.push(vec![held]);
        } else {
            let target = Color::from_name(name).ok_or(InvalidReason::UnknownBlock)?;
            if target == held {
                return Err(InvalidReason::TargetInHand);
            }
            let (i, h) = next.locate(target).ok_or(InvalidReason::UnknownBlock)?;
            if h + 1 != next.stacks[i].len() {
                return Err(InvalidReason::TargetCovered);
            }
            next.stacks[i].push(held);
        }
        next.hand = None;
    }
    Ok(next.canonical())
}

/// `Pick(c)` and `Stack(c)` for every block of the instance, then
/// `Stack('table')`.
pub fn candidates(state: &BwState) -> Vec<Action> {
    let blocks = state.blocks();
    let picks = blocks.iter().map(|c| Action::pick(c.name()));
    let stacks = blocks.iter().map(|c| Action::stack(c.name()));
    picks
        .chain(stacks)
        .chain(std::iter::once(Action::stack("table")))
        .collect()
}

pub fn enumerate_actions(state: &BwState) -> Vec<(Action, StepOutcome)> {
    candidates(state)
        .into_iter()
        .map(|a| {
            let outcome = match step(state, &a) {
                Ok(next) => StepOutcome::Success {
                    state_after: State::Bw(next),
                },
                Err(reason) => StepOutcome::Invalid { reason },
            };
            (a, outcome)
        })
        .collect()
}

pub fn successors(state: &BwState) -> Vec<(Action, BwState)> {
    candidates(state)
        .into_iter()
        .filter_map(|a| step(state, &a).ok().map(|s| (a, s)))
        .collect()
}

pub fn is_goal(state: &BwState, goal: &BwGoal) -> bool {
    state.hand.is_none()
        && goal
            .on
            .iter()
            .all(|&(a, s)| state.support_of(a) == Some(s))
}

/// Every arrangement of `n` labelled blocks into an unordered set of stacks,
/// each arrangement listed once. Blocks are labelled `0..n`.
fn arrangements(n: usize) -> &'static [Vec<Vec<u8>>] {
    static CACHE: OnceLock<Vec<Vec<Vec<Vec<u8>>>>> = OnceLock::new();
    let all = CACHE.get_or_init(|| {
        let mut by_n = vec![vec![Vec::new()]];
        for k in 0..MAX_BLOCKS as u8 {
            let prev = by_n.last().unwrap();
            let mut next = Vec::new();
            for config in prev {
                // Block k starts a new stack or slides into any position of
                // an existing one.
                let mut fresh = config.clone();
                fresh.push(vec![k]);
                next.push(fresh);
                for (si, stack) in config.iter().enumerate() {
                    for pos in 0..=stack.len() {
                        let mut c = config.clone();
                        c[si].insert(pos, k);
                        next.push(c);
                    }
                }
            }
            by_n.push(next);
        }
        by_n
    });
    &all[n]
}

/// Number of block arrangements for `n` blocks (hand empty).
pub fn arrangement_count(n: usize) -> usize {
    arrangements(n).len()
}

fn arrangement_state(config: &[Vec<u8>], colors: &[Color]) -> BwState {
    let stacks = config
        .iter()
        .map(|s| s.iter().map(|&b| colors[b as usize]).collect())
        .collect();
    BwState::new(stacks, None)
}

/// Random instance with `n_blocks` distinct colors: the initial arrangement is
/// uniform over all arrangements, the goal is a random non-empty subset of the
/// on-relations of a second, different uniform arrangement and never holds
/// initially.
pub fn sample_instance(seed: u64, n_blocks: usize) -> Result<(BwState, BwGoal), Error> {
    if !(MIN_BLOCKS..=MAX_BLOCKS).contains(&n_blocks) {
        return Err(Error::InstanceParams(format!(
            "n_blocks {n_blocks} outside [{MIN_BLOCKS}, {MAX_BLOCKS}]"
        )));
    }
    let mut rng = SeededRng::new(seed);
    let mut palette = Color::PALETTE.to_vec();
    rng.shuffle(&mut palette);
    let mut colors = palette[..n_blocks].to_vec();
    colors.sort();

    let configs = arrangements(n_blocks);
    let init_idx = rng.index(configs.len());
    let init = arrangement_state(&configs[init_idx], &colors);
    let target_idx = loop {
        let i = rng.index(configs.len());
        if i != init_idx {
            break i;
        }
    };
    let target = arrangement_state(&configs[target_idx], &colors);

    let mut relations: Vec<(Color, Support)> = colors
        .iter()
        .map(|&c| (c, target.support_of(c).expect("block on table")))
        .collect();
    rng.shuffle(&mut relations);
    let k = 1 + rng.index(n_blocks / 2);
    let mut chosen: Vec<(Color, Support)> = relations[..k].to_vec();
    if chosen.iter().all(|&(a, s)| init.support_of(a) == Some(s)) {
        // Arrangements differ, so some relation of the target fails initially.
        let violated = relations[k..]
            .iter()
            .find(|&&(a, s)| init.support_of(a) != Some(s))
            .copied()
            .expect("distinct arrangements differ in some relation");
        chosen[k - 1] = violated;
    }
    chosen.sort();
    Ok((init, BwGoal { on: chosen }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use Color::*;

    fn st(stacks: &[&[Color]], hand: Option<Color>) -> BwState {
        BwState::new(stacks.iter().map(|s| s.to_vec()).collect(), hand)
    }

    #[test]
    fn pick_and_stack_examples() {
        let s = st(&[&[Yellow, Green]], None);
        assert_eq!(step(&s, &Action::pick("green")), Ok(st(&[&[Yellow]], Some(Green))));
        assert_eq!(step(&s, &Action::pick("yellow")), Err(InvalidReason::BlockCovered));
        let held = st(&[&[Yellow]], Some(Green));
        assert_eq!(
            step(&held, &Action::stack("yellow")),
            Ok(st(&[&[Yellow, Green]], None))
        );
        assert_eq!(
            step(&st(&[&[Yellow]], None), &Action::stack("table")),
            Err(InvalidReason::HandEmpty)
        );
    }

    #[test]
    fn every_reason_code_is_reachable() {
        let s = st(&[&[Yellow, Green], &[Red]], Some(Blue));
        assert_eq!(step(&s, &Action::pick("red")), Err(InvalidReason::HandFull));
        assert_eq!(step(&s, &Action::stack("yellow")), Err(InvalidReason::TargetCovered));
        assert_eq!(step(&s, &Action::stack("blue")), Err(InvalidReason::TargetInHand));
        assert_eq!(step(&s, &Action::stack("white")), Err(InvalidReason::UnknownBlock));
        assert_eq!(step(&s, &Action::stack("purple")), Err(InvalidReason::UnknownBlock));
        assert_eq!(
            step(&s, &Action::new(Tool::Pick, vec![Param::Loc(1)])),
            Err(InvalidReason::BadParams)
        );
        assert_eq!(step(&s, &Action::truck(1, 2)), Err(InvalidReason::UnknownTool));
    }

    #[test]
    fn stack_order_does_not_matter() {
        assert_eq!(st(&[&[Red], &[Blue]], None), st(&[&[Blue], &[Red]], None));
    }

    #[test]
    fn enumeration_examples() {
        let exec = |s: &BwState| -> Vec<String> {
            successors(s).into_iter().map(|(a, _)| a.to_string()).collect()
        };
        assert_eq!(exec(&st(&[&[Red], &[Blue]], None)), ["Pick('red')", "Pick('blue')"]);
        let s = st(&[&[Red, Blue], &[Green]], Some(Yellow));
        assert!(exec(&s).iter().all(|a| !a.starts_with("Pick")));
        let s = st(&[&[Red, Blue, Green]], Some(Yellow));
        assert_eq!(exec(&s), ["Stack('green')", "Stack('table')"]);
    }

    #[test]
    fn goal_examples() {
        let goal = BwGoal {
            on: vec![(Green, Support::Block(Yellow))],
        };
        assert!(is_goal(&st(&[&[Yellow, Green], &[Red], &[Blue]], None), &goal));
        assert!(!is_goal(&st(&[&[Yellow], &[Red], &[Blue]], Some(Green)), &goal));
        let goal = BwGoal {
            on: vec![(Red, Support::Block(Blue)), (Blue, Support::Table)],
        };
        assert!(is_goal(&st(&[&[Blue, Red]], None), &goal));
    }

    #[test]
    fn arrangement_counts_are_lah_sums() {
        let counts: Vec<usize> = (0..=MAX_BLOCKS).map(arrangement_count).collect();
        assert_eq!(counts, [1, 1, 3, 13, 73, 501, 4051]);
        for n in 0..=MAX_BLOCKS {
            let distinct: BTreeSet<_> = arrangements(n)
                .iter()
                .map(|c| arrangement_state(c, &Color::PALETTE))
                .map(|s| s.stacks)
                .collect();
            assert_eq!(distinct.len(), arrangement_count(n));
        }
    }

    #[test]
    fn sampled_instances() {
        assert_eq!(sample_instance(9, 4).unwrap(), sample_instance(9, 4).unwrap());
        assert!(sample_instance(9, 2).is_err());
        assert!(sample_instance(9, 7).is_err());
        for seed in 0..1000 {
            let (init, goal) = sample_instance(seed, 4).unwrap();
            init.validate().unwrap();
            goal.validate_for(&init).unwrap();
            assert_eq!(init.block_count(), 4);
            assert!(!is_goal(&init, &goal));
        }
    }

    #[test]
    fn state_json() {
        let s = st(&[&[Yellow, Green], &[Red]], None);
        assert_eq!(
            serde_json::to_string(&s).unwrap(),
            r#"{"stacks":[["red"],["yellow","green"]],"hand":null}"#
        );
        let g = BwGoal {
            on: vec![(Green, Support::Block(Yellow)), (Yellow, Support::Table)],
        };
        assert_eq!(
            serde_json::to_string(&g).unwrap(),
            r#"{"on":[["green","yellow"],["yellow","table"]]}"#
        );
    }
}
