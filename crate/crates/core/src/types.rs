//! Environment-agnostic vocabulary: environments, tools, actions, outcomes and
//! execution records.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::env::blocksworld::{BwGoal, BwState};
use crate::env::logistics::{LogGoal, LogState};
use crate::env::saw::{SawGoal, SawState};
use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvId {
    Saw,
    Bw,
    Log,
}

impl EnvId {
    pub const ALL: [EnvId; 3] = [EnvId::Saw, EnvId::Bw, EnvId::Log];

    pub fn as_str(self) -> &'static str {
        match self {
            EnvId::Saw => "saw",
            EnvId::Bw => "bw",
            EnvId::Log => "log",
        }
    }

    pub fn tools(self) -> [Tool; 2] {
        match self {
            EnvId::Saw => [Tool::Add, Tool::Swap],
            EnvId::Bw => [Tool::Pick, Tool::Stack],
            EnvId::Log => [Tool::Truck, Tool::Plane],
        }
    }
}

impl fmt::Display for EnvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnvId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "saw" | "spellanyword" => Ok(EnvId::Saw),
            "bw" | "blocksworld" => Ok(EnvId::Bw),
            "log" | "logistics" => Ok(EnvId::Log),
            other => Err(Error::UnknownEnv(other.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tool {
    Add,
    Swap,
    Pick,
    Stack,
    Truck,
    Plane,
}

impl Tool {
    pub fn name(self) -> &'static str {
        match self {
            Tool::Add => "Add",
            Tool::Swap => "Swap",
            Tool::Pick => "Pick",
            Tool::Stack => "Stack",
            Tool::Truck => "Truck",
            Tool::Plane => "Plane",
        }
    }

    pub fn env(self) -> EnvId {
        match self {
            Tool::Add | Tool::Swap => EnvId::Saw,
            Tool::Pick | Tool::Stack => EnvId::Bw,
            Tool::Truck | Tool::Plane => EnvId::Log,
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Tool::Truck | Tool::Plane => 2,
            _ => 1,
        }
    }

    /// Case-insensitive lookup by tool name.
    pub fn from_name(name: &str) -> Option<Tool> {
        let all = [
            Tool::Add,
            Tool::Swap,
            Tool::Pick,
            Tool::Stack,
            Tool::Truck,
            Tool::Plane,
        ];
        all.into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(name.trim()))
    }
}

impl fmt::Display for Tool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One tool input: a location id, or a symbol (letter, color, `table`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Loc(u32),
    Sym(String),
}

impl Param {
    pub fn sym(s: impl Into<String>) -> Self {
        Param::Sym(s.into())
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Param::Loc(id) => write!(f, "{id}"),
            Param::Sym(s) => write!(f, "'{s}'"),
        }
    }
}

/// A tool call: which tool, and what it is fed.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Action {
    pub tool: Tool,
    pub params: Vec<Param>,
}

impl Action {
    pub fn new(tool: Tool, params: Vec<Param>) -> Self {
        Self { tool, params }
    }

    pub fn add(letter: char) -> Self {
        Self::new(Tool::Add, vec![Param::Sym(letter.to_string())])
    }

    pub fn swap(letter: char) -> Self {
        Self::new(Tool::Swap, vec![Param::Sym(letter.to_string())])
    }

    pub fn pick(block: &str) -> Self {
        Self::new(Tool::Pick, vec![Param::sym(block)])
    }

    pub fn stack(target: &str) -> Self {
        Self::new(Tool::Stack, vec![Param::sym(target)])
    }

    pub fn truck(from: u32, to: u32) -> Self {
        Self::new(Tool::Truck, vec![Param::Loc(from), Param::Loc(to)])
    }

    pub fn plane(from: u32, to: u32) -> Self {
        Self::new(Tool::Plane, vec![Param::Loc(from), Param::Loc(to)])
    }

    /// The input part of the call as it appears between the parentheses.
    pub fn render_params(&self) -> String {
        self.params
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.tool, self.render_params())
    }
}

/// Why an action was rejected. The codes are stable and shown to agents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvalidReason {
    /// Parameters have the wrong arity or type for the tool.
    BadParams,
    /// The tool does not belong to the environment.
    UnknownTool,
    // SpellAnyWord
    NoSuccessor,
    LetterNotSwappable,
    // BlocksWorld
    BlockCovered,
    HandFull,
    HandEmpty,
    TargetCovered,
    TargetInHand,
    UnknownBlock,
    // Logistics
    NoVehicleAtStart,
    CrossCityTruck,
    SameCityPlane,
    NotAirport,
    SameLocation,
    UnknownLocation,
}

impl InvalidReason {
    pub fn code(self) -> &'static str {
        match self {
            InvalidReason::BadParams => "bad_params",
            InvalidReason::UnknownTool => "unknown_tool",
            InvalidReason::NoSuccessor => "no_successor",
            InvalidReason::LetterNotSwappable => "letter_not_swappable",
            InvalidReason::BlockCovered => "block_covered",
            InvalidReason::HandFull => "hand_full",
            InvalidReason::HandEmpty => "hand_empty",
            InvalidReason::TargetCovered => "target_covered",
            InvalidReason::TargetInHand => "target_in_hand",
            InvalidReason::UnknownBlock => "unknown_block",
            InvalidReason::NoVehicleAtStart => "no_vehicle_at_start",
            InvalidReason::CrossCityTruck => "cross_city_truck",
            InvalidReason::SameCityPlane => "same_city_plane",
            InvalidReason::NotAirport => "not_airport",
            InvalidReason::SameLocation => "same_location",
            InvalidReason::UnknownLocation => "unknown_location",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            InvalidReason::BadParams => "the tool input is malformed",
            InvalidReason::UnknownTool => "the tool is not available in this environment",
            InvalidReason::NoSuccessor => "the letter has no next letter in the alphabet",
            InvalidReason::LetterNotSwappable => {
                "the letter is absent or has no letter to its right"
            }
            InvalidReason::BlockCovered => "another block is on top of the block",
            InvalidReason::HandFull => "the hand already holds a block",
            InvalidReason::HandEmpty => "the hand holds no block",
            InvalidReason::TargetCovered => "the target block has another block on top of it",
            InvalidReason::TargetInHand => "the target block is the one in the hand",
            InvalidReason::UnknownBlock => "no such block",
            InvalidReason::NoVehicleAtStart => "no suitable vehicle at the starting location",
            InvalidReason::CrossCityTruck => "trucks cannot leave their city",
            InvalidReason::SameCityPlane => "planes only fly between cities",
            InvalidReason::NotAirport => "planes only use airport locations",
            InvalidReason::SameLocation => "start and end location are the same",
            InvalidReason::UnknownLocation => "no such location",
        }
    }

    /// The documented reason set of one environment.
    pub fn for_env(env: EnvId) -> &'static [InvalidReason] {
        use InvalidReason::*;
        match env {
            EnvId::Saw => &[BadParams, UnknownTool, NoSuccessor, LetterNotSwappable],
            EnvId::Bw => &[
                BadParams,
                UnknownTool,
                BlockCovered,
                HandFull,
                HandEmpty,
                TargetCovered,
                TargetInHand,
                UnknownBlock,
            ],
            EnvId::Log => &[
                BadParams,
                UnknownTool,
                NoVehicleAtStart,
                CrossCityTruck,
                SameCityPlane,
                NotAirport,
                SameLocation,
                UnknownLocation,
            ],
        }
    }
}

impl fmt::Display for InvalidReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// State of any of the three environments.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum State {
    Saw(SawState),
    Bw(BwState),
    Log(LogState),
}

impl State {
    pub fn env(&self) -> EnvId {
        match self {
            State::Saw(_) => EnvId::Saw,
            State::Bw(_) => EnvId::Bw,
            State::Log(_) => EnvId::Log,
        }
    }

    pub fn canonical(&self) -> State {
        match self {
            State::Saw(s) => State::Saw(s.clone()),
            State::Bw(s) => State::Bw(s.canonical()),
            State::Log(s) => State::Log(s.canonical()),
        }
    }
}

impl From<SawState> for State {
    fn from(s: SawState) -> Self {
        State::Saw(s)
    }
}

impl From<BwState> for State {
    fn from(s: BwState) -> Self {
        State::Bw(s)
    }
}

impl From<LogState> for State {
    fn from(s: LogState) -> Self {
        State::Log(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Goal {
    Saw(SawGoal),
    Bw(BwGoal),
    Log(LogGoal),
}

impl Goal {
    pub fn env(&self) -> EnvId {
        match self {
            Goal::Saw(_) => EnvId::Saw,
            Goal::Bw(_) => EnvId::Bw,
            Goal::Log(_) => EnvId::Log,
        }
    }
}

/// Result of applying one action. Invalid actions leave the state as it was.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum StepOutcome {
    Success { state_after: State },
    Invalid { reason: InvalidReason },
}

impl StepOutcome {
    pub fn is_success(&self) -> bool {
        matches!(self, StepOutcome::Success { .. })
    }

    pub fn state_after(&self) -> Option<&State> {
        match self {
            StepOutcome::Success { state_after } => Some(state_after),
            StepOutcome::Invalid { .. } => None,
        }
    }

    pub fn reason(&self) -> Option<InvalidReason> {
        match self {
            StepOutcome::Success { .. } => None,
            StepOutcome::Invalid { reason } => Some(*reason),
        }
    }

    /// Outcome with every contained state canonicalized.
    pub fn canonical(&self) -> StepOutcome {
        match self {
            StepOutcome::Success { state_after } => StepOutcome::Success {
                state_after: state_after.canonical(),
            },
            other => other.clone(),
        }
    }
}

/// One observed tool execution `(state_before, action, outcome)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionRecord {
    pub env_id: EnvId,
    pub record_id: String,
    pub seed: u64,
    pub state_before: State,
    pub action: Action,
    pub outcome: StepOutcome,
}

/// A task instance: where the agent starts and what it must reach.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub env_id: EnvId,
    pub seed: u64,
    pub init: State,
    pub goal: Goal,
}
