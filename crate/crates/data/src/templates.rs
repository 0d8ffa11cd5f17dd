//! Question/answer templates for the meta-tasks.
//!
//! Templates are JSON lines with `{slot}` placeholders. The built-in set is
//! compiled in; extra sets can be loaded from files in the same format.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The six self-supervised tasks obtained by masking one part of an
/// execution record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetaTaskKind {
    Effect,
    DecisionMaking,
    Reversion,
    InputBoundary,
    OutputBoundary,
    Counterfact,
}

impl MetaTaskKind {
    pub const ALL: [MetaTaskKind; 6] = [
        MetaTaskKind::Effect,
        MetaTaskKind::DecisionMaking,
        MetaTaskKind::Reversion,
        MetaTaskKind::InputBoundary,
        MetaTaskKind::OutputBoundary,
        MetaTaskKind::Counterfact,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetaTaskKind::Effect => "effect",
            MetaTaskKind::DecisionMaking => "decision_making",
            MetaTaskKind::Reversion => "reversion",
            MetaTaskKind::InputBoundary => "input_boundary",
            MetaTaskKind::OutputBoundary => "output_boundary",
            MetaTaskKind::Counterfact => "counterfact",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            MetaTaskKind::Effect => "Effect",
            MetaTaskKind::DecisionMaking => "Decision-making",
            MetaTaskKind::Reversion => "Reversion",
            MetaTaskKind::InputBoundary => "Input boundary",
            MetaTaskKind::OutputBoundary => "Output boundary",
            MetaTaskKind::Counterfact => "Counterfact",
        }
    }

    pub fn is_boundary(self) -> bool {
        matches!(self, MetaTaskKind::InputBoundary | MetaTaskKind::OutputBoundary)
    }

    /// Slots the question may show, and the masked slot the answer carries.
    pub fn slots(self) -> (&'static [Slot], Slot) {
        use Slot::*;
        match self {
            MetaTaskKind::Effect => (&[State, Action], Outcome),
            MetaTaskKind::DecisionMaking => (&[State, Outcome], Action),
            MetaTaskKind::Reversion => (&[Action, Outcome], State),
            MetaTaskKind::InputBoundary => (&[State, Action], Label),
            MetaTaskKind::OutputBoundary => (&[State, Outcome], Label),
            MetaTaskKind::Counterfact => (&[Action, Outcome, AltAction], AltOutcome),
        }
    }
}

impl fmt::Display for MetaTaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetaTaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MetaTaskKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown meta-task `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Slot {
    State,
    Action,
    Outcome,
    AltAction,
    AltOutcome,
    Label,
}

impl Slot {
    pub fn name(self) -> &'static str {
        match self {
            Slot::State => "state",
            Slot::Action => "action",
            Slot::Outcome => "outcome",
            Slot::AltAction => "alt_action",
            Slot::AltOutcome => "alt_outcome",
            Slot::Label => "label",
        }
    }

    fn from_name(name: &str) -> Option<Slot> {
        [
            Slot::State,
            Slot::Action,
            Slot::Outcome,
            Slot::AltAction,
            Slot::AltOutcome,
            Slot::Label,
        ]
        .into_iter()
        .find(|s| s.name() == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Template {
    pub template_id: String,
    pub meta_task: MetaTaskKind,
    pub question_pattern: String,
    pub answer_pattern: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("template {id}: {message}")]
    Invalid { id: String, message: String },
    #[error("only {found} templates for {kind}, at least {needed} required")]
    TooFew {
        kind: MetaTaskKind,
        found: usize,
        needed: usize,
    },
}

/// Names between braces, in order of appearance.
pub fn slot_names(pattern: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = pattern;
    while let Some(open) = rest.find('{') {
        let Some(close) = rest[open..].find('}') else { break };
        out.push(&rest[open + 1..open + close]);
        rest = &rest[open + close + 1..];
    }
    out
}

/// Replaces every `{slot}` by its value.
pub fn fill(pattern: &str, value: impl Fn(Slot) -> String) -> String {
    let mut out = String::with_capacity(pattern.len() * 2);
    let mut rest = pattern;
    while let Some(open) = rest.find('{') {
        let Some(close) = rest[open..].find('}') else { break };
        out.push_str(&rest[..open]);
        let name = &rest[open + 1..open + close];
        match Slot::from_name(name) {
            Some(slot) => out.push_str(&value(slot)),
            None => out.push_str(&rest[open..open + close + 1]),
        }
        rest = &rest[open + close + 1..];
    }
    out.push_str(rest);
    out
}

impl Template {
    /// The question may only show its kind's visible slots; the answer must
    /// contain the masked slot and nothing the question could not show.
    pub fn validate(&self) -> Result<(), TemplateError> {
        let invalid = |message: String| TemplateError::Invalid {
            id: self.template_id.clone(),
            message,
        };
        let (visible, masked) = self.meta_task.slots();
        for name in slot_names(&self.question_pattern) {
            let slot = Slot::from_name(name).ok_or_else(|| invalid(format!("unknown slot {{{name}}}")))?;
            if !visible.contains(&slot) {
                return Err(invalid(format!(
                    "question reveals {{{name}}}, which {} does not show",
                    self.meta_task
                )));
            }
        }
        let mut has_masked = false;
        for name in slot_names(&self.answer_pattern) {
            let slot = Slot::from_name(name).ok_or_else(|| invalid(format!("unknown slot {{{name}}}")))?;
            if slot == masked {
                has_masked = true;
            } else if !visible.contains(&slot) {
                return Err(invalid(format!("answer uses {{{name}}}, not defined for {}", self.meta_task)));
            }
        }
        if !has_masked {
            return Err(invalid(format!("answer lacks {{{}}}", masked.name())));
        }
        Ok(())
    }
}

/// Templates grouped by meta-task, in file order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TemplateSet {
    by_kind: BTreeMap<MetaTaskKind, Vec<Template>>,
}

/// Minimum number of templates per meta-task.
pub const MIN_TEMPLATES_PER_TASK: usize = 5;

const BUILTIN: &str = include_str!("../templates/meta_tasks.jsonl");

impl TemplateSet {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("built-in templates are valid")
    }

    pub fn parse(text: &str) -> Result<Self, TemplateError> {
        let mut by_kind: BTreeMap<MetaTaskKind, Vec<Template>> = BTreeMap::new();
        let mut ids = std::collections::HashSet::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let t: Template = serde_json::from_str(line).map_err(|e| TemplateError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            t.validate()?;
            if !ids.insert(t.template_id.clone()) {
                return Err(TemplateError::Invalid {
                    id: t.template_id,
                    message: "duplicate id".into(),
                });
            }
            by_kind.entry(t.meta_task).or_default().push(t);
        }
        for kind in MetaTaskKind::ALL {
            let found = by_kind.get(&kind).map_or(0, Vec::len);
            if found < MIN_TEMPLATES_PER_TASK {
                return Err(TemplateError::TooFew {
                    kind,
                    found,
                    needed: MIN_TEMPLATES_PER_TASK,
                });
            }
        }
        Ok(Self { by_kind })
    }

    pub fn for_kind(&self, kind: MetaTaskKind) -> &[Template] {
        self.by_kind.get(&kind).map_or(&[], Vec::as_slice)
    }

    pub fn get(&self, id: &str) -> Option<&Template> {
        self.by_kind.values().flatten().find(|t| t.template_id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_set_has_five_per_kind() {
        let set = TemplateSet::builtin();
        for kind in MetaTaskKind::ALL {
            assert_eq!(set.for_kind(kind).len(), 5, "{kind}");
        }
    }

    #[test]
    fn leaking_question_is_rejected() {
        let t = Template {
            template_id: "bad".into(),
            meta_task: MetaTaskKind::Effect,
            question_pattern: "{state} {action} gives {outcome}?".into(),
            answer_pattern: "{outcome}".into(),
        };
        assert!(matches!(t.validate(), Err(TemplateError::Invalid { .. })));
    }

    #[test]
    fn answer_must_carry_the_masked_slot() {
        let t = Template {
            template_id: "bad".into(),
            meta_task: MetaTaskKind::InputBoundary,
            question_pattern: "{state} {action}?".into(),
            answer_pattern: "maybe".into(),
        };
        assert!(t.validate().is_err());
    }

    #[test]
    fn too_few_templates() {
        let one = BUILTIN.lines().next().unwrap();
        assert!(matches!(
            TemplateSet::parse(one),
            Err(TemplateError::TooFew { .. })
        ));
    }

    #[test]
    fn fill_replaces_known_slots_only() {
        let s = fill("{state} -> {other}", |slot| slot.name().to_uppercase());
        assert_eq!(s, "STATE -> {other}");
    }
}
