//! Meta-task QA synthesis: mask one element of an execution record, fill a
//! template, and keep the structured answer so an environment oracle can
//! check it later.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use toolsim_core::env::blocksworld::{BwState, Color};
use toolsim_core::env::logistics::LogState;
use toolsim_core::env::saw::SawState;
use toolsim_core::env::{self, render_state};
use toolsim_core::rng::SeededRng;
use toolsim_core::{Action, EnvId, ExecutionRecord, State, StepOutcome};

use crate::templates::{fill, MetaTaskKind, Slot, Template, TemplateSet};

/// The typed value behind an answer text.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum StructuredAnswer {
    State(State),
    Action(Action),
    Label(bool),
}

/// What the question shows, in structured form.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaContext {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<State>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<Action>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<State>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alt_action: Option<Action>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub record_ids: Vec<String>,
    pub template_id: String,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "MetaLine", try_from = "MetaLine")]
pub struct MetaSample {
    pub sample_id: String,
    pub env_id: EnvId,
    pub meta_task: MetaTaskKind,
    pub question: String,
    pub answer: String,
    pub context: MetaContext,
    pub structured_answer: StructuredAnswer,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaTurn {
    pub question: String,
    pub answer: String,
}

#[derive(Serialize, Deserialize)]
struct LineProvenance {
    record_ids: Vec<String>,
    seed: u64,
}

/// On-disk shape of one sample: a single-turn conversation plus the
/// structured data the verifier needs.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaLine {
    id: String,
    env_id: EnvId,
    meta_task: MetaTaskKind,
    template_id: String,
    turns: Vec<QaTurn>,
    context: MetaContext,
    structured_answer: StructuredAnswer,
    provenance: LineProvenance,
}

impl From<MetaSample> for MetaLine {
    fn from(s: MetaSample) -> Self {
        MetaLine {
            id: s.sample_id,
            env_id: s.env_id,
            meta_task: s.meta_task,
            template_id: s.provenance.template_id,
            turns: vec![QaTurn {
                question: s.question,
                answer: s.answer,
            }],
            context: s.context,
            structured_answer: s.structured_answer,
            provenance: LineProvenance {
                record_ids: s.provenance.record_ids,
                seed: s.provenance.seed,
            },
        }
    }
}

impl TryFrom<MetaLine> for MetaSample {
    type Error = String;

    fn try_from(line: MetaLine) -> Result<Self, String> {
        let [turn]: [QaTurn; 1] = line
            .turns
            .try_into()
            .map_err(|t: Vec<QaTurn>| format!("sample {} has {} turns, expected 1", line.id, t.len()))?;
        Ok(MetaSample {
            sample_id: line.id,
            env_id: line.env_id,
            meta_task: line.meta_task,
            question: turn.question,
            answer: turn.answer,
            context: line.context,
            structured_answer: line.structured_answer,
            provenance: Provenance {
                record_ids: line.provenance.record_ids,
                template_id: line.template_id,
                seed: line.provenance.seed,
            },
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetaError {
    #[error("{kind} needs a successful record, {record_id} is invalid")]
    NeedsSuccess { kind: MetaTaskKind, record_id: String },
    #[error("template {template_id} belongs to {found}, not {wanted}")]
    WrongTemplate {
        template_id: String,
        found: MetaTaskKind,
        wanted: MetaTaskKind,
    },
    #[error("no executable alternative to the recorded action in {record_id}")]
    NoAlternative { record_id: String },
    #[error("no unreachable mutation of {record_id} found within {tries} tries")]
    MutationBudget { record_id: String, tries: usize },
    #[error("no records usable for {kind}")]
    NoMaterial { kind: MetaTaskKind },
    #[error("samples from several environments: {0} and {1}")]
    MixedEnvs(EnvId, EnvId),
    #[error("{0}")]
    Config(String),
}

fn render_label(label: bool) -> &'static str {
    if label {
        "yes"
    } else {
        "no"
    }
}

/// Fills both patterns of `template` from the context and the answer.
pub fn render(template: &Template, ctx: &MetaContext, answer: &StructuredAnswer) -> (String, String) {
    let state_text = |s: &Option<State>| s.as_ref().map(render_state).unwrap_or_default();
    let action_text = |a: &Option<Action>| a.as_ref().map(Action::to_string).unwrap_or_default();
    let value = |slot: Slot| match (slot, answer) {
        (Slot::State, StructuredAnswer::State(s)) if ctx.state.is_none() => render_state(s),
        (Slot::State, _) => state_text(&ctx.state),
        (Slot::Action, StructuredAnswer::Action(a)) if ctx.action.is_none() => a.to_string(),
        (Slot::Action, _) => action_text(&ctx.action),
        (Slot::Outcome, StructuredAnswer::State(s)) if ctx.outcome.is_none() => render_state(s),
        (Slot::Outcome, _) => state_text(&ctx.outcome),
        (Slot::AltAction, _) => action_text(&ctx.alt_action),
        (Slot::AltOutcome, StructuredAnswer::State(s)) => render_state(s),
        (Slot::Label, StructuredAnswer::Label(l)) => render_label(*l).to_string(),
        _ => String::new(),
    };
    (fill(&template.question_pattern, value), fill(&template.answer_pattern, value))
}

fn success_parts(record: &ExecutionRecord, kind: MetaTaskKind) -> Result<State, MetaError> {
    record
        .outcome
        .state_after()
        .cloned()
        .ok_or_else(|| MetaError::NeedsSuccess {
            kind,
            record_id: record.record_id.clone(),
        })
}

fn assemble(
    record: &ExecutionRecord,
    template: &Template,
    seed: u64,
    context: MetaContext,
    structured_answer: StructuredAnswer,
) -> MetaSample {
    let (question, answer) = render(template, &context, &structured_answer);
    MetaSample {
        sample_id: format!("{}-{}", record.record_id, template.meta_task),
        env_id: record.env_id,
        meta_task: template.meta_task,
        question,
        answer,
        context,
        structured_answer,
        provenance: Provenance {
            record_ids: vec![record.record_id.clone()],
            template_id: template.template_id.clone(),
            seed,
        },
    }
}

/// One meta-task sample from one record. Output-boundary samples built here
/// are positives (the recorded outcome is reachable by construction); see
/// [`build_output_boundary_negative`] for negatives.
pub fn build_meta_sample(
    record: &ExecutionRecord,
    kind: MetaTaskKind,
    template: &Template,
    seed: u64,
) -> Result<MetaSample, MetaError> {
    if template.meta_task != kind {
        return Err(MetaError::WrongTemplate {
            template_id: template.template_id.clone(),
            found: template.meta_task,
            wanted: kind,
        });
    }
    let s = record.state_before.clone();
    let a = record.action.clone();
    let (context, answer) = match kind {
        MetaTaskKind::InputBoundary => (
            MetaContext {
                state: Some(s),
                action: Some(a),
                ..Default::default()
            },
            StructuredAnswer::Label(record.outcome.is_success()),
        ),
        MetaTaskKind::Effect => {
            let after = success_parts(record, kind)?;
            (
                MetaContext {
                    state: Some(s),
                    action: Some(a),
                    ..Default::default()
                },
                StructuredAnswer::State(after),
            )
        }
        MetaTaskKind::DecisionMaking => {
            let after = success_parts(record, kind)?;
            (
                MetaContext {
                    state: Some(s),
                    outcome: Some(after),
                    ..Default::default()
                },
                StructuredAnswer::Action(a),
            )
        }
        MetaTaskKind::Reversion => {
            let after = success_parts(record, kind)?;
            (
                MetaContext {
                    action: Some(a),
                    outcome: Some(after),
                    ..Default::default()
                },
                StructuredAnswer::State(s),
            )
        }
        MetaTaskKind::OutputBoundary => {
            let after = success_parts(record, kind)?;
            (
                MetaContext {
                    state: Some(s),
                    outcome: Some(after),
                    ..Default::default()
                },
                StructuredAnswer::Label(true),
            )
        }
        MetaTaskKind::Counterfact => {
            let after = success_parts(record, kind)?;
            let alternatives: Vec<(Action, State)> = env::successors(&s)
                .into_iter()
                .filter(|(alt, _)| *alt != a)
                .collect();
            if alternatives.is_empty() {
                return Err(MetaError::NoAlternative {
                    record_id: record.record_id.clone(),
                });
            }
            let mut rng = SeededRng::new(seed);
            let (alt, alt_after) = alternatives[rng.index(alternatives.len())].clone();
            (
                MetaContext {
                    action: Some(a),
                    outcome: Some(after),
                    alt_action: Some(alt),
                    ..Default::default()
                },
                StructuredAnswer::State(alt_after),
            )
        }
    };
    Ok(assemble(record, template, seed, context, answer))
}

/// True when some action takes `from` to `to` in one step.
pub fn one_step_reachable(from: &State, to: &State) -> bool {
    let target = to.canonical();
    env::successors(from)
        .into_iter()
        .any(|(_, s)| s.canonical() == target)
}

/// Share of negatives that simply repeat the current state (never reachable,
/// since no executable action is a no-op).
pub const IDENTITY_NEGATIVE_SHARE: f64 = 0.1;
const MUTATION_TRIES: usize = 32;

fn random_word_change(rng: &mut SeededRng, letters: &[char]) -> Vec<char> {
    let mut w = letters.to_vec();
    let letter = |rng: &mut SeededRng| (b'a' + rng.below(26) as u8) as char;
    match rng.below(4) {
        0 if w.len() >= 2 => {
            let i = rng.index(w.len() - 1);
            w.swap(i, i + 1);
        }
        1 if !w.is_empty() => {
            let i = rng.index(w.len());
            w[i] = letter(rng);
        }
        2 if w.len() >= 2 => {
            w.truncate(w.len() - 2);
        }
        _ => {
            let (x, y) = (letter(rng), letter(rng));
            w.extend([x, y]);
        }
    }
    w
}

fn random_bw_arrangement(rng: &mut SeededRng, blocks: &[Color]) -> BwState {
    let mut order = blocks.to_vec();
    rng.shuffle(&mut order);
    let hand = if rng.chance(0.3) { order.pop() } else { None };
    let mut stacks: Vec<Vec<Color>> = Vec::new();
    for b in order {
        if stacks.is_empty() || rng.chance(0.5) {
            stacks.push(vec![b]);
        } else {
            let i = rng.index(stacks.len());
            stacks[i].push(b);
        }
    }
    BwState::new(stacks, hand)
}

fn random_log_change(rng: &mut SeededRng, s: &LogState) -> LogState {
    let mut next = s.clone();
    let locations = s.locations();
    match rng.below(3) {
        0 => {
            for l in next.packages.values_mut() {
                *l = locations[rng.index(locations.len())];
            }
        }
        1 if !s.trucks.is_empty() => {
            let ids: Vec<String> = s.trucks.keys().cloned().collect();
            let id = &ids[rng.index(ids.len())];
            let city = s.city_of(s.trucks[id]).expect("trucks stand in a city");
            next.trucks.insert(id.clone(), city.locations[rng.index(city.locations.len())]);
        }
        _ if !s.planes.is_empty() => {
            let ids: Vec<String> = s.planes.keys().cloned().collect();
            let id = &ids[rng.index(ids.len())];
            let airports: Vec<u32> = s.cities.iter().map(|c| c.airport).collect();
            next.planes.insert(id.clone(), airports[rng.index(airports.len())]);
        }
        _ => {}
    }
    next
}

/// Environment-specific perturbation of `s_after`, or of `s` itself for the
/// identity case.
fn mutate(rng: &mut SeededRng, s: &State, s_after: &State) -> State {
    if rng.chance(IDENTITY_NEGATIVE_SHARE) {
        return s.clone();
    }
    match s_after {
        State::Saw(w) => State::Saw(SawState {
            letters: random_word_change(rng, &w.letters),
        }),
        State::Bw(b) => {
            if rng.chance(0.5) {
                State::Bw(random_bw_arrangement(rng, &b.blocks()))
            } else {
                // Two executable steps further on.
                let mut cur = s_after.clone();
                for _ in 0..2 {
                    let succ = env::successors(&cur);
                    cur = succ[rng.index(succ.len())].1.clone();
                }
                cur
            }
        }
        State::Log(l) => State::Log(random_log_change(rng, l)),
    }
}

/// An output-boundary negative: a perturbed outcome state that enumeration
/// proves unreachable from the record's state in one step.
pub fn build_output_boundary_negative(
    record: &ExecutionRecord,
    template: &Template,
    seed: u64,
) -> Result<MetaSample, MetaError> {
    if template.meta_task != MetaTaskKind::OutputBoundary {
        return Err(MetaError::WrongTemplate {
            template_id: template.template_id.clone(),
            found: template.meta_task,
            wanted: MetaTaskKind::OutputBoundary,
        });
    }
    let s = &record.state_before;
    let base = record.outcome.state_after().unwrap_or(s).clone();
    let mut rng = SeededRng::new(seed);
    for _ in 0..MUTATION_TRIES {
        let candidate = mutate(&mut rng, s, &base).canonical();
        if env::validate_state(&candidate).is_ok() && !one_step_reachable(s, &candidate) {
            let context = MetaContext {
                state: Some(s.clone()),
                outcome: Some(candidate),
                ..Default::default()
            };
            return Ok(assemble(record, template, seed, context, StructuredAnswer::Label(false)));
        }
    }
    Err(MetaError::MutationBudget {
        record_id: record.record_id.clone(),
        tries: MUTATION_TRIES,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetasetConfig {
    /// Share of positive ("yes") labels in each boundary task.
    pub boundary_positive_ratio: f64,
    /// Meta-tasks to produce, visited round-robin.
    pub kinds: Vec<MetaTaskKind>,
}

impl Default for MetasetConfig {
    fn default() -> Self {
        Self {
            boundary_positive_ratio: 0.5,
            kinds: MetaTaskKind::ALL.to_vec(),
        }
    }
}

/// Record draws per sample before giving up on a slot.
const RECORD_TRIES: usize = 64;

/// Whether the `j`-th sample of a boundary task is a positive, spreading
/// positives evenly so every prefix stays close to `ratio`.
fn positive_slot(j: usize, ratio: f64) -> bool {
    ((j + 1) as f64 * ratio).floor() > (j as f64 * ratio).floor()
}

/// `n` samples cycling through the configured meta-tasks, each from a record
/// drawn with replacement.
pub fn build_metaset(
    records: &[ExecutionRecord],
    seed: u64,
    n: usize,
    templates: &TemplateSet,
    config: &MetasetConfig,
) -> Result<Vec<MetaSample>, MetaError> {
    if config.kinds.is_empty() {
        return Err(MetaError::Config("no meta-tasks selected".into()));
    }
    if !(0.0..=1.0).contains(&config.boundary_positive_ratio) {
        return Err(MetaError::Config("boundary_positive_ratio must lie in [0, 1]".into()));
    }
    let env_id = match records.first() {
        Some(r) => r.env_id,
        None if n == 0 => return Ok(Vec::new()),
        None => return Err(MetaError::NoMaterial { kind: config.kinds[0] }),
    };
    if let Some(other) = records.iter().find(|r| r.env_id != env_id) {
        return Err(MetaError::MixedEnvs(env_id, other.env_id));
    }
    let success: Vec<&ExecutionRecord> = records.iter().filter(|r| r.outcome.is_success()).collect();
    let invalid: Vec<&ExecutionRecord> = records.iter().filter(|r| !r.outcome.is_success()).collect();
    let kinds = &config.kinds;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let kind = kinds[i % kinds.len()];
            let slot = i / kinds.len();
            let mut rng = SeededRng::derived(seed, i as u64);
            let choices = templates.for_kind(kind);
            let positive = !kind.is_boundary() || positive_slot(slot, config.boundary_positive_ratio);
            let pool = if kind == MetaTaskKind::InputBoundary && !positive { &invalid } else { &success };
            if pool.is_empty() || choices.is_empty() {
                return Err(MetaError::NoMaterial { kind });
            }
            let mut last_err = MetaError::NoMaterial { kind };
            for _ in 0..RECORD_TRIES {
                let template = &choices[rng.index(choices.len())];
                let record = pool[rng.index(pool.len())];
                let sample_seed = rng.next_u64();
                let built = if kind == MetaTaskKind::OutputBoundary && !positive {
                    build_output_boundary_negative(record, template, sample_seed)
                } else {
                    build_meta_sample(record, kind, template, sample_seed)
                };
                match built {
                    Ok(mut sample) => {
                        sample.sample_id = format!("{env_id}-meta-{seed:016x}-{i:06}");
                        return Ok(sample);
                    }
                    Err(e) => last_err = e,
                }
            }
            Err(last_err)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleFailure {
    pub sample_id: String,
    pub meta_task: MetaTaskKind,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindTally {
    pub total: usize,
    pub passed: usize,
    pub yes: usize,
    pub no: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub total: usize,
    pub passed: usize,
    pub per_kind: BTreeMap<MetaTaskKind, KindTally>,
    pub failures: Vec<SampleFailure>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.passed == self.total
    }

    pub fn pass_rate(&self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            self.passed as f64 / self.total as f64
        }
    }

    /// Share of "yes" labels in a boundary task, if it has samples.
    pub fn positive_share(&self, kind: MetaTaskKind) -> Option<f64> {
        let t = self.per_kind.get(&kind)?;
        (t.yes + t.no > 0).then(|| t.yes as f64 / (t.yes + t.no) as f64)
    }
}

fn same(a: &State, b: &State) -> bool {
    a.canonical() == b.canonical()
}

fn expect(cond: bool, detail: &str) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(detail.to_string())
    }
}

fn step_to(s: &State, a: &Action) -> Option<State> {
    match env::step(s, a) {
        StepOutcome::Success { state_after } => Some(state_after),
        StepOutcome::Invalid { .. } => None,
    }
}

/// Checks one sample against its record with the environment as oracle.
fn check_sample(sample: &MetaSample, record: &ExecutionRecord, templates: &TemplateSet) -> Result<(), String> {
    let template = templates
        .get(&sample.provenance.template_id)
        .ok_or_else(|| format!("unknown template {}", sample.provenance.template_id))?;
    expect(template.meta_task == sample.meta_task, "template belongs to another meta-task")?;
    let (q, a) = render(template, &sample.context, &sample.structured_answer);
    expect(q == sample.question, "question text does not match its template")?;
    expect(a == sample.answer, "answer text does not match the structured answer")?;

    let ctx = &sample.context;
    let s = &record.state_before;
    let recorded_after = record.outcome.state_after();
    let shows_state = || expect(ctx.state.as_ref().is_some_and(|x| same(x, s)), "shown state differs from the record");
    let shows_action = || expect(ctx.action.as_ref() == Some(&record.action), "shown action differs from the record");
    let shows_outcome = || {
        expect(
            matches!((&ctx.outcome, recorded_after), (Some(x), Some(y)) if same(x, y)),
            "shown outcome differs from the record",
        )
    };
    match (sample.meta_task, &sample.structured_answer) {
        (MetaTaskKind::Effect, StructuredAnswer::State(ans)) => {
            shows_state()?;
            shows_action()?;
            expect(step_to(s, &record.action).is_some_and(|x| same(&x, ans)), "step(s, a) differs from the answer")
        }
        (MetaTaskKind::DecisionMaking, StructuredAnswer::Action(ans)) => {
            shows_state()?;
            shows_outcome()?;
            let target = ctx.outcome.as_ref().expect("checked above");
            expect(
                step_to(s, ans).is_some_and(|x| same(&x, target)),
                "answered action does not produce the shown outcome",
            )
        }
        (MetaTaskKind::Reversion, StructuredAnswer::State(ans)) => {
            shows_action()?;
            shows_outcome()?;
            let target = ctx.outcome.as_ref().expect("checked above");
            expect(
                step_to(ans, &record.action).is_some_and(|x| same(&x, target)),
                "the action does not take the answered state to the shown outcome",
            )
        }
        (MetaTaskKind::InputBoundary, StructuredAnswer::Label(label)) => {
            shows_state()?;
            shows_action()?;
            let truth = env::step(s, &record.action).is_success();
            expect(*label == truth, "executability label is wrong")
        }
        (MetaTaskKind::OutputBoundary, StructuredAnswer::Label(label)) => {
            shows_state()?;
            let candidate = ctx.outcome.as_ref().ok_or("no candidate state shown")?;
            expect(*label == one_step_reachable(s, candidate), "reachability label is wrong")
        }
        (MetaTaskKind::Counterfact, StructuredAnswer::State(ans)) => {
            shows_action()?;
            shows_outcome()?;
            let alt = ctx.alt_action.as_ref().ok_or("no alternative action shown")?;
            expect(*alt != record.action, "alternative equals the recorded action")?;
            expect(step_to(s, alt).is_some_and(|x| same(&x, ans)), "step(s, a') differs from the answer")
        }
        (kind, _) => Err(format!("answer type does not fit {kind}")),
    }
}

/// Verifies every sample against the record it cites.
pub fn verify_metaset(
    samples: &[MetaSample],
    records: &[ExecutionRecord],
    templates: &TemplateSet,
) -> VerificationReport {
    let by_id: HashMap<&str, &ExecutionRecord> = records.iter().map(|r| (r.record_id.as_str(), r)).collect();
    let outcomes: Vec<Result<(), String>> = samples
        .par_iter()
        .map(|sample| {
            let [id] = sample.provenance.record_ids.as_slice() else {
                return Err("expected exactly one provenance record".into());
            };
            let record = by_id.get(id.as_str()).ok_or_else(|| format!("missing provenance record {id}"))?;
            if record.env_id != sample.env_id {
                return Err("provenance record comes from another environment".into());
            }
            check_sample(sample, record, templates)
        })
        .collect();
    let mut report = VerificationReport {
        total: samples.len(),
        ..Default::default()
    };
    for (sample, outcome) in samples.iter().zip(outcomes) {
        let tally = report.per_kind.entry(sample.meta_task).or_default();
        tally.total += 1;
        if let StructuredAnswer::Label(l) = sample.structured_answer {
            if l {
                tally.yes += 1;
            } else {
                tally.no += 1;
            }
        }
        match outcome {
            Ok(()) => {
                tally.passed += 1;
                report.passed += 1;
            }
            Err(detail) => report.failures.push(SampleFailure {
                sample_id: sample.sample_id.clone(),
                meta_task: sample.meta_task,
                detail,
            }),
        }
    }
    report
}
