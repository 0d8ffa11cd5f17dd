//! Arrangements built on top of single meta-samples: multi-turn
//! conversations, informative-state sentences and in-context prompts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use toolsim_core::env::{render_outcome, render_state};
use toolsim_core::rng::SeededRng;
use toolsim_core::{EnvDescriptor, EnvId, ExecutionRecord};

use crate::metaset::{MetaError, MetaSample};
use crate::templates::MetaTaskKind;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversationTurn {
    pub sample_id: String,
    pub meta_task: MetaTaskKind,
    pub question: String,
    pub answer: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conversation {
    pub id: String,
    pub env_id: EnvId,
    pub turns: Vec<ConversationTurn>,
}

fn common_env(samples: &[MetaSample]) -> Result<Option<EnvId>, MetaError> {
    let Some(first) = samples.first() else { return Ok(None) };
    match samples.iter().find(|s| s.env_id != first.env_id) {
        Some(other) => Err(MetaError::MixedEnvs(first.env_id, other.env_id)),
        None => Ok(Some(first.env_id)),
    }
}

/// Shuffles the samples and cuts them into conversations whose lengths are
/// drawn uniformly from `turns_min..=turns_max`. The final conversation takes
/// whatever remains, so it may be shorter than `turns_min`.
pub fn arrange_multiturn(
    samples: &[MetaSample],
    seed: u64,
    turns_min: usize,
    turns_max: usize,
) -> Result<Vec<Conversation>, MetaError> {
    if turns_min == 0 || turns_min > turns_max {
        return Err(MetaError::Config(format!(
            "turn range [{turns_min}, {turns_max}] is empty or starts at zero"
        )));
    }
    let Some(env_id) = common_env(samples)? else { return Ok(Vec::new()) };
    let mut rng = SeededRng::new(seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    rng.shuffle(&mut order);
    let mut conversations = Vec::new();
    let mut rest = order.as_slice();
    while !rest.is_empty() {
        let len = (rng.range_inclusive(turns_min as u64, turns_max as u64) as usize).min(rest.len());
        let (head, tail) = rest.split_at(len);
        conversations.push(Conversation {
            id: format!("{env_id}-conv-{seed:016x}-{:06}", conversations.len()),
            env_id,
            turns: head
                .iter()
                .map(|&i| {
                    let s = &samples[i];
                    ConversationTurn {
                        sample_id: s.sample_id.clone(),
                        meta_task: s.meta_task,
                        question: s.question.clone(),
                        answer: s.answer.clone(),
                    }
                })
                .collect(),
        });
        rest = tail;
    }
    Ok(conversations)
}

/// Replacement for the default informative-state sentence, e.g. a text
/// rewriter backed by a language model.
pub trait StateRewriter {
    fn rewrite(&self, record: &ExecutionRecord) -> String;
}

impl<F: Fn(&ExecutionRecord) -> String> StateRewriter for F {
    fn rewrite(&self, record: &ExecutionRecord) -> String {
        self(record)
    }
}

/// One sentence describing what a tool call did.
pub fn contextualize_state(record: &ExecutionRecord) -> String {
    format!(
        "Calling {} with {} on {} returned {}.",
        record.action.tool,
        record.action.render_params(),
        render_state(&record.state_before),
        render_outcome(&record.outcome)
    )
}

/// Like [`contextualize_state`], but the hook's text wins when one is given.
pub fn contextualize_with(record: &ExecutionRecord, hook: Option<&dyn StateRewriter>) -> String {
    match hook {
        Some(h) => h.rewrite(record),
        None => contextualize_state(record),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IclPrompt {
    pub env_id: EnvId,
    pub seed: u64,
    pub k_per_task: usize,
    pub demo_ids: Vec<String>,
    pub text: String,
}

/// A system prompt with the environment's tool documentation followed by
/// `k_per_task` demonstrations of every meta-task, drawn without replacement.
pub fn build_icl_prompt(
    env_id: EnvId,
    metaset: &[MetaSample],
    seed: u64,
    k_per_task: usize,
) -> Result<IclPrompt, MetaError> {
    if let Some(found) = common_env(metaset)? {
        if found != env_id {
            return Err(MetaError::MixedEnvs(env_id, found));
        }
    }
    let mut by_kind: BTreeMap<MetaTaskKind, Vec<&MetaSample>> = BTreeMap::new();
    for s in metaset {
        by_kind.entry(s.meta_task).or_default().push(s);
    }
    let mut rng = SeededRng::new(seed);
    let mut text = EnvDescriptor::for_env(env_id).docs_text();
    let mut demo_ids = Vec::new();
    if k_per_task > 0 {
        text.push_str("\nExamples of how the tools behave:\n");
    }
    for kind in MetaTaskKind::ALL {
        if k_per_task == 0 {
            break;
        }
        let pool = by_kind.get(&kind).map_or(&[][..], Vec::as_slice);
        if pool.len() < k_per_task {
            return Err(MetaError::NoMaterial { kind });
        }
        let mut picks: Vec<usize> = (0..pool.len()).collect();
        rng.shuffle(&mut picks);
        text.push_str(&format!("\n## {}\n", kind.title()));
        for &i in &picks[..k_per_task] {
            let s = pool[i];
            text.push_str(&format!("Q: {}\nA: {}\n", s.question, s.answer));
            demo_ids.push(s.sample_id.clone());
        }
    }
    Ok(IclPrompt {
        env_id,
        seed,
        k_per_task,
        demo_ids,
        text,
    })
}
