use std::collections::{BTreeMap, HashMap};

use toolsim_core::env::blocksworld::{BwState, Color};
use toolsim_core::env::saw::SawState;
use toolsim_core::{env, Action, EnvId, ExecutionRecord, State};
use toolsim_data::compose::{arrange_multiturn, build_icl_prompt};
use toolsim_data::metaset::{
    build_meta_sample, build_metaset, render, verify_metaset, MetaContext, MetaSample, MetasetConfig, StructuredAnswer,
};
use toolsim_data::sampler::{sample_random_records, SamplerConfig};
use toolsim_data::templates::{MetaTaskKind, TemplateSet};

fn corpus(env: EnvId, seed: u64, n: usize) -> (Vec<ExecutionRecord>, Vec<MetaSample>) {
    let records = sample_random_records(env, seed, 2000, &SamplerConfig::default()).unwrap();
    let samples = build_metaset(&records, seed, n, &TemplateSet::builtin(), &MetasetConfig::default()).unwrap();
    (records, samples)
}

#[test]
fn generated_corpora_verify_completely() {
    let templates = TemplateSet::builtin();
    for env in EnvId::ALL {
        let (records, samples) = corpus(env, 31, 3000);
        let report = verify_metaset(&samples, &records, &templates);
        assert!(report.all_passed(), "{env}: {:?}", &report.failures[..report.failures.len().min(3)]);
        assert_eq!(report.per_kind.len(), 6);
        for kind in [MetaTaskKind::InputBoundary, MetaTaskKind::OutputBoundary] {
            assert_eq!(report.positive_share(kind), Some(0.5), "{env} {kind}");
        }
    }
}

#[test]
fn building_is_deterministic() {
    let (_, a) = corpus(EnvId::Log, 4, 600);
    let (_, b) = corpus(EnvId::Log, 4, 600);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn tampered_effect_answer_fails() {
    let templates = TemplateSet::builtin();
    let (records, mut samples) = corpus(EnvId::Saw, 5, 60);
    let i = samples.iter().position(|s| s.meta_task == MetaTaskKind::Effect).unwrap();
    samples[i].structured_answer = StructuredAnswer::State(State::Saw(SawState::parse("zz").unwrap()));
    samples[i].answer = "['z','z']".into();
    let report = verify_metaset(&samples, &records, &templates);
    assert_eq!(report.failures.len(), 1);
    assert_eq!(report.failures[0].meta_task, MetaTaskKind::Effect);
}

#[test]
fn missing_provenance_is_reported_per_sample() {
    let templates = TemplateSet::builtin();
    let (records, samples) = corpus(EnvId::Bw, 6, 30);
    let report = verify_metaset(&samples, &records[..0], &templates);
    assert_eq!(report.failures.len(), 30);
    assert!(report.failures[0].detail.contains("missing provenance"));
}

fn all_bw_states(blocks: &[Color]) -> Vec<State> {
    let start = State::Bw(BwState::new(vec![blocks.to_vec()], None));
    let mut seen = vec![start.canonical()];
    let mut i = 0;
    while i < seen.len() {
        for (_, t) in env::successors(&seen[i]) {
            let t = t.canonical();
            if !seen.contains(&t) {
                seen.push(t);
            }
        }
        i += 1;
    }
    seen
}

#[test]
fn one_step_transitions_have_a_single_action() {
    // Over the whole 4-block space no two actions reach the same state, so a
    // decision-making answer other than the recorded one is never valid here.
    let states = all_bw_states(&[Color::Red, Color::Blue, Color::Green, Color::Yellow]);
    assert_eq!(states.len(), 73 + 4 * 13);
    for s in &states {
        let mut seen: HashMap<State, Action> = HashMap::new();
        for (a, t) in env::successors(s) {
            assert!(seen.insert(t.canonical(), a).is_none(), "{s:?}");
        }
    }
}

#[test]
fn reversion_accepts_any_valid_preimage() {
    // Blue in hand over [red] and [green] comes from three different piles.
    let templates = TemplateSet::builtin();
    let kind = MetaTaskKind::Reversion;
    let template = &templates.for_kind(kind)[0];
    let action = Action::pick("blue");
    let preimages: Vec<State> = [
        vec![vec![Color::Red, Color::Blue], vec![Color::Green]],
        vec![vec![Color::Red], vec![Color::Green, Color::Blue]],
        vec![vec![Color::Red], vec![Color::Green], vec![Color::Blue]],
    ]
    .into_iter()
    .map(|stacks| State::Bw(BwState::new(stacks, None)))
    .collect();
    let record = ExecutionRecord {
        env_id: EnvId::Bw,
        record_id: "rev".into(),
        seed: 0,
        state_before: preimages[0].clone(),
        action: action.clone(),
        outcome: env::step(&preimages[0], &action),
    };
    let base = build_meta_sample(&record, kind, template, 0).unwrap();
    let answered = |answer: State| {
        let mut s = base.clone();
        s.structured_answer = StructuredAnswer::State(answer);
        (s.question, s.answer) = render(template, &s.context, &s.structured_answer);
        verify_metaset(&[s], std::slice::from_ref(&record), &templates).all_passed()
    };
    for pre in &preimages {
        assert!(answered(pre.clone()), "{pre:?}");
    }
    let wrong = State::Bw(BwState::new(vec![vec![Color::Red, Color::Green, Color::Blue]], None));
    assert!(!answered(wrong));
}

#[test]
fn decision_making_rejects_an_action_with_another_effect() {
    let templates = TemplateSet::builtin();
    let kind = MetaTaskKind::DecisionMaking;
    let template = &templates.for_kind(kind)[0];
    let s = State::Saw(SawState::parse("ab").unwrap());
    let record = ExecutionRecord {
        env_id: EnvId::Saw,
        record_id: "dm".into(),
        seed: 0,
        state_before: s.clone(),
        action: Action::swap('a'),
        outcome: env::step(&s, &Action::swap('a')),
    };
    let sample = build_meta_sample(&record, kind, template, 0).unwrap();
    assert_eq!(sample.structured_answer, StructuredAnswer::Action(Action::swap('a')));
    assert!(verify_metaset(std::slice::from_ref(&sample), std::slice::from_ref(&record), &templates).all_passed());

    let mut wrong = sample;
    wrong.structured_answer = StructuredAnswer::Action(Action::add('a'));
    (wrong.question, wrong.answer) = render(template, &wrong.context, &wrong.structured_answer);
    assert!(!verify_metaset(&[wrong], &[record], &templates).all_passed());
}

#[test]
fn template_use_is_uniform() {
    // Each of K = 5 templates per kind should appear with frequency 1/5 within
    // three binomial standard deviations.
    let (_, samples) = corpus(EnvId::Saw, 12, 12_000);
    let mut counts: BTreeMap<(MetaTaskKind, String), usize> = BTreeMap::new();
    for s in &samples {
        *counts.entry((s.meta_task, s.provenance.template_id.clone())).or_default() += 1;
    }
    assert_eq!(counts.len(), 30);
    let per_kind = 12_000.0 / 6.0;
    let (mean, sd) = (per_kind / 5.0, (per_kind * 0.2 * 0.8f64).sqrt());
    for ((kind, id), c) in counts {
        assert!((c as f64 - mean).abs() <= 3.0 * sd, "{kind} {id}: {c}");
    }
}

#[test]
fn questions_never_show_the_masked_value() {
    let (_, samples) = corpus(EnvId::Saw, 13, 600);
    for s in samples {
        if let StructuredAnswer::State(ans) = &s.structured_answer {
            let text = env::render_state(ans);
            let shown: MetaContext = s.context.clone();
            let visible = [shown.state.as_ref(), shown.outcome.as_ref()]
                .into_iter()
                .flatten()
                .any(|x| env::render_state(x) == text);
            if !visible {
                assert!(!s.question.contains(&text), "{}", s.question);
            }
        }
    }
}

#[test]
fn multiturn_partitions() {
    let (_, samples) = corpus(EnvId::Saw, 14, 10);
    let convs = arrange_multiturn(&samples, 1, 5, 5).unwrap();
    assert_eq!(convs.iter().map(|c| c.turns.len()).collect::<Vec<_>>(), vec![5, 5]);

    let seven = &samples[..7];
    for seed in 0..50 {
        let convs = arrange_multiturn(seven, seed, 2, 6).unwrap();
        assert_eq!(convs.iter().map(|c| c.turns.len()).sum::<usize>(), 7);
        assert!(convs.iter().all(|c| c.turns.len() <= 6));
        let mut ids: Vec<_> = convs.iter().flat_map(|c| c.turns.iter().map(|t| t.sample_id.clone())).collect();
        ids.sort();
        let mut want: Vec<_> = seven.iter().map(|s| s.sample_id.clone()).collect();
        want.sort();
        assert_eq!(ids, want);
        assert_eq!(convs, arrange_multiturn(seven, seed, 2, 6).unwrap());
    }
}

#[test]
fn multiturn_rejects_mixed_environments() {
    let (_, mut a) = corpus(EnvId::Saw, 15, 4);
    let (_, b) = corpus(EnvId::Bw, 15, 4);
    a.extend(b);
    assert!(arrange_multiturn(&a, 0, 2, 3).is_err());
}

#[test]
fn icl_prompt_counts_and_determinism() {
    let (_, samples) = corpus(EnvId::Bw, 16, 120);
    let p = build_icl_prompt(EnvId::Bw, &samples, 3, 2).unwrap();
    assert_eq!(p.demo_ids.len(), 12);
    assert_eq!(p.text.matches("\nQ: ").count(), 12);
    assert_eq!(p, build_icl_prompt(EnvId::Bw, &samples, 3, 2).unwrap());
    let docs = toolsim_core::EnvDescriptor::for_env(EnvId::Bw).docs_text();
    assert!(p.text.starts_with(&docs));
    assert_eq!(build_icl_prompt(EnvId::Bw, &samples, 3, 0).unwrap().text, docs);
    assert!(build_icl_prompt(EnvId::Bw, &samples[..5], 3, 2).is_err());
}
