//! Subcommand bodies. Each returns `Ok(true)` when its output checks out,
//! `Ok(false)` when a verification failed, and an error otherwise.

use std::path::Path;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use toolsim_core::{replay_trace, EnvDescriptor, EnvId, ExecutionRecord};
use toolsim_data::compose::{arrange_multiturn, build_icl_prompt, Conversation, IclPrompt};
use toolsim_data::metaset::{build_metaset, verify_metaset, MetaSample, VerificationReport};
use toolsim_data::sampler::{sample_guided_records, sample_random_records, SamplerConfig};
use toolsim_data::solutions::{emit_solution_corpus, to_chat, ChatTrace, SolutionTrace, ThoughtSet};
use toolsim_data::templates::{MetaTaskKind, TemplateSet};
use toolsim_eval::agents::agent_from_descriptor;
use toolsim_eval::harness::{run_suite, suite_params, summarize, EvalReport, SuiteOptions};

use crate::config::{Policy, RunConfig};
use crate::output::{read_header, read_jsonl, sibling, write_jsonl, Header};
use crate::Common;

pub const KIND_RECORDS: &str = "execution-records";
pub const KIND_METASET: &str = "metaset";
pub const KIND_METASET_REPORT: &str = "metaset-report";
pub const KIND_CONVERSATIONS: &str = "conversations";
pub const KIND_SOLUTIONS: &str = "solutions";
pub const KIND_CHAT: &str = "chat";
pub const KIND_ICL: &str = "icl-prompt";
pub const KIND_EVAL: &str = "eval-report";

/// What the header hash covers: the subcommand and the merged config.
#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config: &'a RunConfig,
}

/// Loads the config file, applies the shared flags and sets up the pool.
fn resolve(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if common.env.is_some() {
        cfg.env = common.env;
    }
    if common.n.is_some() {
        cfg.n = common.n;
    }
    cfg.seed = Some(common.seed.or(cfg.seed).unwrap_or(0));
    if let Some(instance) = &cfg.instance {
        cfg.sampler.instance = instance.clone();
    }
    if let Some(threads) = common.threads {
        if threads == 0 {
            bail!("--threads must be at least 1");
        }
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    Ok(cfg)
}

fn header(kind: &str, command: &str, cfg: &RunConfig) -> Header {
    Header::new(kind, &Manifest { command, config: cfg })
}

fn sample_records(env: EnvId, seed: u64, n: usize, policy: Policy, config: &SamplerConfig) -> Result<Vec<ExecutionRecord>> {
    Ok(match policy {
        Policy::Random => sample_random_records(env, seed, n, config)?,
        Policy::Guided => sample_guided_records(env, seed, n, config)?,
    })
}

fn records_replay(records: &[ExecutionRecord]) -> bool {
    match replay_trace(records) {
        Ok(report) if report.all_match() => true,
        Ok(report) => {
            eprintln!(
                "{} of {} records do not replay (first at index {})",
                report.mismatched,
                report.total,
                report.mismatch_indices()[0]
            );
            false
        }
        Err(e) => {
            eprintln!("replay rejected: {e}");
            false
        }
    }
}

pub fn gen_exec(common: &Common, policy: Option<Policy>) -> Result<bool> {
    let mut cfg = resolve(common)?;
    if policy.is_some() {
        cfg.policy = policy;
    }
    cfg.validate()?;
    let (env, n, seed) = (cfg.env()?, cfg.n()?, cfg.seed());
    let records = sample_records(env, seed, n, cfg.policy.unwrap_or(Policy::Random), &cfg.sampler)?;
    write_jsonl(&common.out, &header(KIND_RECORDS, "gen-exec", &cfg), &records)?;
    let ok = records_replay(&records);
    println!("{}: {} records", common.out.display(), records.len());
    Ok(ok)
}

fn print_verification(report: &VerificationReport) {
    println!(
        "verified {}/{} samples ({:.2}%)",
        report.passed,
        report.total,
        100.0 * report.pass_rate()
    );
    for kind in [MetaTaskKind::InputBoundary, MetaTaskKind::OutputBoundary] {
        if let Some(share) = report.positive_share(kind) {
            println!("  {}: {:.1}% yes", kind.as_str(), 100.0 * share);
        }
    }
    for f in report.failures.iter().take(10) {
        eprintln!("  {} ({}): {}", f.sample_id, f.meta_task.as_str(), f.detail);
    }
}

pub fn gen_metaset(
    common: &Common,
    policy: Option<Policy>,
    records: Option<usize>,
    turns_min: Option<usize>,
    turns_max: Option<usize>,
) -> Result<bool> {
    let mut cfg = resolve(common)?;
    let m = &mut cfg.metaset;
    if let Some(p) = policy {
        m.policy = p;
    }
    if records.is_some() {
        m.records = records;
    }
    m.turns_min = turns_min.unwrap_or(m.turns_min);
    m.turns_max = turns_max.unwrap_or(m.turns_max);
    cfg.validate()?;
    let (env, n, seed) = (cfg.env()?, cfg.n()?, cfg.seed());

    let pool = sample_records(env, seed, cfg.metaset.records.unwrap_or(n), cfg.metaset.policy, &cfg.sampler)?;
    let templates = TemplateSet::builtin();
    let samples = build_metaset(&pool, seed, n, &templates, &cfg.metaset.builder_config())?;
    let conversations = arrange_multiturn(&samples, seed, cfg.metaset.turns_min, cfg.metaset.turns_max)?;
    let report = verify_metaset(&samples, &pool, &templates);

    write_jsonl(&sibling(&common.out, "records"), &header(KIND_RECORDS, "gen-metaset", &cfg), &pool)?;
    write_jsonl(
        &sibling(&common.out, "conversations"),
        &header(KIND_CONVERSATIONS, "gen-metaset", &cfg),
        &conversations,
    )?;
    write_jsonl(
        &sibling(&common.out, "report"),
        &header(KIND_METASET_REPORT, "gen-metaset", &cfg),
        std::slice::from_ref(&report),
    )?;
    write_jsonl(&common.out, &header(KIND_METASET, "gen-metaset", &cfg), &samples)?;
    println!("{}: {} samples, {} conversations", common.out.display(), samples.len(), conversations.len());
    print_verification(&report);
    Ok(report.all_passed())
}

fn check_traces(traces: &[SolutionTrace]) -> bool {
    let bad: Vec<&str> = traces
        .iter()
        .filter(|t| !t.solved || !t.replays())
        .map(|t| t.id.as_str())
        .collect();
    for id in bad.iter().take(10) {
        eprintln!("trace {id} does not replay to its goal");
    }
    bad.is_empty()
}

pub fn gen_solutions(common: &Common) -> Result<bool> {
    let cfg = resolve(common)?;
    cfg.validate()?;
    let (env, n, seed) = (cfg.env()?, cfg.n()?, cfg.seed());
    let params = cfg.instance.clone().unwrap_or_default();
    let traces = emit_solution_corpus(env, seed, n, &params, &ThoughtSet::builtin())?;
    let chats: Vec<ChatTrace> = traces.iter().map(to_chat).collect();
    write_jsonl(&sibling(&common.out, "chat"), &header(KIND_CHAT, "gen-solutions", &cfg), &chats)?;
    write_jsonl(&common.out, &header(KIND_SOLUTIONS, "gen-solutions", &cfg), &traces)?;
    let optimal = traces.iter().filter(|t| t.optimal).count();
    println!("{}: {} traces, {} proved optimal", common.out.display(), traces.len(), optimal);
    Ok(check_traces(&traces))
}

fn check_icl(prompt: &IclPrompt) -> bool {
    let docs = EnvDescriptor::for_env(prompt.env_id).docs_text();
    let expected = prompt.k_per_task * MetaTaskKind::ALL.len();
    let ok = prompt.text.starts_with(&docs) && prompt.demo_ids.len() == expected;
    if !ok {
        eprintln!(
            "prompt has {} demonstrations, expected {expected}, or lacks the tool docs",
            prompt.demo_ids.len()
        );
    }
    ok
}

pub fn gen_icl(common: &Common, k_per_task: Option<usize>) -> Result<bool> {
    let mut cfg = resolve(common)?;
    if let Some(k) = k_per_task {
        cfg.icl.k_per_task = k;
    }
    cfg.validate()?;
    let (env, seed) = (cfg.env()?, cfg.seed());
    let pool_size = cfg.icl.pool;
    let records = sample_records(env, seed, pool_size, cfg.metaset.policy, &cfg.sampler)?;
    let templates = TemplateSet::builtin();
    let pool = build_metaset(&records, seed, pool_size, &templates, &cfg.metaset.builder_config())?;
    let prompt = build_icl_prompt(env, &pool, seed, cfg.icl.k_per_task)?;
    write_jsonl(&common.out, &header(KIND_ICL, "gen-icl", &cfg), std::slice::from_ref(&prompt))?;
    println!("{}: {} demonstrations", common.out.display(), prompt.demo_ids.len());
    Ok(check_icl(&prompt))
}

fn check_eval(report: &EvalReport) -> bool {
    let solved = report.episodes.iter().filter(|e| e.solved).count();
    let replay_failures: Vec<&str> = report
        .episodes
        .iter()
        .filter(|e| !e.replays())
        .map(|e| e.episode_id.as_str())
        .collect();
    for id in replay_failures.iter().take(10) {
        eprintln!("episode {id} does not replay");
    }
    let consistent = solved == report.solved_count && report.episodes.len() == report.n_cases;
    if !consistent {
        eprintln!("report totals disagree with its episodes");
    }
    consistent && replay_failures.is_empty()
}

pub fn eval(common: &Common, agent: Option<String>, budget: Option<usize>, timeout_secs: Option<u64>) -> Result<bool> {
    let mut cfg = resolve(common)?;
    if let Some(a) = agent {
        cfg.eval.agent = a;
    }
    if budget.is_some() {
        cfg.eval.budget = budget;
    }
    if let Some(t) = timeout_secs {
        cfg.eval.timeout_secs = t;
    }
    cfg.validate()?;
    let (env, n, seed) = (cfg.env()?, cfg.n()?, cfg.seed());
    let agent = agent_from_descriptor(&cfg.eval.agent, seed, Duration::from_secs(cfg.eval.timeout_secs))?;
    let options = SuiteOptions {
        max_steps: cfg.eval.budget,
        params: cfg.instance.clone().unwrap_or_else(|| suite_params(env)),
    };
    let report = run_suite(env, seed, n, agent.as_ref(), &options)?;
    write_jsonl(&common.out, &header(KIND_EVAL, "eval", &cfg), std::slice::from_ref(&report))?;
    print!("{}", summarize(&report));
    Ok(check_eval(&report))
}

fn single<T>(items: Vec<T>, path: &Path) -> Result<T> {
    let mut items = items.into_iter();
    match (items.next(), items.next()) {
        (Some(one), None) => Ok(one),
        _ => bail!("{}: expected exactly one entry after the header", path.display()),
    }
}

pub fn verify(input: &Path, records: Option<&Path>) -> Result<bool> {
    let kind = read_header(input)?.kind;
    let ok = match kind.as_str() {
        KIND_RECORDS => {
            let (_, recs): (_, Vec<ExecutionRecord>) = read_jsonl(input)?;
            println!("{} records", recs.len());
            records_replay(&recs)
        }
        KIND_METASET => {
            let (_, samples): (_, Vec<MetaSample>) = read_jsonl(input)?;
            let rec_path = records.map(Path::to_path_buf).unwrap_or_else(|| sibling(input, "records"));
            let (_, recs): (_, Vec<ExecutionRecord>) =
                read_jsonl(&rec_path).with_context(|| "the records a metaset cites are needed; pass --records")?;
            let report = verify_metaset(&samples, &recs, &TemplateSet::builtin());
            print_verification(&report);
            report.all_passed()
        }
        KIND_METASET_REPORT => {
            let (_, items) = read_jsonl::<VerificationReport>(input)?;
            let report = single(items, input)?;
            print_verification(&report);
            report.all_passed()
        }
        KIND_CONVERSATIONS => {
            let (_, convs): (_, Vec<Conversation>) = read_jsonl(input)?;
            println!("{} conversations", convs.len());
            convs.iter().all(|c| !c.turns.is_empty())
        }
        KIND_SOLUTIONS => {
            let (_, traces): (_, Vec<SolutionTrace>) = read_jsonl(input)?;
            println!("{} traces", traces.len());
            check_traces(&traces)
        }
        KIND_CHAT => {
            let (_, chats): (_, Vec<ChatTrace>) = read_jsonl(input)?;
            println!("{} chat traces", chats.len());
            chats.iter().all(|c| c.messages.len() >= 2)
        }
        KIND_ICL => {
            let (_, items) = read_jsonl::<IclPrompt>(input)?;
            check_icl(&single(items, input)?)
        }
        KIND_EVAL => {
            let (_, items) = read_jsonl::<EvalReport>(input)?;
            let report = single(items, input)?;
            println!("{} episodes", report.episodes.len());
            check_eval(&report)
        }
        other => bail!("{}: unknown artifact kind `{other}`", input.display()),
    };
    println!("{}", if ok { "ok" } else { "FAILED" });
    Ok(ok)
}

pub fn report(input: &Path) -> Result<bool> {
    let (h, items) = read_jsonl::<EvalReport>(input)?;
    if h.kind != KIND_EVAL {
        bail!("{}: a `{}` file, not an evaluation report", input.display(), h.kind);
    }
    print!("{}", summarize(&single(items, input)?));
    Ok(true)
}
