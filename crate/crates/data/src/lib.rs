//! Training-data pipeline on top of the simulated environments: execution
//! records, meta-task QA pairs, multi-turn and in-context arrangements, and
//! solution traces.

pub mod compose;
pub mod metaset;
pub mod sampler;
pub mod solutions;
pub mod templates;

pub use compose::{arrange_multiturn, build_icl_prompt, contextualize_state, Conversation, IclPrompt};
pub use metaset::{build_metaset, verify_metaset, MetaSample, MetasetConfig, StructuredAnswer, VerificationReport};
pub use sampler::{coverage_report, sample_guided_records, sample_random_records, CoverageStats, SamplerConfig};
pub use templates::{MetaTaskKind, Template, TemplateSet};
pub use solutions::{emit_solution_corpus, render_thought, to_chat, SolutionTrace, ThoughtSet};
