mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use toolsim_core::EnvId;

use crate::config::{parse_env, Policy};

#[derive(Parser)]
#[command(name = "toolsim", version, about = "Simulated tool environments: corpus generation and agent evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every generating subcommand. Each one overrides the
/// matching key of the config file.
#[derive(Args, Clone, Debug, Default)]
pub struct Common {
    /// Environment: saw, bw or log.
    #[arg(long, value_parser = parse_env)]
    pub env: Option<EnvId>,
    /// Number of items to produce.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file; sibling files take their names from it.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads (defaults to the number of cores). Outputs do not
    /// depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample execution records.
    GenExec {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        policy: Option<Policy>,
    },
    /// Build and verify a meta-task set, with its records and conversations.
    GenMetaset {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        policy: Option<Policy>,
        /// Execution records to draw from (default: n).
        #[arg(long)]
        records: Option<usize>,
        #[arg(long)]
        turns_min: Option<usize>,
        #[arg(long)]
        turns_max: Option<usize>,
    },
    /// Solve instances with the planner and annotate every step.
    GenSolutions {
        #[command(flatten)]
        common: Common,
    },
    /// Tool docs plus demonstrations for in-context learning.
    GenIcl {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k_per_task: Option<usize>,
    },
    /// Run an evaluation suite against an agent.
    Eval {
        #[command(flatten)]
        common: Common,
        /// oracle, random, always-invalid, cmd:<command line> or http:<url>.
        #[arg(long)]
        agent: Option<String>,
        /// Fixed step budget per episode.
        #[arg(long)]
        budget: Option<usize>,
        /// Same as --n.
        #[arg(long, conflicts_with = "n")]
        cases: Option<usize>,
        /// Seconds to wait for each agent response.
        #[arg(long)]
        timeout_secs: Option<u64>,
    },
    /// Re-check any file written by this tool.
    Verify {
        #[arg(long = "in")]
        input: PathBuf,
        /// Records a metaset cites (default: the `.records` sibling).
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Print a summary of an evaluation report.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenExec { common, policy } => commands::gen_exec(&common, policy),
        Command::GenMetaset {
            common,
            policy,
            records,
            turns_min,
            turns_max,
        } => commands::gen_metaset(&common, policy, records, turns_min, turns_max),
        Command::GenSolutions { common } => commands::gen_solutions(&common),
        Command::GenIcl { common, k_per_task } => commands::gen_icl(&common, k_per_task),
        Command::Eval {
            mut common,
            agent,
            budget,
            cases,
            timeout_secs,
        } => {
            common.n = common.n.or(cases);
            commands::eval(&common, agent, budget, timeout_secs)
        }
        Command::Verify { input, records } => commands::verify(&input, records.as_deref()),
        Command::Report { input } => commands::report(&input),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
