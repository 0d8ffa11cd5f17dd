//! Agents: scripted policies for calibration, and adapters for external
//! agents reached through a subprocess or over HTTP.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use thiserror::Error;
use toolsim_core::env;
use toolsim_core::hash::fnv64;
use toolsim_core::rng::{derive_seed, SeededRng};
use toolsim_core::{hash_state, planner, Action, EnvId};

use crate::protocol::{AgentRequest, AgentResponse};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AgentError {
    #[error("agent did not answer within {0:?}")]
    Timeout(Duration),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("transport failure: {0}")]
    Transport(String),
}

/// A policy answering one request at a time. Implementations must be safe
/// to share between concurrently running episodes.
pub trait Agent: Sync {
    fn name(&self) -> String;
    fn act(&self, request: &AgentRequest) -> Result<AgentResponse, AgentError>;
}

/// Follows planner solutions. The plan of each episode is kept and reused
/// while the agent stays on it.
#[derive(Default)]
pub struct OracleAgent {
    plans: Mutex<HashMap<String, (u64, Vec<Action>)>>,
}

impl OracleAgent {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Agent for OracleAgent {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn act(&self, req: &AgentRequest) -> Result<AgentResponse, AgentError> {
        let here = hash_state(&req.state);
        let mut plans = self.plans.lock().expect("oracle cache poisoned");
        let cached = plans
            .get(&req.episode_id)
            .filter(|(at, rest)| *at == here && !rest.is_empty())
            .map(|(_, rest)| rest.clone());
        let actions = match cached {
            Some(rest) => rest,
            None => planner::plan(&req.state, &req.goal)
                .map_err(|e| AgentError::Protocol(format!("oracle cannot plan: {e}")))?
                .actions,
        };
        let Some((first, rest)) = actions.split_first() else {
            return Err(AgentError::Protocol("oracle asked to act in a goal state".into()));
        };
        let next = env::try_step(&req.state, first).expect("planned actions are executable");
        plans.insert(req.episode_id.clone(), (hash_state(&next), rest.to_vec()));
        let thought = format!("Following the plan, {} steps left.", actions.len());
        Ok(AgentResponse::from_action(thought, first))
    }
}

/// Uniform over the environment's candidate actions, executable or not.
/// Draws depend only on the seed, the episode id and the step.
pub struct RandomAgent {
    seed: u64,
}

impl RandomAgent {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }
}

impl Agent for RandomAgent {
    fn name(&self) -> String {
        "random".into()
    }

    fn act(&self, req: &AgentRequest) -> Result<AgentResponse, AgentError> {
        let stream = derive_seed(fnv64(req.episode_id.as_bytes()), req.step as u64);
        let mut rng = SeededRng::derived(self.seed, stream);
        let candidates = env::candidates(&req.state);
        let action = rng
            .choose(&candidates)
            .ok_or_else(|| AgentError::Protocol("no candidate actions".into()))?;
        Ok(AgentResponse::from_action("Trying something at random.", action))
    }
}

/// Only ever sends non-executable actions: `Add('z')` in SAW, otherwise
/// the first invalid candidate of the current state.
pub struct AlwaysInvalidAgent;

impl Agent for AlwaysInvalidAgent {
    fn name(&self) -> String {
        "always-invalid".into()
    }

    fn act(&self, req: &AgentRequest) -> Result<AgentResponse, AgentError> {
        let action = match req.env_id {
            EnvId::Saw => Action::add('z'),
            _ => env::enumerate_actions(&req.state)
                .into_iter()
                .find(|(_, o)| !o.is_success())
                .map(|(a, _)| a)
                .ok_or_else(|| AgentError::Protocol("every candidate is executable".into()))?,
        };
        Ok(AgentResponse::from_action("", &action))
    }
}

struct Subprocess {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl Subprocess {
    fn spawn(program: &str, args: &[String]) -> Result<Self, AgentError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| AgentError::Transport(format!("cannot start `{program}`: {e}")))?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");
        // A reader thread lets requests wait with a timeout.
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self { child, stdin, lines })
    }
}

impl Drop for Subprocess {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// An external program reading one JSON request per line on stdin and
/// writing one JSON response per line on stdout. One process serves every
/// episode; it is restarted after a timeout or a broken pipe.
pub struct CommandAgent {
    program: String,
    args: Vec<String>,
    timeout: Duration,
    process: Mutex<Option<Subprocess>>,
}

impl CommandAgent {
    pub fn new(command_line: &str, timeout: Duration) -> Result<Self, AgentError> {
        let mut parts = command_line.split_whitespace().map(str::to_string);
        let program = parts
            .next()
            .ok_or_else(|| AgentError::Transport("empty agent command".into()))?;
        Ok(Self {
            program,
            args: parts.collect(),
            timeout,
            process: Mutex::new(None),
        })
    }
}

impl Agent for CommandAgent {
    fn name(&self) -> String {
        std::iter::once(self.program.as_str())
            .chain(self.args.iter().map(String::as_str))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn act(&self, req: &AgentRequest) -> Result<AgentResponse, AgentError> {
        let mut slot = self.process.lock().expect("agent process lock poisoned");
        if slot.is_none() {
            *slot = Some(Subprocess::spawn(&self.program, &self.args)?);
        }
        let proc = slot.as_mut().expect("spawned above");
        let mut line = serde_json::to_string(req).expect("requests serialize");
        line.push('\n');
        let sent = proc.stdin.write_all(line.as_bytes()).and_then(|_| proc.stdin.flush());
        if let Err(e) = sent {
            *slot = None;
            return Err(AgentError::Transport(format!("cannot write to agent: {e}")));
        }
        let reply = match proc.lines.recv_timeout(self.timeout) {
            Ok(Ok(reply)) => reply,
            Ok(Err(e)) => {
                *slot = None;
                return Err(AgentError::Transport(e.to_string()));
            }
            Err(RecvTimeoutError::Timeout) => {
                *slot = None;
                return Err(AgentError::Timeout(self.timeout));
            }
            Err(RecvTimeoutError::Disconnected) => {
                *slot = None;
                return Err(AgentError::Transport("agent closed its output".into()));
            }
        };
        serde_json::from_str(&reply).map_err(|e| AgentError::Protocol(format!("bad response line: {e}")))
    }
}

/// An endpoint taking the request as a JSON POST body and answering with
/// the response object.
pub struct HttpAgent {
    url: String,
    agent: ureq::Agent,
    timeout: Duration,
}

impl HttpAgent {
    pub fn new(url: &str, timeout: Duration) -> Self {
        Self {
            url: url.to_string(),
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
            timeout,
        }
    }
}

impl Agent for HttpAgent {
    fn name(&self) -> String {
        self.url.clone()
    }

    fn act(&self, req: &AgentRequest) -> Result<AgentResponse, AgentError> {
        let body = serde_json::to_value(req).expect("requests serialize");
        let resp = self.agent.post(&self.url).send_json(body).map_err(|e| match e {
            ureq::Error::Transport(t) if t.kind() == ureq::ErrorKind::Io => {
                let text = t.to_string();
                if text.contains("timed out") {
                    AgentError::Timeout(self.timeout)
                } else {
                    AgentError::Transport(text)
                }
            }
            other => AgentError::Transport(other.to_string()),
        })?;
        resp.into_json()
            .map_err(|e| AgentError::Protocol(format!("bad response body: {e}")))
    }
}

pub const DEFAULT_AGENT_TIMEOUT: Duration = Duration::from_secs(60);

/// Builds an agent from a descriptor: `oracle`, `random`, `always-invalid`,
/// `cmd:<command line>` or `http:<url>`.
pub fn agent_from_descriptor(descriptor: &str, seed: u64, timeout: Duration) -> Result<Box<dyn Agent>, AgentError> {
    match descriptor {
        "oracle" => Ok(Box::new(OracleAgent::new())),
        "random" => Ok(Box::new(RandomAgent::new(seed))),
        "always-invalid" => Ok(Box::new(AlwaysInvalidAgent)),
        d => {
            if let Some(cmd) = d.strip_prefix("cmd:") {
                Ok(Box::new(CommandAgent::new(cmd, timeout)?))
            } else if let Some(url) = d.strip_prefix("http:") {
                // `http://host/act`, `http:host/act` and `http:https://host/act`
                // all name an endpoint.
                let url = if url.starts_with("//") {
                    format!("http:{url}")
                } else if url.contains("://") {
                    url.to_string()
                } else {
                    format!("http://{url}")
                };
                Ok(Box::new(HttpAgent::new(&url, timeout)))
            } else {
                Err(AgentError::Transport(format!(
                    "unknown agent `{d}`; expected oracle, random, always-invalid, cmd:... or http:..."
                )))
            }
        }
    }
}
