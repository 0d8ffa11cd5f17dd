//! Agent wire protocol: one JSON request per turn, one JSON response back.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use toolsim_core::{Action, EnvId, Goal, InvalidReason, Param, State, Tool};

/// One completed turn as the agent sees it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub thought: String,
    pub action: String,
    pub result: String,
}

/// What the harness sends each turn. `state` and `goal` are structured;
/// `state_text` and `goal_text` carry the same content in the notation of
/// the tool docs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentRequest {
    pub episode_id: String,
    pub step: usize,
    pub env_id: EnvId,
    pub tool_docs: String,
    pub goal: Goal,
    pub goal_text: String,
    pub state: State,
    pub state_text: String,
    pub history: Vec<HistoryEntry>,
    pub last_error: Option<String>,
}

/// What the agent answers. `input` holds the tool parameters; a full call
/// such as `"Swap('a')"` in `tool` with an empty `input` is accepted too.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentResponse {
    #[serde(default)]
    pub thought: String,
    pub tool: String,
    #[serde(default)]
    pub input: Vec<Value>,
}

impl AgentResponse {
    pub fn from_action(thought: impl Into<String>, action: &Action) -> Self {
        let input = action
            .params
            .iter()
            .map(|p| match p {
                Param::Loc(l) => Value::from(*l),
                Param::Sym(s) => Value::from(s.as_str()),
            })
            .collect();
        Self {
            thought: thought.into(),
            tool: action.tool.name().to_string(),
            input,
        }
    }
}

/// Why a response could not be turned into an action.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseDiagnostic {
    pub code: String,
    pub message: String,
}

impl ParseDiagnostic {
    fn new(code: &str, message: impl Into<String>) -> Self {
        Self {
            code: code.to_string(),
            message: message.into(),
        }
    }

    fn unknown_tool(name: &str, env: EnvId) -> Self {
        let tools: Vec<&str> = env.tools().iter().map(|t| t.name()).collect();
        Self::new(
            InvalidReason::UnknownTool.code(),
            format!("`{name}` is not a tool here; use one of {}", tools.join(", ")),
        )
    }
}

impl std::fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

fn env_tool(name: &str, env: EnvId) -> Result<Tool, ParseDiagnostic> {
    Tool::from_name(name)
        .filter(|t| t.env() == env)
        .ok_or_else(|| ParseDiagnostic::unknown_tool(name.trim(), env))
}

/// Location tools take numbers; quoted numbers are accepted as well.
fn typed_param(tool: Tool, raw: Param) -> Param {
    match (tool, raw) {
        (Tool::Truck | Tool::Plane, Param::Sym(s)) => s.trim().parse().map(Param::Loc).unwrap_or(Param::Sym(s)),
        (_, p) => p,
    }
}

fn token_param(token: &str) -> Result<Param, ParseDiagnostic> {
    let t = token.trim();
    let unquoted = ['\'', '"']
        .into_iter()
        .find_map(|q| t.strip_prefix(q).and_then(|r| r.strip_suffix(q)));
    match unquoted {
        Some(inner) => Ok(Param::Sym(inner.trim().to_string())),
        None if t.is_empty() => Err(ParseDiagnostic::new("syntax", "empty argument")),
        None if t.chars().any(|c| c == '\'' || c == '"') => {
            Err(ParseDiagnostic::new("syntax", format!("unbalanced quotes in `{t}`")))
        }
        None => Ok(t.parse().map(Param::Loc).unwrap_or_else(|_| Param::Sym(t.to_string()))),
    }
}

/// Parses `Tool(arg, ...)` in the grammar of `env`. Whitespace, single or
/// double quotes, and bare words are tolerated.
pub fn parse_action(text: &str, env: EnvId) -> Result<Action, ParseDiagnostic> {
    let text = text.trim().trim_end_matches(['.', ';']);
    let open = text
        .find('(')
        .ok_or_else(|| ParseDiagnostic::new("syntax", format!("expected Tool(args), got `{text}`")))?;
    let body = text[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| ParseDiagnostic::new("syntax", "missing closing parenthesis"))?;
    let tool = env_tool(&text[..open], env)?;
    let params = if body.trim().is_empty() {
        Vec::new()
    } else {
        body.split(',')
            .map(|tok| token_param(tok).map(|p| typed_param(tool, p)))
            .collect::<Result<_, _>>()?
    };
    Ok(Action::new(tool, params))
}

/// Turns a wire response into an action for `env`.
pub fn response_action(resp: &AgentResponse, env: EnvId) -> Result<Action, ParseDiagnostic> {
    if resp.input.is_empty() && resp.tool.contains('(') {
        return parse_action(&resp.tool, env);
    }
    let tool = env_tool(&resp.tool, env)?;
    let params = resp
        .input
        .iter()
        .map(|v| match v {
            Value::String(s) => Ok(typed_param(tool, Param::Sym(s.trim().to_string()))),
            Value::Number(n) => n
                .as_u64()
                .and_then(|n| u32::try_from(n).ok())
                .map(Param::Loc)
                .ok_or_else(|| ParseDiagnostic::new(InvalidReason::BadParams.code(), format!("bad number {n}"))),
            other => Err(ParseDiagnostic::new(
                InvalidReason::BadParams.code(),
                format!("inputs must be strings or numbers, got {other}"),
            )),
        })
        .collect::<Result<_, _>>()?;
    Ok(Action::new(tool, params))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_notation() {
        assert_eq!(parse_action("Swap('a')", EnvId::Saw).unwrap(), Action::swap('a'));
        assert_eq!(parse_action("Stack( 'table' )", EnvId::Bw).unwrap(), Action::stack("table"));
        assert_eq!(parse_action("Truck(1,2)", EnvId::Log).unwrap(), Action::truck(1, 2));
    }

    #[test]
    fn tolerant_forms() {
        assert_eq!(parse_action("  pick(\"red\") ", EnvId::Bw).unwrap(), Action::pick("red"));
        assert_eq!(parse_action("Add(a).", EnvId::Saw).unwrap(), Action::add('a'));
        assert_eq!(parse_action("Plane('3', 7)", EnvId::Log).unwrap(), Action::plane(3, 7));
    }

    #[test]
    fn diagnostics() {
        assert_eq!(parse_action("Fly(1,2)", EnvId::Log).unwrap_err().code, "unknown_tool");
        assert_eq!(parse_action("Pick('red')", EnvId::Saw).unwrap_err().code, "unknown_tool");
        assert_eq!(parse_action("Swap 'a'", EnvId::Saw).unwrap_err().code, "syntax");
        assert_eq!(parse_action("Swap('a'", EnvId::Saw).unwrap_err().code, "syntax");
        assert_eq!(parse_action("Swap('a)", EnvId::Saw).unwrap_err().code, "syntax");
    }

    #[test]
    fn structured_response() {
        let r: AgentResponse = serde_json::from_str(r#"{"thought":"t","tool":"Truck","input":[4,"5"]}"#).unwrap();
        assert_eq!(response_action(&r, EnvId::Log).unwrap(), Action::truck(4, 5));
        let r = AgentResponse {
            thought: String::new(),
            tool: "Add('q')".into(),
            input: vec![],
        };
        assert_eq!(response_action(&r, EnvId::Saw).unwrap(), Action::add('q'));
        let back = AgentResponse::from_action("x", &Action::truck(1, 2));
        assert_eq!(response_action(&back, EnvId::Log).unwrap(), Action::truck(1, 2));
    }
}
