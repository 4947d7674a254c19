//! Optional chat-completion client that asks a language model for a
//! composition document.
//!
//! Nothing else in the crate depends on this module; a composition file
//! works just as well as a model reply.

use serde::{Deserialize, Serialize};
use std::time::Duration;
use thiserror::Error;

pub const API_KEY_ENV: &str = "M6_LLM_API_KEY";
pub const DEFAULT_MODEL: &str = "gpt-4-1106-preview";
pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";

/// Versioned system prompt shipped with the crate.
pub const SYSTEM_PROMPT_V1: &str = include_str!("../assets/system_prompt_v1.txt");

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("environment variable {API_KEY_ENV} is not set")]
    MissingCredentials,
    #[error("transport failed with status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("transport failed: {0}")]
    Transport(String),
    #[error("reply has no choices or no message content")]
    EmptyReply,
    #[error("reply does not contain a JSON object: {raw}")]
    NotJson { raw: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    System,
    User,
    Assistant,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Speaker,
    pub content: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub user: String,
    pub assistant: String,
}

/// A conversation that can be saved and replayed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChatSession {
    pub system_prompt: String,
    pub turns: Vec<Turn>,
    pub model_id: String,
    #[serde(default)]
    pub temperature: f64,
}

impl Default for ChatSession {
    fn default() -> Self {
        ChatSession::new(DEFAULT_MODEL)
    }
}

impl ChatSession {
    pub fn new(model_id: &str) -> Self {
        ChatSession {
            system_prompt: SYSTEM_PROMPT_V1.to_string(),
            turns: Vec::new(),
            model_id: model_id.to_string(),
            temperature: 0.0,
        }
    }

    /// System prompt, then every earlier exchange, then the new prompt.
    pub fn messages(&self, user_prompt: &str) -> Vec<Message> {
        let mut out = vec![Message {
            role: Speaker::System,
            content: self.system_prompt.clone(),
        }];
        for t in &self.turns {
            out.push(Message {
                role: Speaker::User,
                content: t.user.clone(),
            });
            out.push(Message {
                role: Speaker::Assistant,
                content: t.assistant.clone(),
            });
        }
        out.push(Message {
            role: Speaker::User,
            content: user_prompt.to_string(),
        });
        out
    }

    /// Most recent composition text, if any.
    pub fn latest(&self) -> Option<&str> {
        self.turns.last().map(|t| t.assistant.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    pub messages: Vec<Message>,
}

/// Sends one request and returns the assistant's text.
pub trait Transport {
    fn complete(&mut self, request: &ChatRequest) -> Result<String, LlmError>;
}

/// OpenAI-compatible `/chat/completions` over HTTPS.
pub struct HttpTransport {
    endpoint: String,
    api_key: String,
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(endpoint: &str, api_key: &str) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(300)))
            .http_status_as_error(false)
            .build()
            .into();
        HttpTransport {
            endpoint: endpoint.to_string(),
            api_key: api_key.to_string(),
            agent,
        }
    }

    /// Reads the key from `M6_LLM_API_KEY`.
    pub fn from_env(endpoint: &str) -> Result<Self, LlmError> {
        match std::env::var(API_KEY_ENV) {
            Ok(key) if !key.trim().is_empty() => Ok(HttpTransport::new(endpoint, key.trim())),
            _ => Err(LlmError::MissingCredentials),
        }
    }
}

#[derive(Deserialize)]
struct Completion {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ReplyMessage,
}

#[derive(Deserialize)]
struct ReplyMessage {
    content: Option<String>,
}

/// Pulls the first choice's text out of a completion body.
pub fn completion_text(body: &str) -> Result<String, LlmError> {
    let parsed: Completion = serde_json::from_str(body)
        .map_err(|e| LlmError::Transport(format!("malformed completion body: {e}")))?;
    parsed
        .choices
        .into_iter()
        .next()
        .and_then(|c| c.message.content)
        .ok_or(LlmError::EmptyReply)
}

impl Transport for HttpTransport {
    fn complete(&mut self, request: &ChatRequest) -> Result<String, LlmError> {
        let mut response = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(request)
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(LlmError::Status { status, body });
        }
        completion_text(&body)
    }
}

/// Plays back canned replies in order; for tests and offline replays.
#[derive(Clone, Debug, Default)]
pub struct ReplayTransport {
    replies: std::collections::VecDeque<Result<String, (u16, String)>>,
    pub requests: Vec<ChatRequest>,
}

impl ReplayTransport {
    pub fn new<I: IntoIterator<Item = String>>(replies: I) -> Self {
        ReplayTransport {
            replies: replies.into_iter().map(Ok).collect(),
            requests: Vec::new(),
        }
    }

    pub fn push_failure(&mut self, status: u16, body: &str) {
        self.replies.push_back(Err((status, body.to_string())));
    }
}

impl Transport for ReplayTransport {
    fn complete(&mut self, request: &ChatRequest) -> Result<String, LlmError> {
        self.requests.push(request.clone());
        match self.replies.pop_front() {
            Some(Ok(text)) => Ok(text),
            Some(Err((status, body))) => Err(LlmError::Status { status, body }),
            None => Err(LlmError::Transport("no recorded reply left".into())),
        }
    }
}

/// Cuts the outermost JSON object out of a reply, dropping code fences and
/// surrounding prose.
pub fn strip_envelope(reply: &str) -> Result<&str, LlmError> {
    let not_json = || LlmError::NotJson {
        raw: reply.to_string(),
    };
    let start = reply.find('{').ok_or_else(not_json)?;
    let bytes = reply.as_bytes();
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_string {
            match b {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Ok(&reply[start..=i]);
                }
            }
            _ => {}
        }
    }
    Err(not_json())
}

/// Sends the prompt with the whole history and records the exchange.
///
/// The session only grows when the reply holds a well-formed JSON object;
/// otherwise the raw reply is returned inside the error.
pub fn request_structure<T: Transport + ?Sized>(
    session: &mut ChatSession,
    transport: &mut T,
    user_prompt: &str,
) -> Result<String, LlmError> {
    let request = ChatRequest {
        model: session.model_id.clone(),
        temperature: session.temperature,
        messages: session.messages(user_prompt),
    };
    let raw = transport.complete(&request)?;
    let body = strip_envelope(&raw)?;
    if serde_json::from_str::<serde_json::Value>(body).is_err() {
        return Err(LlmError::NotJson { raw });
    }
    let body = body.to_string();
    session.turns.push(Turn {
        user: user_prompt.to_string(),
        assistant: body.clone(),
    });
    Ok(body)
}
