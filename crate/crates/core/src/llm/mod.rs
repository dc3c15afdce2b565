//! Chat-completions style tool-calling gateway.

mod openai;
mod scripted;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use openai::{ChatCompletionsClient, GatewayConfig};
pub use scripted::ScriptedModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolCall {
    pub id: String,
    pub name: String,
    /// Raw JSON text exactly as the model produced it.
    pub arguments: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_calls: Vec<ToolCall>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_call_id: Option<String>,
    /// Separate reasoning channel, when the provider returns one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning: Option<String>,
}

impl ChatMessage {
    fn plain(role: Role, content: impl Into<String>) -> Self {
        ChatMessage {
            role,
            content: Some(content.into()),
            tool_calls: Vec::new(),
            tool_call_id: None,
            reasoning: None,
        }
    }

    pub fn system(content: impl Into<String>) -> Self {
        Self::plain(Role::System, content)
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self::plain(Role::User, content)
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self::plain(Role::Assistant, content)
    }

    pub fn tool(call_id: impl Into<String>, content: impl Into<String>) -> Self {
        ChatMessage {
            tool_call_id: Some(call_id.into()),
            ..Self::plain(Role::Tool, content)
        }
    }

    pub fn with_tool_call(mut self, call: ToolCall) -> Self {
        self.tool_calls.push(call);
        self
    }
}

/// Sampling controls. `None` leaves the provider default in place.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_k: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_p: Option<f64>,
    #[serde(rename = "max_tokens", skip_serializing_if = "Option::is_none")]
    pub max_output_tokens: Option<u32>,
}

impl ModelParams {
    /// Recommended sampling for open reasoning models.
    pub fn open_model_defaults() -> Self {
        ModelParams {
            temperature: Some(0.6),
            top_p: Some(0.95),
            top_k: Some(20),
            min_p: Some(0.0),
            max_output_tokens: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("provider returned HTTP {status}: {body}")]
    Provider { status: u16, body: String },
    #[error("unexpected response shape: {0}")]
    ResponseShape(String),
    #[error("script exhausted after {0} turns")]
    ScriptExhausted(usize),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("script {path}: {reason}")]
    Script { path: String, reason: String },
}

impl GatewayError {
    pub fn is_transient(&self) -> bool {
        match self {
            GatewayError::Transport(_) => true,
            GatewayError::Provider { status, .. } => *status == 429 || (500..600).contains(status),
            _ => false,
        }
    }
}

/// Anything that can produce the next assistant turn.
pub trait ChatModel: Send + Sync {
    fn complete(
        &self,
        messages: &[ChatMessage],
        tools: &Value,
        params: &ModelParams,
    ) -> Result<ChatMessage, GatewayError>;
}

impl<M: ChatModel + ?Sized> ChatModel for std::sync::Arc<M> {
    fn complete(
        &self,
        messages: &[ChatMessage],
        tools: &Value,
        params: &ModelParams,
    ) -> Result<ChatMessage, GatewayError> {
        (**self).complete(messages, tools, params)
    }
}

impl<M: ChatModel + ?Sized> ChatModel for Box<M> {
    fn complete(
        &self,
        messages: &[ChatMessage],
        tools: &Value,
        params: &ModelParams,
    ) -> Result<ChatMessage, GatewayError> {
        (**self).complete(messages, tools, params)
    }
}

fn check_conversation(messages: &[ChatMessage]) -> Result<(), GatewayError> {
    match messages.first() {
        None => Err(GatewayError::InvalidRequest("conversation is empty".into())),
        Some(m) if m.role != Role::System => Err(GatewayError::InvalidRequest(
            "conversation must start with a system message".into(),
        )),
        _ => Ok(()),
    }
}
