//! Client for chat-completions compatible HTTP APIs.

use std::time::Duration;

use serde_json::{json, Map, Value};

use crate::http::{InFlightLimit, RetryPolicy};
use crate::llm::{
    check_conversation, ChatMessage, ChatModel, GatewayError, ModelParams, Role, ToolCall,
};

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    /// Full URL of the chat-completions route.
    pub url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub retry: RetryPolicy,
    pub max_in_flight: usize,
}

impl GatewayConfig {
    pub fn new(url: impl Into<String>, model: impl Into<String>) -> Self {
        GatewayConfig {
            url: url.into(),
            model: model.into(),
            api_key: None,
            timeout: Duration::from_secs(600),
            retry: RetryPolicy::default(),
            max_in_flight: 8,
        }
    }
}

pub struct ChatCompletionsClient {
    cfg: GatewayConfig,
    http: reqwest::blocking::Client,
    in_flight: InFlightLimit,
}

impl ChatCompletionsClient {
    pub fn new(cfg: GatewayConfig) -> Result<Self, GatewayError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(cfg.timeout)
            .build()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        Ok(ChatCompletionsClient {
            in_flight: InFlightLimit::new(cfg.max_in_flight),
            cfg,
            http,
        })
    }

    /// Request body for one completion.
    pub fn request_body(
        &self,
        messages: &[ChatMessage],
        tools: &Value,
        params: &ModelParams,
    ) -> Value {
        let mut body = Map::new();
        body.insert("model".into(), Value::String(self.cfg.model.clone()));
        body.insert(
            "messages".into(),
            Value::Array(messages.iter().map(wire_message).collect()),
        );
        if !tools.is_null() {
            body.insert("tools".into(), tools.clone());
        }
        if let Value::Object(p) = serde_json::to_value(params).expect("params serialize") {
            body.extend(p);
        }
        Value::Object(body)
    }

    fn complete_once(&self, body: &Value) -> Result<ChatMessage, GatewayError> {
        let _permit = self.in_flight.acquire();
        let mut req = self
            .http
            .post(&self.cfg.url)
            .header("Content-Type", "application/json");
        if let Some(key) = &self.cfg.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let resp = req
            .body(body.to_string())
            .send()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .text()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(GatewayError::Provider { status, body: text });
        }
        parse_response(&text)
    }
}

impl ChatModel for ChatCompletionsClient {
    fn complete(
        &self,
        messages: &[ChatMessage],
        tools: &Value,
        params: &ModelParams,
    ) -> Result<ChatMessage, GatewayError> {
        check_conversation(messages)?;
        let body = self.request_body(messages, tools, params);
        self.cfg
            .retry
            .run(|| self.complete_once(&body), GatewayError::is_transient)
    }
}

fn wire_message(m: &ChatMessage) -> Value {
    let role = match m.role {
        Role::System => "system",
        Role::User => "user",
        Role::Assistant => "assistant",
        Role::Tool => "tool",
    };
    let mut out = json!({ "role": role, "content": m.content });
    if !m.tool_calls.is_empty() {
        out["tool_calls"] = m
            .tool_calls
            .iter()
            .map(|c| json!({"id": c.id, "type": "function", "function": {"name": c.name, "arguments": c.arguments}}))
            .collect();
    }
    if let Some(id) = &m.tool_call_id {
        out["tool_call_id"] = Value::String(id.clone());
    }
    out
}

/// Reads `choices[0].message` out of a completion response.
pub(crate) fn parse_response(text: &str) -> Result<ChatMessage, GatewayError> {
    let shape = |msg: &str| GatewayError::ResponseShape(msg.to_string());
    let root: Value =
        serde_json::from_str(text).map_err(|e| GatewayError::ResponseShape(e.to_string()))?;
    let msg = root
        .pointer("/choices/0/message")
        .and_then(Value::as_object)
        .ok_or_else(|| shape("missing choices[0].message"))?;
    let content = match msg.get("content") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(shape("content is not a string")),
    };
    let reasoning = ["reasoning_content", "reasoning"]
        .iter()
        .find_map(|k| msg.get(*k).and_then(Value::as_str))
        .map(str::to_string);
    let mut tool_calls = Vec::new();
    if let Some(calls) = msg.get("tool_calls").filter(|v| !v.is_null()) {
        for c in calls
            .as_array()
            .ok_or_else(|| shape("tool_calls is not an array"))?
        {
            let id = c
                .get("id")
                .and_then(Value::as_str)
                .ok_or_else(|| shape("tool call without id"))?;
            let f = c
                .get("function")
                .ok_or_else(|| shape("tool call without function"))?;
            let name = f
                .get("name")
                .and_then(Value::as_str)
                .ok_or_else(|| shape("tool call without name"))?;
            let arguments = match f.get("arguments") {
                Some(Value::String(s)) => s.clone(),
                Some(Value::Null) | None => String::new(),
                Some(other) => other.to_string(),
            };
            tool_calls.push(ToolCall {
                id: id.to_string(),
                name: name.to_string(),
                arguments,
            });
        }
    }
    Ok(ChatMessage {
        role: Role::Assistant,
        content,
        tool_calls,
        tool_call_id: None,
        reasoning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_tool_call_response() {
        let text = r#"{"choices":[{"message":{"role":"assistant","content":null,
            "reasoning_content":"check Elijah first",
            "tool_calls":[{"id":"call_9","type":"function","function":{"name":"search",
            "arguments":"{\"entity\": \"m.01w4bt1\", \"direction\": \"outgoing\"}"}}]}}]}"#;
        let m = parse_response(text).unwrap();
        assert_eq!(m.content, None);
        assert_eq!(m.reasoning.as_deref(), Some("check Elijah first"));
        assert_eq!(m.tool_calls[0].id, "call_9");
        assert_eq!(
            m.tool_calls[0].arguments,
            r#"{"entity": "m.01w4bt1", "direction": "outgoing"}"#
        );
    }

    #[test]
    fn rejects_malformed_bodies() {
        for body in [
            "<html>",
            "{}",
            r#"{"choices":[]}"#,
            r#"{"choices":[{"message":{"content":3}}]}"#,
        ] {
            assert!(
                matches!(parse_response(body), Err(GatewayError::ResponseShape(_))),
                "{body}"
            );
        }
    }

    #[test]
    fn wire_format_carries_tool_plumbing() {
        let client = ChatCompletionsClient::new(GatewayConfig::new(
            "http://localhost:1/v1/chat/completions",
            "m",
        ))
        .unwrap();
        let msgs = vec![
            ChatMessage::system("s"),
            ChatMessage {
                content: None,
                ..ChatMessage::assistant("")
            }
            .with_tool_call(ToolCall {
                id: "c1".into(),
                name: "search".into(),
                arguments: "{}".into(),
            }),
            ChatMessage::tool("c1", "0 rows:"),
        ];
        let body = client.request_body(&msgs, &json!([]), &ModelParams::open_model_defaults());
        assert_eq!(body["model"], "m");
        assert_eq!(body["top_k"], 20);
        assert_eq!(body["messages"][1]["content"], Value::Null);
        assert_eq!(
            body["messages"][1]["tool_calls"][0]["function"]["arguments"],
            "{}"
        );
        assert_eq!(body["messages"][2]["tool_call_id"], "c1");
    }
}
