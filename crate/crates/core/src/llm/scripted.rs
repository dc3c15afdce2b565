//! Replays canned assistant turns in order.
//!
//! Script files are JSON arrays of turns:
//!
//! ```json
//! [
//!   {"content": "Look at Van Gogh first.",
//!    "tool_calls": [{"id": "call_1", "name": "search",
//!                    "arguments": {"entity": "m.07_m2", "direction": "outgoing"}}]},
//!   {"content": "Final answer: {Amsterdam}"}
//! ]
//! ```
//!
//! `arguments` may be a JSON object (stored as compact JSON text) or a
//! string, which is passed through untouched so malformed calls can be
//! scripted too.

use std::path::Path;
use std::sync::Mutex;

use serde::Deserialize;
use serde_json::Value;

use crate::llm::{
    check_conversation, ChatMessage, ChatModel, GatewayError, ModelParams, Role, ToolCall,
};

#[derive(Deserialize)]
struct ScriptTurn {
    #[serde(default)]
    content: Option<String>,
    #[serde(default)]
    reasoning: Option<String>,
    #[serde(default)]
    tool_calls: Vec<ScriptCall>,
}

#[derive(Deserialize)]
struct ScriptCall {
    id: String,
    #[serde(default = "default_tool")]
    name: String,
    arguments: Value,
}

fn default_tool() -> String {
    "search".into()
}

/// One conversation's worth of canned turns. Not meant to be shared between
/// concurrent runs.
#[derive(Debug)]
pub struct ScriptedModel {
    turns: Vec<ChatMessage>,
    cursor: Mutex<usize>,
}

impl ScriptedModel {
    pub fn new(turns: Vec<ChatMessage>) -> Self {
        ScriptedModel {
            turns,
            cursor: Mutex::new(0),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let turns: Vec<ScriptTurn> = serde_json::from_str(text)?;
        Ok(ScriptedModel::new(
            turns
                .into_iter()
                .map(|t| ChatMessage {
                    role: Role::Assistant,
                    content: t.content,
                    tool_calls: t
                        .tool_calls
                        .into_iter()
                        .map(|c| ToolCall {
                            id: c.id,
                            name: c.name,
                            arguments: match c.arguments {
                                Value::String(raw) => raw,
                                other => other.to_string(),
                            },
                        })
                        .collect(),
                    tool_call_id: None,
                    reasoning: t.reasoning,
                })
                .collect(),
        ))
    }

    pub fn from_file(path: &Path) -> Result<Self, GatewayError> {
        let err = |reason: String| GatewayError::Script {
            path: path.display().to_string(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        Self::from_json(&text).map_err(|e| err(e.to_string()))
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    /// Returns the next canned turn and advances the cursor.
    pub fn next_turn(&self) -> Result<ChatMessage, GatewayError> {
        let mut cursor = self.cursor.lock().unwrap_or_else(|e| e.into_inner());
        let turn = self
            .turns
            .get(*cursor)
            .cloned()
            .ok_or(GatewayError::ScriptExhausted(self.turns.len()))?;
        *cursor += 1;
        Ok(turn)
    }
}

impl ChatModel for ScriptedModel {
    fn complete(
        &self,
        messages: &[ChatMessage],
        _tools: &Value,
        _params: &ModelParams,
    ) -> Result<ChatMessage, GatewayError> {
        check_conversation(messages)?;
        self.next_turn()
    }
}
