//! Benchmark questions in JSON-lines form.
//!
//! One object per line:
//!
//! ```json
//! {"id": "webqsp-1", "question": "what is cher 's son 's name",
//!  "topic_entities": {"Cher": "m.01vtj38"}, "answers": ["Chaz Bono"]}
//! ```

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    #[serde(rename = "question")]
    pub text: String,
    /// Label to entity id, in annotation order.
    pub topic_entities: IndexMap<String, String>,
    #[serde(default)]
    pub answers: Vec<String>,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("reading {path}: {err}")]
    Io { path: String, err: std::io::Error },
    #[error("line {line}: {reason}")]
    Line { line: usize, reason: String },
}

impl Question {
    /// The opening user message, laid out like the exemplars:
    /// `Question: <text> {'Label': 'id', ...}`.
    pub fn user_message(&self) -> String {
        let entities: Vec<String> = self
            .topic_entities
            .iter()
            .map(|(label, id)| format!("{}: {}", py_repr(label), py_repr(id)))
            .collect();
        format!("Question: {} {{{}}}", self.text, entities.join(", "))
    }
}

/// Python `repr` of a string: single quotes unless the text contains one.
fn py_repr(s: &str) -> String {
    let quote = if s.contains('\'') && !s.contains('"') {
        '"'
    } else {
        '\''
    };
    let mut out = String::with_capacity(s.len() + 2);
    out.push(quote);
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c if c == quote => {
                out.push('\\');
                out.push(c);
            }
            c => out.push(c),
        }
    }
    out.push(quote);
    out
}

/// Question ids become file names, so keep them to a safe alphabet.
fn safe_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

pub fn parse_questions(text: &str) -> Result<Vec<Question>, DatasetError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| DatasetError::Line {
            line: line_no,
            reason,
        };
        let q: Question = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        if !safe_id(&q.id) {
            return Err(bad(format!("unusable question id {:?}", q.id)));
        }
        if !seen.insert(q.id.clone()) {
            return Err(bad(format!("duplicate question id {}", q.id)));
        }
        if q.topic_entities.is_empty() {
            return Err(bad(format!("question {} has no topic entities", q.id)));
        }
        out.push(q);
    }
    Ok(out)
}

pub fn load_questions(path: &Path) -> Result<Vec<Question>, DatasetError> {
    let text = fs::read_to_string(path).map_err(|err| DatasetError::Io {
        path: path.display().to_string(),
        err,
    })?;
    parse_questions(&text)
}
