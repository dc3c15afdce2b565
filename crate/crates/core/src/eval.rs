//! Answer extraction and Hits@1 scoring.
//!
//! Scoring uses an any-match rule: a run scores 1 when some extracted answer
//! equals some gold answer after [`normalize`]. Normalization is trim,
//! whitespace collapse and lowercasing, nothing else. Dates and other raw
//! values are compared as plain strings.

use std::collections::HashMap;
use std::io::Write;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{Outcome, Transcript};
use crate::dataset::Question;

const MARKER: &str = "final answer:";

static BRACED: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\{([^{}]*)\}").unwrap());

/// Brace groups after the last `final answer:` marker, in order.
pub fn extract_final_answers(text: &str) -> Vec<String> {
    // ASCII lowercasing keeps byte offsets aligned with `text`.
    let Some(pos) = text.to_ascii_lowercase().rfind(MARKER) else {
        return Vec::new();
    };
    BRACED
        .captures_iter(&text[pos + MARKER.len()..])
        .map(|c| c[1].trim().to_string())
        .collect()
}

pub fn normalize(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

pub fn score_hits_at_1(predicted: &[String], gold: &[String]) -> u8 {
    let gold: Vec<String> = gold.iter().map(|g| normalize(g)).collect();
    predicted.iter().any(|p| gold.contains(&normalize(p))) as u8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionScore {
    pub question_id: String,
    pub predicted: Vec<String>,
    pub gold: Vec<String>,
    pub hit: u8,
    pub outcome: Outcome,
    pub turns: usize,
    pub tool_calls: usize,
    pub main_chars: usize,
    pub reasoning_chars: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub questions: usize,
    pub hits_at_1: f64,
    pub avg_turns: f64,
    pub avg_tool_calls: f64,
    pub avg_main_chars: f64,
    pub avg_total_chars: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_question: Vec<QuestionScore>,
    pub aggregate: Aggregate,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("transcript and question ids do not line up: {0}")]
    IdMismatch(String),
    #[error("writing report: {0}")]
    Io(#[from] std::io::Error),
    #[error("writing csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Scores every question. Rows follow the order of `questions`; each
/// question needs exactly one transcript.
pub fn summarize(
    transcripts: &[Transcript],
    questions: &[Question],
) -> Result<EvalReport, EvalError> {
    if transcripts.len() != questions.len() {
        return Err(EvalError::IdMismatch(format!(
            "{} transcripts for {} questions",
            transcripts.len(),
            questions.len()
        )));
    }
    let by_id: HashMap<&str, &Transcript> = transcripts
        .iter()
        .map(|t| (t.question_id.as_str(), t))
        .collect();
    let mut per_question = Vec::with_capacity(questions.len());
    for q in questions {
        let t = by_id
            .get(q.id.as_str())
            .ok_or_else(|| EvalError::IdMismatch(format!("no transcript for {}", q.id)))?;
        let hit = match t.outcome {
            Outcome::Error => 0,
            _ if q.answers.is_empty() => 0,
            _ => score_hits_at_1(&t.final_answers, &q.answers),
        };
        per_question.push(QuestionScore {
            question_id: q.id.clone(),
            predicted: t.final_answers.clone(),
            gold: q.answers.clone(),
            hit,
            outcome: t.outcome,
            turns: t.counters.turns,
            tool_calls: t.counters.tool_calls,
            main_chars: t.counters.main_chars,
            reasoning_chars: t.counters.reasoning_chars,
        });
    }
    if by_id.len() != per_question.len() {
        return Err(EvalError::IdMismatch("duplicate transcript ids".into()));
    }
    let n = per_question.len();
    let mean = |f: &dyn Fn(&QuestionScore) -> f64| {
        if n == 0 {
            0.0
        } else {
            per_question.iter().map(f).sum::<f64>() / n as f64
        }
    };
    let aggregate = Aggregate {
        questions: n,
        hits_at_1: mean(&|s| s.hit as f64),
        avg_turns: mean(&|s| s.turns as f64),
        avg_tool_calls: mean(&|s| s.tool_calls as f64),
        avg_main_chars: mean(&|s| s.main_chars as f64),
        avg_total_chars: mean(&|s| (s.main_chars + s.reasoning_chars) as f64),
    };
    Ok(EvalReport {
        per_question,
        aggregate,
    })
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Flat per-question rows. List cells are joined with `" | "`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "question_id",
            "hit",
            "outcome",
            "predicted",
            "gold",
            "turns",
            "tool_calls",
            "main_chars",
            "reasoning_chars",
        ])?;
        for s in &self.per_question {
            w.write_record([
                s.question_id.clone(),
                s.hit.to_string(),
                s.outcome.as_str().to_string(),
                s.predicted.join(" | "),
                s.gold.join(" | "),
                s.turns.to_string(),
                s.tool_calls.to_string(),
                s.main_chars.to_string(),
                s.reasoning_chars.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
