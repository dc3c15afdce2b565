//! Running a whole question set and writing the results.
//!
//! Output layout:
//!
//! ```text
//! <out>/transcripts/<question id>.json
//! <out>/report.json
//! <out>/report.csv
//! <out>/metadata.json   (run settings and timestamps)
//! ```
//!
//! Everything except `metadata.json` is a pure function of the inputs, so
//! two runs with a scripted model produce identical files.

use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use serde_json::Value;

use crate::agent::{run_question, Counters, Outcome, RunConfig, Transcript};
use crate::dataset::Question;
use crate::eval::{EvalError, EvalReport};
use crate::llm::{ChatMessage, ChatModel, GatewayError};
use crate::prompt::PromptBundle;
use crate::search::Backend;

/// Produces the model for one question. Scripted runs hand out one script
/// per question; live runs can return a shared client.
pub type ModelFactory<'a> =
    dyn Fn(&Question) -> Result<Box<dyn ChatModel + 'a>, GatewayError> + Sync + 'a;

/// Runs every question on `concurrency` worker threads. Transcripts come
/// back in question order whatever the scheduling.
pub fn run_benchmark(
    questions: &[Question],
    models: &ModelFactory<'_>,
    backend: &dyn Backend,
    prompts: &PromptBundle,
    cfg: &RunConfig,
    concurrency: usize,
) -> Vec<Transcript> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Transcript>>> =
        questions.iter().map(|_| Mutex::new(None)).collect();
    thread::scope(|s| {
        for _ in 0..concurrency.clamp(1, questions.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(q) = questions.get(i) else { break };
                let t = match models(q) {
                    Ok(model) => run_question(q, model.as_ref(), backend, prompts, cfg),
                    Err(e) => failed(q, prompts, e.to_string()),
                };
                *slots[i].lock().unwrap() = Some(t);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("every question ran"))
        .collect()
}

fn failed(q: &Question, prompts: &PromptBundle, error: String) -> Transcript {
    Transcript {
        question_id: q.id.clone(),
        messages: vec![
            ChatMessage::system(prompts.system_text.clone()),
            ChatMessage::user(q.user_message()),
        ],
        path: vec![],
        final_answers: vec![],
        counters: Counters::default(),
        outcome: Outcome::Error,
        error: Some(error),
    }
}

pub fn write_outputs(
    out: &Path,
    transcripts: &[Transcript],
    report: &EvalReport,
    metadata: &Value,
) -> Result<(), EvalError> {
    let dir = out.join("transcripts");
    fs::create_dir_all(&dir)?;
    for t in transcripts {
        fs::write(
            dir.join(format!("{}.json", t.question_id)),
            t.to_json() + "\n",
        )?;
    }
    fs::write(out.join("report.json"), report.to_json() + "\n")?;
    report.write_csv(fs::File::create(out.join("report.csv"))?)?;
    fs::write(
        out.join("metadata.json"),
        serde_json::to_string_pretty(metadata).expect("metadata serializes") + "\n",
    )?;
    Ok(())
}
