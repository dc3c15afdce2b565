//! System prompt assembly and tool definitions.
//!
//! Instructions and few-shot exemplars are plain text files. Exemplars live
//! one per file in a directory per dataset; they are loaded in lexicographic
//! path order and an n-shot prompt embeds the first n of them.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use thiserror::Error;

use crate::types::SchemaDialect;

pub const DEFAULT_INSTRUCTIONS: &str = include_str!("../data/instructions.txt");

const BUNDLED: [(&str, &str); 5] = [
    ("cwq", include_str!("../data/exemplars/cwq/01.txt")),
    ("grailqa", include_str!("../data/exemplars/grailqa/01.txt")),
    ("qald", include_str!("../data/exemplars/qald/01.txt")),
    (
        "simpleqa",
        include_str!("../data/exemplars/simpleqa/01.txt"),
    ),
    ("webqsp", include_str!("../data/exemplars/webqsp/01.txt")),
];

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("requested {requested} shots but only {available} exemplars are available")]
    ShotsExceedAvailable { requested: usize, available: usize },
    #[error("exemplar {name}: {reason}")]
    InvalidExemplar { name: String, reason: String },
    #[error("reading {path}: {err}")]
    Io { path: String, err: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exemplar {
    pub dataset: String,
    pub name: String,
    pub body: String,
}

impl Exemplar {
    pub fn new(
        dataset: impl Into<String>,
        name: impl Into<String>,
        body: impl Into<String>,
    ) -> Result<Self, PromptError> {
        let ex = Exemplar {
            dataset: dataset.into(),
            name: name.into(),
            body: body.into(),
        };
        let invalid = |reason: &str| PromptError::InvalidExemplar {
            name: format!("{}/{}", ex.dataset, ex.name),
            reason: reason.into(),
        };
        if !ex.body.contains("Tool Call:") {
            return Err(invalid("no 'Tool Call:' demonstration"));
        }
        let finals: Vec<&str> = ex
            .body
            .lines()
            .filter(|l| l.to_ascii_lowercase().contains("final answer:"))
            .collect();
        if finals.len() != 1 {
            return Err(invalid("expected exactly one final answer line"));
        }
        if crate::eval::extract_final_answers(finals[0]).is_empty() {
            return Err(invalid("final answer line has no brace-enclosed answer"));
        }
        Ok(ex)
    }

    /// Answers stated on the exemplar's final line.
    pub fn final_answers(&self) -> Vec<String> {
        crate::eval::extract_final_answers(&self.body)
    }
}

/// The five exemplars shipped with the crate, one per benchmark.
pub fn bundled_exemplars() -> Vec<Exemplar> {
    BUNDLED
        .iter()
        .map(|(dataset, body)| {
            Exemplar::new(*dataset, "01.txt", *body).expect("bundled exemplars are valid")
        })
        .collect()
}

/// Loads exemplars from `dir`. Plain files are taken as exemplars of the
/// dataset named by `dir`; subdirectories are treated as one dataset each.
pub fn load_exemplars(dir: &Path) -> Result<Vec<Exemplar>, PromptError> {
    let io = |path: &Path, err| PromptError::Io {
        path: path.display().to_string(),
        err,
    };
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| io(dir, err)))
        .collect::<Result<_, _>>()?;
    entries.sort();
    let dataset = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut out = Vec::new();
    for path in entries {
        if path.is_dir() {
            out.extend(load_exemplars(&path)?);
        } else if path.extension().is_some_and(|e| e == "txt") {
            let body = fs::read_to_string(&path).map_err(|e| io(&path, e))?;
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            out.push(Exemplar::new(dataset.clone(), name, body)?);
        }
    }
    Ok(out)
}

pub fn load_instructions(path: &Path) -> Result<String, PromptError> {
    fs::read_to_string(path).map_err(|err| PromptError::Io {
        path: path.display().to_string(),
        err,
    })
}

/// The single `search` function offered to the model.
pub fn tool_definitions(dialect: SchemaDialect) -> Value {
    let (kg, entity_example, filter_example) = match dialect {
        SchemaDialect::Freebase => (
            "Freebase",
            "m.04yd0fh",
            "['people.person.place_of_birth', 'people.person.nationality']",
        ),
        SchemaDialect::Wikidata => ("Wikidata", "wd:Q187805", "['wdt:P19', 'wdt:P27']"),
    };
    json!([{
        "type": "function",
        "function": {
            "name": "search",
            "description": format!(
                "Build and execute a SPARQL query on {kg} that retrieves adjacent properties, property labels, \
                 values, and value labels in the specified direction for a given entity."
            ),
            "parameters": {
                "type": "object",
                "properties": {
                    "entity": {
                        "type": "string",
                        "description": format!(
                            "The entity (e.g., '{entity_example}') whose adjacent relations and entities we want to fetch."
                        )
                    },
                    "direction": {
                        "type": "string",
                        "enum": ["incoming", "outgoing"],
                        "description": "Direction of relationship to consider"
                    },
                    "properties_to_filter_for": {
                        "type": "array",
                        "items": {"type": "string"},
                        "description": format!(
                            "Optional list of specific properties to filter by (e.g., {filter_example})."
                        )
                    }
                },
                "required": ["entity", "direction"],
                "additionalProperties": false
            }
        }
    }])
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptBundle {
    pub system_text: String,
    pub tool_definitions: Value,
    pub shot_count: usize,
}

/// Instructions followed by the first `shots` exemplars, each verbatim.
pub fn build_system_prompt(
    instructions: &str,
    exemplars: &[Exemplar],
    shots: usize,
    dialect: SchemaDialect,
) -> Result<PromptBundle, PromptError> {
    if shots > exemplars.len() {
        return Err(PromptError::ShotsExceedAvailable {
            requested: shots,
            available: exemplars.len(),
        });
    }
    let mut text = instructions.trim_end().to_string();
    for (i, ex) in exemplars[..shots].iter().enumerate() {
        text.push_str(&format!("\n\nExample {}:\n", i + 1));
        text.push_str(&ex.body);
    }
    Ok(PromptBundle {
        system_text: text,
        tool_definitions: tool_definitions(dialect),
        shot_count: shots,
    })
}
