//! Knowledge-graph question answering by tool-driven navigation.
//!
//! A language model answers a question by repeatedly calling a single
//! `search` tool that lists the neighbourhood of an entity in one direction.
//! Large neighbourhoods are summarised as their distinct properties so the
//! model can ask again with a property filter.
//!
//! The crate is split into:
//!
//! * [`types`]: identifiers, directions and triples for Freebase and Wikidata.
//! * [`store`]: in-memory triple store with adjacency indexes.
//! * [`sparql`]: remote SPARQL backend, plus a stub endpoint for tests.
//! * [`search`] and [`render`]: the tool itself and its markdown output.
//! * [`llm`]: chat-completions gateway and a scripted model.
//! * [`prompt`], [`agent`], [`dataset`], [`eval`], [`bench`]: the run loop
//!   and the benchmark harness around it.

pub mod agent;
pub mod bench;
pub mod dataset;
pub mod eval;
pub mod http;
pub mod llm;
pub mod prompt;
pub mod render;
pub mod search;
pub mod sparql;
pub mod store;
pub mod types;

pub use agent::{handle_tool_call, run_question, Outcome, RunConfig, Transcript};
pub use dataset::Question;
pub use eval::{extract_final_answers, score_hits_at_1, summarize, EvalReport};
pub use render::{render_json, render_markdown};
pub use search::{search, Backend, SearchConfig, SearchRequest, SearchResult};
pub use store::Store;
pub use types::{Direction, EntityRef, NodeValue, PropertyRef, SchemaDialect};
