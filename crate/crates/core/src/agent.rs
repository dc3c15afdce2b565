//! The navigation loop: one question, one conversation.
//!
//! The model is called repeatedly. Each `search` call it makes is answered
//! with a markdown table (or a one-line error it can react to), until it
//! replies without tool calls or the turn budget runs out. When the budget
//! is hit, tool calls on the last turn are not executed.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::dataset::Question;
use crate::eval::{extract_final_answers, normalize};
use crate::llm::{ChatMessage, ChatModel, ModelParams, Role, ToolCall};
use crate::prompt::PromptBundle;
use crate::render::render_markdown;
use crate::search::{search, Backend, SearchConfig, SearchRequest, SearchResult};
use crate::types::{
    parse_entity_ref, parse_property_ref, Direction, EntityRef, NodeValue, PropertyRef,
    SchemaDialect,
};

pub const DEFAULT_MAX_TURNS: usize = 16;

const TOOL_NAME: &str = "search";
const ARG_ENTITY: &str = "entity";
const ARG_DIRECTION: &str = "direction";
const ARG_FILTER: &str = "properties_to_filter_for";
/// Listed as required by some published tool schemas; accepted and ignored.
const ARG_QUESTION: &str = "question";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub max_turns: usize,
    pub search: SearchConfig,
    pub shots: usize,
    pub dialect: SchemaDialect,
    pub params: ModelParams,
}

impl RunConfig {
    pub fn new(dialect: SchemaDialect) -> Self {
        RunConfig {
            max_turns: DEFAULT_MAX_TURNS,
            search: SearchConfig::default(),
            shots: 5,
            dialect,
            params: ModelParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathHop {
    pub from: EntityRef,
    pub direction: Direction,
    pub property: PropertyRef,
    pub to: NodeValue,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    /// Assistant messages.
    pub turns: usize,
    /// Tool calls answered with a tool message.
    pub tool_calls: usize,
    /// Characters of user, assistant and tool content plus tool-call arguments.
    pub main_chars: usize,
    pub reasoning_chars: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Answered,
    BudgetExhausted,
    Error,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Answered => "answered",
            Outcome::BudgetExhausted => "budget_exhausted",
            Outcome::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub question_id: String,
    pub messages: Vec<ChatMessage>,
    pub path: Vec<PathHop>,
    pub final_answers: Vec<String>,
    pub counters: Counters,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Transcript {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes")
    }
}

/// Result of dispatching one tool call.
#[derive(Debug, Clone)]
pub struct Dispatched {
    pub message: ChatMessage,
    pub request: Option<SearchRequest>,
    pub result: Option<SearchResult>,
}

/// Answers one tool call with a tool message. Never fails: problems become
/// error text addressed to the model.
pub fn handle_tool_call(call: &ToolCall, backend: &dyn Backend, cfg: &RunConfig) -> ChatMessage {
    dispatch(call, backend, cfg).message
}

pub fn dispatch(call: &ToolCall, backend: &dyn Backend, cfg: &RunConfig) -> Dispatched {
    let reply = |text: String, request, result| Dispatched {
        message: ChatMessage::tool(call.id.clone(), text),
        request,
        result,
    };
    let request = match parse_arguments(call, cfg.dialect) {
        Ok(r) => r,
        Err(text) => return reply(text, None, None),
    };
    match search(backend, &request, &cfg.search) {
        Ok(result) => reply(render_markdown(&result), Some(request), Some(result)),
        Err(e) if e.source.is_retriable() => {
            reply(format!("error (retriable): {e}"), Some(request), None)
        }
        Err(e) => reply(format!("error: {e}"), Some(request), None),
    }
}

fn parse_arguments(call: &ToolCall, dialect: SchemaDialect) -> Result<SearchRequest, String> {
    if call.name != TOOL_NAME {
        return Err(format!(
            "error: unknown tool '{}', the only tool is '{TOOL_NAME}'",
            call.name
        ));
    }
    let args: Map<String, Value> = serde_json::from_str(&call.arguments)
        .map_err(|e| format!("error: malformed arguments: {e}"))?;
    if let Some(k) = args
        .keys()
        .find(|k| ![ARG_ENTITY, ARG_DIRECTION, ARG_FILTER, ARG_QUESTION].contains(&k.as_str()))
    {
        return Err(format!(
            "error: malformed arguments: unknown parameter '{k}'"
        ));
    }
    let string_arg = |name: &str| match args.get(name) {
        Some(Value::String(s)) => Ok(s.trim()),
        Some(_) => Err(format!(
            "error: malformed arguments: '{name}' must be a string"
        )),
        None => Err(format!("error: malformed arguments: missing '{name}'")),
    };
    let entity =
        parse_entity_ref(string_arg(ARG_ENTITY)?, dialect).map_err(|e| format!("error: {e}"))?;
    let direction: Direction = string_arg(ARG_DIRECTION)?
        .parse()
        .map_err(|_| "error: direction must be 'incoming' or 'outgoing'".to_string())?;
    let properties = match args.get(ARG_FILTER) {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| match v {
                Value::String(s) => {
                    parse_property_ref(s.trim(), dialect).map_err(|e| format!("error: {e}"))
                }
                _ => Err(format!(
                    "error: malformed arguments: '{ARG_FILTER}' must be a list of strings"
                )),
            })
            .collect::<Result<_, _>>()?,
        Some(_) => {
            return Err(format!(
                "error: malformed arguments: '{ARG_FILTER}' must be a list of strings"
            ))
        }
    };
    Ok(SearchRequest::new(entity, direction, properties))
}

/// Follows the chain of queried entities through earlier results.
#[derive(Default)]
struct PathTracker {
    /// Hops offered by each successful search, oldest first.
    observed: Vec<Vec<PathHop>>,
    queried: Vec<String>,
    path: Vec<PathHop>,
}

impl PathTracker {
    fn latest_match(&self, pred: impl Fn(&NodeValue) -> bool) -> Option<&PathHop> {
        self.observed
            .iter()
            .rev()
            .find_map(|hops| hops.iter().find(|h| pred(&h.to)))
    }

    fn on_search(&mut self, request: &SearchRequest, result: &SearchResult) {
        let id = &request.entity.id;
        if !self.queried.contains(id) {
            if let Some(hop) = self.latest_match(|v| v.as_entity().is_some_and(|e| &e.id == id)) {
                self.path.push(hop.clone());
            }
            self.queried.push(id.clone());
        }
        self.observed.push(
            result
                .rows()
                .iter()
                .map(|r| PathHop {
                    from: request.entity.clone(),
                    direction: request.direction,
                    property: r.property.clone(),
                    to: r.value.clone(),
                })
                .collect(),
        );
    }

    fn on_answer(&mut self, answers: &[String]) {
        for a in answers {
            let want = normalize(a);
            let matches = |v: &NodeValue| {
                normalize(v.text()) == want || v.label().is_some_and(|l| normalize(l) == want)
            };
            if let Some(hop) = self.latest_match(matches).cloned() {
                if !self.path.contains(&hop) {
                    self.path.push(hop);
                }
            }
        }
    }
}

fn content_chars(m: &ChatMessage) -> usize {
    let content = m.content.as_deref().map_or(0, |c| c.chars().count());
    let args: usize = m
        .tool_calls
        .iter()
        .map(|c| c.arguments.chars().count())
        .sum();
    content + args
}

/// Drives `question` to an answer, the turn budget, or an error.
pub fn run_question(
    question: &Question,
    model: &dyn ChatModel,
    backend: &dyn Backend,
    prompts: &PromptBundle,
    cfg: &RunConfig,
) -> Transcript {
    let mut t = Transcript {
        question_id: question.id.clone(),
        messages: vec![
            ChatMessage::system(prompts.system_text.clone()),
            ChatMessage::user(question.user_message()),
        ],
        path: Vec::new(),
        final_answers: Vec::new(),
        counters: Counters::default(),
        outcome: Outcome::BudgetExhausted,
        error: None,
    };
    t.counters.main_chars = content_chars(&t.messages[1]);

    if backend.dialect() != cfg.dialect {
        t.outcome = Outcome::Error;
        t.error = Some(format!(
            "backend serves {} but the run is configured for {}",
            backend.dialect(),
            cfg.dialect
        ));
        return t;
    }

    let mut tracker = PathTracker::default();
    while t.counters.turns < cfg.max_turns {
        let reply = match model.complete(&t.messages, &prompts.tool_definitions, &cfg.params) {
            Ok(r) => r,
            Err(e) => {
                t.outcome = Outcome::Error;
                t.error = Some(e.to_string());
                break;
            }
        };
        let reply = ChatMessage {
            role: Role::Assistant,
            ..reply
        };
        t.counters.turns += 1;
        t.counters.main_chars += content_chars(&reply);
        t.counters.reasoning_chars += reply.reasoning.as_deref().map_or(0, |r| r.chars().count());
        let calls = reply.tool_calls.clone();
        t.messages.push(reply);

        if calls.is_empty() {
            t.outcome = Outcome::Answered;
            break;
        }
        if t.counters.turns == cfg.max_turns {
            break;
        }
        for call in &calls {
            let d = dispatch(call, backend, cfg);
            if let (Some(req), Some(res)) = (&d.request, &d.result) {
                tracker.on_search(req, res);
            }
            t.counters.tool_calls += 1;
            t.counters.main_chars += content_chars(&d.message);
            t.messages.push(d.message);
        }
    }

    if t.outcome != Outcome::Error {
        if let Some(last) = t.messages.last().filter(|m| m.role == Role::Assistant) {
            t.final_answers = extract_final_answers(last.content.as_deref().unwrap_or(""));
        }
        tracker.on_answer(&t.final_answers);
    }
    t.path = tracker.path;
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{GatewayError, ScriptedModel};
    use crate::prompt::{build_system_prompt, bundled_exemplars, DEFAULT_INSTRUCTIONS};
    use crate::store::Store;
    use crate::types::Triple;
    use proptest::prelude::*;

    fn e(id: &str, label: &str) -> EntityRef {
        EntityRef {
            id: id.into(),
            label: Some(label.into()),
        }
    }

    fn cher_store() -> Store {
        let rows = [
            ("people.person.children", "Children", "m.0br66", "Chaz Bono"),
            (
                "people.person.children",
                "Children",
                "m.01w4bt1",
                "Elijah Blue Allman",
            ),
            ("people.person.gender", "Gender", "m.02zsn", "Female"),
        ];
        Store::from_triples(
            SchemaDialect::Freebase,
            rows.iter().map(|(p, pl, v, vl)| Triple {
                subject: e("m.01vtj38", "Cher"),
                predicate: PropertyRef {
                    id: p.to_string(),
                    label: Some(pl.to_string()),
                },
                object: NodeValue::Entity(e(v, vl)),
            }),
        )
    }

    fn call(args: &str) -> ToolCall {
        ToolCall {
            id: "c1".into(),
            name: "search".into(),
            arguments: args.into(),
        }
    }

    fn cfg() -> RunConfig {
        RunConfig::new(SchemaDialect::Freebase)
    }

    fn prompts() -> PromptBundle {
        build_system_prompt(
            DEFAULT_INSTRUCTIONS,
            &bundled_exemplars(),
            1,
            SchemaDialect::Freebase,
        )
        .unwrap()
    }

    fn cher_question() -> Question {
        Question {
            id: "cher".into(),
            text: "what is cher 's son 's name".into(),
            topic_entities: [("Cher".to_string(), "m.01vtj38".to_string())]
                .into_iter()
                .collect(),
            answers: vec!["Chaz Bono".into()],
        }
    }

    #[test]
    fn tool_call_renders_rows() {
        let msg = handle_tool_call(
            &call(r#"{"entity":"m.01vtj38","direction":"outgoing"}"#),
            &cher_store(),
            &cfg(),
        );
        assert_eq!(msg.role, Role::Tool);
        assert_eq!(msg.tool_call_id.as_deref(), Some("c1"));
        assert!(msg
            .content
            .unwrap()
            .contains("people.person.children|Children|m.0br66|Chaz Bono"));
    }

    #[test]
    fn tool_call_errors() {
        let store = cher_store();
        let text = |args: &str| {
            handle_tool_call(&call(args), &store, &cfg())
                .content
                .unwrap()
        };
        assert_eq!(
            text(r#"{"entity":"m.07_m2","direction":"sideways"}"#),
            "error: direction must be 'incoming' or 'outgoing'"
        );
        assert!(text("{entity: m.07_m2").starts_with("error: malformed arguments"));
        assert!(text(r#"{"direction":"outgoing"}"#).starts_with("error: malformed arguments"));
        assert!(
            text(r#"{"entity":"m.07_m2","direction":"outgoing","limit":3}"#)
                .starts_with("error: malformed arguments")
        );
        assert!(text(r#"{"entity":"wd:Q1","direction":"outgoing"}"#).starts_with("error: "));
        assert!(text(
            r#"{"entity":"m.07_m2","direction":"outgoing","properties_to_filter_for":"x.y"}"#
        )
        .starts_with("error: malformed arguments"));
        // The "question" key is tolerated.
        assert_eq!(
            text(
                r#"{"question":"q","entity":"m.404","direction":"incoming","properties_to_filter_for":[]}"#
            ),
            "0 rows:\nproperty|propertyLabel|value|valueLabel\n--|--|--|--"
        );
        assert!(!text(r#"{"entity":" m.01vtj38 ","direction":"outgoing"}"#).starts_with("error"));
        let mut other = call(r#"{"entity":"m.01vtj38","direction":"outgoing"}"#);
        other.name = "lookup".into();
        assert!(handle_tool_call(&other, &store, &cfg())
            .content
            .unwrap()
            .starts_with("error: unknown tool"));
    }

    #[test]
    fn one_turn_answer() {
        let model =
            ScriptedModel::from_json(r#"[{"content": "Final answer: {Chaz Bono}"}]"#).unwrap();
        let t = run_question(&cher_question(), &model, &cher_store(), &prompts(), &cfg());
        assert_eq!(t.outcome, Outcome::Answered);
        assert_eq!(t.counters.turns, 1);
        assert_eq!(t.counters.tool_calls, 0);
        assert_eq!(t.final_answers, vec!["Chaz Bono"]);
        assert_eq!(t.messages.len(), 3);
        assert_eq!(
            t.messages[1].content.as_deref(),
            Some("Question: what is cher 's son 's name {'Cher': 'm.01vtj38'}")
        );
    }

    #[test]
    fn malformed_call_then_recovery() {
        let model = ScriptedModel::from_json(
            r#"[
            {"tool_calls": [{"id": "a", "arguments": "{\"entity\": \"m.01vtj38\""}]},
            {"tool_calls": [{"id": "b", "arguments": {"entity": "m.01vtj38", "direction": "outgoing"}}]},
            {"content": "Final answer: {Chaz Bono} and {Elijah Blue Allman}"}
        ]"#,
        )
        .unwrap();
        let t = run_question(&cher_question(), &model, &cher_store(), &prompts(), &cfg());
        assert_eq!(t.outcome, Outcome::Answered);
        assert!(t.messages[3]
            .content
            .as_deref()
            .unwrap()
            .starts_with("error: malformed arguments"));
        assert!(t.messages[5]
            .content
            .as_deref()
            .unwrap()
            .starts_with("3 rows:"));
        assert_eq!(t.counters.tool_calls, 2);
        assert_eq!(t.path.len(), 2);
        assert_eq!(t.path[0].to.text(), "m.0br66");
    }

    fn looping_script(n: usize) -> String {
        let turns: Vec<String> = (0..n)
            .map(|i| format!(r#"{{"tool_calls": [{{"id": "c{i}", "arguments": {{"entity": "m.01vtj38", "direction": "outgoing"}}}}]}}"#))
            .collect();
        format!("[{}]", turns.join(","))
    }

    #[test]
    fn budget_exhaustion() {
        let model = ScriptedModel::from_json(&looping_script(10)).unwrap();
        let cfg = RunConfig {
            max_turns: 4,
            ..cfg()
        };
        let t = run_question(&cher_question(), &model, &cher_store(), &prompts(), &cfg);
        assert_eq!(t.outcome, Outcome::BudgetExhausted);
        assert_eq!(
            t.messages
                .iter()
                .filter(|m| m.role == Role::Assistant)
                .count(),
            4
        );
        assert_eq!(t.counters.turns, 4);
        assert_eq!(t.counters.tool_calls, 3);
        assert_eq!(t.messages.last().unwrap().role, Role::Assistant);
        assert!(t.final_answers.is_empty());
    }

    #[test]
    fn gateway_errors_end_the_run() {
        let model = ScriptedModel::new(vec![]);
        let t = run_question(&cher_question(), &model, &cher_store(), &prompts(), &cfg());
        assert_eq!(t.outcome, Outcome::Error);
        assert_eq!(
            t.error.as_deref(),
            Some(GatewayError::ScriptExhausted(0).to_string().as_str())
        );

        let wd = RunConfig::new(SchemaDialect::Wikidata);
        let model = ScriptedModel::from_json(r#"[{"content": "Final answer: {x}"}]"#).unwrap();
        let t = run_question(&cher_question(), &model, &cher_store(), &prompts(), &wd);
        assert_eq!(t.outcome, Outcome::Error);
    }

    #[test]
    fn transcripts_are_deterministic() {
        let script = r#"[
            {"content": "look", "reasoning": "hmm", "tool_calls": [
                {"id": "a", "arguments": {"entity": "m.01vtj38", "direction": "outgoing"}},
                {"id": "b", "arguments": {"entity": "m.0br66", "direction": "incoming"}}]},
            {"content": "Final answer: {Chaz Bono}"}
        ]"#;
        let run = || {
            let model = ScriptedModel::from_json(script).unwrap();
            run_question(&cher_question(), &model, &cher_store(), &prompts(), &cfg()).to_json()
        };
        let first = run();
        assert_eq!(first, run());
        let t: Transcript = serde_json::from_str(&first).unwrap();
        assert_eq!(t.counters.reasoning_chars, 3);
        assert_eq!(t.messages[3].tool_call_id.as_deref(), Some("a"));
        assert_eq!(t.messages[4].tool_call_id.as_deref(), Some("b"));
    }

    proptest! {
        #[test]
        fn alternation_and_budget(
            max_turns in 1usize..8,
            // Per turn: number of tool calls (0 ends the run) and whether the arguments are broken.
            turns in prop::collection::vec((0usize..3, any::<bool>()), 0..10),
        ) {
            let script: Vec<Value> = turns.iter().enumerate().map(|(i, (n, broken))| {
                let calls: Vec<Value> = (0..*n).map(|j| {
                    let args = if *broken { Value::String("{".into()) }
                        else { serde_json::json!({"entity": "m.01vtj38", "direction": "outgoing"}) };
                    serde_json::json!({"id": format!("t{i}c{j}"), "arguments": args})
                }).collect();
                serde_json::json!({"content": format!("turn {i}. Final answer: {{x}}"), "tool_calls": calls})
            }).collect();
            let model = ScriptedModel::from_json(&Value::Array(script).to_string()).unwrap();
            let cfg = RunConfig { max_turns, ..cfg() };
            let t = run_question(&cher_question(), &model, &cher_store(), &prompts(), &cfg);

            prop_assert!(t.counters.turns <= max_turns);
            prop_assert_eq!(t.counters.turns, t.messages.iter().filter(|m| m.role == Role::Assistant).count());
            prop_assert_eq!(t.messages[0].role, Role::System);
            prop_assert_eq!(t.messages[1].role, Role::User);
            let mut pending: Vec<String> = Vec::new();
            for m in &t.messages[2..] {
                match m.role {
                    Role::Assistant => {
                        prop_assert!(pending.is_empty());
                        pending = m.tool_calls.iter().map(|c| c.id.clone()).rev().collect();
                    }
                    Role::Tool => prop_assert_eq!(m.tool_call_id.clone(), pending.pop()),
                    _ => prop_assert!(false, "unexpected role"),
                }
            }
            if t.outcome != Outcome::Error {
                prop_assert_eq!(t.messages.last().unwrap().role, Role::Assistant);
            }
        }
    }
}
