//! Text renderings of search results.
//!
//! The markdown form is what the model sees in tool messages:
//!
//! ```text
//! 2 rows:
//! property|propertyLabel|value|valueLabel
//! --|--|--|--
//! people.person.place_of_birth|Place of birth|m.0vlxv|Zundert
//! people.person.date_of_birth|Date of birth|1853-03-30|
//! ```
//!
//! Property tables drop the count line and the value columns. The JSON form
//! mirrors the SPARQL results document layout and is kept for size
//! comparisons.

use serde_json::{json, Map, Value};

use crate::search::SearchResult;
use crate::store::NeighborRow;
use crate::types::{NodeValue, PropertyRef};

pub const ROW_HEADER: &str = "property|propertyLabel|value|valueLabel";
pub const ROW_SEPARATOR: &str = "--|--|--|--";
pub const PROPERTY_HEADER: &str = "property|propertyLabel";
pub const PROPERTY_SEPARATOR: &str = "--|--";

/// Keeps a cell from breaking the table structure.
pub fn sanitize_cell(text: &str) -> String {
    text.chars()
        .map(|c| match c {
            '|' => '/',
            '\n' | '\r' => ' ',
            c => c,
        })
        .collect()
}

pub fn render_markdown(result: &SearchResult) -> String {
    let mut lines: Vec<String> = Vec::new();
    match result {
        SearchResult::RowTable { rows, truncated } => {
            lines.push(if *truncated {
                format!("{} rows (truncated):", rows.len())
            } else {
                format!("{} rows:", rows.len())
            });
            lines.push(ROW_HEADER.into());
            lines.push(ROW_SEPARATOR.into());
            lines.extend(rows.iter().map(row_line));
        }
        SearchResult::PropertyTable {
            properties,
            truncated,
        } => {
            if *truncated {
                lines.push(format!("{} properties (truncated):", properties.len()));
            }
            lines.push(PROPERTY_HEADER.into());
            lines.push(PROPERTY_SEPARATOR.into());
            lines.extend(properties.iter().map(|p| {
                format!(
                    "{}|{}",
                    sanitize_cell(&p.id),
                    sanitize_cell(p.label.as_deref().unwrap_or(""))
                )
            }));
        }
    }
    lines.join("\n")
}

fn row_line(row: &NeighborRow) -> String {
    format!(
        "{}|{}|{}|{}",
        sanitize_cell(&row.property.id),
        sanitize_cell(row.property.label.as_deref().unwrap_or("")),
        sanitize_cell(row.value.text()),
        sanitize_cell(row.value.label().unwrap_or("")),
    )
}

fn term(kind: &str, value: &str) -> Value {
    json!({ "type": kind, "value": value })
}

fn property_fields(obj: &mut Map<String, Value>, p: &PropertyRef) {
    obj.insert("property".into(), term("uri", &p.id));
    if let Some(label) = &p.label {
        obj.insert("propertyLabel".into(), term("literal", label));
    }
}

/// SPARQL-results-shaped JSON document for the same content.
pub fn render_json(result: &SearchResult) -> String {
    let (vars, bindings): (&[&str], Vec<Value>) = match result {
        SearchResult::RowTable { rows, .. } => (
            &["property", "propertyLabel", "value", "valueLabel"],
            rows.iter()
                .map(|row| {
                    let mut obj = Map::new();
                    property_fields(&mut obj, &row.property);
                    match &row.value {
                        NodeValue::Entity(e) => {
                            obj.insert("value".into(), term("uri", &e.id));
                            if let Some(label) = &e.label {
                                obj.insert("valueLabel".into(), term("literal", label));
                            }
                        }
                        NodeValue::Literal { text, datatype } => {
                            let mut lit = json!({ "type": "literal", "value": text });
                            if let Some(dt) = datatype {
                                lit["datatype"] = Value::String(dt.clone());
                            }
                            obj.insert("value".into(), lit);
                        }
                    }
                    Value::Object(obj)
                })
                .collect(),
        ),
        SearchResult::PropertyTable { properties, .. } => (
            &["property", "propertyLabel"],
            properties
                .iter()
                .map(|p| {
                    let mut obj = Map::new();
                    property_fields(&mut obj, p);
                    Value::Object(obj)
                })
                .collect(),
        ),
    };
    let doc = json!({
        "head": { "vars": vars },
        "results": { "bindings": bindings },
    });
    serde_json::to_string_pretty(&doc).expect("json values always serialize")
}
