//! Model files (`.rxm.json`).
//!
//! A model file is a JSON object:
//!
//! ```json
//! {
//!   "edges": [{"from": 1, "rate": 5000, "sensitive": true, "to": 2}, ...],
//!   "input_range": [0, 1],
//!   "lump": {"1": "closed", "2": "open", "3": "closed"},
//!   "schema_version": 1,
//!   "states": [{"id": 1, "property": "closed"}, ...]
//! }
//! ```
//!
//! `lump` is optional. Unknown fields are rejected. The order of `states`
//! fixes the dense state index; edges may appear in any order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;
use transduce_core::builtin;
use transduce_core::model::{validate, LabeledEdge};
use transduce_core::{ModelParts, ReceptorModel, StateInfo, ValidationReport, Violation};

pub const SCHEMA_VERSION: u32 = 1;
pub const EXTENSION: &str = ".rxm.json";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub schema_version: u32,
    pub states: Vec<StateEntry>,
    pub edges: Vec<EdgeEntry>,
    pub input_range: [f64; 2],
    #[serde(default)]
    pub lump: Option<BTreeMap<String, String>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateEntry {
    pub id: u32,
    pub property: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeEntry {
    pub from: u32,
    pub to: u32,
    pub rate: f64,
    pub sensitive: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IoError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at line {line}, column {column}: {message}")]
    Schema {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported schema_version {0} (expected 1)")]
    SchemaVersion(u32),
    #[error("lump key `{0}` is not a state id")]
    LumpKey(String),
    #[error("invalid model: {}", describe(.0))]
    Invalid(Vec<Violation>),
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
}

impl IoError {
    /// Machine-readable codes; validation failures list one code per violation.
    pub fn codes(&self) -> Vec<&'static str> {
        match self {
            IoError::Syntax { .. } => vec!["syntax"],
            IoError::Schema { .. } => vec!["schema"],
            IoError::SchemaVersion(_) => vec!["schema-version"],
            IoError::LumpKey(_) => vec!["lump-key"],
            IoError::Invalid(v) => v.iter().map(Violation::code).collect(),
            IoError::Read { .. } => vec!["read"],
        }
    }
}

fn describe(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| format!("[{}] {v}", v.code()))
        .collect::<Vec<_>>()
        .join("; ")
}

impl From<serde_json::Error> for IoError {
    fn from(e: serde_json::Error) -> Self {
        let (line, column) = (e.line(), e.column());
        let message = e.to_string();
        let message = match message.rfind(" at line ") {
            Some(i) => message[..i].to_string(),
            None => message,
        };
        if e.is_data() {
            IoError::Schema {
                line,
                column,
                message,
            }
        } else {
            IoError::Syntax {
                line,
                column,
                message,
            }
        }
    }
}

/// Parses the document without structural validation.
pub fn parse_document(text: &str) -> Result<ModelDocument, IoError> {
    let doc: ModelDocument = serde_json::from_str(text)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(IoError::SchemaVersion(doc.schema_version));
    }
    Ok(doc)
}

impl ModelDocument {
    pub fn to_parts(&self) -> Result<ModelParts, IoError> {
        let lump = match &self.lump {
            None => None,
            Some(map) => Some(
                map.iter()
                    .map(|(k, v)| {
                        k.parse::<u32>()
                            .map(|id| (id, v.clone()))
                            .map_err(|_| IoError::LumpKey(k.clone()))
                    })
                    .collect::<Result<BTreeMap<_, _>, _>>()?,
            ),
        };
        Ok(ModelParts {
            states: self
                .states
                .iter()
                .map(|s| StateInfo {
                    label: s.id,
                    property: s.property.clone(),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| LabeledEdge {
                    from: e.from,
                    to: e.to,
                    rate: e.rate,
                    sensitive: e.sensitive,
                })
                .collect(),
            input_range: (self.input_range[0], self.input_range[1]),
            lump,
        })
    }
}

/// Parses `text` into parts and the full validation report.
pub fn parse_and_validate(text: &str) -> Result<(ModelParts, ValidationReport), IoError> {
    let parts = parse_document(text)?.to_parts()?;
    let report = validate(&parts);
    Ok((parts, report))
}

/// Parses and validates a model file.
pub fn parse_model(text: &str) -> Result<ReceptorModel, IoError> {
    let (parts, report) = parse_and_validate(text)?;
    if report.has_fatal() {
        return Err(IoError::Invalid(
            report
                .violations
                .into_iter()
                .filter(Violation::is_fatal)
                .collect(),
        ));
    }
    ReceptorModel::new(parts).map_err(|e| match e {
        transduce_core::Error::InvalidModel(v) => IoError::Invalid(v),
        other => unreachable!("model construction after validation: {other}"),
    })
}

/// Canonical text: sorted keys, edges sorted by `(from, to)`, rates in the
/// shortest decimal that reads back to the same double.
pub fn serialize_model(model: &ReceptorModel) -> String {
    serialize_parts(&model.to_parts())
}

pub fn serialize_parts(parts: &ModelParts) -> String {
    let mut edges = parts.edges.clone();
    edges.sort_by_key(|e| (e.from, e.to));
    let mut out = String::from("{\n  \"edges\": [\n");
    for (i, e) in edges.iter().enumerate() {
        let _ = write!(
            out,
            "    {{\"from\": {}, \"rate\": {}, \"sensitive\": {}, \"to\": {}}}",
            e.from, e.rate, e.sensitive, e.to
        );
        out.push_str(if i + 1 < edges.len() { ",\n" } else { "\n" });
    }
    let _ = write!(
        out,
        "  ],\n  \"input_range\": [{}, {}],\n",
        parts.input_range.0, parts.input_range.1
    );
    if let Some(lump) = &parts.lump {
        let entries: Vec<String> = lump
            .iter()
            .map(|(id, tag)| format!("\"{id}\": {}", quote(tag)))
            .collect();
        let _ = writeln!(out, "  \"lump\": {{{}}},", entries.join(", "));
    }
    let _ = write!(
        out,
        "  \"schema_version\": {SCHEMA_VERSION},\n  \"states\": [\n"
    );
    for (i, s) in parts.states.iter().enumerate() {
        let _ = write!(
            out,
            "    {{\"id\": {}, \"property\": {}}}",
            s.label,
            quote(&s.property)
        );
        out.push_str(if i + 1 < parts.states.len() {
            ",\n"
        } else {
            "\n"
        });
    }
    out.push_str("  ]\n}\n");
    out
}

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

/// Where a model came from.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
#[serde(tag = "kind", content = "name", rename_all = "lowercase")]
pub enum Source {
    Builtin(String),
    File(String),
}

/// Resolves a built-in name (`chr2`, `ach`, `cam`) or a path to a model file.
pub fn load_model(spec: &str) -> Result<(ReceptorModel, Source), IoError> {
    let lower = spec.to_ascii_lowercase();
    if builtin::NAMES.contains(&lower.as_str()) && !Path::new(spec).exists() {
        let model = builtin::builtin(&lower).expect("listed built-in");
        return Ok((model, Source::Builtin(lower)));
    }
    let text = read(spec).map_err(|e| match e {
        IoError::Read { path, message } => IoError::Read {
            path,
            message: format!(
                "{message} (and not a built-in: {})",
                builtin::NAMES.join(", ")
            ),
        },
        other => other,
    })?;
    Ok((parse_model(&text)?, Source::File(spec.to_string())))
}

pub fn read(path: &str) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|e| IoError::Read {
        path: path.to_string(),
        message: e.to_string(),
    })
}
