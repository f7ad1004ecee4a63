//! Receptor models: labeled directed graphs whose edges carry a base rate and
//! a flag saying whether the rate is multiplied by the input.
//!
//! States carry an external integer label (the number printed in the source
//! kinetic scheme) and are re-indexed densely from zero internally. Diagonal
//! rates are never stored; they are always derived as negative row sums.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::{Error, Result};

/// Dense internal index of a state, `0..k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StateId(pub usize);

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StateInfo {
    /// External label, e.g. `1` for `C1`.
    pub label: u32,
    /// Observable property tag (`open`, `closed`, `NC`, ...).
    pub property: String,
}

/// A transition between two distinct states of a validated model.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Edge {
    pub from: StateId,
    pub to: StateId,
    /// Base rate in s⁻¹; multiplied by `x` when `sensitive`.
    pub rate: f64,
    pub sensitive: bool,
}

impl Edge {
    /// Rate at input `x`.
    #[inline]
    pub fn rate_at(&self, x: f64) -> f64 {
        if self.sensitive {
            self.rate * x
        } else {
            self.rate
        }
    }
}

/// An edge as written in a model file, referring to states by label.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LabeledEdge {
    pub from: u32,
    pub to: u32,
    pub rate: f64,
    pub sensitive: bool,
}

/// Unvalidated model description.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParts {
    pub states: Vec<StateInfo>,
    pub edges: Vec<LabeledEdge>,
    pub input_range: (f64, f64),
    /// Output lumping `Z = f(Y)`, keyed by state label.
    pub lump: Option<BTreeMap<u32, String>>,
}

/// A structural problem found by [`validate`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "code", rename_all = "kebab-case"))]
pub enum Violation {
    NoStates,
    DuplicateState { label: u32 },
    UnknownState { label: u32 },
    SelfLoop { label: u32 },
    DuplicateEdge { from: u32, to: u32 },
    NonPositiveRate { from: u32, to: u32, rate: f64 },
    NonFiniteRate { from: u32, to: u32 },
    InvalidInputRange { min: f64, max: f64 },
    NegativeInput { min: f64 },
    Reducible { unreachable: Vec<u32> },
    NoSensitiveEdges,
    LumpUnknownState { label: u32 },
    LumpMissingState { label: u32 },
}

impl Violation {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Violation::NoStates => "no-states",
            Violation::DuplicateState { .. } => "duplicate-state",
            Violation::UnknownState { .. } => "unknown-state",
            Violation::SelfLoop { .. } => "self-loop",
            Violation::DuplicateEdge { .. } => "duplicate-edge",
            Violation::NonPositiveRate { .. } => "non-positive-rate",
            Violation::NonFiniteRate { .. } => "non-finite-rate",
            Violation::InvalidInputRange { .. } => "invalid-input-range",
            Violation::NegativeInput { .. } => "negative-input",
            Violation::Reducible { .. } => "reducible",
            Violation::NoSensitiveEdges => "no-sensitive-edges",
            Violation::LumpUnknownState { .. } => "lump-unknown-state",
            Violation::LumpMissingState { .. } => "lump-missing-state",
        }
    }

    /// Whether a model with this violation can still be built.
    ///
    /// A model without sensitive edges is a well-defined (if useless)
    /// channel carrying zero information; everything else is rejected.
    pub fn is_fatal(&self) -> bool {
        !matches!(self, Violation::NoSensitiveEdges)
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoStates => write!(f, "model has no states"),
            Violation::DuplicateState { label } => write!(f, "state {label} declared twice"),
            Violation::UnknownState { label } => {
                write!(f, "edge refers to undeclared state {label}")
            }
            Violation::SelfLoop { label } => write!(f, "self-loop edge on state {label}"),
            Violation::DuplicateEdge { from, to } => write!(f, "duplicate edge {from}->{to}"),
            Violation::NonPositiveRate { from, to, rate } => {
                write!(f, "edge {from}->{to} has non-positive rate {rate}")
            }
            Violation::NonFiniteRate { from, to } => {
                write!(f, "edge {from}->{to} has non-finite rate")
            }
            Violation::InvalidInputRange { min, max } => {
                write!(
                    f,
                    "input range [{min}, {max}] must be finite with min < max"
                )
            }
            Violation::NegativeInput { min } => write!(f, "input range starts below zero ({min})"),
            Violation::Reducible { unreachable } => {
                write!(f, "graph is not irreducible; states {unreachable:?} do not communicate with the first state")
            }
            Violation::NoSensitiveEdges => write!(f, "no edge is sensitive to the input"),
            Violation::LumpUnknownState { label } => {
                write!(f, "lump map names undeclared state {label}")
            }
            Violation::LumpMissingState { label } => {
                write!(f, "lump map has no tag for state {label}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_fatal(&self) -> bool {
        self.violations.iter().any(Violation::is_fatal)
    }
}

/// Checks the structural assumptions every analysis relies on.
pub fn validate(parts: &ModelParts) -> ValidationReport {
    let mut violations = Vec::new();
    if parts.states.is_empty() {
        violations.push(Violation::NoStates);
    }

    let mut index: BTreeMap<u32, usize> = BTreeMap::new();
    for (i, s) in parts.states.iter().enumerate() {
        if index.insert(s.label, i).is_some() {
            violations.push(Violation::DuplicateState { label: s.label });
        }
    }

    let (min, max) = parts.input_range;
    if !(min.is_finite() && max.is_finite() && min < max) {
        violations.push(Violation::InvalidInputRange { min, max });
    } else if min < 0.0 {
        violations.push(Violation::NegativeInput { min });
    }

    let mut seen = BTreeSet::new();
    let mut adjacency = vec![Vec::new(); parts.states.len()];
    for e in &parts.edges {
        let mut endpoints_ok = true;
        for label in [e.from, e.to] {
            if !index.contains_key(&label) {
                violations.push(Violation::UnknownState { label });
                endpoints_ok = false;
            }
        }
        if e.from == e.to {
            violations.push(Violation::SelfLoop { label: e.from });
            continue;
        }
        if !seen.insert((e.from, e.to)) {
            violations.push(Violation::DuplicateEdge {
                from: e.from,
                to: e.to,
            });
        }
        if !e.rate.is_finite() {
            violations.push(Violation::NonFiniteRate {
                from: e.from,
                to: e.to,
            });
        } else if e.rate <= 0.0 {
            violations.push(Violation::NonPositiveRate {
                from: e.from,
                to: e.to,
                rate: e.rate,
            });
        }
        if endpoints_ok {
            adjacency[index[&e.from]].push(index[&e.to]);
        }
    }

    // Rates are linear in x, so every edge is active at x_max.
    if !parts.states.is_empty() {
        let forward = reachable(&adjacency, 0);
        let mut reverse_adj = vec![Vec::new(); adjacency.len()];
        for (i, outs) in adjacency.iter().enumerate() {
            for &j in outs {
                reverse_adj[j].push(i);
            }
        }
        let backward = reachable(&reverse_adj, 0);
        let unreachable: Vec<u32> = parts
            .states
            .iter()
            .enumerate()
            .filter(|(i, _)| !(forward[*i] && backward[*i]))
            .map(|(_, s)| s.label)
            .collect();
        if !unreachable.is_empty() {
            violations.push(Violation::Reducible { unreachable });
        }
    }

    if !parts.edges.iter().any(|e| e.sensitive) {
        violations.push(Violation::NoSensitiveEdges);
    }

    if let Some(lump) = &parts.lump {
        for label in lump.keys() {
            if !index.contains_key(label) {
                violations.push(Violation::LumpUnknownState { label: *label });
            }
        }
        for s in &parts.states {
            if !lump.contains_key(&s.label) {
                violations.push(Violation::LumpMissingState { label: s.label });
            }
        }
    }

    ValidationReport { violations }
}

fn reachable(adjacency: &[Vec<usize>], start: usize) -> Vec<bool> {
    let mut seen = vec![false; adjacency.len()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(i) = stack.pop() {
        for &j in &adjacency[i] {
            if !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen
}

/// Output lumping `Z = f(Y)` resolved to dense indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Lump {
    /// Distinct tags, sorted.
    pub tags: Vec<String>,
    /// Tag index for each dense state.
    pub of_state: Vec<usize>,
}

/// A validated, immutable receptor model.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceptorModel {
    states: Vec<StateInfo>,
    edges: Vec<Edge>,
    input_range: (f64, f64),
    lump: Option<Lump>,
}

impl ReceptorModel {
    /// Validates `parts` and builds the model. Only a missing sensitive edge
    /// is tolerated; every other violation is an error.
    pub fn new(parts: ModelParts) -> Result<Self> {
        let report = validate(&parts);
        if report.has_fatal() {
            return Err(Error::InvalidModel(
                report
                    .violations
                    .into_iter()
                    .filter(Violation::is_fatal)
                    .collect(),
            ));
        }
        let index: BTreeMap<u32, usize> = parts
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.label, i))
            .collect();
        let mut edges: Vec<Edge> = parts
            .edges
            .iter()
            .map(|e| Edge {
                from: StateId(index[&e.from]),
                to: StateId(index[&e.to]),
                rate: e.rate,
                sensitive: e.sensitive,
            })
            .collect();
        edges.sort_by_key(|e| (e.from, e.to));
        let lump = parts.lump.map(|map| {
            let tags: Vec<String> = map
                .values()
                .cloned()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let of_state = parts
                .states
                .iter()
                .map(|s| tags.iter().position(|t| *t == map[&s.label]).unwrap())
                .collect();
            Lump { tags, of_state }
        });
        Ok(Self {
            states: parts.states,
            edges,
            input_range: parts.input_range,
            lump,
        })
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[StateInfo] {
        &self.states
    }

    /// All edges, sorted by `(from, to)`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn input_range(&self) -> (f64, f64) {
        self.input_range
    }

    pub fn lump(&self) -> Option<&Lump> {
        self.lump.as_ref()
    }

    pub fn label(&self, id: StateId) -> u32 {
        self.states[id.0].label
    }

    pub fn id_of(&self, label: u32) -> Option<StateId> {
        self.states
            .iter()
            .position(|s| s.label == label)
            .map(StateId)
    }

    /// Sensitive non-self edges, sorted by `(from, to)`.
    pub fn sensitive_edges(&self) -> Vec<Edge> {
        self.edges.iter().copied().filter(|e| e.sensitive).collect()
    }

    /// States that originate at least one sensitive edge, ascending.
    pub fn sensitive_origins(&self) -> Vec<StateId> {
        let mut origins: Vec<StateId> = self
            .edges
            .iter()
            .filter(|e| e.sensitive)
            .map(|e| e.from)
            .collect();
        origins.dedup();
        origins
    }

    pub fn contains_input(&self, x: f64) -> bool {
        x >= self.input_range.0 && x <= self.input_range.1
    }

    /// Converts back to the labeled form, edges sorted by label pair.
    pub fn to_parts(&self) -> ModelParts {
        let mut edges: Vec<LabeledEdge> = self
            .edges
            .iter()
            .map(|e| LabeledEdge {
                from: self.label(e.from),
                to: self.label(e.to),
                rate: e.rate,
                sensitive: e.sensitive,
            })
            .collect();
        edges.sort_by_key(|e| (e.from, e.to));
        let lump = self.lump.as_ref().map(|l| {
            self.states
                .iter()
                .zip(&l.of_state)
                .map(|(s, t)| (s.label, l.tags[*t].clone()))
                .collect()
        });
        ModelParts {
            states: self.states.clone(),
            edges,
            input_range: self.input_range,
            lump,
        }
    }
}

/// Sensitive non-self edges of `model`, sorted by `(from, to)`.
pub fn sensitive_edges(model: &ReceptorModel) -> Vec<Edge> {
    model.sensitive_edges()
}
