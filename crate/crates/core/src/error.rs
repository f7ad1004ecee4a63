use alloc::string::String;
use alloc::vec::Vec;

use crate::model::Violation;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid model: {}", summarize(.0))]
    InvalidModel(Vec<Violation>),
    #[error("unknown built-in model `{0}` (expected chr2, ach or cam)")]
    UnknownModel(String),
    #[error("input {x} outside model range [{min}, {max}]")]
    InputOutOfRange { x: f64, min: f64, max: f64 },
    #[error("invalid input distribution: {0}")]
    InvalidDistribution(String),
    #[error("time step must be finite and positive, got {0}")]
    InvalidTimeStep(f64),
    #[error("time step {dt} too large: P[{from}][{to}] = {value} at x = {x}")]
    TimeStepTooLarge {
        dt: f64,
        x: f64,
        from: usize,
        to: usize,
        value: f64,
    },
    #[error("stationary distribution is not unique (reducible mean generator)")]
    NotUnique,
    #[error("value {0} outside [0, 1]")]
    Domain(f64),
    #[error("posterior undefined: mean input is zero")]
    ZeroMeanInput,
    #[error("enumeration too large: {0} sequence pairs exceeds the guard")]
    EnumerationTooLarge(u128),
    #[error("model has no lump map")]
    NoLumpMap,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

fn summarize(violations: &[Violation]) -> String {
    use core::fmt::Write;
    let mut out = String::new();
    for (i, v) in violations.iter().enumerate() {
        if i > 0 {
            out.push_str("; ");
        }
        let _ = write!(out, "[{}] {}", v.code(), v);
    }
    out
}
