//! Receptors as input-modulated finite-state Markov channels.
//!
//! A receptor is a directed graph of states whose transition rates are either
//! constant or proportional to an external input `x` (light intensity, ligand
//! concentration). This crate computes, for IID inputs drawn from a finite
//! alphabet:
//!
//! - the exact per-step mutual information rate of the discretized channel
//!   `P = I + Δt·Q(x)` ([`info`]), with a brute-force enumeration oracle;
//! - its continuous-time limit, which factors into the steady-state flux
//!   through sensitive edges times a KL divergence ([`limit`]);
//! - IID capacities in both regimes ([`capacity`]);
//! - Monte Carlo estimates of `I(X;Y)` and of `I(X;Z)` for a lumped output
//!   `Z = f(Y)` ([`simulate`]).
//!
//! All information quantities are in nats. The crate is `no_std` (with
//! `alloc`); the `parallel` feature pulls in `std` and rayon for multi-start
//! optimization and Monte Carlo chains.
//!
//! ```
//! use transduce_core::{builtin, InputDistribution, limit};
//!
//! let chr2 = builtin::chr2();
//! let dist = InputDistribution::binary(0.0, 1.0, 0.99).unwrap();
//! let report = limit::limit_rate(&chr2, &dist).unwrap();
//! let bits_per_s = report.rate / core::f64::consts::LN_2;
//! assert!((bits_per_s - 67.2).abs() < 0.2);
//! ```
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod builtin;
pub mod capacity;
mod dist;
mod error;
pub mod info;
pub mod kinetics;
pub mod limit;
pub mod linalg;
pub mod model;
pub mod numeric;
pub mod simulate;

pub use dist::InputDistribution;
pub use error::Error;
pub use model::{Edge, ModelParts, ReceptorModel, StateId, StateInfo, ValidationReport, Violation};

pub type Result<T, E = Error> = core::result::Result<T, E>;
