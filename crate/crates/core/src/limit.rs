//! Continuous-time limit of the information rate.
//!
//! As `Δt → 0` the rate per second converges to `J·D(ν‖p)`, where `J` is
//! the steady-state flux through the sensitive non-self edges and
//! `ν(x) = p(x)·x/x̄` is the input law seen by a sensitive transition.
//! Sensitive self-transitions contribute nothing in the limit.

use alloc::vec::Vec;

use crate::dist::InputDistribution;
use crate::kinetics::{self, Stationary};
use crate::model::{ReceptorModel, StateId};
use crate::numeric::{sum, xlogx_gap, CompensatedSum};
use crate::{Error, Result};

/// `ν(x) = p(x)·x / x̄`, listed over the same levels as the prior.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Posterior {
    pub points: Vec<(f64, f64)>,
}

impl Posterior {
    pub fn masses(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.1)
    }
}

pub fn posterior(dist: &InputDistribution) -> Result<Posterior> {
    let mean = dist.mean();
    if mean <= 0.0 {
        return Err(Error::ZeroMeanInput);
    }
    let points: Vec<(f64, f64)> = dist
        .points()
        .iter()
        .map(|&(x, p)| (x, p * x / mean))
        .collect();
    let total = sum(points.iter().map(|p| p.1));
    debug_assert!((total - 1.0).abs() <= 1e-12, "posterior mass {total}");
    Ok(Posterior { points })
}

/// `D(ν‖p) = Σ ν ln(ν/p)` in nats, with `0·ln 0 = 0`.
///
/// Evaluated as `Σ p·g(ν/p)` with `g(r) = r ln r − r + 1 ≥ 0`, which sums
/// non-negative terms and stays accurate when `ν ≈ p`.
pub fn divergence(nu: &Posterior, prior: &InputDistribution) -> f64 {
    kl_divergence(
        &nu.masses().collect::<Vec<_>>(),
        &prior.masses().collect::<Vec<_>>(),
    )
}

/// `D(a‖b)` for two mass vectors over the same outcomes, each summing to 1.
/// `b` must be positive wherever `a` is.
pub fn kl_divergence(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    sum(a
        .iter()
        .zip(b)
        .filter(|(_, q)| **q > 0.0)
        .map(|(p, q)| q * xlogx_gap(p / q)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EdgeFlux {
    pub from: StateId,
    pub to: StateId,
    /// `π_y·q·x̄`, transitions per second.
    pub flux: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FluxReport {
    pub per_edge: Vec<EdgeFlux>,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EdgeIota {
    pub from: StateId,
    pub to: StateId,
    /// Limit contribution in nats/s: `π_y·q·(E[φ(X)] − φ(E[X]))`.
    pub iota: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LimitReport {
    /// `J·D(ν‖p)`, nats per second.
    pub rate: f64,
    pub flux: FluxReport,
    /// `D(ν‖p)` in nats; zero when the mean input is zero.
    pub divergence: f64,
    /// `None` when the mean input is zero.
    pub posterior: Option<Posterior>,
    /// Sensitive non-self edges only, sorted by `(from, to)`.
    pub per_edge_iota: Vec<EdgeIota>,
    pub stationary: Stationary,
}

impl LimitReport {
    /// `Σ ι`, the edge-by-edge route to the same rate.
    pub fn iota_total(&self) -> f64 {
        sum(self.per_edge_iota.iter().map(|e| e.iota))
    }
}

fn flux_with(model: &ReceptorModel, pi: &Stationary, mean: f64) -> FluxReport {
    let mut total = CompensatedSum::new();
    let per_edge = model
        .sensitive_edges()
        .iter()
        .map(|e| {
            let flux = pi[e.from.0] * e.rate * mean;
            total.add(flux);
            EdgeFlux {
                from: e.from,
                to: e.to,
                flux,
            }
        })
        .collect();
    FluxReport {
        per_edge,
        total: total.value(),
    }
}

/// Steady-state flux through each sensitive non-self edge.
pub fn flux(model: &ReceptorModel, dist: &InputDistribution) -> Result<FluxReport> {
    let pi = kinetics::stationary(model, dist)?;
    Ok(flux_with(model, &pi, dist.mean()))
}

/// `lim_{Δt→0} I(X;Y)/Δt` via the flux–divergence factorization, with the
/// per-edge limits `ι` computed independently.
pub fn limit_rate(model: &ReceptorModel, dist: &InputDistribution) -> Result<LimitReport> {
    let pi = kinetics::stationary(model, dist)?;
    Ok(limit_with_stationary(model, dist, pi))
}

/// Same as [`limit_rate`] but with the state occupancy supplied by the
/// caller instead of solved from `Q̄`.
pub fn limit_with_stationary(
    model: &ReceptorModel,
    dist: &InputDistribution,
    pi: Stationary,
) -> LimitReport {
    let mean = dist.mean();
    let flux = flux_with(model, &pi, mean);
    let (posterior, divergence) = match posterior(dist) {
        Ok(nu) => {
            let d = divergence(&nu, dist);
            (Some(nu), d)
        }
        Err(_) => (None, 0.0),
    };
    // E[φ(X)] − φ(x̄) = x̄·Σ p·g(x/x̄); the tangent terms cancel exactly.
    let jensen = if mean > 0.0 {
        mean * sum(dist.points().iter().map(|&(x, p)| p * xlogx_gap(x / mean)))
    } else {
        0.0
    };
    let per_edge_iota = model
        .sensitive_edges()
        .iter()
        .map(|e| EdgeIota {
            from: e.from,
            to: e.to,
            iota: pi[e.from.0] * e.rate * jensen,
        })
        .collect();
    LimitReport {
        rate: flux.total * divergence,
        flux,
        divergence,
        posterior,
        per_edge_iota,
        stationary: pi,
    }
}
