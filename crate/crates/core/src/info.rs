//! Exact IID mutual-information rate of the discretized receptor channel.
//!
//! With IID inputs the state sequence is itself a Markov chain with matrix
//! `P̄ = I + Δt·Q̄`, and `I(Xⁿ;Yⁿ)` grows by `I(X;Y'|Y)` per step. Only
//! sensitive transitions contribute: for every state `y` that originates a
//! sensitive edge, each sensitive target `y'` and the self-transition `y→y`
//! add the Jensen gap
//!
//! ```text
//! π_y · ( Σ_x p(x)·φ(P_x[y][y']) − φ(Σ_x p(x)·P_x[y][y']) ),   φ(p) = p ln p
//! ```
//!
//! [`mi_bruteforce`] enumerates all input/output sequences and is kept
//! independent of that formula so it can serve as an oracle.

use alloc::vec;
use alloc::vec::Vec;

use crate::dist::InputDistribution;
use crate::kinetics::{self, Stationary, TimeStep, TransitionMatrix};
use crate::model::{ReceptorModel, StateId};
use crate::numeric::{ln, plogp, CompensatedSum};
use crate::{Error, Result};

/// Partial entropy `φ(p) = p ln p`, with `φ(0) = 0`.
pub fn phi(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(p));
    }
    Ok(plogp(p))
}

/// Binary entropy in nats, `−φ(p) − φ(1−p)`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    Ok(-phi(p)? - phi(1.0 - p)?)
}

/// One transition's share of the information rate.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EdgeContribution {
    pub from: StateId,
    pub to: StateId,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct InfoReport {
    /// Nats per channel use.
    pub rate_per_use: f64,
    /// Nats per second, `rate_per_use / Δt`.
    pub rate_per_second: f64,
    /// Sensitive transitions including the self-transition of every
    /// sensitive-origin state, sorted by `(from, to)`.
    pub per_edge: Vec<EdgeContribution>,
    pub dt: TimeStep,
    pub stationary: Stationary,
}

/// Transition matrices for every alphabet level.
pub(crate) fn level_transitions(
    model: &ReceptorModel,
    dist: &InputDistribution,
    dt: TimeStep,
) -> Result<Vec<TransitionMatrix>> {
    kinetics::check_time_step(model, dist, dt)?;
    dist.levels()
        .map(|x| kinetics::transition(model, x, dt))
        .collect()
}

/// Sensitive `(from, to)` pairs with the self-transition of each origin,
/// sorted.
pub(crate) fn sensitive_pairs(model: &ReceptorModel) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = model
        .sensitive_edges()
        .iter()
        .map(|e| (e.from.0, e.to.0))
        .chain(model.sensitive_origins().iter().map(|s| (s.0, s.0)))
        .collect();
    pairs.sort_unstable();
    pairs
}

/// `Σ_x p(x)·φ(v_x) − φ(Σ_x p(x)·v_x)`, clamped at zero.
pub(crate) fn jensen_gap(masses: &[f64], values: impl Iterator<Item = f64> + Clone) -> f64 {
    let mut mean_phi = CompensatedSum::new();
    let mut mean = CompensatedSum::new();
    for (p, v) in masses.iter().zip(values) {
        mean_phi.add(p * plogp(v));
        mean.add(p * v);
    }
    (mean_phi.value() - plogp(mean.value())).max(0.0)
}

/// IID mutual-information rate of the channel `P(x, Δt)`.
pub fn mi_rate_discrete(
    model: &ReceptorModel,
    dist: &InputDistribution,
    dt: TimeStep,
) -> Result<InfoReport> {
    let transitions = level_transitions(model, dist, dt)?;
    let pi = kinetics::stationary(model, dist)?;
    let masses: Vec<f64> = dist.masses().collect();

    let mut total = CompensatedSum::new();
    let per_edge: Vec<EdgeContribution> = sensitive_pairs(model)
        .into_iter()
        .map(|(y, y_next)| {
            let gap = jensen_gap(&masses, transitions.iter().map(|p| p[(y, y_next)]));
            let value = pi[y] * gap;
            total.add(value);
            EdgeContribution {
                from: StateId(y),
                to: StateId(y_next),
                value,
            }
        })
        .collect();
    let rate_per_use = total.value();
    Ok(InfoReport {
        rate_per_use,
        rate_per_second: rate_per_use / dt.seconds(),
        per_edge,
        dt,
        stationary: pi,
    })
}

/// Upper bound on `|𝒳|ⁿ·kⁿ` accepted by [`mi_bruteforce`].
pub const BRUTEFORCE_LIMIT: u128 = 50_000_000;

/// `I(Xⁿ;Yⁿ)/n` by exhaustive enumeration of input and output sequences.
///
/// The initial state `Y₀` is drawn from the stationary law and is not
/// observed; `Y₁…Yₙ` are.
pub fn mi_bruteforce(
    model: &ReceptorModel,
    dist: &InputDistribution,
    dt: TimeStep,
    n: usize,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sequence length must be at least 1".into(),
        ));
    }
    let k = model.num_states();
    let m = dist.len();
    let size = (m as u128)
        .checked_pow(n as u32)
        .and_then(|a| a.checked_mul((k as u128).checked_pow(n as u32)?));
    match size {
        Some(s) if s <= BRUTEFORCE_LIMIT => {}
        Some(s) => return Err(Error::EnumerationTooLarge(s)),
        None => return Err(Error::EnumerationTooLarge(u128::MAX)),
    }

    let transitions = level_transitions(model, dist, dt)?;
    let pi = kinetics::stationary(model, dist)?;
    let masses: Vec<f64> = dist.masses().collect();
    let num_x = m.pow(n as u32);
    let num_y = k.pow(n as u32);

    // p(x) for every input sequence.
    let mut x_digits = vec![0usize; n];
    let mut x_seqs: Vec<(Vec<usize>, f64)> = Vec::with_capacity(num_x);
    for _ in 0..num_x {
        let prob = x_digits.iter().map(|&d| masses[d]).product::<f64>();
        x_seqs.push((x_digits.clone(), prob));
        increment(&mut x_digits, m);
    }

    let mut info = CompensatedSum::new();
    let mut y_digits = vec![0usize; n];
    let mut conditional = vec![0.0; num_x];
    for _ in 0..num_y {
        let mut marginal = CompensatedSum::new();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (slot, (xs, px)) in conditional.iter_mut().zip(&x_seqs) {
            let first = &transitions[xs[0]];
            let mut p: f64 = (0..k).map(|y0| pi[y0] * first[(y0, y_digits[0])]).sum();
            for i in 1..n {
                if p == 0.0 {
                    break;
                }
                p *= transitions[xs[i]][(y_digits[i - 1], y_digits[i])];
            }
            *slot = p;
            marginal.add(px * p);
            if *px > 0.0 {
                lo = lo.min(p);
                hi = hi.max(p);
            }
        }
        // A mixture of equal values is that value; summing would round.
        let py = if lo == hi { lo } else { marginal.value() };
        if py > 0.0 {
            for (p, (_, px)) in conditional.iter().zip(&x_seqs) {
                if *p > 0.0 && *px > 0.0 {
                    info.add(px * p * ln(p / py));
                }
            }
        }
        increment(&mut y_digits, k);
    }
    Ok(info.value() / n as f64)
}

fn increment(digits: &mut [usize], radix: usize) {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < radix {
            return;
        }
        *d = 0;
    }
}
