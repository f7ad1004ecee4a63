//! Generators `Q(x)`, their input average `Q̄`, the Euler-discretized
//! transition matrices `P = I + Δt·Q`, and stationary distributions.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use crate::dist::InputDistribution;
use crate::linalg::{self, Matrix};
use crate::model::ReceptorModel;
use crate::numeric::abs;
use crate::{Error, Result};

/// Numerical tolerances for the kinetics layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// `Δt·max|R_i| ≤ 1 − step_guard` for a step to be admissible.
    pub step_guard: f64,
    /// Relative pivot threshold below which the stationary system is singular.
    pub pivot: f64,
    /// `‖πQ̄‖∞ ≤ residual·max|Q̄|`.
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            step_guard: 1e-9,
            pivot: 1e-13,
            residual: 1e-10,
        }
    }
}

/// Continuous-time generator: non-negative off-diagonals, zero row sums.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize), serde(transparent))]
pub struct Generator(Matrix);

impl Generator {
    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    /// `max_i |R_i|`, the largest exit rate.
    pub fn max_exit_rate(&self) -> f64 {
        (0..self.0.dim()).fold(0.0, |m, i| m.max(abs(self.0[(i, i)])))
    }
}

impl Deref for Generator {
    type Target = Matrix;
    fn deref(&self) -> &Matrix {
        &self.0
    }
}

/// Row-stochastic one-step transition matrix.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize), serde(transparent))]
pub struct TransitionMatrix(Matrix);

impl TransitionMatrix {
    pub fn matrix(&self) -> &Matrix {
        &self.0
    }
}

impl Deref for TransitionMatrix {
    type Target = Matrix;
    fn deref(&self) -> &Matrix {
        &self.0
    }
}

/// Discretization step in seconds.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
#[cfg_attr(feature = "serde", derive(serde::Serialize), serde(transparent))]
pub struct TimeStep(f64);

impl TimeStep {
    pub fn new(seconds: f64) -> Result<Self> {
        if seconds.is_finite() && seconds > 0.0 {
            Ok(Self(seconds))
        } else {
            Err(Error::InvalidTimeStep(seconds))
        }
    }

    pub fn seconds(self) -> f64 {
        self.0
    }
}

/// Stationary law of the mean chain.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize), serde(transparent))]
pub struct Stationary(Vec<f64>);

impl Stationary {
    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }
}

impl Deref for Stationary {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Generator without the range check; `x` must be non-negative.
pub(crate) fn generator_at(model: &ReceptorModel, x: f64) -> Generator {
    let k = model.num_states();
    let mut q = Matrix::zeros(k);
    for e in model.edges() {
        q[(e.from.0, e.to.0)] = e.rate_at(x);
    }
    for i in 0..k {
        let exit: f64 = q.row(i).iter().sum();
        q[(i, i)] = -exit;
    }
    Generator(q)
}

/// `Q(x)`; sensitive entries are `q·x`, the diagonal closes each row to zero.
pub fn generator(model: &ReceptorModel, x: f64) -> Result<Generator> {
    let (min, max) = model.input_range();
    if !model.contains_input(x) {
        return Err(Error::InputOutOfRange { x, min, max });
    }
    Ok(generator_at(model, x))
}

/// `Q̄ = E[Q(X)]`, which equals `Q(x̄)` because sensitive rates are linear in x.
pub fn mean_generator(model: &ReceptorModel, dist: &InputDistribution) -> Result<Generator> {
    dist.check_support(model)?;
    Ok(generator_at(model, dist.mean()))
}

fn euler_step(q: &Generator, dt: TimeStep, x: f64, guard: f64) -> Result<TransitionMatrix> {
    let k = q.dim();
    let mut p = Matrix::identity(k);
    for i in 0..k {
        for j in 0..k {
            p[(i, j)] += dt.0 * q[(i, j)];
        }
        let stay = p[(i, i)];
        if dt.0 * abs(q[(i, i)]) > 1.0 - guard || stay > 1.0 {
            return Err(Error::TimeStepTooLarge {
                dt: dt.0,
                x,
                from: i,
                to: i,
                value: stay,
            });
        }
    }
    Ok(TransitionMatrix(p))
}

/// `P(x, Δt) = I + Δt·Q(x)`.
pub fn transition(model: &ReceptorModel, x: f64, dt: TimeStep) -> Result<TransitionMatrix> {
    transition_with(model, x, dt, &Tolerances::default())
}

pub fn transition_with(
    model: &ReceptorModel,
    x: f64,
    dt: TimeStep,
    tol: &Tolerances,
) -> Result<TransitionMatrix> {
    let q = generator(model, x)?;
    euler_step(&q, dt, x, tol.step_guard)
}

/// `P̄ = I + Δt·Q̄`.
pub fn mean_transition(
    model: &ReceptorModel,
    dist: &InputDistribution,
    dt: TimeStep,
) -> Result<TransitionMatrix> {
    check_time_step(model, dist, dt)?;
    euler_step(
        &mean_generator(model, dist)?,
        dt,
        dist.mean(),
        Tolerances::default().step_guard,
    )
}

/// Largest admissible step when inputs never exceed `x_high`.
pub fn max_time_step(model: &ReceptorModel, x_high: f64) -> f64 {
    let rate = generator_at(model, x_high).max_exit_rate();
    if rate == 0.0 {
        return f64::INFINITY;
    }
    let bound = 1.0 - Tolerances::default().step_guard;
    let mut dt = bound / rate;
    while dt * rate > bound {
        dt = dt.next_down();
    }
    dt
}

/// Checks that `I + Δt·Q(x)` is a valid transition matrix at every level of
/// `dist`. Exit rates grow with x, so the extremes decide.
pub fn check_time_step(
    model: &ReceptorModel,
    dist: &InputDistribution,
    dt: TimeStep,
) -> Result<()> {
    dist.check_support(model)?;
    for x in [dist.low(), dist.high()] {
        transition(model, x, dt)?;
    }
    Ok(())
}

/// Stationary distribution for IID inputs with law `dist`.
pub fn stationary(model: &ReceptorModel, dist: &InputDistribution) -> Result<Stationary> {
    dist.check_support(model)?;
    stationary_at(model, dist.mean())
}

/// Stationary distribution of `Q(x̄)`.
pub fn stationary_at(model: &ReceptorModel, mean_input: f64) -> Result<Stationary> {
    stationary_with(model, mean_input, &Tolerances::default())
}

/// Solves `πQ̄ = 0`, `Σπ = 1` by replacing the last equation of `Q̄ᵀπᵀ = 0`
/// with the normalization row.
pub fn stationary_with(
    model: &ReceptorModel,
    mean_input: f64,
    tol: &Tolerances,
) -> Result<Stationary> {
    let q = generator_at(model, mean_input);
    let k = q.dim();
    if k == 1 {
        return Ok(Stationary(vec![1.0]));
    }
    let scale = q.max_abs();
    if scale == 0.0 {
        return Err(Error::NotUnique);
    }
    let mut a = q.transpose();
    for i in 0..k {
        for j in 0..k {
            a[(i, j)] /= scale;
        }
    }
    for j in 0..k {
        a[(k - 1, j)] = 1.0;
    }
    let mut rhs = vec![0.0; k];
    rhs[k - 1] = 1.0;
    let mut pi = linalg::solve(&a, &rhs, tol.pivot).ok_or(Error::NotUnique)?;

    for p in pi.iter_mut() {
        if *p < 0.0 {
            if *p < -tol.residual {
                return Err(Error::NotUnique);
            }
            *p = 0.0;
        }
    }
    let total: f64 = pi.iter().sum();
    for p in pi.iter_mut() {
        *p /= total;
    }
    let residual = q.left_mul(&pi).iter().fold(0.0, |m: f64, v| m.max(abs(*v)));
    if residual > tol.residual * scale {
        return Err(Error::NotUnique);
    }
    Ok(Stationary(pi))
}
