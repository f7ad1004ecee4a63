//! Maximization of the information rate over IID input laws.
//!
//! Two alphabets are handled: a two-level alphabet, searched over the single
//! mass `p_L` by grid scan plus golden-section refinement, and a general
//! finite alphabet, searched by multi-start projected gradient ascent on the
//! probability simplex followed by a polish on the face the best start lands
//! on. The objective is not known to be concave because the stationary law
//! moves with the input law, so results for the general case are best-found
//! values.

use alloc::vec;
use alloc::vec::Vec;

use crate::dist::InputDistribution;
use crate::info;
use crate::kinetics::{self, TimeStep};
use crate::limit;
use crate::model::ReceptorModel;
use crate::numeric::{abs, ln};
use crate::simulate::{stream_rng, unit_f64};
use crate::{Error, Result};

/// Which rate is maximized.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(
    feature = "serde",
    serde(tag = "kind", content = "dt", rename_all = "lowercase")
)]
pub enum Mode {
    /// Nats per channel use of the `Δt`-discretized channel.
    Discrete(TimeStep),
    /// Nats per second in the `Δt → 0` limit.
    Limit,
}

impl Mode {
    /// Converts a value in this mode's native unit to nats per second.
    pub fn per_second(&self, value: f64) -> f64 {
        match self {
            Mode::Discrete(dt) => value / dt.seconds(),
            Mode::Limit => value,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TracePoint {
    pub masses: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CapacityResult {
    /// Nats per use in discrete mode, nats per second in limit mode.
    pub value: f64,
    pub argmax: InputDistribution,
    pub mode: Mode,
    pub trace: Vec<TracePoint>,
    /// At most one sensitive non-self edge: the optimum puts all mass on the
    /// extreme levels and the IID capacity is the Shannon capacity.
    pub single_sensitive_edge: bool,
    /// Mass found on levels strictly between the extremes.
    pub interior_mass: f64,
    /// For single-sensitive-edge models, whether `interior_mass ≤ 1e-6`.
    pub endpoint_support_verified: Option<bool>,
    /// Mass on the low level for two-level searches.
    pub p_low: Option<f64>,
    /// Whether the 1001-point scan of a two-level search was single-peaked.
    pub unimodal: Option<bool>,
    pub converged: bool,
}

impl CapacityResult {
    /// Whether the value may be reported as the Shannon capacity rather than
    /// a lower bound on it.
    pub fn is_shannon_capacity(&self) -> bool {
        self.single_sensitive_edge
    }
}

/// Objective on a fixed alphabet.
struct Objective<'a> {
    model: &'a ReceptorModel,
    levels: Vec<f64>,
    mode: Mode,
}

impl Objective<'_> {
    fn eval(&self, masses: &[f64]) -> f64 {
        let total: f64 = masses.iter().sum();
        let normalized: Vec<f64> = masses.iter().map(|m| m / total).collect();
        let dist = match InputDistribution::from_parts(&self.levels, &normalized) {
            Ok(d) => d,
            Err(_) => return f64::NEG_INFINITY,
        };
        let value = match self.mode {
            Mode::Discrete(dt) => {
                info::mi_rate_discrete(self.model, &dist, dt).map(|r| r.rate_per_use)
            }
            Mode::Limit => limit::limit_rate(self.model, &dist).map(|r| r.rate),
        };
        value.unwrap_or(f64::NEG_INFINITY)
    }
}

fn check_levels(model: &ReceptorModel, levels: &[f64], mode: Mode) -> Result<()> {
    let (min, max) = model.input_range();
    for &x in levels {
        if !model.contains_input(x) {
            return Err(Error::InputOutOfRange { x, min, max });
        }
    }
    if let Mode::Discrete(dt) = mode {
        let hi = levels.iter().fold(f64::NEG_INFINITY, |m, x| m.max(*x));
        kinetics::transition(model, hi, dt)?;
    }
    Ok(())
}

const GRID: usize = 1001;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximization of `f` on `[a, b]`.
fn golden<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    tol: f64,
    trace: &mut Vec<(f64, f64)>,
) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    trace.push((c, fc));
    trace.push((d, fd));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
            trace.push((c, fc));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            trace.push((d, fd));
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

struct LineSearch {
    arg: f64,
    value: f64,
    unimodal: bool,
    trace: Vec<(f64, f64)>,
}

/// Maximizes `f` on `[0, 1]`: dense scan, then golden refinement around the
/// best grid point.
fn maximize_unit_interval<F: FnMut(f64) -> f64>(mut f: F) -> LineSearch {
    let values: Vec<f64> = (0..GRID).map(|i| f(i as f64 / (GRID - 1) as f64)).collect();
    let (best, best_value) =
        values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| {
                if *v > acc.1 {
                    (i, *v)
                } else {
                    acc
                }
            });
    let slack = 1e-12 * abs(best_value).max(f64::MIN_POSITIVE);
    let rising = values[..=best].windows(2).all(|w| w[1] >= w[0] - slack);
    let falling = values[best..].windows(2).all(|w| w[1] <= w[0] + slack);

    let step = 1.0 / (GRID - 1) as f64;
    let lo = (best as f64 - 1.0).max(0.0) * step;
    let hi = ((best + 1) as f64 * step).min(1.0);
    let mut trace = Vec::new();
    let (arg, value) = golden(&mut f, lo, hi, 1e-10, &mut trace);
    let (arg, value) = if value >= best_value {
        (arg, value)
    } else {
        (best as f64 * step, best_value)
    };
    LineSearch {
        arg,
        value,
        unimodal: rising && falling,
        trace,
    }
}

/// IID capacity over the two-level alphabet `{x_low, x_high}`.
pub fn capacity_binary(
    model: &ReceptorModel,
    x_low: f64,
    x_high: f64,
    mode: Mode,
) -> Result<CapacityResult> {
    if x_low > x_high {
        return Err(Error::InvalidArgument(
            "x_low must not exceed x_high".into(),
        ));
    }
    check_levels(model, &[x_low, x_high], mode)?;
    let single = model.sensitive_edges().len() <= 1;
    if x_low == x_high {
        return Ok(CapacityResult {
            value: 0.0,
            argmax: InputDistribution::point_mass(x_low)?,
            mode,
            trace: Vec::new(),
            single_sensitive_edge: single,
            interior_mass: 0.0,
            endpoint_support_verified: single.then_some(true),
            p_low: Some(0.5),
            unimodal: None,
            converged: true,
        });
    }
    let objective = Objective {
        model,
        levels: vec![x_low, x_high],
        mode,
    };
    let search = maximize_unit_interval(|p| objective.eval(&[p, 1.0 - p]));
    let argmax = InputDistribution::binary(x_low, x_high, search.arg)?;
    let value = objective.eval(&[search.arg, 1.0 - search.arg]);
    Ok(CapacityResult {
        value,
        argmax,
        mode,
        trace: search
            .trace
            .into_iter()
            .map(|(p, v)| TracePoint {
                masses: vec![p, 1.0 - p],
                value: v,
            })
            .collect(),
        single_sensitive_edge: single,
        interior_mass: 0.0,
        endpoint_support_verified: single.then_some(true),
        p_low: Some(search.arg),
        unimodal: Some(search.unimodal),
        converged: true,
    })
}

/// Settings for [`capacity_general`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub starts: usize,
    pub seed: u64,
    pub max_iterations: usize,
    /// Finite-difference step in simplex coordinates.
    pub gradient_step: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            starts: 32,
            seed: 0x5eed,
            max_iterations: 400,
            gradient_step: 1e-6,
        }
    }
}

/// Euclidean projection onto the probability simplex.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

fn gradient(objective: &Objective<'_>, p: &[f64], f0: f64, h: f64) -> Vec<f64> {
    let mut g = vec![0.0; p.len()];
    let mut probe = p.to_vec();
    for i in 0..p.len() {
        probe[i] = p[i] + h;
        let up = objective.eval(&probe);
        let down = if p[i] >= h {
            probe[i] = p[i] - h;
            objective.eval(&probe)
        } else {
            f64::NEG_INFINITY
        };
        probe[i] = p[i];
        g[i] = match (up.is_finite(), down.is_finite()) {
            (true, true) => (up - down) / (2.0 * h),
            (true, false) if f0.is_finite() => (up - f0) / h,
            (false, true) if f0.is_finite() => (f0 - down) / h,
            _ => 0.0,
        };
    }
    g
}

struct StartOutcome {
    masses: Vec<f64>,
    value: f64,
    converged: bool,
}

fn ascend(objective: &Objective<'_>, start: Vec<f64>, opts: &SearchOptions) -> StartOutcome {
    let mut p = start;
    let mut f = objective.eval(&p);
    let mut step = f64::NAN;
    for _ in 0..opts.max_iterations {
        let g = gradient(objective, &p, f, opts.gradient_step);
        let g_max = g.iter().fold(0.0, |m: f64, v| m.max(abs(*v)));
        if g_max == 0.0 {
            return StartOutcome {
                masses: p,
                value: f,
                converged: true,
            };
        }
        if !step.is_finite() {
            step = 0.1 / g_max;
        } else {
            step *= 4.0;
        }
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = p.iter().zip(&g).map(|(a, b)| a + step * b).collect();
            let candidate = project_to_simplex(&trial);
            let ascent: f64 = candidate
                .iter()
                .zip(&p)
                .zip(&g)
                .map(|((c, a), b)| (c - a) * b)
                .sum();
            let fc = objective.eval(&candidate);
            if fc.is_finite() && fc >= f + 1e-4 * ascent && fc >= f {
                accepted = Some((candidate, fc));
                break;
            }
            step *= 0.5;
        }
        let Some((candidate, fc)) = accepted else {
            return StartOutcome {
                masses: p,
                value: f,
                converged: true,
            };
        };
        let moved = candidate
            .iter()
            .zip(&p)
            .fold(0.0, |m: f64, (a, b)| m.max(abs(a - b)));
        let gained = fc - f;
        p = candidate;
        f = fc;
        if moved < 1e-12 || gained <= 1e-15 * abs(f) {
            return StartOutcome {
                masses: p,
                value: f,
                converged: true,
            };
        }
    }
    StartOutcome {
        masses: p,
        value: f,
        converged: false,
    }
}

fn dirichlet_start(seed: u64, index: usize, dim: usize) -> Vec<f64> {
    let mut rng = stream_rng(seed, index as u64);
    let draws: Vec<f64> = (0..dim).map(|_| -ln(1.0 - unit_f64(&mut rng))).collect();
    let total: f64 = draws.iter().sum();
    draws.iter().map(|d| d / total).collect()
}

/// Moves mass between support levels pairwise with golden-section searches.
fn polish(
    objective: &Objective<'_>,
    masses: &mut [f64],
    value: &mut f64,
    trace: &mut Vec<TracePoint>,
) {
    let support: Vec<usize> = (0..masses.len()).filter(|&i| masses[i] > 1e-9).collect();
    for (i, m) in masses.iter_mut().enumerate() {
        if !support.contains(&i) {
            *m = 0.0;
        }
    }
    let total: f64 = masses.iter().sum();
    masses.iter_mut().for_each(|m| *m /= total);
    *value = objective.eval(masses);
    if support.len() < 2 {
        return;
    }
    for _sweep in 0..20 {
        let before = *value;
        for a in 0..support.len() {
            for b in a + 1..support.len() {
                let (i, j) = (support[a], support[b]);
                let pair = masses[i] + masses[j];
                let mut probe = masses.to_vec();
                let search = maximize_unit_interval(|t| {
                    probe[i] = t * pair;
                    probe[j] = (1.0 - t) * pair;
                    objective.eval(&probe)
                });
                if search.value > *value {
                    masses[i] = search.arg * pair;
                    masses[j] = (1.0 - search.arg) * pair;
                    *value = search.value;
                    trace.push(TracePoint {
                        masses: masses.to_vec(),
                        value: *value,
                    });
                }
            }
        }
        if support.len() == 2 || *value - before <= 1e-13 * abs(*value) {
            break;
        }
    }
}

/// IID capacity over an arbitrary finite alphabet.
pub fn capacity_general(
    model: &ReceptorModel,
    alphabet: &[f64],
    mode: Mode,
) -> Result<CapacityResult> {
    capacity_general_with(model, alphabet, mode, &SearchOptions::default())
}

pub fn capacity_general_with(
    model: &ReceptorModel,
    alphabet: &[f64],
    mode: Mode,
    opts: &SearchOptions,
) -> Result<CapacityResult> {
    let mut levels = alphabet.to_vec();
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    levels.dedup();
    match levels.len() {
        0 => return Err(Error::InvalidArgument("alphabet is empty".into())),
        1 => return capacity_binary(model, levels[0], levels[0], mode),
        _ => {}
    }
    if opts.starts == 0 {
        return Err(Error::InvalidArgument(
            "at least one start is required".into(),
        ));
    }
    check_levels(model, &levels, mode)?;
    let objective = Objective {
        model,
        levels: levels.clone(),
        mode,
    };
    let dim = levels.len();
    let run = |index: usize| ascend(&objective, dirichlet_start(opts.seed, index, dim), opts);

    #[cfg(feature = "parallel")]
    let outcomes: Vec<StartOutcome> = {
        use rayon::prelude::*;
        (0..opts.starts).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<StartOutcome> = (0..opts.starts).map(run).collect();

    let mut trace: Vec<TracePoint> = outcomes
        .iter()
        .map(|o| TracePoint {
            masses: o.masses.clone(),
            value: o.value,
        })
        .collect();
    let best = outcomes.iter().enumerate().fold(0, |best, (i, o)| {
        if o.value > outcomes[best].value {
            i
        } else {
            best
        }
    });
    let converged = outcomes[best].converged;
    let mut masses = outcomes[best].masses.clone();
    let mut value = outcomes[best].value;
    let raw = (masses.clone(), value);
    polish(&objective, &mut masses, &mut value, &mut trace);
    if value < raw.1 {
        masses = raw.0;
    }

    let argmax = InputDistribution::from_parts(&levels, &masses)?;
    let value = match mode {
        Mode::Discrete(dt) => info::mi_rate_discrete(model, &argmax, dt)?.rate_per_use,
        Mode::Limit => limit::limit_rate(model, &argmax)?.rate,
    };
    let single = model.sensitive_edges().len() <= 1;
    let interior_mass: f64 = masses[1..dim - 1].iter().sum();
    Ok(CapacityResult {
        value,
        argmax,
        mode,
        trace,
        single_sensitive_edge: single,
        interior_mass,
        endpoint_support_verified: single.then_some(interior_mass <= 1e-6),
        p_low: None,
        unimodal: None,
        converged,
    })
}
