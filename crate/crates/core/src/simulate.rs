//! Monte Carlo simulation of the discretized channel and empirical
//! information estimates.
//!
//! `I(X;Y)` is estimated by plugging empirical transition frequencies into
//! the sensitive-edge Jensen-gap formula. `I(X;Z)` for a lumped output
//! `Z = f(Y)` is estimated as `Ĥ(Z) − Ĥ(Z|X)`, each entropy rate being the
//! average predictive log-loss of a forward filter run along the simulated
//! path: one filter propagates with `P̄` (inputs unknown), the other with
//! `P(x_i)` (inputs known).
//!
//! Every chain draws from its own ChaCha20 stream (`seed`, chain index), so
//! results do not depend on scheduling.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::dist::InputDistribution;
use crate::info::{self, jensen_gap};
use crate::kinetics::{self, Stationary, TimeStep};
use crate::model::{ReceptorModel, StateId};
use crate::numeric::{ln, sqrt, CompensatedSum};
use crate::{Error, Result};

/// Generator for stream `stream` of seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw on `[0, 1)` with 53 random bits.
#[inline]
pub fn unit_f64<R: RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Index of the first cumulative weight exceeding `u`; never picks a
/// zero-weight slot.
#[inline]
fn pick(cumulative: &[f64], u: f64) -> usize {
    for (i, c) in cumulative.iter().enumerate() {
        if u < *c {
            return i;
        }
    }
    // Rounding left u above the last cumulative value.
    let last = cumulative[cumulative.len() - 1];
    cumulative.iter().position(|c| *c == last).unwrap()
}

fn cumulate(weights: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

/// Precomputed sampling tables for one (model, dist, Δt) triple.
struct Channel {
    k: usize,
    levels: usize,
    masses: Vec<f64>,
    input_cdf: Vec<f64>,
    stationary: Stationary,
    stationary_cdf: Vec<f64>,
    /// `P(x)` row-major per level.
    transitions: Vec<Vec<f64>>,
    row_cdfs: Vec<Vec<f64>>,
    mean_transition: Vec<f64>,
}

impl Channel {
    fn new(model: &ReceptorModel, dist: &InputDistribution, dt: TimeStep) -> Result<Self> {
        let k = model.num_states();
        let mats = info::level_transitions(model, dist, dt)?;
        let stationary = kinetics::stationary(model, dist)?;
        let mean = kinetics::mean_transition(model, dist, dt)?;
        let transitions: Vec<Vec<f64>> = mats
            .iter()
            .map(|p| p.rows().flatten().copied().collect())
            .collect();
        let row_cdfs = transitions
            .iter()
            .map(|p| {
                p.chunks_exact(k)
                    .flat_map(|row| cumulate(row.iter().copied()))
                    .collect()
            })
            .collect();
        let masses: Vec<f64> = dist.masses().collect();
        Ok(Self {
            k,
            levels: dist.len(),
            input_cdf: cumulate(masses.iter().copied()),
            masses,
            stationary_cdf: cumulate(stationary.iter().copied()),
            stationary,
            transitions,
            row_cdfs,
            mean_transition: mean.rows().flatten().copied().collect(),
        })
    }

    #[inline]
    fn draw_initial<R: RngCore>(&self, rng: &mut R) -> usize {
        pick(&self.stationary_cdf, unit_f64(rng))
    }

    #[inline]
    fn step<R: RngCore>(&self, rng: &mut R, y: usize) -> (usize, usize) {
        let x = pick(&self.input_cdf, unit_f64(rng));
        let cdf = &self.row_cdfs[x][y * self.k..(y + 1) * self.k];
        (x, pick(cdf, unit_f64(rng)))
    }
}

/// A simulated input/state path.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Trajectory {
    /// `Y₀`, drawn from the stationary law.
    pub initial: StateId,
    /// Alphabet index of `X_i`, `i = 1..n`.
    pub inputs: Vec<usize>,
    /// `Y_i`, `i = 1..n`.
    pub states: Vec<StateId>,
    pub dt: TimeStep,
    pub seed: u64,
}

impl Trajectory {
    /// Fraction of steps spent in each state.
    pub fn occupancy(&self, num_states: usize) -> Vec<f64> {
        let mut counts = vec![0usize; num_states];
        for s in &self.states {
            counts[s.0] += 1;
        }
        let n = self.states.len().max(1) as f64;
        counts.into_iter().map(|c| c as f64 / n).collect()
    }
}

/// Simulates `n_steps` channel uses with IID inputs.
pub fn simulate(
    model: &ReceptorModel,
    dist: &InputDistribution,
    dt: TimeStep,
    n_steps: usize,
    seed: u64,
) -> Result<Trajectory> {
    let channel = Channel::new(model, dist, dt)?;
    let mut rng = stream_rng(seed, 0);
    let initial = channel.draw_initial(&mut rng);
    let mut inputs = Vec::with_capacity(n_steps);
    let mut states = Vec::with_capacity(n_steps);
    let mut y = initial;
    for _ in 0..n_steps {
        let (x, next) = channel.step(&mut rng, y);
        inputs.push(x);
        states.push(StateId(next));
        y = next;
    }
    Ok(Trajectory {
        initial: StateId(initial),
        inputs,
        states,
        dt,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Target {
    /// The full state `Y`.
    Y,
    /// The lumped output `Z = f(Y)`.
    Z,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MiEstimate {
    /// Nats per channel use, averaged over chains.
    pub mean: f64,
    /// Standard error of `mean` (sample std across chains / √chains).
    pub std_error: f64,
    /// Measured steps summed over chains (burn-in excluded).
    pub n_steps: usize,
    pub n_chains: usize,
    pub target: Target,
    pub seed: u64,
    /// Some conditional frequency needed by the plug-in estimate had no
    /// samples; the estimate is less reliable than `std_error` suggests.
    pub sparse_counts: bool,
    pub per_chain: Vec<f64>,
}

pub const MIN_CHAINS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct McConfig {
    /// Measured steps in total, split evenly across chains.
    pub n_steps: usize,
    pub n_chains: usize,
    pub seed: u64,
    /// Steps discarded at the start of every chain.
    pub burn_in: usize,
    /// Subtract the first-order small-sample bias from the `Y` plug-in.
    pub bias_correction: bool,
}

impl McConfig {
    pub fn new(n_steps: usize, n_chains: usize, seed: u64) -> Self {
        Self {
            n_steps,
            n_chains,
            seed,
            burn_in: 1000,
            bias_correction: true,
        }
    }

    fn steps_per_chain(&self) -> usize {
        self.n_steps.div_ceil(self.n_chains)
    }

    fn check(&self) -> Result<()> {
        if self.n_chains < MIN_CHAINS {
            return Err(Error::InvalidArgument(alloc::format!(
                "at least {MIN_CHAINS} chains are required, got {}",
                self.n_chains
            )));
        }
        if self.steps_per_chain() == 0 {
            return Err(Error::InvalidArgument("n_steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Default)]
struct ChainResult {
    y: Option<(f64, bool)>,
    z: Option<f64>,
}

/// Forward filter over hidden states given lumped observations.
struct Filter {
    belief: Vec<f64>,
    scratch: Vec<f64>,
}

impl Filter {
    fn new(prior: &[f64], tag_of: &[usize], observed: usize) -> Self {
        let mut belief: Vec<f64> = prior
            .iter()
            .zip(tag_of)
            .map(|(p, t)| if *t == observed { *p } else { 0.0 })
            .collect();
        let total: f64 = belief.iter().sum();
        belief.iter_mut().for_each(|b| *b /= total);
        Self {
            scratch: vec![0.0; belief.len()],
            belief,
        }
    }

    /// Propagates with `transition` and conditions on `observed`; returns
    /// the predictive probability of the observation.
    #[inline]
    fn update(&mut self, transition: &[f64], tag_of: &[usize], observed: usize) -> f64 {
        let k = self.belief.len();
        self.scratch.iter_mut().for_each(|s| *s = 0.0);
        for (i, b) in self.belief.iter().enumerate() {
            if *b == 0.0 {
                continue;
            }
            for (s, p) in self.scratch.iter_mut().zip(&transition[i * k..(i + 1) * k]) {
                *s += b * p;
            }
        }
        let mut prob = 0.0;
        for (s, t) in self.scratch.iter_mut().zip(tag_of) {
            if *t == observed {
                prob += *s;
            } else {
                *s = 0.0;
            }
        }
        for (b, s) in self.belief.iter_mut().zip(&self.scratch) {
            *b = s / prob;
        }
        prob
    }
}

struct Estimation<'a> {
    channel: Channel,
    pairs: Vec<(usize, usize)>,
    tag_of: Option<&'a [usize]>,
    cfg: McConfig,
}

impl Estimation<'_> {
    fn run_chain(&self, index: usize, want_y: bool, want_z: bool) -> ChainResult {
        let ch = &self.channel;
        let (k, m) = (ch.k, ch.levels);
        let mut rng = stream_rng(self.cfg.seed, index as u64);
        let mut y = ch.draw_initial(&mut rng);
        let measured = self.cfg.steps_per_chain();

        let mut counts = if want_y {
            vec![0u64; k * m * k]
        } else {
            Vec::new()
        };
        let tag_of = self.tag_of.unwrap_or(&[]);
        let mut filters = want_z.then(|| {
            let z0 = tag_of[y];
            (
                Filter::new(&ch.stationary, tag_of, z0),
                Filter::new(&ch.stationary, tag_of, z0),
            )
        });
        let mut log_ratio = CompensatedSum::new();

        for step in 0..self.cfg.burn_in + measured {
            let (x, next) = ch.step(&mut rng, y);
            let measuring = step >= self.cfg.burn_in;
            if want_y && measuring {
                counts[(y * m + x) * k + next] += 1;
            }
            if let Some((marginal, conditional)) = filters.as_mut() {
                let z = tag_of[next];
                let p_marginal = marginal.update(&ch.mean_transition, tag_of, z);
                let p_conditional = conditional.update(&ch.transitions[x], tag_of, z);
                if measuring {
                    log_ratio.add(ln(p_conditional) - ln(p_marginal));
                }
            }
            y = next;
        }

        ChainResult {
            y: want_y.then(|| self.plug_in(&counts, measured)),
            z: want_z.then(|| log_ratio.value() / measured as f64),
        }
    }

    /// Sensitive-edge Jensen gaps evaluated with empirical frequencies.
    fn plug_in(&self, counts: &[u64], total: usize) -> (f64, bool) {
        let ch = &self.channel;
        let (k, m) = (ch.k, ch.levels);
        let n = total as f64;
        let mut input_counts = vec![0u64; m];
        for y in 0..k {
            for x in 0..m {
                input_counts[x] += counts[(y * m + x) * k..(y * m + x + 1) * k]
                    .iter()
                    .sum::<u64>();
            }
        }
        let p_input: Vec<f64> = input_counts.iter().map(|c| *c as f64 / n).collect();

        let mut sparse = false;
        let mut value = CompensatedSum::new();
        let mut origin = usize::MAX;
        let mut row_totals = vec![0u64; m];
        let mut origin_weight = 0.0;
        let mut usable: Vec<usize> = Vec::new();
        let mut usable_masses: Vec<f64> = Vec::new();
        for &(y, y_next) in &self.pairs {
            if y != origin {
                origin = y;
                for x in 0..m {
                    row_totals[x] = counts[(y * m + x) * k..(y * m + x + 1) * k].iter().sum();
                }
                origin_weight = row_totals.iter().sum::<u64>() as f64 / n;
                if origin_weight == 0.0 && ch.stationary[y] > 0.0 {
                    sparse = true;
                }
                usable = (0..m).filter(|&x| row_totals[x] > 0).collect();
                if (0..m).any(|x| row_totals[x] == 0 && ch.masses[x] > 0.0) {
                    sparse = true;
                }
                let mass: f64 = usable.iter().map(|&x| p_input[x]).sum();
                usable_masses = usable.iter().map(|&x| p_input[x] / mass).collect();
            }
            if usable.is_empty() {
                continue;
            }
            let freq = |x: usize| counts[(y * m + x) * k + y_next] as f64 / row_totals[x] as f64;
            let mut gap = jensen_gap(&usable_masses, usable.iter().map(|&x| freq(x)));
            if self.cfg.bias_correction && usable.len() > 1 {
                gap -= jensen_gap_bias(
                    &usable_masses,
                    usable.iter().map(|&x| (freq(x), row_totals[x] as f64)),
                );
            }
            value.add(origin_weight * gap);
        }
        (value.value(), sparse)
    }

    fn run(&self, want_y: bool, want_z: bool) -> Vec<ChainResult> {
        let run = |i: usize| self.run_chain(i, want_y, want_z);
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            (0..self.cfg.n_chains).into_par_iter().map(run).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..self.cfg.n_chains).map(run).collect()
        }
    }
}

/// First-order bias of the plug-in Jensen gap when each frequency `a_x` is
/// a binomial proportion over `n_x` trials: `E[φ(â)] − φ(a) ≈ Var(â)/(2a)`,
/// applied to both the per-input and the averaged terms.
fn jensen_gap_bias(masses: &[f64], freqs: impl Iterator<Item = (f64, f64)>) -> f64 {
    let mut per_input = 0.0;
    let mut mean = 0.0;
    let mut mean_var = 0.0;
    for (w, (a, n)) in masses.iter().zip(freqs) {
        if a > 0.0 {
            per_input += w * (1.0 - a) / (2.0 * n);
        }
        mean += w * a;
        mean_var += w * w * a * (1.0 - a) / n;
    }
    if mean > 0.0 {
        per_input - mean_var / (2.0 * mean)
    } else {
        per_input
    }
}

fn summarize(values: Vec<f64>, sparse: bool, target: Target, cfg: &McConfig) -> MiEstimate {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    MiEstimate {
        mean,
        std_error: sqrt(var / n),
        n_steps: cfg.steps_per_chain() * cfg.n_chains,
        n_chains: cfg.n_chains,
        target,
        seed: cfg.seed,
        sparse_counts: sparse,
        per_chain: values,
    }
}

fn prepare<'a>(
    model: &'a ReceptorModel,
    dist: &InputDistribution,
    dt: TimeStep,
    cfg: &McConfig,
    need_lump: bool,
) -> Result<Estimation<'a>> {
    cfg.check()?;
    let tag_of = match model.lump() {
        Some(l) => Some(l.of_state.as_slice()),
        None if need_lump => return Err(Error::NoLumpMap),
        None => None,
    };
    Ok(Estimation {
        channel: Channel::new(model, dist, dt)?,
        pairs: info::sensitive_pairs(model),
        tag_of,
        cfg: *cfg,
    })
}

/// Plug-in estimate of `I(X;Y)` per channel use.
pub fn estimate_mi_y(
    model: &ReceptorModel,
    dist: &InputDistribution,
    dt: TimeStep,
    cfg: &McConfig,
) -> Result<MiEstimate> {
    let est = prepare(model, dist, dt, cfg, false)?;
    let results = est.run(true, false);
    let sparse = results.iter().any(|r| r.y.is_some_and(|y| y.1));
    let values = results.iter().map(|r| r.y.unwrap().0).collect();
    Ok(summarize(values, sparse, Target::Y, cfg))
}

/// Forward-filter estimate of `I(X;Z)` per channel use.
pub fn estimate_mi_z(
    model: &ReceptorModel,
    dist: &InputDistribution,
    dt: TimeStep,
    cfg: &McConfig,
) -> Result<MiEstimate> {
    let est = prepare(model, dist, dt, cfg, true)?;
    let values = est.run(false, true).iter().map(|r| r.z.unwrap()).collect();
    Ok(summarize(values, false, Target::Z, cfg))
}

/// Both estimates from the same simulated chains.
pub fn estimate_mi_both(
    model: &ReceptorModel,
    dist: &InputDistribution,
    dt: TimeStep,
    cfg: &McConfig,
) -> Result<(MiEstimate, MiEstimate)> {
    let est = prepare(model, dist, dt, cfg, true)?;
    let results = est.run(true, true);
    let sparse = results.iter().any(|r| r.y.is_some_and(|y| y.1));
    let y = results.iter().map(|r| r.y.unwrap().0).collect();
    let z = results.iter().map(|r| r.z.unwrap()).collect();
    Ok((
        summarize(y, sparse, Target::Y, cfg),
        summarize(z, false, Target::Z, cfg),
    ))
}
