//! Random models and reference computations that share no code with the
//! library's solvers.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use transduce_core::model::LabeledEdge;
use transduce_core::simulate::unit_f64;
use transduce_core::{InputDistribution, ModelParts, ReceptorModel, StateInfo};

pub struct Draw(ChaCha8Rng);

impl Draw {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn unit(&mut self) -> f64 {
        unit_f64(&mut self.0)
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn log_range(&mut self, lo: f64, hi: f64) -> f64 {
        (lo.ln() + (hi.ln() - lo.ln()) * self.unit()).exp()
    }

    pub fn index(&mut self, n: usize) -> usize {
        ((self.unit() * n as f64) as usize).min(n - 1)
    }

    pub fn coin(&mut self, p: f64) -> bool {
        self.unit() < p
    }
}

/// Irreducible model on states `1..=k` with input range `[0, 2]`: a random
/// cycle plus extra edges, rates log-uniform in `[0.1, 10]`.
pub fn random_model(draw: &mut Draw, k: usize, p_sensitive: f64) -> ReceptorModel {
    let mut order: Vec<u32> = (1..=k as u32).collect();
    for i in (1..k).rev() {
        order.swap(i, draw.index(i + 1));
    }
    let mut edges = BTreeMap::new();
    if k > 1 {
        for i in 0..k {
            edges.insert((order[i], order[(i + 1) % k]), ());
        }
        for _ in 0..draw.index(k * (k - 1)) {
            let (a, b) = (1 + draw.index(k) as u32, 1 + draw.index(k) as u32);
            if a != b {
                edges.insert((a, b), ());
            }
        }
    }
    let edges = edges
        .into_keys()
        .map(|(from, to)| LabeledEdge {
            from,
            to,
            rate: draw.log_range(0.1, 10.0),
            sensitive: draw.coin(p_sensitive),
        })
        .collect();
    let states = (1..=k as u32)
        .map(|label| StateInfo {
            label,
            property: if draw.coin(0.5) {
                "a".into()
            } else {
                "b".into()
            },
        })
        .collect::<Vec<_>>();
    let lump = Some(
        states
            .iter()
            .map(|s| (s.label, s.property.clone()))
            .collect(),
    );
    ReceptorModel::new(ModelParts {
        states,
        edges,
        input_range: (0.0, 2.0),
        lump,
    })
    .expect("random model is irreducible by construction")
}

/// Distribution on `n` distinct levels in `[0, 2]`, masses bounded away from 0.
pub fn random_dist(draw: &mut Draw, n: usize) -> InputDistribution {
    let mut levels: Vec<f64> = Vec::new();
    while levels.len() < n {
        let x = if draw.coin(0.2) {
            0.0
        } else {
            draw.range(0.0, 2.0)
        };
        if !levels.contains(&x) {
            levels.push(x);
        }
    }
    levels.sort_by(f64::total_cmp);
    if levels.iter().all(|&x| x == 0.0) {
        levels[0] = 1.0;
    }
    let weights: Vec<f64> = (0..n).map(|_| draw.range(0.05, 1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut masses: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let head: f64 = masses[..n - 1].iter().sum();
    masses[n - 1] = 1.0 - head;
    InputDistribution::from_parts(&levels, &masses).unwrap()
}

pub type Dense = Vec<Vec<f64>>;

/// `Q(x)` assembled straight from the edge list.
pub fn oracle_generator(model: &ReceptorModel, x: f64) -> Dense {
    let k = model.num_states();
    let mut q = vec![vec![0.0; k]; k];
    for e in model.edges() {
        q[e.from.0][e.to.0] += if e.sensitive { e.rate * x } else { e.rate };
    }
    for (i, row) in q.iter_mut().enumerate() {
        let exit: f64 = row.iter().sum();
        row[i] = -exit;
    }
    q
}

pub fn oracle_transition(model: &ReceptorModel, x: f64, dt: f64) -> Dense {
    let mut p = oracle_generator(model, x);
    for (i, row) in p.iter_mut().enumerate() {
        for v in row.iter_mut() {
            *v *= dt;
        }
        row[i] += 1.0;
    }
    p
}

#[allow(clippy::needless_range_loop)]
fn square(m: &Dense) -> Dense {
    let k = m.len();
    let mut out = vec![vec![0.0; k]; k];
    for i in 0..k {
        for l in 0..k {
            let a = m[i][l];
            if a != 0.0 {
                for j in 0..k {
                    out[i][j] += a * m[l][j];
                }
            }
        }
    }
    for row in &mut out {
        let s: f64 = row.iter().sum();
        for v in row.iter_mut() {
            *v /= s;
        }
    }
    out
}

/// Stationary law by repeated squaring of the uniformized chain.
pub fn oracle_stationary(model: &ReceptorModel, mean_input: f64) -> Vec<f64> {
    let q = oracle_generator(model, mean_input);
    let k = q.len();
    let lambda = 1.5 * (0..k).map(|i| -q[i][i]).fold(1e-300, f64::max);
    let mut p: Dense = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| q[i][j] / lambda + if i == j { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    for _ in 0..200 {
        p = square(&p);
    }
    let mut pi = vec![0.0; k];
    for row in &p {
        for (acc, v) in pi.iter_mut().zip(row) {
            *acc += v / k as f64;
        }
    }
    pi
}

pub fn xlogx(p: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        p * p.ln()
    }
}

/// Per-step IID rate summed over every state pair, sensitive or not.
pub fn oracle_discrete_rate(model: &ReceptorModel, dist: &InputDistribution, dt: f64) -> f64 {
    let pi = oracle_stationary(model, dist.mean());
    let channels: Vec<(f64, Dense)> = dist
        .points()
        .iter()
        .map(|&(x, p)| (p, oracle_transition(model, x, dt)))
        .collect();
    let k = model.num_states();
    let mut total = 0.0;
    for y in 0..k {
        for y2 in 0..k {
            let mean: f64 = channels.iter().map(|(p, m)| p * m[y][y2]).sum();
            let avg_phi: f64 = channels.iter().map(|(p, m)| p * xlogx(m[y][y2])).sum();
            total += pi[y] * (avg_phi - xlogx(mean));
        }
    }
    total
}

/// `J·D(ν‖p)` from the reference stationary law.
pub fn oracle_limit_rate(model: &ReceptorModel, dist: &InputDistribution) -> f64 {
    let mean = dist.mean();
    if mean == 0.0 {
        return 0.0;
    }
    let pi = oracle_stationary(model, mean);
    let flux: f64 = model
        .edges()
        .iter()
        .filter(|e| e.sensitive)
        .map(|e| pi[e.from.0] * e.rate * mean)
        .sum();
    let divergence: f64 = dist
        .points()
        .iter()
        .filter(|(x, _)| *x > 0.0)
        .map(|&(x, p)| {
            let nu = p * x / mean;
            nu * (nu / p).ln()
        })
        .sum();
    flux * divergence
}

/// `Σ ν|ln(ν/p)| / D(ν‖p)`: how much the direct divergence sum amplifies
/// rounding.
pub fn divergence_condition(dist: &InputDistribution) -> f64 {
    let mean = dist.mean();
    let (mut abs_sum, mut d) = (0.0, 0.0);
    for &(x, p) in dist.points() {
        if x > 0.0 && p > 0.0 {
            let nu = p * x / mean;
            let t = nu * (nu / p).ln();
            abs_sum += t.abs();
            d += t;
        }
    }
    if d > 0.0 {
        (abs_sum / d).max(1.0)
    } else {
        1.0
    }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
