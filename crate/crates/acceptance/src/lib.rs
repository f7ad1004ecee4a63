//! Shared fixtures for the acceptance suite: seeded random models and input
//! laws, and a reporter that prints one verdict line per criterion.

use std::collections::BTreeSet;
use std::io::Write;
use std::time::{Duration, Instant};

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

    /// Uniform on `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        ((self.unit() * n as f64) as usize).min(n - 1)
    }

    pub fn coin(&mut self, p: f64) -> bool {
        self.unit() < p
    }
}

/// Irreducible model on states `1..=k` with input range `[0, 2]`: a random
/// cycle plus extra edges, rates log-uniform in `[0.1, 10]`, and a two-valued
/// property for lumping.
pub fn random_model(draw: &mut Draw, k: usize, p_sensitive: f64) -> ReceptorModel {
    let mut order: Vec<u32> = (1..=k as u32).collect();
    for i in (1..k).rev() {
        order.swap(i, draw.index(i + 1));
    }
    let mut pairs = BTreeSet::new();
    if k > 1 {
        for i in 0..k {
            pairs.insert((order[i], order[(i + 1) % k]));
        }
        for _ in 0..draw.index(k * (k - 1)) {
            let (a, b) = (1 + draw.index(k) as u32, 1 + draw.index(k) as u32);
            if a != b {
                pairs.insert((a, b));
            }
        }
    }
    let edges = pairs
        .into_iter()
        .map(|(from, to)| LabeledEdge {
            from,
            to,
            rate: draw.log_range(0.1, 10.0),
            sensitive: draw.coin(p_sensitive),
        })
        .collect();
    let states: Vec<StateInfo> = (1..=k as u32)
        .map(|label| StateInfo {
            label,
            property: if draw.coin(0.5) {
                "a".into()
            } else {
                "b".into()
            },
        })
        .collect();
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

/// Law on `n` distinct levels in `[lo, hi]` with positive mean; masses are
/// bounded away from zero.
pub fn random_dist(draw: &mut Draw, n: usize, lo: f64, hi: f64) -> InputDistribution {
    let mut levels: Vec<f64> = Vec::new();
    while levels.len() < n {
        let x = match draw.index(5) {
            0 => lo,
            1 => hi,
            _ => draw.range(lo, hi),
        };
        if !levels.contains(&x) {
            levels.push(x);
        }
    }
    levels.sort_by(f64::total_cmp);
    if levels.iter().all(|&x| x == 0.0) {
        levels[0] = hi;
    }
    let weights: Vec<f64> = (0..n).map(|_| draw.range(0.05, 1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut masses: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let head: f64 = masses[..n - 1].iter().sum();
    masses[n - 1] = 1.0 - head;
    let mut points: Vec<(f64, f64)> = levels.into_iter().zip(masses).collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    InputDistribution::new(points).expect("valid random law")
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Outcome of one criterion: the checks that were made and how long it took.
pub struct Verdict {
    id: &'static str,
    title: &'static str,
    budget: Duration,
    started: Instant,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Verdict {
    pub fn start(id: &'static str, title: &'static str, budget: Duration) -> Self {
        Self {
            id,
            title,
            budget,
            started: Instant::now(),
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    pub fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }

    /// Prints the verdict line and panics on failure. The line goes straight
    /// to stderr so it shows even when the test harness captures output.
    pub fn finish(mut self) {
        let elapsed = self.started.elapsed();
        if elapsed > self.budget {
            self.failures.push(format!(
                "runtime {:.3} s exceeds {:.3} s",
                elapsed.as_secs_f64(),
                self.budget.as_secs_f64()
            ));
        }
        let status = if self.failures.is_empty() {
            "PASS"
        } else {
            "FAIL"
        };
        let mut line = format!(
            "{status} [{}] {} ({:.3} s, budget {:.3} s)",
            self.id,
            self.title,
            elapsed.as_secs_f64(),
            self.budget.as_secs_f64()
        );
        for n in &self.notes {
            line.push_str(&format!("\n    {n}"));
        }
        for f in self.failures.iter().take(10) {
            line.push_str(&format!("\n    failed: {f}"));
        }
        if self.failures.len() > 10 {
            line.push_str(&format!("\n    ... and {} more", self.failures.len() - 10));
        }
        let _ = writeln!(std::io::stderr().lock(), "{line}");
        assert!(self.failures.is_empty(), "criterion {} failed", self.id);
    }
}
