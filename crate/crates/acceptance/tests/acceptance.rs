//! One test per acceptance criterion, each printing a PASS/FAIL line. Tests
//! take a shared lock so that runtimes are measured without contention.

use std::f64::consts::LN_2;
use std::sync::Mutex;
use std::time::Duration;

use transduce_core::capacity::{self, Mode};
use transduce_core::info;
use transduce_core::kinetics::{self, TimeStep};
use transduce_core::limit;
use transduce_core::simulate::{self, McConfig};
use transduce_core::{builtin, InputDistribution, ReceptorModel};
use transduce_suite::{log_log_slope, random_dist, random_model, rel_err, Draw, Verdict};

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn secs(s: f64) -> Duration {
    Duration::from_secs_f64(s)
}

fn dt(seconds: f64) -> TimeStep {
    TimeStep::new(seconds).unwrap()
}

fn insensitive(model: &ReceptorModel) -> ReceptorModel {
    let mut parts = model.to_parts();
    for e in &mut parts.edges {
        e.sensitive = false;
    }
    ReceptorModel::new(parts).unwrap()
}

#[test]
fn c1_chr2_capacity_from_the_command_line() {
    let _guard = serial();
    let mut v = Verdict::start(
        "1",
        "ChR2 limit capacity near p_L = 0.99 and 66 bits/s",
        secs(1.0),
    );
    let argv = [
        "transduce",
        "capacity",
        "--model",
        "chr2",
        "--alphabet",
        "0,1",
        "--mode",
        "limit",
    ];
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = transduce::cli::run(argv, &mut out, &mut err);
    v.check(
        code == 0,
        format!("exit code {code}: {}", String::from_utf8_lossy(&err)),
    );
    if code == 0 {
        let doc: serde_json::Value = serde_json::from_slice(&out).unwrap();
        let value = doc["value"].as_f64().unwrap();
        let p_low = doc["p_low"].as_f64().unwrap();
        v.note(format!("C = {value:.4} bits/s at p_L = {p_low:.5}"));
        v.check(
            (0.98..=1.0).contains(&p_low),
            format!("p_L = {p_low} outside [0.98, 1]"),
        );
        v.check(
            (value - 66.0).abs() <= 1.5,
            format!("C = {value} bits/s is not within 1.5 of 66"),
        );
    }
    v.finish();
}

#[test]
fn c2_chr2_closed_form() {
    let _guard = serial();
    let mut v = Verdict::start(
        "2",
        "ChR2 limit rate equals the explicit two-level formula",
        secs(0.1),
    );
    let model = builtin::chr2();
    let (q12, q23, q31) = (5e3, 50.0, 17.0);
    let (x_low, x_high) = (0.0, 1.0);
    let mut worst = 0.0f64;
    for i in 0..=100 {
        let p_low = i as f64 / 100.0;
        let dist = InputDistribution::binary(x_low, x_high, p_low).unwrap();
        let got = limit::limit_rate(&model, &dist).unwrap().rate;
        let xbar = p_low * x_low + (1.0 - p_low) * x_high;
        let expected = if xbar == 0.0 {
            0.0
        } else {
            let pi_c1 = q23 * q31 / (q23 * q31 + xbar * q12 * (q23 + q31));
            let term = |p: f64, x: f64| {
                if p == 0.0 || x == 0.0 {
                    0.0
                } else {
                    p * (x / xbar) * (x / xbar).ln()
                }
            };
            pi_c1 * q12 * xbar * (term(p_low, x_low) + term(1.0 - p_low, x_high))
        };
        let e = rel_err(got, expected);
        worst = worst.max(e);
        v.check(
            e <= 1e-12,
            format!("p_L = {p_low}: {got} vs {expected} (rel {e:.2e})"),
        );
    }
    v.note(format!("worst relative error {worst:.2e} over 101 points"));
    v.finish();
}

#[test]
fn c3_discrete_curves_approach_the_limit_from_above() {
    let _guard = serial();
    let mut v = Verdict::start(
        "3",
        "ChR2 discrete curves dominate the limit and converge at first order",
        secs(5.0),
    );
    let model = builtin::chr2();
    let steps = [1e-5, 2e-5, 4e-5, 6e-5, 8e-5, 1e-4];
    let grid: Vec<f64> = (1..1000).map(|i| i as f64 / 1000.0).collect();
    let limits: Vec<f64> = grid
        .iter()
        .map(|&p| {
            limit::limit_rate(&model, &InputDistribution::binary(0.0, 1.0, p).unwrap())
                .unwrap()
                .rate
        })
        .collect();
    let mut max_errors = Vec::new();
    for &step in &steps {
        let mut max_err = 0.0f64;
        for (&p, &lim) in grid.iter().zip(&limits) {
            let dist = InputDistribution::binary(0.0, 1.0, p).unwrap();
            let curve = info::mi_rate_discrete(&model, &dist, dt(step))
                .unwrap()
                .rate_per_second;
            v.check(
                curve >= lim,
                format!("dt = {step}, p_L = {p}: {curve} < {lim}"),
            );
            max_err = max_err.max((curve - lim).abs());
        }
        max_errors.push((step, max_err));
    }
    for pair in max_errors.windows(2) {
        v.check(
            pair[0].1 < pair[1].1,
            format!(
                "max error not increasing from dt = {} to {}",
                pair[0].0, pair[1].0
            ),
        );
    }
    let order = log_log_slope(&max_errors);
    v.note(format!(
        "max |curve - limit| in bits/s: {}",
        max_errors
            .iter()
            .map(|(s, e)| format!("{:.0}us {:.4}", s * 1e6, e / LN_2))
            .collect::<Vec<_>>()
            .join(", ")
    ));
    v.note(format!("fitted order {order:.4}"));
    v.check(order >= 1.0, format!("fitted order {order} < 1"));
    v.finish();
}

#[test]
fn c4_bruteforce_increments_equal_the_rate() {
    let _guard = serial();
    let mut v = Verdict::start(
        "4",
        "brute-force block increments equal the per-step rate",
        secs(30.0),
    );
    let mut draw = Draw::new(4);
    let random = loop {
        let m = random_model(&mut draw, 3, 0.6);
        if !m.sensitive_edges().is_empty() {
            break m;
        }
    };
    let mut worst = 0.0f64;
    for (name, model) in [("chr2", builtin::chr2()), ("random", random)] {
        let (lo, hi) = model.input_range();
        for _ in 0..5 {
            let n_levels = 2 + draw.index(2);
            let dist = random_dist(&mut draw, n_levels, lo, hi);
            let step =
                dt(draw.range(0.05, 1.0) * kinetics::max_time_step(&model, dist.high()).min(1.0));
            let rate = info::mi_rate_discrete(&model, &dist, step)
                .unwrap()
                .rate_per_use;
            let mut prev = info::mi_bruteforce(&model, &dist, step, 1).unwrap();
            for n in 2..=6 {
                let cur = info::mi_bruteforce(&model, &dist, step, n).unwrap();
                let increment = n as f64 * cur - (n - 1) as f64 * prev;
                let gap = (increment - rate).abs();
                worst = worst.max(gap);
                v.check(
                    gap <= 1e-10,
                    format!("{name}, n = {n}: {increment} vs {rate}"),
                );
                prev = cur;
            }
        }
    }
    v.note(format!("worst absolute gap {worst:.2e} nats"));
    v.finish();
}

#[test]
fn c5_stationary_law_is_invariant() {
    let _guard = serial();
    let mut v = Verdict::start(
        "5",
        "stationary law is invariant for dyadic admissible steps",
        secs(1.0),
    );
    let mut draw = Draw::new(5);
    let mut worst = 0.0f64;
    for name in builtin::NAMES {
        let model = builtin::builtin(name).unwrap();
        let (lo, hi) = model.input_range();
        for _ in 0..10 {
            let n_levels = 1 + draw.index(4);
            let dist = random_dist(&mut draw, n_levels, lo, hi);
            let pi = kinetics::stationary(&model, &dist).unwrap();
            let mut step = kinetics::max_time_step(&model, dist.high());
            for _ in 0..8 {
                let p = kinetics::mean_transition(&model, &dist, dt(step)).unwrap();
                let next = p.matrix().left_mul(&pi);
                let err = next
                    .iter()
                    .zip(pi.iter())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                worst = worst.max(err);
                v.check(err <= 1e-12, format!("{name}, dt = {step:e}: {err:e}"));
                step /= 2.0;
            }
        }
    }
    v.note(format!("worst sup-norm residual {worst:.2e}"));
    v.finish();
}

fn factorization_cases() -> Vec<(ReceptorModel, InputDistribution)> {
    let mut draw = Draw::new(6);
    (0..200)
        .map(|_| {
            let k = 1 + draw.index(6);
            let model = random_model(&mut draw, k, 0.5);
            let n = 1 + draw.index(5);
            let dist = random_dist(&mut draw, n, 0.0, 1.0);
            (model, dist)
        })
        .collect()
}

fn scaled(dist: &InputDistribution, c: f64) -> InputDistribution {
    InputDistribution::new(dist.points().iter().map(|&(x, p)| (c * x, p)).collect()).unwrap()
}

#[test]
fn c6a_limit_rate_factorizes() {
    let _guard = serial();
    let mut v = Verdict::start(
        "6a",
        "limit rate factorizes into flux times divergence",
        secs(5.0),
    );
    let mut worst = 0.0f64;
    for (i, (model, dist)) in factorization_cases().iter().enumerate() {
        let r = limit::limit_rate(model, dist).unwrap();
        let e = rel_err(r.iota_total(), r.flux.total * r.divergence);
        worst = worst.max(e);
        v.check(e <= 1e-12, format!("case {i}: sum of iota off by {e:e}"));
        v.check(
            r.divergence >= 0.0,
            format!("case {i}: D = {}", r.divergence),
        );
        if let Some(nu) = &r.posterior {
            let total: f64 = nu.masses().sum();
            v.check(
                (total - 1.0).abs() <= 1e-12,
                format!("case {i}: posterior sums to {total}"),
            );
        }
    }
    v.note(format!("worst relative factorization error {worst:.2e}"));
    v.finish();
}

#[test]
fn c6b_limit_rate_scales_with_the_input() {
    let _guard = serial();
    let mut v = Verdict::start(
        "6b",
        "scaling every input level by c scales the limit rate by c",
        secs(5.0),
    );
    let (mut failed, mut held_failed, mut worst) = (0, 0, (0.0f64, String::new()));
    for (i, (model, dist)) in factorization_cases().iter().enumerate() {
        let base = limit::limit_rate(model, dist).unwrap();
        for c in [0.1, 2.0] {
            let other = scaled(dist, c);
            let got = limit::limit_rate(model, &other).unwrap().rate;
            let e = rel_err(got, c * base.rate);
            if e > worst.0 {
                worst = (
                    e,
                    format!("case {i}, c = {c}: {got:.6} vs {:.6}", c * base.rate),
                );
            }
            if e > 1e-12 {
                failed += 1;
                v.check(
                    false,
                    format!(
                        "case {i}, c = {c}: {got} vs {} (rel {e:.2e})",
                        c * base.rate
                    ),
                );
            }
            let held = limit::limit_with_stationary(model, &other, base.stationary.clone()).rate;
            if rel_err(held, c * base.rate) > 1e-12 {
                held_failed += 1;
            }
        }
    }
    v.note(format!(
        "{failed} of 400 scalings off by more than 1e-12; worst: {} (rel {:.2e})",
        worst.1, worst.0
    ));
    v.note(format!(
        "with the stationary law held at the unscaled mean, {held_failed} of 400 scalings miss 1e-12"
    ));
    v.finish();
}

#[test]
fn c7_chr2_capacity_uses_only_the_extremes() {
    let _guard = serial();
    let mut v = Verdict::start(
        "7",
        "ChR2 capacity on a five-level alphabet sits on the endpoints",
        secs(30.0),
    );
    let model = builtin::chr2();
    let alphabet = [0.0, 0.25, 0.5, 0.75, 1.0];
    for mode in [Mode::Limit, Mode::Discrete(dt(1e-5))] {
        let general = capacity::capacity_general(&model, &alphabet, mode).unwrap();
        let binary = capacity::capacity_binary(&model, 0.0, 1.0, mode).unwrap();
        let e = rel_err(general.value, binary.value);
        v.note(format!(
            "{mode:?}: interior mass {:.2e}, general {:.10} vs binary {:.10} bits/s (rel {e:.2e})",
            general.interior_mass,
            mode.per_second(general.value) / LN_2,
            mode.per_second(binary.value) / LN_2,
        ));
        v.check(
            general.interior_mass < 1e-6,
            format!("{mode:?}: interior mass {}", general.interior_mass),
        );
        v.check(
            e <= 1e-6,
            format!("{mode:?}: {} vs {}", general.value, binary.value),
        );
    }
    v.finish();
}

#[test]
fn c8_monte_carlo_agrees_with_the_exact_rate() {
    let _guard = serial();
    let mut v = Verdict::start(
        "8",
        "Monte Carlo estimates agree with the exact rate and respect processing",
        secs(600.0),
    );
    for (name, step) in [("ach", 2e-5), ("cam", 2e-6)] {
        let model = builtin::builtin(name).unwrap();
        let (lo, hi) = model.input_range();
        let cfg = McConfig::new(10_000_000, 32, 2024);
        let mut worst_z = f64::NEG_INFINITY;
        let mut worst_y = 0.0f64;
        for i in 1..=9 {
            let p_low = i as f64 / 10.0;
            let dist = InputDistribution::binary(lo, hi, p_low).unwrap();
            let exact = info::mi_rate_discrete(&model, &dist, dt(step))
                .unwrap()
                .rate_per_use;
            let (y, z) = simulate::estimate_mi_both(&model, &dist, dt(step), &cfg).unwrap();
            let dev = (y.mean - exact) / y.std_error;
            worst_y = if dev.abs() > worst_y.abs() {
                dev
            } else {
                worst_y
            };
            v.check(
                (y.mean - exact).abs() <= 3.0 * y.std_error,
                format!(
                    "{name}, p_L = {p_low}: Y {} vs exact {exact} ({dev:+.2} se)",
                    y.mean
                ),
            );
            let combined = (y.std_error.powi(2) + z.std_error.powi(2)).sqrt();
            let margin = (z.mean - y.mean) / combined;
            worst_z = worst_z.max(margin);
            v.check(
                z.mean <= y.mean + 3.0 * combined,
                format!(
                    "{name}, p_L = {p_low}: Z {} exceeds Y {} ({margin:+.2} se)",
                    z.mean, y.mean
                ),
            );
        }
        v.note(format!(
            "{name} (dt = {step:e} s): largest Y deviation {worst_y:+.2} se, largest (Z - Y) {worst_z:+.2} se"
        ));
    }
    v.finish();
}

#[test]
fn c9_degenerate_inputs_carry_no_information() {
    let _guard = serial();
    let mut v = Verdict::start(
        "9",
        "degenerate inputs and models carry exactly zero information",
        secs(10.0),
    );
    let cfg = McConfig::new(1_000_000, 16, 9);
    let mut exact_paths = 0;
    let mut mc_paths = 0;

    let mut all_paths = |v: &mut Verdict,
                         label: &str,
                         model: &ReceptorModel,
                         dist: &InputDistribution,
                         step: TimeStep| {
        let discrete = info::mi_rate_discrete(model, dist, step)
            .unwrap()
            .rate_per_use;
        v.check(
            discrete == 0.0,
            format!("{label}: discrete rate {discrete:e}"),
        );
        let lim = limit::limit_rate(model, dist).unwrap().rate;
        v.check(lim == 0.0, format!("{label}: limit rate {lim:e}"));
        for n in 1..=3 {
            let brute = info::mi_bruteforce(model, dist, step, n).unwrap();
            v.check(
                brute == 0.0,
                format!("{label}: brute force n = {n} gives {brute:e}"),
            );
        }
        exact_paths += 5;
        let (y, z) = simulate::estimate_mi_both(model, dist, step, &cfg).unwrap();
        for est in [y, z] {
            v.check(
                est.mean.abs() <= 3.0 * est.std_error,
                format!(
                    "{label}: {:?} estimate {:e} +- {:e}",
                    est.target, est.mean, est.std_error
                ),
            );
        }
        mc_paths += 2;
    };

    for name in builtin::NAMES {
        let model = builtin::builtin(name).unwrap();
        let (lo, hi) = model.input_range();
        let step = dt(0.5 * kinetics::max_time_step(&model, hi));
        for x in [lo, 0.5 * (lo + hi), hi] {
            let dist = InputDistribution::point_mass(x).unwrap();
            all_paths(
                &mut v,
                &format!("{name} point mass at {x:e}"),
                &model,
                &dist,
                step,
            );
        }
    }

    let mut draw = Draw::new(9);
    let flat = [
        ("insensitive chr2", insensitive(&builtin::chr2())),
        (
            "random model without sensitive edges",
            random_model(&mut draw, 4, 0.0),
        ),
    ];
    for (label, model) in &flat {
        let (lo, hi) = model.input_range();
        let step = dt(0.5 * kinetics::max_time_step(model, hi).min(1.0));
        let binary = InputDistribution::binary(lo, hi, 0.5).unwrap();
        all_paths(&mut v, label, model, &binary, step);
        let spread = random_dist(&mut draw, 4, lo, hi);
        all_paths(&mut v, label, model, &spread, step);
    }

    let mut capacity_paths = 0;
    for name in builtin::NAMES {
        let model = builtin::builtin(name).unwrap();
        let (lo, hi) = model.input_range();
        let x = 0.5 * (lo + hi);
        let step = dt(0.5 * kinetics::max_time_step(&model, hi));
        for mode in [Mode::Limit, Mode::Discrete(step)] {
            let b = capacity::capacity_binary(&model, x, x, mode).unwrap().value;
            let g = capacity::capacity_general(&model, &[x], mode)
                .unwrap()
                .value;
            v.check(
                b == 0.0 && g == 0.0,
                format!("{name} one-point alphabet {mode:?}: {b:e}, {g:e}"),
            );
            capacity_paths += 2;
        }
        let level = format!("{x}");
        let argv = [
            "transduce",
            "capacity",
            "--model",
            name,
            "--alphabet",
            level.as_str(),
            "--mode",
            "limit",
        ];
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = transduce::cli::run(argv, &mut out, &mut err);
        let value = serde_json::from_slice::<serde_json::Value>(&out)
            .ok()
            .and_then(|d| d["value"].as_f64());
        v.check(
            code == 0 && value == Some(0.0),
            format!("{name} CLI one-point alphabet: exit {code}, value {value:?}"),
        );
        capacity_paths += 1;
    }
    v.note(format!(
        "{exact_paths} analytic checks, {mc_paths} Monte Carlo checks, {capacity_paths} one-point capacity checks"
    ));
    v.finish();
}
