#![allow(clippy::needless_range_loop)]

mod common;

use common::*;
use proptest::prelude::*;
use transduce_core::builtin;
use transduce_core::kinetics::{self, TimeStep};
use transduce_core::InputDistribution;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn generators_are_conservative(seed in any::<u64>(), k in 1usize..7, x in 0.0f64..=2.0) {
        let mut draw = Draw::new(seed);
        let model = random_model(&mut draw, k, 0.5);
        let q = kinetics::generator(&model, x).unwrap();
        let oracle = oracle_generator(&model, x);
        for i in 0..k {
            let row = q.matrix().row(i);
            let scale = row.iter().map(|v| v.abs()).fold(1.0, f64::max);
            prop_assert!(row.iter().sum::<f64>().abs() <= 1e-14 * scale);
            for j in 0..k {
                if i != j {
                    prop_assert!(row[j] >= 0.0);
                    prop_assert_eq!(row[j], oracle[i][j]);
                }
            }
        }
    }

    #[test]
    fn euler_step_is_exact(seed in any::<u64>(), k in 1usize..7, x in 0.0f64..=2.0, frac in 0.01f64..1.0) {
        let mut draw = Draw::new(seed);
        let model = random_model(&mut draw, k, 0.5);
        let q = kinetics::generator(&model, x).unwrap();
        let dt = frac * kinetics::max_time_step(&model, 2.0).min(1.0);
        let p = kinetics::transition(&model, x, TimeStep::new(dt).unwrap()).unwrap();
        for i in 0..k {
            for j in 0..k {
                let expected = if i == j { 1.0 + dt * q.matrix()[(i, j)] } else { dt * q.matrix()[(i, j)] };
                prop_assert_eq!(p.matrix()[(i, j)], expected);
            }
        }
    }

    #[test]
    fn stationary_matches_reference(seed in any::<u64>(), k in 1usize..7, n in 1usize..5) {
        let mut draw = Draw::new(seed);
        let model = random_model(&mut draw, k, 0.5);
        let dist = random_dist(&mut draw, n);
        let pi = kinetics::stationary(&model, &dist).unwrap();
        let oracle = oracle_stationary(&model, dist.mean());
        for (a, b) in pi.iter().zip(&oracle) {
            prop_assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn stationary_is_invariant_for_every_admissible_step(seed in any::<u64>(), k in 1usize..7, n in 1usize..5) {
        let mut draw = Draw::new(seed);
        let model = random_model(&mut draw, k, 0.5);
        let dist = random_dist(&mut draw, n);
        let pi = kinetics::stationary(&model, &dist).unwrap();
        let mut dt = kinetics::max_time_step(&model, dist.high()).min(1.0);
        for _ in 0..8 {
            let p = kinetics::mean_transition(&model, &dist, TimeStep::new(dt).unwrap()).unwrap();
            let next = p.matrix().left_mul(&pi);
            let err = next.iter().zip(pi.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            prop_assert!(err <= 1e-12, "dt = {dt}: {err}");
            dt /= 2.0;
        }
    }
}

#[test]
fn stationary_depends_only_on_the_mean() {
    for model in [builtin::chr2(), builtin::ach(), builtin::cam()] {
        let (lo, hi) = model.input_range();
        let a = InputDistribution::binary(lo, hi, 0.5).unwrap();
        let mid = 0.5 * (lo + hi);
        let b = InputDistribution::point_mass(mid).unwrap();
        let c = InputDistribution::new(vec![(lo, 0.25), (mid, 0.5), (hi, 0.25)]).unwrap();
        let pa = kinetics::stationary(&model, &a).unwrap();
        for other in [&b, &c] {
            let pb = kinetics::stationary(&model, other).unwrap();
            for (x, y) in pa.iter().zip(pb.iter()) {
                assert!((x - y).abs() <= 1e-14);
            }
        }
    }
}

#[test]
fn chr2_stationary_closed_form() {
    let model = builtin::chr2();
    for i in 1..100 {
        let xbar = i as f64 / 100.0;
        let pi = kinetics::stationary_at(&model, xbar).unwrap();
        let (q12, q23, q31) = (5e3, 50.0, 17.0);
        let denom = q23 * q31 + xbar * q12 * q31 + xbar * q12 * q23;
        let expected = [
            q23 * q31 / denom,
            xbar * q12 * q31 / denom,
            xbar * q12 * q23 / denom,
        ];
        for (a, b) in pi.iter().zip(expected) {
            assert!(rel_err(*a, b) <= 1e-13, "{a} vs {b}");
        }
    }
}

#[test]
fn builtin_stationary_matches_reference() {
    for model in [builtin::ach(), builtin::cam()] {
        let (lo, hi) = model.input_range();
        for p in [0.1, 0.5, 0.9] {
            let dist = InputDistribution::binary(lo, hi, p).unwrap();
            let pi = kinetics::stationary(&model, &dist).unwrap();
            let oracle = oracle_stationary(&model, dist.mean());
            for (a, b) in pi.iter().zip(&oracle) {
                assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
            }
        }
    }
}

#[test]
fn step_guard_boundary() {
    let model = builtin::ach();
    let (lo, hi) = model.input_range();
    let dist = InputDistribution::binary(lo, hi, 0.5).unwrap();
    let max = kinetics::max_time_step(&model, hi);
    assert!(kinetics::check_time_step(&model, &dist, TimeStep::new(max).unwrap()).is_ok());
    assert!(
        kinetics::check_time_step(&model, &dist, TimeStep::new(max * (1.0 + 1e-6)).unwrap())
            .is_err()
    );
    assert!(TimeStep::new(0.0).is_err());
    assert!(TimeStep::new(f64::NAN).is_err());
}
