mod common;

use approx::assert_abs_diff_eq;
use common::{normal_kernel, rng};
use eim_core::kernelspace::{decompose, mix, standard_kernel, StandardKernel};
use eim_core::propagate::{run, Activation, Pattern, RunOptions, Schedule};
use eim_core::relativity::{
    beta_sq_grid, energy_ratio, expected_displacement, gamma, gamma_sq_from_split, lorentz_compare, measure_velocity,
    sweep, ScheduleKind, SweepConfig, VelocityEstimator,
};
use proptest::prelude::*;

#[test]
fn gamma_identity_on_a_dense_grid() {
    for i in 0..10_000 {
        let beta = i as f64 / 10_000.0;
        let g = gamma(beta).unwrap();
        assert_abs_diff_eq!(g * g * (1.0 - beta * beta), 1.0, epsilon = 1e-12);
    }
}

#[test]
fn gamma_follows_its_taylor_series() {
    for i in 0..=5000 {
        let b = 0.5 * i as f64 / 5000.0;
        let b2 = b * b;
        let g = gamma(b).unwrap();
        let series = 1.0 + b2 / 2.0 + 3.0 * b2 * b2 / 8.0;
        // every later term is positive, so the sixth-order term is a lower
        // bound; the Lagrange remainder gives the upper one
        let sixth = 5.0 * b2 * b2 * b2 / 16.0;
        assert!(g - series >= sixth - 1e-12);
        assert!(g - series <= sixth / (1.0 - b2).powf(3.5) + 1e-12);
    }
}

proptest! {
    #[test]
    fn both_gamma_forms_agree_on_kernels(seed in any::<u64>(), k in prop::sample::select(vec![2usize, 3, 4, 5])) {
        let mut r = rng(seed);
        let s = decompose(&normal_kernel(&mut r, k));
        prop_assume!(s.energy_even > 1e-9);
        let from_split = gamma_sq_from_split(&s).unwrap();
        let g = gamma(s.beta()).unwrap();
        prop_assert!((from_split - g * g).abs() <= 1e-9 * from_split);
        let ratio = energy_ratio(&s).unwrap();
        prop_assert!((1.0 + ratio * ratio - from_split).abs() <= 1e-9 * from_split);
    }

    #[test]
    fn first_step_matches_expected_displacement(seed in any::<u64>(), k in prop::sample::select(vec![3usize, 5])) {
        let mut r = rng(seed);
        let odd = decompose(&normal_kernel(&mut r, k)).odd;
        let (dx, dy) = expected_displacement(&odd).unwrap();
        let trace = run(Pattern::Impulse, &Schedule::Constant(odd), RunOptions::new(1, Activation::Relu)).unwrap();
        prop_assert!((trace.records[1].centroid_x - dx).abs() <= 1e-9);
        prop_assert!((trace.records[1].centroid_y - dy).abs() <= 1e-9);
    }
}

#[test]
fn mixed_kernels_report_their_mixing_ratio() {
    let dc = standard_kernel(StandardKernel::Dc, 3).unwrap();
    let gx = standard_kernel(StandardKernel::GradX, 3).unwrap();
    for b2 in beta_sq_grid(21).unwrap() {
        if b2 == 1.0 {
            continue;
        }
        let s = decompose(&mix(&dc, &gx, b2.sqrt(), 1.0).unwrap());
        assert_abs_diff_eq!(gamma_sq_from_split(&s).unwrap() * (1.0 - b2), 1.0, epsilon = 1e-9);
    }
}

#[test]
fn measured_speed_stays_within_the_limit() {
    let grid = beta_sq_grid(11).unwrap();
    for act in [Activation::Identity, Activation::Relu, Activation::Modulus] {
        for size in [2, 3, 5] {
            let cfg = SweepConfig::new(size, act);
            for p in sweep(&cfg, &grid).unwrap().points {
                assert!(
                    (-1e-9..=1.0 + 1e-9).contains(&p.measured_speed_ratio),
                    "{cfg:?} beta_sq={} v/c={}",
                    p.beta_sq,
                    p.measured_speed_ratio
                );
                assert!(p.measured_speed_ratio_sq.is_finite() && p.measured_speed_ratio_sq >= -1e-9);
            }
        }
    }
}

#[test]
fn alternating_odd_part_gives_no_net_drift() {
    // the centroid vibrates about the origin, so the signed speed is only
    // small, not necessarily nonnegative
    let grid = beta_sq_grid(11).unwrap();
    for act in [Activation::Identity, Activation::Relu, Activation::Modulus] {
        for size in [3, 5] {
            let cfg = SweepConfig::new(size, act).with_schedule(ScheduleKind::AlternatingOdd);
            for p in sweep(&cfg, &grid).unwrap().points {
                assert!(p.measured_speed_ratio.abs() <= 0.05, "{cfg:?} {p:?}");
            }
        }
    }
}

#[test]
fn sweep_is_deterministic_across_thread_counts() {
    let cfg = SweepConfig::new(3, Activation::Relu);
    let grid = beta_sq_grid(21).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let serial = pool.install(|| sweep(&cfg, &grid)).unwrap();
    let parallel = sweep(&cfg, &grid).unwrap();
    for (a, b) in serial.points.iter().zip(&parallel.points) {
        assert_eq!(a.measured_speed_ratio.to_bits(), b.measured_speed_ratio.to_bits());
    }
    let ra = lorentz_compare(&serial).unwrap();
    assert_eq!(ra, lorentz_compare(&parallel).unwrap());
}

#[test]
fn estimators_agree_on_steady_drift() {
    let gx = standard_kernel(StandardKernel::GradX, 3).unwrap();
    let s = Schedule::Constant(gx);
    let trace = run(Pattern::Impulse, &s, RunOptions::new(16, Activation::Relu)).unwrap();
    for est in [VelocityEstimator::TotalDistance, VelocityEstimator::FinalHalfFit] {
        assert_abs_diff_eq!(measure_velocity(&trace, 1.0, est).unwrap(), 1.0, epsilon = 1e-9);
    }
}
