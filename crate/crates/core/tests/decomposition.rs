mod common;

use approx::assert_abs_diff_eq;
use common::{diff_norm, dihedral_images, normal_kernel, rng};
use eim_core::kernelspace::{decompose, dihedral_average, mix, standard_kernel, StandardKernel};
use eim_core::Kernel2D;
use proptest::prelude::*;

fn kernel_strategy() -> impl Strategy<Value = Kernel2D> {
    prop::sample::select(vec![2usize, 3, 4, 5, 7])
        .prop_flat_map(|k| prop::collection::vec(-10.0f64..10.0, k * k).prop_map(move |v| Kernel2D::new(k, v).unwrap()))
}

fn kernel_pair() -> impl Strategy<Value = (Kernel2D, Kernel2D)> {
    prop::sample::select(vec![2usize, 3, 4, 5, 7]).prop_flat_map(|k| {
        let one = prop::collection::vec(-10.0f64..10.0, k * k);
        (one.clone(), one).prop_map(move |(a, b)| (Kernel2D::new(k, a).unwrap(), Kernel2D::new(k, b).unwrap()))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn parts_reconstruct_the_kernel(f in kernel_strategy()) {
        let s = decompose(&f);
        let total = f.energy();
        prop_assert!(diff_norm(&(&s.even + &s.odd), &f) <= 1e-12 * f.norm().max(1e-300));
        prop_assert!(s.even.dot(&s.odd).unwrap().abs() <= 1e-9 * total);
        prop_assert!((s.energy_even + s.energy_odd - total).abs() <= 1e-9 * total);
        prop_assert!((0.0..=1.0).contains(&s.beta_sq));
    }

    #[test]
    fn even_part_is_invariant_under_every_dihedral_map(f in kernel_strategy()) {
        let even = dihedral_average(&f);
        for img in dihedral_images(&even) {
            prop_assert_eq!(&img, &even);
        }
    }

    #[test]
    fn even_part_is_the_average_of_the_images(f in kernel_strategy()) {
        let images = dihedral_images(&f);
        let mut avg = Kernel2D::zeros(f.size()).unwrap();
        for img in &images {
            avg = &avg + img;
        }
        let avg = &avg * 0.125;
        prop_assert!(diff_norm(&avg, &dihedral_average(&f)) <= 1e-12 * f.norm().max(1.0));
    }

    #[test]
    fn projection_is_idempotent(f in kernel_strategy()) {
        let once = dihedral_average(&f);
        let twice = dihedral_average(&once);
        prop_assert!(diff_norm(&once, &twice) <= 1e-12 * f.norm().max(1.0));
        let odd = decompose(&f).odd;
        prop_assert!(dihedral_average(&odd).norm() <= 1e-12 * f.norm().max(1.0));
    }

    #[test]
    fn projection_is_linear((f, g) in kernel_pair(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let lhs = dihedral_average(&(&(&f * a) + &(&g * b)));
        let rhs = &(&dihedral_average(&f) * a) + &(&dihedral_average(&g) * b);
        prop_assert!(diff_norm(&lhs, &rhs) <= 1e-12 * (a.abs() * f.norm() + b.abs() * g.norm()).max(1.0));
    }

    #[test]
    fn mix_round_trip_random_components(seed in any::<u64>(), i in 0usize..21, k in prop::sample::select(vec![2usize, 3, 4, 5])) {
        let mut r = rng(seed);
        let base = normal_kernel(&mut r, k);
        let s = decompose(&base);
        prop_assume!(s.energy_even > 1e-6 && s.energy_odd > 1e-6);
        let even = s.even.normalized().unwrap();
        let odd = s.odd.normalized().unwrap();
        let beta_sq = i as f64 / 20.0;
        let f = mix(&even, &odd, beta_sq.sqrt(), 2.5).unwrap();
        let back = decompose(&f);
        prop_assert!((back.beta_sq - beta_sq).abs() <= 1e-9);
        prop_assert!((f.norm() - 2.5).abs() <= 1e-9);
    }
}

#[test]
fn mix_round_trip_on_standard_grid() {
    for k in [2, 3, 5] {
        let dc = standard_kernel(StandardKernel::Dc, k).unwrap();
        let gx = standard_kernel(StandardKernel::GradX, k).unwrap();
        for i in 0..21 {
            let beta_sq = i as f64 / 20.0;
            let f = mix(&dc, &gx, beta_sq.sqrt(), 1.0).unwrap();
            assert_abs_diff_eq!(decompose(&f).beta_sq, beta_sq, epsilon = 1e-9);
        }
    }
}

#[test]
fn seeded_bulk_suite() {
    let mut r = rng(7);
    for k in [2, 3, 4, 5, 7] {
        for _ in 0..1000 {
            let f = normal_kernel(&mut r, k);
            let s = decompose(&f);
            let total = f.energy();
            assert!(diff_norm(&(&s.even + &s.odd), &f) <= 1e-12 * f.norm());
            assert!(s.even.dot(&s.odd).unwrap().abs() <= 1e-9 * total);
            assert!((s.energy() - total).abs() <= 1e-9 * total);
        }
    }
}
