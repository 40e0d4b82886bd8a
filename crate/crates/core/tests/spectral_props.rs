use std::f64::consts::PI;

use krein_core::extension::kernel_basis;
use krein_core::odeint::fundamental_matrix;
use krein_core::spectral::{friedrichs_eigenvalues, lowest_friedrichs_eigenvalue, ScanOptions};
use krein_core::system::{preset_catalog, preset_pure, Interval};
use num_complex::Complex64;
use proptest::prelude::*;

fn opts(lambda_max: f64) -> ScanOptions {
    ScanOptions {
        lambda_max,
        ..ScanOptions::default()
    }
}

/// Smallest positive root of `cos(mu) cosh(mu) = 1`, by bisection.
fn clamped_beam_mu() -> f64 {
    let f = |m: f64| m.cos() * m.cosh() - 1.0;
    let (mut lo, mut hi) = (4.0, 5.0);
    assert!(f(lo) < 0.0 && f(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn first_dirichlet_eigenvalues_of_second_order() {
    for len in [1.0, 2.0, PI] {
        let sys = preset_pure(1, Interval::new(0.0, len).unwrap()).unwrap();
        let top = (3.5 * PI / len).powi(2);
        let (roots, scan, typical) = friedrichs_eigenvalues(&sys, &opts(top), 3).unwrap();
        assert_eq!(roots.len(), 3, "L = {len}");
        assert!(typical > 0.0 && scan.windows(2).all(|w| w[0].lambda < w[1].lambda));
        for (k, (lambda, (lo, hi), _)) in roots.iter().enumerate() {
            let want = ((k + 1) as f64 * PI / len).powi(2);
            assert!((lambda - want).abs() <= 1e-4 * want, "L = {len}, k = {}: {lambda}", k + 1);
            assert!(lo < lambda && lambda < hi);
        }
    }
}

#[test]
fn documented_lowest_eigenvalues() {
    let on = |b: f64| preset_pure(1, Interval::new(0.0, b).unwrap()).unwrap();
    let r = lowest_friedrichs_eigenvalue(&on(PI), &opts(50.0)).unwrap();
    assert!((r.lambda_min.unwrap() - 1.0).abs() <= 1e-6);
    let r = lowest_friedrichs_eigenvalue(&on(1.0), &opts(50.0)).unwrap();
    assert!((r.lambda_min.unwrap() - PI * PI).abs() <= 1e-5);
}

#[test]
fn clamped_beam() {
    let sys = preset_pure(2, Interval::unit()).unwrap();
    let want = clamped_beam_mu().powi(4);
    let r = lowest_friedrichs_eigenvalue(&sys, &opts(1000.0)).unwrap();
    let got = r.lambda_min.unwrap();
    assert!((got - want).abs() <= 1e-2, "{got} vs {want}");
    assert!(r.certified_strictly_positive);
}

#[test]
fn positivity_implies_kernel_basis() {
    for (name, sys) in preset_catalog() {
        let r = lowest_friedrichs_eigenvalue(&sys, &opts(20.0)).unwrap();
        if r.certified_strictly_positive {
            let fm = fundamental_matrix(&sys, Complex64::new(0.0, 0.0), 1e-10, 1e-12).unwrap();
            assert!(kernel_basis(&sys, &fm).is_ok(), "{name}");
        }
    }
}

#[test]
fn thread_count_does_not_change_scan() {
    let sys = preset_pure(1, Interval::unit()).unwrap();
    let one = ScanOptions {
        threads: Some(1),
        ..opts(20.0)
    };
    let many = ScanOptions {
        threads: Some(4),
        ..opts(20.0)
    };
    assert_eq!(
        lowest_friedrichs_eigenvalue(&sys, &one).unwrap(),
        lowest_friedrichs_eigenvalue(&sys, &many).unwrap()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn lowest_eigenvalue_scales_with_length(len in 0.5f64..3.0) {
        let sys = preset_pure(1, Interval::new(0.0, len).unwrap()).unwrap();
        let want = (PI / len).powi(2);
        let r = lowest_friedrichs_eigenvalue(&sys, &opts(2.0 * want)).unwrap();
        let got = r.lambda_min.unwrap();
        prop_assert!((got - want).abs() <= 1e-6 * want, "{} vs {}", got, want);
    }
}
