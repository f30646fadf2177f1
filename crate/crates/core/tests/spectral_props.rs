//! Property tests and oracle checks for the spectral layer.

mod common;

use common::{convolution_oracle, random_field, rng};
use crestfall_core::spectral::{transform_forward, transform_inverse, GridField};
use proptest::prelude::*;

fn grid_strategy() -> impl Strategy<Value = (usize, Vec<f64>)> {
    prop_oneof![Just(8usize), Just(16), Just(32)].prop_flat_map(|n| {
        (
            Just(n),
            proptest::collection::vec(-10.0f64..10.0, n..=n),
        )
    })
}

proptest! {
    #[test]
    fn forward_is_hermitian((_n, samples) in grid_strategy()) {
        let f = transform_forward(&GridField::new(samples)).unwrap();
        for k in 1..=f.max_mode() {
            let diff = (f.coeff(-k) - f.coeff(k).conj()).norm();
            prop_assert!(diff == 0.0, "mode {} asymmetric by {}", k, diff);
        }
        prop_assert_eq!(f.coeff(0).im, 0.0);
    }

    #[test]
    fn round_trip_reproduces_band_limited((_n, samples) in grid_strategy()) {
        // Band-limit first (forward zeroes the Nyquist mode), then the
        // round trip must be essentially exact.
        let f = transform_forward(&GridField::new(samples)).unwrap();
        let g = transform_inverse(&f).unwrap();
        let f2 = transform_forward(&g).unwrap();
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for k in -f.max_mode()..=f.max_mode() {
            num += (f2.coeff(k) - f.coeff(k)).norm();
            den += f.coeff(k).norm();
        }
        prop_assert!(num <= 1e-12 * den.max(1e-6), "round trip defect {}", num);
    }

    #[test]
    fn derivative_is_linear(seed in 0u64..500) {
        let mut r = rng(seed);
        let n = 32;
        let f = random_field(&mut r, n, 10, 1.0, 0.8);
        let g = random_field(&mut r, n, 10, 1.0, 0.8);
        let lhs = (&f + &g).derivative(1);
        let rhs = &f.derivative(1) + &g.derivative(1);
        prop_assert!((&lhs - &rhs).coeff_l1() < 1e-12);
        let a = f.derivative(1).derivative(1).derivative(2);
        let b = f.derivative(4);
        prop_assert!((&a - &b).coeff_l1() < 1e-10);
    }

    #[test]
    fn x_tau_norm_monotone_and_bounds_sup(seed in 0u64..500) {
        let mut r = rng(seed);
        let f = random_field(&mut r, 32, 12, 1.0, 0.7);
        let n0 = f.x_tau_norm(0.0).unwrap();
        let n1 = f.x_tau_norm(0.4).unwrap();
        let n2 = f.x_tau_norm(1.3).unwrap();
        prop_assert!(n0 <= n1 && n1 <= n2);
        let sup = f.to_grid().unwrap().max_abs();
        prop_assert!(n0 >= sup - 1e-12 * sup.max(1.0));
    }

    #[test]
    fn multiply_matches_convolution(seed in 0u64..200) {
        let mut r = rng(seed);
        for n in [8usize, 16, 32] {
            let kmax = (n / 2 - 1) as i64;
            let f = random_field(&mut r, n, kmax, 1.0, 0.9);
            let g = random_field(&mut r, n, kmax, 1.0, 0.9);
            let prod = f.multiply(&g).unwrap();
            for (k, expect) in convolution_oracle(&f, &g) {
                let diff = (prod.coeff(k) - expect).norm();
                prop_assert!(diff < 1e-12, "N = {}, mode {}: defect {}", n, k, diff);
            }
        }
    }
}

#[test]
fn multiply_matches_convolution_dense_n16() {
    let mut r = rng(42);
    let n = 16;
    let f = random_field(&mut r, n, 7, 1.0, 1.0);
    let g = random_field(&mut r, n, 7, 1.0, 1.0);
    let prod = f.multiply(&g).unwrap();
    for (k, expect) in convolution_oracle(&f, &g) {
        assert!(
            (prod.coeff(k) - expect).norm() < 1e-13,
            "mode {k} defect {}",
            (prod.coeff(k) - expect).norm()
        );
    }
}

#[test]
fn evaluate_at_matches_grid_samples() {
    let mut r = rng(7);
    let f = random_field(&mut r, 64, 20, 1.0, 0.85);
    let g = f.to_grid().unwrap();
    for (x, s) in GridField::<f64>::points(64).iter().zip(g.samples()) {
        assert!((f.evaluate_at(*x) - s).abs() < 1e-12);
    }
}

#[test]
fn nyquist_mode_is_always_zero() {
    let n = 16;
    // Pure Nyquist input aliases to zero after the forward transform.
    let samples: Vec<f64> = (0..n).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let f = transform_forward(&GridField::new(samples)).unwrap();
    for k in -(f.max_mode())..=f.max_mode() {
        assert!(f.coeff(k).norm() < 1e-15);
    }
    assert_eq!(f.coeff(8).norm(), 0.0);
}
