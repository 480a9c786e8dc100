//! Spline basis, refinement and projection checked against closed forms.

use std::f64::consts::PI;

use proptest::prelude::*;
use sks_core::{l2_project, SplineSpace};

/// Uniform cubic B-spline on knots 0..4 and its first two derivatives.
fn cubic(t: f64) -> [f64; 3] {
    match t {
        t if (0.0..1.0).contains(&t) => [t.powi(3) / 6.0, t * t / 2.0, t],
        t if (1.0..2.0).contains(&t) => {
            let s = t - 1.0;
            [
                (1.0 + 3.0 * s + 3.0 * s * s - 3.0 * s.powi(3)) / 6.0,
                (1.0 + 2.0 * s - 3.0 * s * s) / 2.0,
                1.0 - 3.0 * s,
            ]
        }
        t if (2.0..3.0).contains(&t) => {
            let s = 3.0 - t;
            [
                (1.0 + 3.0 * s + 3.0 * s * s - 3.0 * s.powi(3)) / 6.0,
                -(1.0 + 2.0 * s - 3.0 * s * s) / 2.0,
                1.0 - 3.0 * s,
            ]
        }
        t if (3.0..4.0).contains(&t) => {
            let s = 4.0 - t;
            [s.powi(3) / 6.0, -s * s / 2.0, s]
        }
        _ => [0.0; 3],
    }
}

#[test]
fn cubic_basis_matches_closed_form() {
    let space = SplineSpace::new(2.0 * PI, 12, 4).unwrap();
    let h = space.mesh_size();
    for k in 0..240 {
        let x = k as f64 * 2.0 * PI / 240.0 + 1e-3;
        for d in 0..3 {
            let got = space.eval_basis(x, d);
            for (i, v) in got {
                // basis i is supported on elements [i, i + 3] (mod N)
                let mut t = x / h - i as f64;
                if t < 0.0 {
                    t += 12.0;
                }
                let expect = cubic(t)[d] / h.powi(d as i32);
                assert!(
                    (v - expect).abs() < 1e-11 * (1.0 + expect.abs()),
                    "x={x} i={i} d={d}"
                );
            }
        }
    }
}

#[test]
fn partition_of_unity_and_derivatives_sum_to_zero() {
    for &n in &[8, 16, 32] {
        for &r in &[4, 5] {
            let space = SplineSpace::new(3.0, n, r).unwrap();
            for k in 0..97 {
                let x = 3.0 * k as f64 / 97.0;
                let s0: f64 = space.eval_basis(x, 0).iter().map(|p| p.1).sum();
                let s1: f64 = space.eval_basis(x, 1).iter().map(|p| p.1).sum();
                assert!((s0 - 1.0).abs() < 1e-12);
                assert!(s1.abs() < 1e-10);
            }
        }
    }
}

#[test]
fn projection_is_idempotent() {
    for &n in &[8, 16, 32] {
        for &r in &[4, 5] {
            let space = SplineSpace::new(2.0 * PI, n, r).unwrap();
            let c = l2_project(&space, |x| (x.sin() * 2.0).exp()).unwrap();
            let again = l2_project(&space, |x| space.function_eval(&c, x, 0)).unwrap();
            let err = c
                .iter()
                .zip(again.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-11, "n={n} r={r}: {err}");
        }
    }
}

fn projection_error(n: usize, r: usize) -> f64 {
    let l = 2.0 * PI;
    let space = SplineSpace::new(l, n, r).unwrap();
    let f = |x: f64| (2.0 * PI * x / l).sin();
    let c = l2_project(&space, f).unwrap();
    // independent fine midpoint sum of the squared difference
    let m = 40 * n;
    let dx = l / m as f64;
    ((0..m)
        .map(|i| {
            let x = (i as f64 + 0.5) * dx;
            (f(x) - space.function_eval(&c, x, 0)).powi(2)
        })
        .sum::<f64>()
        * dx)
        .sqrt()
}

#[test]
fn projection_converges_at_order_r() {
    for &r in &[4usize, 5] {
        let ns = [16, 32, 64];
        let e: Vec<f64> = ns.iter().map(|&n| projection_error(n, r)).collect();
        for w in e.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(
                (order - r as f64).abs() < 0.35,
                "r={r} observed order {order}"
            );
        }
    }
}

#[test]
fn refinement_preserves_the_function() {
    let coarse = SplineSpace::new(2.0, 8, 4).unwrap();
    let fine = SplineSpace::new(2.0, 32, 4).unwrap();
    let c: Vec<f64> = (0..8).map(|i| ((i * i) as f64 * 0.3).sin()).collect();
    let cf = coarse.refine(&c, 32).unwrap();
    for k in 0..200 {
        let x = 2.0 * k as f64 / 200.0;
        for d in 0..3 {
            let a = coarse.function_eval(&c, x, d);
            let b = fine.function_eval(&cf, x, d);
            assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()), "x={x} d={d}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn basis_values_are_nonnegative_and_local(x in 0.0f64..5.0, r in 4usize..=6, n in 6usize..20) {
        let space = SplineSpace::new(5.0, n, r).unwrap();
        let vals = space.eval_basis(x, 0);
        prop_assert_eq!(vals.len(), r);
        prop_assert!(vals.iter().all(|p| p.1 >= -1e-15));
    }
}
