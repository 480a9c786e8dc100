//! Periodic band solver against an independent dense Gaussian elimination.

#![allow(clippy::needless_range_loop)]

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sks_core::PeriodicBandMatrix;

/// Dense Gaussian elimination with partial pivoting.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, p);
        b.swap(col, p);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

fn random_band(n: usize, b: usize, seed: u64, dominance: f64) -> PeriodicBandMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = PeriodicBandMatrix::zeros(n, b);
    for i in 0..n {
        for off in 0..=2 * b {
            let j = (i + n + off - b) % n;
            m.add(i, j, rng.random_range(-1.0..1.0));
        }
        m.add(i, i, dominance);
    }
    m
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn matches_dense_oracle_on_nonsymmetric_systems() {
    for &(n, b) in &[
        (4, 1),
        (7, 3),
        (9, 3),
        (12, 3),
        (13, 4),
        (40, 3),
        (64, 5),
        (200, 3),
    ] {
        // weak diagonal shift: pivoting is exercised
        let m = random_band(n, b, (n * 31 + b) as u64, 0.5);
        let rhs: Vec<f64> = (0..n).map(|i| ((i * 7 + 3) as f64).sin()).collect();
        let x = m.solve(&rhs).unwrap();
        let oracle = dense_solve(m.to_dense(), rhs.clone());
        let scale = oracle.iter().fold(1.0f64, |s, v| s.max(v.abs()));
        assert!(max_diff(&x, &oracle) <= 1e-9 * scale, "n={n} b={b}");
    }
}

#[test]
fn dense_view_agrees_with_matvec() {
    let m = random_band(11, 2, 5, 0.0);
    let x: Vec<f64> = (0..11).map(|i| i as f64 - 4.0).collect();
    let dense = m.to_dense();
    let y: Vec<f64> = dense
        .iter()
        .map(|r| r.iter().zip(&x).map(|(a, b)| a * b).sum())
        .collect();
    assert!(max_diff(&m.matvec(&x), &y) < 1e-13);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn residual_is_small(n in 3usize..80, b in 1usize..5, seed in any::<u64>()) {
        let m = random_band(n, b, seed, 2.0 * b as f64 + 2.0);
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).cos()).collect();
        let x = m.solve(&rhs).unwrap();
        let r = m.matvec(&x);
        prop_assert!(max_diff(&r, &rhs) < 1e-11);
    }
}
