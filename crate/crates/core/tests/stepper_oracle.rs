//! The implicit step checked against a discrete energy identity and a Fourier
//! multiplier for the linear part.

use std::f64::consts::PI;

use sks_core::noise::apply_diffusion;
use sks_core::stepper::step;
use sks_core::{
    initial_state, sample_path, DiffusionModel, Operators, SchemeParams, SplineSpace, Stepper,
};

fn ops(n: usize, r: usize) -> Operators {
    Operators::assemble(&SplineSpace::new(2.0 * PI, n, r).unwrap()).unwrap()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Testing the scheme with `c_{n+1}` gives
/// `|u1|^2 - |u0|^2 + |u1 - u0|^2 + 2 k nu |u1''|^2 - 2 k |u1'|^2 = 2 dW (d, u1)`.
#[test]
fn energy_identity_holds_per_step() {
    let o = ops(32, 4);
    let c0 = initial_state(&o, |x| x.sin() + 0.5 * (2.0 * x).cos());
    for (model, dw) in [
        (DiffusionModel::Zero, 0.0),
        (DiffusionModel::Sin, 0.07),
        (DiffusionModel::Linear { lambda: 0.5 }, -0.05),
    ] {
        let p = SchemeParams::new(1.0, 0.25, 64);
        let k = p.step_size();
        let (c1, _) = step(&o, &p, &model, &c0, dw).unwrap();
        let diff: Vec<f64> = c1.iter().zip(c0.iter()).map(|(a, b)| a - b).collect();
        let lhs = o.l2_norm_sq(&c1) - o.l2_norm_sq(&c0)
            + o.l2_norm_sq(&diff)
            + 2.0 * k * o.seminorm_sq(&c1, 2)
            - 2.0 * k * o.seminorm_sq(&c1, 1);
        let d = apply_diffusion(&model, &o, &c0);
        let rhs = 2.0 * dw * dot(&o.mass.matvec(&d), &c1);
        assert!(
            (lhs - rhs).abs() < 1e-9 * (1.0 + o.l2_norm_sq(&c0)),
            "{model}: {lhs} vs {rhs}"
        );
    }
}

/// Without convection and noise, mode `sin(j x)` decays by `1 / (1 + k (nu j^4 - j^2))`.
#[test]
fn linear_step_matches_fourier_multiplier() {
    let o = ops(64, 4);
    let mut p = SchemeParams::new(0.5, 0.1, 10);
    p.linearized = true;
    let k = p.step_size();
    for j in [1.0f64, 2.0, 3.0] {
        let c0 = initial_state(&o, |x| (j * x).sin());
        let (c1, _) = step(&o, &p, &DiffusionModel::Zero, &c0, 0.0).unwrap();
        let factor = 1.0 / (1.0 + k * (p.nu * j.powi(4) - j * j));
        let space = o.space();
        for t in 0..50 {
            let x = t as f64 * 0.1257;
            let got = space.function_eval(&c1, x, 0);
            assert!((got - factor * (j * x).sin()).abs() < 1e-5, "j={j} x={x}");
        }
    }
}

#[test]
fn mean_is_conserved_along_a_path() {
    let o = ops(16, 5);
    let p = SchemeParams::new(1.0, 0.25, 64);
    let path = sample_path(11, 0.25, 6).unwrap();
    let c0 = initial_state(&o, |x| x.cos() + 0.2);
    let traj = Stepper::new(&o, &p, &DiffusionModel::Rational)
        .unwrap()
        .run(c0, &path)
        .unwrap();
    for s in &traj.states {
        assert!(o.space().mean_value(s).abs() < 1e-12);
    }
}

#[test]
fn newton_converges_quadratically() {
    let o = ops(32, 4);
    let p = SchemeParams {
        newton_tol: 1e-14,
        ..SchemeParams::new(1.0, 0.25, 8)
    };
    let c0 = initial_state(&o, |x| 3.0 * x.sin());
    let (_, st) = step(&o, &p, &DiffusionModel::Zero, &c0, 0.0).unwrap();
    assert!(st.iterations >= 2 && st.iterations <= 8, "{st:?}");
    // last contraction is far better than linear
    assert!(st.residual <= 1e-3 * st.previous_residual, "{st:?}");
}
