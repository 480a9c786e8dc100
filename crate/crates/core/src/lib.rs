//! Finite element / implicit Euler–Maruyama solver for the stochastic
//! Kuramoto–Sivashinsky equation on a periodic interval,
//!
//! ```text
//! du + (nu u_xxxx + u_xx + u u_x) dt = B(u) dW,
//! ```
//!
//! with a Monte Carlo harness for strong convergence rates, moment and Hölder
//! statistics, and numeric checks of discrete Gronwall inequalities.
//!
//! ```
//! use sks_core::{initial_state, sample_path, DiffusionModel, Operators, SchemeParams, SplineSpace, Stepper};
//!
//! let space = SplineSpace::new(2.0 * std::f64::consts::PI, 16, 4)?;
//! let ops = Operators::assemble(&space)?;
//! let params = SchemeParams::new(1.0, 0.25, 32);
//! let path = sample_path(7, 0.25, 5)?;
//! let c0 = initial_state(&ops, |x| x.sin());
//! let traj = Stepper::new(&ops, &params, &DiffusionModel::Sin)?.run(c0, &path)?;
//! assert_eq!(traj.states.len(), 33);
//! assert!(space.mean_value(traj.terminal()).abs() < 1e-12);
//! # Ok::<(), sks_core::Error>(())
//! ```

// `!(x > 0.0)` is used deliberately so NaN inputs are rejected; banded loops index several arrays at once.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod assembly;
pub mod band;
pub mod config;
mod error;
pub mod experiments;
pub mod inequalities;
pub mod io;
pub mod noise;
pub mod quadrature;
mod run;
pub mod spline;
pub mod stepper;

pub use assembly::{l2_project, Operators};
pub use band::{Factorization, PeriodicBandMatrix};
pub use config::{ExperimentKind, RunConfig};
pub use error::{Error, Result};
pub use noise::{derive_seed, sample_path, DiffusionModel, WienerPath, RNG_ID};
pub use quadrature::QuadratureRule;
pub use run::{run, RunSummary};
pub use spline::{Coefficients, SplineSpace};
pub use stepper::{initial_state, NewtonStats, SchemeParams, Stepper, Trajectory};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/splines.md")]
    mod splines {}
    #[doc = include_str!("../../../book/src/operators.md")]
    mod operators {}
    #[doc = include_str!("../../../book/src/noise.md")]
    mod noise {}
    #[doc = include_str!("../../../book/src/scheme.md")]
    mod scheme {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/gronwall.md")]
    mod gronwall {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
