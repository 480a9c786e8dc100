//! Monte Carlo experiments: strong convergence in time and space, localized errors,
//! moment/stability statistics, Hölder quotients and exponential moments.
//!
//! The exact solution is never available; every error is measured against a
//! finer-resolution trajectory driven by the same Brownian path.

mod convergence;
mod norms;
mod rate;
mod statistics;

pub use convergence::{
    localized_error, localized_error_with, spatial_rate, temporal_rate, ConvergenceOutcome,
    LocalizedOutcome, LocalizedRung, RhoRule, SmallnessCheck,
};
pub use norms::{
    error_norms, path_errors, Embedding, ErrorReport, LocalizedNorms, PathErrors, RawNormRow,
};
pub use rate::RateReport;
pub use statistics::{
    exp_moment_stats, holder_quotients, kappa_threshold, stability_stats, ExpMomentReport,
    HolderRow, HolderSummary, HolderTable, MomentReport, MomentRow,
};

use rayon::prelude::*;

use crate::assembly::Operators;
use crate::config::RunConfig;
use crate::noise::{derive_seed, sample_path, WienerPath};
use crate::spline::SplineSpace;
use crate::stepper::{initial_state, Stepper, Trajectory};
use crate::{Error, Result};

/// Maps `f` over path indices `0..count` on `workers` threads; results keep index order.
pub(crate) fn par_paths<T: Send>(
    workers: usize,
    count: usize,
    f: impl Fn(usize) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    if workers <= 1 {
        return (0..count).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Invariant(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..count).into_par_iter().map(f).collect())
}

pub(crate) fn path_seed(cfg: &RunConfig, index: usize) -> u64 {
    derive_seed(cfg.seed, &[cfg.kind.seed_tag(), index as u64])
}

/// A path fine enough for every resolution in `steps`, after checking its coupling.
pub(crate) fn coupled_path(cfg: &RunConfig, index: usize, finest: usize) -> Result<WienerPath> {
    let path = sample_path(path_seed(cfg, index), cfg.horizon, finest.trailing_zeros())?;
    path.check_consistency()?;
    Ok(path)
}

pub(crate) fn operators(cfg: &RunConfig, elements: usize) -> Result<Operators> {
    Operators::assemble(&SplineSpace::new(cfg.length, elements, cfg.order)?)
}

/// Runs one trajectory, tagging failures with the path identity.
pub(crate) fn simulate(
    cfg: &RunConfig,
    ops: &Operators,
    steps: usize,
    model: &crate::noise::DiffusionModel,
    path: &WienerPath,
    index: usize,
) -> Result<Trajectory> {
    let params = cfg.scheme(steps);
    let c0 = initial_state(ops, cfg.initial_condition());
    Stepper::new(ops, &params, model)
        .and_then(|mut s| s.run(c0, path))
        .map_err(|e| Error::Path {
            path: index,
            seed: path.seed(),
            steps,
            elements: ops.space().dim(),
            source: Box::new(e),
        })
}

/// Sample mean and standard error of the mean.
pub(crate) fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
