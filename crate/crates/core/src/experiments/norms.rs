use serde::{Deserialize, Serialize};

use crate::assembly::Operators;
use crate::spline::{Coefficients, SplineSpace};
use crate::stepper::Trajectory;
use crate::{Error, Result};

/// How coarse states are compared with reference states.
#[derive(Debug, Clone)]
pub enum Embedding<'a> {
    /// Same space.
    Identity,
    /// Coarse space nested in the reference space (dyadic subdivision).
    Refine { coarse: &'a SplineSpace },
}

impl Embedding<'_> {
    fn embed(&self, c: &Coefficients, target: usize) -> Result<Coefficients> {
        match self {
            Embedding::Identity => Ok(c.clone()),
            Embedding::Refine { coarse } => coarse.refine(c, target),
        }
    }
}

/// Pathwise error functionals of one coarse/reference pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathErrors {
    /// `max_n ||e^n||_{L^2}` over the coarse grid.
    pub sup_l2: f64,
    /// `nu k sum_{n >= 1} ||d_xx e^n||^2`.
    pub h2_sq: f64,
    /// `max_n ||u_ref^n||^2` over the reference grid (localization statistic).
    pub ref_sup_sq: f64,
}

/// One row of the raw per-path norms table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawNormRow {
    pub path: usize,
    pub seed: u64,
    /// `M` for time sweeps, `N` for space sweeps.
    pub level: usize,
    pub errors: PathErrors,
}

/// Errors between a coarse trajectory and a reference one on the coarse time grid.
///
/// `ref_ops` are the operators of the reference space; the coarse states are embedded
/// into it first. The time grids must be nested.
pub fn path_errors(
    coarse: &Trajectory,
    reference: &Trajectory,
    embedding: &Embedding<'_>,
    ref_ops: &Operators,
) -> Result<PathErrors> {
    let mc = coarse.steps();
    let mr = reference.steps();
    let pc = &coarse.meta.params;
    let pr = &reference.meta.params;
    if mc == 0 || !mr.is_multiple_of(mc) || ((pc.horizon - pr.horizon) / pr.horizon).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "incompatible time grids: coarse M = {mc} (T = {}), reference M = {mr} (T = {})",
            pc.horizon, pr.horizon
        )));
    }
    let n_ref = ref_ops.space().dim();
    if reference.states[0].len() != n_ref {
        return Err(Error::InvalidArgument(
            "reference trajectory does not live in the reference space".into(),
        ));
    }
    let stride = mr / mc;
    let k = coarse.step_size();
    let mut sup_sq = 0.0f64;
    let mut h2 = 0.0;
    let mut diff = vec![0.0; n_ref];
    for n in 0..=mc {
        let e = embedding.embed(&coarse.states[n], n_ref)?;
        if e.len() != n_ref {
            return Err(Error::InvalidArgument(
                "coarse states do not embed into the reference space".into(),
            ));
        }
        for ((d, a), b) in diff
            .iter_mut()
            .zip(e.iter())
            .zip(reference.states[n * stride].iter())
        {
            *d = a - b;
        }
        sup_sq = sup_sq.max(ref_ops.l2_norm_sq(&diff));
        if n >= 1 {
            h2 += ref_ops.bending.quadratic_form(&diff);
        }
    }
    let ref_sup_sq = reference
        .states
        .iter()
        .map(|s| ref_ops.l2_norm_sq(s))
        .fold(0.0, f64::max);
    Ok(PathErrors {
        sup_l2: sup_sq.max(0.0).sqrt(),
        h2_sq: pc.nu * k * h2,
        ref_sup_sq,
    })
}

/// Indicator-weighted norms on the localization set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizedNorms {
    pub rho: f64,
    /// Empirical probability of the localization set.
    pub probability: f64,
    pub sup_2q: Vec<f64>,
    pub sup_4q: Vec<f64>,
    pub h2: f64,
}

/// Monte Carlo aggregates of [`PathErrors`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub samples: usize,
    pub q: Vec<f64>,
    /// `(E max_n ||e^n||^{2q})^{1/(2q)}` per `q`.
    pub sup_2q: Vec<f64>,
    pub sup_2q_se: Vec<f64>,
    /// `(E max_n ||e^n||^{4q})^{1/(4q)}` per `q`.
    pub sup_4q: Vec<f64>,
    pub sup_4q_se: Vec<f64>,
    /// `(E nu k sum ||d_xx e^n||^2)^{1/2}`.
    pub h2: f64,
    pub h2_se: f64,
    pub localized: Option<LocalizedNorms>,
}

/// `((1/S) sum w_i v_i^p)^{1/p}` with a delta-method standard error.
fn moment_norm(values: &[f64], p: f64, weights: Option<&[bool]>) -> (f64, f64) {
    let terms: Vec<f64> = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            if weights.is_some_and(|w| !w[i]) {
                0.0
            } else {
                v.powf(p)
            }
        })
        .collect();
    let (m, se) = super::mean_se(&terms);
    let value = m.powf(1.0 / p);
    let se = if m > 0.0 { value / (p * m) * se } else { 0.0 };
    (value, se)
}

impl ErrorReport {
    pub fn aggregate(errors: &[PathErrors], q: &[f64]) -> Self {
        let sup: Vec<f64> = errors.iter().map(|e| e.sup_l2).collect();
        let h2: Vec<f64> = errors.iter().map(|e| e.h2_sq).collect();
        let (s2, s2e): (Vec<f64>, Vec<f64>) =
            q.iter().map(|&q| moment_norm(&sup, 2.0 * q, None)).unzip();
        let (s4, s4e): (Vec<f64>, Vec<f64>) =
            q.iter().map(|&q| moment_norm(&sup, 4.0 * q, None)).unzip();
        let (h2_mean, h2_mean_se) = super::mean_se(&h2);
        let h2_val = h2_mean.max(0.0).sqrt();
        let h2_se = if h2_mean > 0.0 {
            0.5 * h2_mean_se / h2_val
        } else {
            0.0
        };
        Self {
            samples: errors.len(),
            q: q.to_vec(),
            sup_2q: s2,
            sup_2q_se: s2e,
            sup_4q: s4,
            sup_4q_se: s4e,
            h2: h2_val,
            h2_se,
            localized: None,
        }
    }

    /// Adds norms restricted to paths with `ref_sup_sq <= rho`.
    pub fn with_localization(mut self, errors: &[PathErrors], rho: f64) -> Self {
        let ind: Vec<bool> = errors.iter().map(|e| e.ref_sup_sq <= rho).collect();
        let sup: Vec<f64> = errors.iter().map(|e| e.sup_l2).collect();
        let h2: Vec<f64> = errors.iter().map(|e| e.h2_sq).collect();
        let probability = ind.iter().filter(|&&b| b).count() as f64 / errors.len().max(1) as f64;
        let sup_2q = self
            .q
            .iter()
            .map(|&q| moment_norm(&sup, 2.0 * q, Some(&ind)).0)
            .collect();
        let sup_4q = self
            .q
            .iter()
            .map(|&q| moment_norm(&sup, 4.0 * q, Some(&ind)).0)
            .collect();
        let h2_terms: Vec<f64> = h2
            .iter()
            .zip(&ind)
            .map(|(v, &b)| if b { *v } else { 0.0 })
            .collect();
        let h2 = super::mean_se(&h2_terms).0.max(0.0).sqrt();
        self.localized = Some(LocalizedNorms {
            rho,
            probability,
            sup_2q,
            sup_4q,
            h2,
        });
        self
    }
}

/// Pathwise errors of matched coarse/reference trajectories, aggregated.
pub fn error_norms(
    coarse: &[Trajectory],
    reference: &[Trajectory],
    embedding: &Embedding<'_>,
    ref_ops: &Operators,
    q: &[f64],
) -> Result<ErrorReport> {
    if coarse.len() != reference.len() || coarse.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "need matching nonempty trajectory sets ({} coarse, {} reference)",
            coarse.len(),
            reference.len()
        )));
    }
    let errs = coarse
        .iter()
        .zip(reference)
        .map(|(c, r)| path_errors(c, r, embedding, ref_ops))
        .collect::<Result<Vec<_>>>()?;
    Ok(ErrorReport::aggregate(&errs, q))
}
