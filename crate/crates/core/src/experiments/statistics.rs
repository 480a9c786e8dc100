use serde::{Deserialize, Serialize};

use super::{coupled_path, mean_se, operators, par_paths, simulate};
use crate::config::RunConfig;
use crate::noise::DiffusionModel;
use crate::{Error, Result};

/// Largest exponent accepted before `exp` is treated as an overflow.
const MAX_EXPONENT: f64 = 700.0;

/// Moment statistics of one time resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub steps: usize,
    /// `E max_n ||u_h^n||^{2^p}` for `p = 1, 2, 3`.
    pub sup_moments: [f64; 3],
    pub sup_moments_se: [f64; 3],
    /// `E k sum_{n >= 1} ||d_xx u_h^n||^2`.
    pub h2_energy: f64,
    pub h2_energy_se: f64,
}

impl MomentRow {
    pub fn finite(&self) -> bool {
        self.sup_moments.iter().all(|v| v.is_finite()) && self.h2_energy.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub model: DiffusionModel,
    pub samples: usize,
    /// Rows for `M` and `2M` on coupled paths.
    pub rows: Vec<MomentRow>,
}

impl MomentReport {
    /// `h2_energy(2M) / h2_energy(M)`.
    pub fn energy_ratio(&self) -> f64 {
        self.rows[1].h2_energy / self.rows[0].h2_energy
    }

    pub fn finite(&self) -> bool {
        self.rows.iter().all(MomentRow::finite)
    }
}

/// Polynomial moments and the dissipation sum at `M` and `2M` steps.
pub fn stability_stats(cfg: &RunConfig) -> Result<MomentReport> {
    let ops = operators(cfg, cfg.elements)?;
    let levels = [cfg.steps, 2 * cfg.steps];
    let per_path = par_paths(cfg.workers, cfg.mc, |i| {
        let path = coupled_path(cfg, i, levels[1])?;
        levels
            .iter()
            .map(|&m| {
                let traj = simulate(cfg, &ops, m, &cfg.model, &path, i)?;
                let sup_sq = traj
                    .states
                    .iter()
                    .map(|s| ops.l2_norm_sq(s))
                    .fold(0.0, f64::max);
                let energy: f64 = traj.states[1..].iter().map(|s| ops.seminorm_sq(s, 2)).sum();
                Ok((sup_sq, traj.step_size() * energy))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let rows = levels
        .iter()
        .enumerate()
        .map(|(j, &m)| {
            let mut sup_moments = [0.0; 3];
            let mut sup_moments_se = [0.0; 3];
            for p in 0..3 {
                // ||u||^{2^{p+1}} = (||u||^2)^{2^p}
                let vals: Vec<f64> = per_path.iter().map(|r| r[j].0.powi(1 << p)).collect();
                (sup_moments[p], sup_moments_se[p]) = mean_se(&vals);
            }
            let energy: Vec<f64> = per_path.iter().map(|r| r[j].1).collect();
            let (h2_energy, h2_energy_se) = mean_se(&energy);
            MomentRow {
                steps: m,
                sup_moments,
                sup_moments_se,
                h2_energy,
                h2_energy_se,
            }
        })
        .collect();
    Ok(MomentReport {
        model: cfg.model,
        samples: cfg.mc,
        rows,
    })
}

/// Quotient `E ||d^m (u(t + g k) - u(t))||^{2q} / (g k)^q` for one gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderRow {
    pub m: usize,
    pub q: f64,
    /// Gap in steps.
    pub gap: usize,
    pub gap_time: f64,
    /// Maximum over start times of the Monte Carlo mean.
    pub quotient: f64,
    /// Average over start times.
    pub mean_quotient: f64,
}

/// Spread of the quotients of one `(m, q)` pair across gaps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderSummary {
    pub m: usize,
    pub q: f64,
    pub max: f64,
    pub min: f64,
}

impl HolderSummary {
    /// `max / min` over gaps.
    pub fn spread(&self) -> f64 {
        self.max / self.min
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderTable {
    pub model: DiffusionModel,
    pub steps: usize,
    pub elements: usize,
    pub samples: usize,
    pub rows: Vec<HolderRow>,
    pub summaries: Vec<HolderSummary>,
}

impl HolderTable {
    pub fn summary(&self, m: usize, q: f64) -> Option<&HolderSummary> {
        self.summaries.iter().find(|s| s.m == m && s.q == q)
    }

    pub fn row(&self, m: usize, q: f64, gap: usize) -> Option<&HolderRow> {
        self.rows
            .iter()
            .find(|r| r.m == m && r.q == q && r.gap == gap)
    }
}

/// Hölder quotients of the discrete solution at `(N, M)` for every configured
/// `m`, `q` and gap (in steps).
pub fn holder_quotients(cfg: &RunConfig) -> Result<HolderTable> {
    if cfg.holder_m.iter().any(|&m| m > 2) {
        return Err(Error::InvalidArgument(
            "holder m must lie in {0, 1, 2}".into(),
        ));
    }
    if cfg.holder_gaps.iter().any(|&g| g == 0 || g > cfg.steps) {
        return Err(Error::InvalidArgument(format!(
            "gaps {:?} must be positive and at most M = {}",
            cfg.holder_gaps, cfg.steps
        )));
    }
    let ops = operators(cfg, cfg.elements)?;
    let k = cfg.horizon / cfg.steps as f64;
    // per path: [m][gap][start] -> squared seminorm of the increment
    let per_path = par_paths(cfg.workers, cfg.mc, |i| {
        let path = coupled_path(cfg, i, cfg.steps)?;
        let traj = simulate(cfg, &ops, cfg.steps, &cfg.model, &path, i)?;
        let mut diff = vec![0.0; ops.space().dim()];
        let mut out = Vec::with_capacity(cfg.holder_m.len());
        for &m in &cfg.holder_m {
            let mut by_gap = Vec::with_capacity(cfg.holder_gaps.len());
            for &g in &cfg.holder_gaps {
                let sq: Vec<f64> = (0..=cfg.steps - g)
                    .map(|n| {
                        for ((d, a), b) in diff
                            .iter_mut()
                            .zip(traj.states[n + g].iter())
                            .zip(traj.states[n].iter())
                        {
                            *d = a - b;
                        }
                        ops.seminorm_sq(&diff, m).max(0.0)
                    })
                    .collect();
                by_gap.push(sq);
            }
            out.push(by_gap);
        }
        Ok(out)
    })?;
    let samples = per_path.len() as f64;
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for (mi, &m) in cfg.holder_m.iter().enumerate() {
        for &q in &cfg.holder_q {
            let mut max = f64::NEG_INFINITY;
            let mut min = f64::INFINITY;
            for (gi, &g) in cfg.holder_gaps.iter().enumerate() {
                let dt = g as f64 * k;
                let starts = cfg.steps - g + 1;
                let mut best = 0.0f64;
                let mut total = 0.0;
                for n in 0..starts {
                    let mean = per_path.iter().map(|p| p[mi][gi][n].powf(q)).sum::<f64>() / samples;
                    let quot = mean / dt.powf(q);
                    best = best.max(quot);
                    total += quot;
                }
                max = max.max(best);
                min = min.min(best);
                rows.push(HolderRow {
                    m,
                    q,
                    gap: g,
                    gap_time: dt,
                    quotient: best,
                    mean_quotient: total / starts as f64,
                });
            }
            summaries.push(HolderSummary { m, q, max, min });
        }
    }
    Ok(HolderTable {
        model: cfg.model,
        steps: cfg.steps,
        elements: cfg.elements,
        samples: cfg.mc,
        rows,
        summaries,
    })
}

/// Exponential moment estimate with a sample-doubling stability check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpMomentReport {
    pub kappa: f64,
    pub threshold: f64,
    pub samples: usize,
    pub mean: f64,
    pub se: f64,
    /// Estimate from the first half of the samples.
    pub half_mean: f64,
    pub half_se: f64,
    /// Largest exponent seen.
    pub max_exponent: f64,
}

impl ExpMomentReport {
    pub fn finite(&self) -> bool {
        self.mean.is_finite() && self.se.is_finite()
    }

    /// `|mean - half_mean| <= 3 half_se` (always true when both standard errors vanish
    /// and the means agree).
    pub fn stable(&self) -> bool {
        (self.mean - self.half_mean).abs() <= 3.0 * self.half_se + 1e-12 * self.mean.abs()
    }
}

/// Default `kappa` threshold `1 / (16 L0^2)`, capped at 1, or the configured override.
pub fn kappa_threshold(cfg: &RunConfig) -> Result<f64> {
    if let Some(t) = cfg.kappa_threshold {
        return Ok(t);
    }
    match cfg.effective_l0() {
        None => Err(Error::InvalidArgument(format!(
            "model {} is unbounded; exponential moments need a bounded diffusion or an explicit kappa_threshold",
            cfg.model
        ))),
        Some(l0) if l0 <= 0.0 => Ok(1.0),
        Some(l0) => Ok((1.0 / (16.0 * l0 * l0)).min(1.0)),
    }
}

/// Monte Carlo mean of `exp(kappa ||u_h(T)||^2 + (kappa / 2) nu k sum_{n >= 1} ||d_xx u_h^n||^2)`.
pub fn exp_moment_stats(cfg: &RunConfig, kappa: f64) -> Result<ExpMomentReport> {
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "kappa = {kappa} must be nonnegative"
        )));
    }
    if cfg.mc < 2 {
        return Err(Error::InvalidArgument(
            "exp-moment needs at least 2 samples".into(),
        ));
    }
    let threshold = kappa_threshold(cfg)?;
    let ops = operators(cfg, cfg.elements)?;
    let exponents = par_paths(cfg.workers, cfg.mc, |i| {
        let path = coupled_path(cfg, i, cfg.steps)?;
        let traj = simulate(cfg, &ops, cfg.steps, &cfg.model, &path, i)?;
        let energy: f64 = traj.states[1..].iter().map(|s| ops.seminorm_sq(s, 2)).sum();
        Ok(kappa * ops.l2_norm_sq(traj.terminal())
            + 0.5 * kappa * cfg.nu * traj.step_size() * energy)
    })?;
    let max_exponent = exponents.iter().copied().fold(0.0, f64::max);
    if max_exponent > MAX_EXPONENT {
        return Err(Error::Overflow {
            kappa,
            exponent: max_exponent,
        });
    }
    let values: Vec<f64> = exponents.iter().map(|e| e.exp()).collect();
    let (mean, se) = mean_se(&values);
    let (half_mean, half_se) = mean_se(&values[..values.len() / 2]);
    Ok(ExpMomentReport {
        kappa,
        threshold,
        samples: values.len(),
        mean,
        se,
        half_mean,
        half_se,
        max_exponent,
    })
}
