use serde::{Deserialize, Serialize};

use super::norms::{path_errors, Embedding, ErrorReport, PathErrors, RawNormRow};
use super::rate::RateReport;
use super::{coupled_path, operators, par_paths, path_seed, simulate};
use crate::config::RunConfig;
use crate::noise::DiffusionModel;
use crate::spline::SplineSpace;
use crate::{Error, Result};

/// Records whether the configured constants satisfy the literal smallness condition
/// `L0 < sqrt(nu) / (240 C_e sqrt(q))` of the full-expectation error bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallnessCheck {
    pub q: f64,
    pub l0: Option<f64>,
    pub bound: f64,
    pub satisfied: Option<bool>,
}

fn smallness(cfg: &RunConfig, l0: Option<f64>) -> Vec<SmallnessCheck> {
    cfg.q_list
        .iter()
        .map(|&q| {
            let bound = cfg.nu.sqrt() / (240.0 * cfg.c_e * q.sqrt());
            SmallnessCheck {
                q,
                l0,
                bound,
                satisfied: l0.map(|l| l < bound),
            }
        })
        .collect()
}

/// Result of a temporal or spatial strong-convergence sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceOutcome {
    /// `"time"` or `"space"`.
    pub axis: String,
    pub model: DiffusionModel,
    /// Step counts `M` (time) or element counts `N` (space).
    pub levels: Vec<usize>,
    /// `k = T / M` or `h = L / N`.
    pub abscissae: Vec<f64>,
    pub reports: Vec<ErrorReport>,
    pub rates: Vec<RateReport>,
    pub raw: Vec<RawNormRow>,
    pub smallness: Vec<SmallnessCheck>,
    /// Same sweep with the diffusion switched off.
    pub deterministic_control: Option<Box<ConvergenceOutcome>>,
    /// L² projection error of the initial condition on the same mesh ladder.
    pub projection_control: Option<RateReport>,
}

impl ConvergenceOutcome {
    pub fn rate(&self, label: &str) -> Option<&RateReport> {
        self.rates.iter().find(|r| r.label == label)
    }

    /// Rate of `(E max ||e||^{2q})^{1/(2q)}`.
    pub fn sup_rate(&self, q: f64) -> Option<&RateReport> {
        self.rate(&sup_label(2.0, q))
    }

    /// Rate of `(E max ||e||^{4q})^{1/(4q)}`.
    pub fn bootstrap_rate(&self, q: f64) -> Option<&RateReport> {
        self.rate(&sup_label(4.0, q))
    }

    pub fn h2_rate(&self) -> Option<&RateReport> {
        self.rate("h2")
    }
}

fn sup_label(factor: f64, q: f64) -> String {
    if factor == 2.0 {
        format!("sup_2q[q={q}]")
    } else {
        format!("sup_4q[q={q}]")
    }
}

fn fit_all(abscissae: &[f64], reports: &[ErrorReport], q: &[f64]) -> Result<Vec<RateReport>> {
    let mut rates = Vec::new();
    for (j, &qq) in q.iter().enumerate() {
        let e2: Vec<f64> = reports.iter().map(|r| r.sup_2q[j]).collect();
        rates.push(RateReport::fit(sup_label(2.0, qq), abscissae, &e2)?);
        let e4: Vec<f64> = reports.iter().map(|r| r.sup_4q[j]).collect();
        rates.push(RateReport::fit(sup_label(4.0, qq), abscissae, &e4)?);
    }
    let h2: Vec<f64> = reports.iter().map(|r| r.h2).collect();
    rates.push(RateReport::fit("h2", abscissae, &h2)?);
    Ok(rates)
}

fn collect(
    cfg: &RunConfig,
    levels: &[usize],
    per_path: Vec<Vec<PathErrors>>,
) -> (Vec<ErrorReport>, Vec<RawNormRow>) {
    let mut raw = Vec::new();
    for (i, row) in per_path.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            raw.push(RawNormRow {
                path: i,
                seed: path_seed(cfg, i),
                level: levels[j],
                errors: *e,
            });
        }
    }
    let reports = (0..levels.len())
        .map(|j| {
            let errs: Vec<PathErrors> = per_path.iter().map(|row| row[j]).collect();
            ErrorReport::aggregate(&errs, &cfg.q_list)
        })
        .collect();
    (reports, raw)
}

fn check_time_ladder(cfg: &RunConfig) -> Result<()> {
    let m = &cfg.m_list;
    if m.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "temporal sweep needs at least 3 step counts, got {}",
            m.len()
        )));
    }
    if m.iter().any(|v| !v.is_power_of_two())
        || m.windows(2).any(|w| w[0] >= w[1])
        || !cfg.m_ref.is_power_of_two()
        || cfg.m_ref < 8 * m[m.len() - 1]
    {
        return Err(Error::InvalidArgument(format!(
            "step counts {m:?} must be increasing powers of two with M_ref = {} >= 8 x max",
            cfg.m_ref
        )));
    }
    Ok(())
}

fn check_space_ladder(cfg: &RunConfig, min_len: usize) -> Result<()> {
    let n = &cfg.n_list;
    if n.len() < min_len {
        return Err(Error::InvalidArgument(format!(
            "spatial sweep needs at least {min_len} element counts, got {}",
            n.len()
        )));
    }
    if n.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "element counts must increase".into(),
        ));
    }
    for &v in n {
        if !cfg.n_ref.is_multiple_of(v) || !(cfg.n_ref / v).is_power_of_two() || cfg.n_ref == v {
            return Err(Error::InvalidArgument(format!(
                "N = {v} is not nested in N_ref = {} by dyadic refinement",
                cfg.n_ref
            )));
        }
    }
    if !cfg.steps.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "M = {} must be a power of two",
            cfg.steps
        )));
    }
    Ok(())
}

fn time_sweep(cfg: &RunConfig, model: &DiffusionModel, mc: usize) -> Result<ConvergenceOutcome> {
    check_time_ladder(cfg)?;
    let ops = operators(cfg, cfg.elements)?;
    let per_path = par_paths(cfg.workers, mc, |i| {
        let path = coupled_path(cfg, i, cfg.m_ref)?;
        let reference = simulate(cfg, &ops, cfg.m_ref, model, &path, i)?;
        cfg.m_list
            .iter()
            .map(|&m| {
                let coarse = simulate(cfg, &ops, m, model, &path, i)?;
                path_errors(&coarse, &reference, &Embedding::Identity, &ops)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let abscissae: Vec<f64> = cfg.m_list.iter().map(|&m| cfg.horizon / m as f64).collect();
    let (reports, raw) = collect(cfg, &cfg.m_list, per_path);
    let rates = fit_all(&abscissae, &reports, &cfg.q_list)?;
    let l0 = cfg.l0.or_else(|| model.l0(cfg.length));
    Ok(ConvergenceOutcome {
        axis: "time".into(),
        model: *model,
        levels: cfg.m_list.clone(),
        abscissae,
        reports,
        rates,
        raw,
        smallness: smallness(cfg, l0),
        deterministic_control: None,
        projection_control: None,
    })
}

/// Strong error in time at fixed `N` against an `M_ref` reference on coupled paths.
pub fn temporal_rate(cfg: &RunConfig) -> Result<ConvergenceOutcome> {
    time_sweep(cfg, &cfg.model, cfg.mc)
}

fn space_sweep(cfg: &RunConfig, model: &DiffusionModel, mc: usize) -> Result<ConvergenceOutcome> {
    let ref_ops = operators(cfg, cfg.n_ref)?;
    let coarse_ops = cfg
        .n_list
        .iter()
        .map(|&n| operators(cfg, n))
        .collect::<Result<Vec<_>>>()?;
    let per_path = par_paths(cfg.workers, mc, |i| {
        let path = coupled_path(cfg, i, cfg.steps)?;
        let reference = simulate(cfg, &ref_ops, cfg.steps, model, &path, i)?;
        coarse_ops
            .iter()
            .map(|ops| {
                let coarse = simulate(cfg, ops, cfg.steps, model, &path, i)?;
                let embedding = Embedding::Refine {
                    coarse: ops.space(),
                };
                path_errors(&coarse, &reference, &embedding, &ref_ops)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let abscissae: Vec<f64> = cfg.n_list.iter().map(|&n| cfg.length / n as f64).collect();
    let (reports, raw) = collect(cfg, &cfg.n_list, per_path);
    let rates = fit_all(&abscissae, &reports, &cfg.q_list)?;
    let l0 = cfg.l0.or_else(|| model.l0(cfg.length));
    Ok(ConvergenceOutcome {
        axis: "space".into(),
        model: *model,
        levels: cfg.n_list.clone(),
        abscissae,
        reports,
        rates,
        raw,
        smallness: smallness(cfg, l0),
        deterministic_control: None,
        projection_control: None,
    })
}

/// L² projection error of the initial condition across the mesh ladder.
fn projection_control(cfg: &RunConfig) -> Result<Option<RateReport>> {
    let u0 = cfg.initial_condition();
    let mut errors = Vec::new();
    for &n in &cfg.n_list {
        let space = SplineSpace::new(cfg.length, n, cfg.order)?;
        let c = crate::assembly::l2_project(&space, u0)?;
        let err = space
            .integrate(|x| (u0(x) - space.function_eval(&c, x, 0)).powi(2))
            .sqrt();
        errors.push(err);
    }
    if errors.iter().any(|e| !(*e > 0.0)) {
        return Ok(None);
    }
    let h: Vec<f64> = cfg.n_list.iter().map(|&n| cfg.length / n as f64).collect();
    RateReport::fit("projection", &h, &errors).map(Some)
}

/// Strong error in space at fixed `M` against an `N_ref` reference on the same paths,
/// with a deterministic control sweep and a projection-only control.
pub fn spatial_rate(cfg: &RunConfig) -> Result<ConvergenceOutcome> {
    check_space_ladder(cfg, 3)?;
    let mut out = space_sweep(cfg, &cfg.model, cfg.mc)?;
    if cfg.model != DiffusionModel::Zero {
        out.deterministic_control = Some(Box::new(space_sweep(cfg, &DiffusionModel::Zero, 1)?));
    }
    out.projection_control = projection_control(cfg)?;
    Ok(out)
}

/// Threshold `rho` for the localization set `{ sup_t ||u(t)||^2 <= rho }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RhoRule {
    /// `rho(h) = nu / (36 C_e^2 T) * ln(h^{-beta})`.
    Formula {
        beta: f64,
        c_e: f64,
    },
    Fixed(f64),
}

impl RhoRule {
    pub fn rho(&self, nu: f64, horizon: f64, h: f64) -> f64 {
        match *self {
            RhoRule::Formula { beta, c_e } => nu / (36.0 * c_e * c_e * horizon) * (-beta * h.ln()),
            RhoRule::Fixed(r) => r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizedRung {
    pub elements: usize,
    pub h: f64,
    pub rho: f64,
    pub report: ErrorReport,
}

impl LocalizedRung {
    pub fn probability(&self) -> f64 {
        self.report
            .localized
            .as_ref()
            .map_or(f64::NAN, |l| l.probability)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizedOutcome {
    pub rule: RhoRule,
    pub rungs: Vec<LocalizedRung>,
    pub raw: Vec<RawNormRow>,
    /// Fits of the unlocalized and localized `q_list[0]` sup norms when available.
    pub rates: Vec<RateReport>,
}

/// Localized errors with `rho` from the logarithmic rule.
pub fn localized_error(cfg: &RunConfig, beta: f64, c_e: f64) -> Result<LocalizedOutcome> {
    localized_error_with(cfg, RhoRule::Formula { beta, c_e })
}

/// Localized errors along the spatial ladder; the indicator uses the reference path.
pub fn localized_error_with(cfg: &RunConfig, rule: RhoRule) -> Result<LocalizedOutcome> {
    check_space_ladder(cfg, 1)?;
    let ref_ops = operators(cfg, cfg.n_ref)?;
    let coarse_ops = cfg
        .n_list
        .iter()
        .map(|&n| operators(cfg, n))
        .collect::<Result<Vec<_>>>()?;
    let model = cfg.model;
    let per_path = par_paths(cfg.workers, cfg.mc, |i| {
        let path = coupled_path(cfg, i, cfg.steps)?;
        let reference = simulate(cfg, &ref_ops, cfg.steps, &model, &path, i)?;
        coarse_ops
            .iter()
            .map(|ops| {
                let coarse = simulate(cfg, ops, cfg.steps, &model, &path, i)?;
                let embedding = Embedding::Refine {
                    coarse: ops.space(),
                };
                path_errors(&coarse, &reference, &embedding, &ref_ops)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let (reports, raw) = collect(cfg, &cfg.n_list, per_path.clone());
    let rungs: Vec<LocalizedRung> = reports
        .into_iter()
        .enumerate()
        .map(|(j, report)| {
            let n = cfg.n_list[j];
            let h = cfg.length / n as f64;
            let rho = rule.rho(cfg.nu, cfg.horizon, h);
            let errs: Vec<PathErrors> = per_path.iter().map(|row| row[j]).collect();
            LocalizedRung {
                elements: n,
                h,
                rho,
                report: report.with_localization(&errs, rho),
            }
        })
        .collect();
    let mut rates = Vec::new();
    if rungs.len() >= 3 {
        let h: Vec<f64> = rungs.iter().map(|r| r.h).collect();
        let un: Vec<f64> = rungs.iter().map(|r| r.report.sup_2q[0]).collect();
        let loc: Vec<f64> = rungs
            .iter()
            .map(|r| r.report.localized.as_ref().map_or(0.0, |l| l.sup_2q[0]))
            .collect();
        if let Ok(r) = RateReport::fit("unlocalized", &h, &un) {
            rates.push(r);
        }
        if let Ok(r) = RateReport::fit("localized", &h, &loc) {
            rates.push(r);
        }
    }
    Ok(LocalizedOutcome {
        rule,
        rungs,
        raw,
        rates,
    })
}
