//! Dispatch from a [`RunConfig`] to the matching experiment, with file output.

use serde::Serialize;
use serde_json::json;

use crate::config::{ExperimentKind, RunConfig};
use crate::experiments::{
    coupled_path, exp_moment_stats, holder_quotients, kappa_threshold, localized_error, operators,
    simulate, spatial_rate, stability_stats, temporal_rate,
};
use crate::inequalities::{gronwall_suite, SamplerParams};
use crate::io;
use crate::Result;

/// What a run produced: the summary JSON and the files written (if any).
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub kind: ExperimentKind,
    pub summary: serde_json::Value,
    pub files: Vec<String>,
}

/// Validates `cfg`, runs the experiment and writes its outputs to `cfg.out` when set.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let (summary, files) = execute(cfg)?;
    let mut names: Vec<String> = files.iter().map(|(n, _)| n.to_string()).collect();
    if let Some(dir) = &cfg.out {
        for (name, text) in &files {
            io::write_text(dir, name, text)?;
        }
        io::write_json(dir, io::SUMMARY_JSON, &summary)?;
        names.push(io::SUMMARY_JSON.into());
        names.push(io::MANIFEST_JSON.into());
        io::write_json(
            dir,
            io::MANIFEST_JSON,
            &io::Manifest::new(cfg, names.clone()),
        )?;
    }
    Ok(RunSummary {
        kind: cfg.kind,
        summary,
        files: names,
    })
}

type Files = Vec<(&'static str, String)>;

fn execute(cfg: &RunConfig) -> Result<(serde_json::Value, Files)> {
    Ok(match cfg.kind {
        ExperimentKind::Simulate => {
            let ops = operators(cfg, cfg.elements)?;
            let path = coupled_path(cfg, 0, cfg.steps)?;
            let traj = simulate(cfg, &ops, cfg.steps, &cfg.model, &path, 0)?;
            let max_iter = traj
                .newton_stats
                .iter()
                .map(|s| s.iterations)
                .max()
                .unwrap_or(0);
            let max_res = traj
                .newton_stats
                .iter()
                .map(|s| s.residual)
                .fold(0.0, f64::max);
            let sidecar = json!({
                "meta": traj.meta,
                "newton_max_iterations": max_iter,
                "newton_max_residual": max_res,
                "terminal_l2": ops.l2_norm_sq(traj.terminal()).sqrt(),
                "terminal_mean": ops.space().mean_value(traj.terminal()),
            });
            let mut sidecar_text = serde_json::to_string_pretty(&sidecar)?;
            sidecar_text.push('\n');
            (
                sidecar,
                vec![
                    (io::TRAJECTORY_CSV, io::trajectory_csv(&traj)),
                    (io::TRAJECTORY_JSON, sidecar_text),
                ],
            )
        }
        ExperimentKind::ConvergenceTime | ExperimentKind::ConvergenceSpace => {
            let out = if cfg.kind == ExperimentKind::ConvergenceTime {
                temporal_rate(cfg)?
            } else {
                spatial_rate(cfg)?
            };
            let mut files = vec![
                (
                    io::RATES_CSV,
                    io::rate_table_csv(&out.reports, &out.levels, &out.rates),
                ),
                (io::RAW_NORMS_CSV, io::raw_norms_csv(&out.raw)),
            ];
            if let Some(c) = &out.deterministic_control {
                files.push((
                    "rates_control.csv",
                    io::rate_table_csv(&c.reports, &c.levels, &c.rates),
                ));
            }
            (io::convergence_summary(&out), files)
        }
        ExperimentKind::Localized => {
            let out = localized_error(cfg, cfg.beta, cfg.c_e)?;
            let files = vec![
                (io::LOCALIZED_CSV, io::localized_csv(&out)),
                (io::RAW_NORMS_CSV, io::raw_norms_csv(&out.raw)),
            ];
            let mut slim = out.clone();
            slim.raw.clear();
            (serde_json::to_value(slim)?, files)
        }
        ExperimentKind::Stability => {
            let rep = stability_stats(cfg)?;
            let summary = json!({
                "report": rep,
                "finite": rep.finite(),
                "energy_ratio": rep.energy_ratio(),
            });
            (summary, vec![(io::MOMENTS_CSV, io::moments_csv(&rep))])
        }
        ExperimentKind::Holder => {
            let table = holder_quotients(cfg)?;
            (
                serde_json::to_value(&table)?,
                vec![(io::HOLDER_CSV, io::holder_csv(&table))],
            )
        }
        ExperimentKind::ExpMoment => {
            let threshold = kappa_threshold(cfg)?;
            let kappa = cfg.kappa.unwrap_or(threshold.min(0.05));
            let rep = exp_moment_stats(cfg, kappa)?;
            let summary = json!({
                "report": rep,
                "finite": rep.finite(),
                "stable": rep.stable(),
            });
            (summary, vec![])
        }
        ExperimentKind::GronwallCheck => {
            let params = SamplerParams {
                samples: cfg.gronwall_samples,
                ..SamplerParams::default()
            };
            let s = gronwall_suite(cfg.seed, cfg.instances, cfg.gronwall_n, &params)?;
            let summary = json!({
                "instances": s.instances,
                "violations": s.violations,
                "worst_ratio": s.worst_ratio,
                "worst_hypothesis_gap": s.worst_hypothesis_gap,
            });
            (summary, vec![(io::GRONWALL_CSV, io::gronwall_csv(&s))])
        }
    })
}
