//! Output files. Every CSV has a fixed header; floats are written with Rust's shortest
//! round-trip formatting, so reading a value back yields the identical `f64`.
//!
//! | file | columns |
//! |------|---------|
//! | trajectory CSV | `n,t,c_0,...,c_{N-1}` |
//! | rate table CSV | `norm,level,abscissa,error,se,slope,intercept,half_width,residual` |
//! | raw norms CSV | `path,seed,level,sup_l2,h2_sq,ref_sup_sq` |
//! | moments CSV | `steps,sup_l2_pow2,sup_l2_pow4,sup_l2_pow8,se_pow2,se_pow4,se_pow8,h2_energy,h2_energy_se` |
//! | Hölder CSV | `m,q,gap,gap_time,quotient,mean_quotient` |
//! | localized CSV | `elements,h,rho,probability,q,sup_2q,sup_2q_loc,sup_4q,sup_4q_loc,h2,h2_loc` |
//! | Gronwall CSV | `seed,n,q,alpha,lhs,rhs,rel_se,holds` |

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::experiments::{
    ConvergenceOutcome, ErrorReport, HolderTable, LocalizedOutcome, MomentReport, RateReport,
    RawNormRow,
};
use crate::inequalities::GronwallSummary;
use crate::noise::RNG_ID;
use crate::stepper::Trajectory;
use crate::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const TRAJECTORY_JSON: &str = "trajectory.json";
pub const RATES_CSV: &str = "rates.csv";
pub const RAW_NORMS_CSV: &str = "raw_norms.csv";
pub const MOMENTS_CSV: &str = "moments.csv";
pub const HOLDER_CSV: &str = "holder.csv";
pub const LOCALIZED_CSV: &str = "localized.csv";
pub const GRONWALL_CSV: &str = "gronwall.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const MANIFEST_JSON: &str = "manifest.json";
pub const ERROR_JSON: &str = "error.json";

/// `n,t,c_0,...` rows of a trajectory.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let dim = traj.states.first().map_or(0, |s| s.len());
    let mut out = String::from("n,t");
    for i in 0..dim {
        let _ = write!(out, ",c_{i}");
    }
    out.push('\n');
    let k = traj.step_size();
    for (n, s) in traj.states.iter().enumerate() {
        let _ = write!(out, "{n},{}", n as f64 * k);
        for v in s.iter() {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn rate_table_csv(reports: &[ErrorReport], levels: &[usize], rates: &[RateReport]) -> String {
    let mut out =
        String::from("norm,level,abscissa,error,se,slope,intercept,half_width,residual\n");
    for rate in rates {
        for (j, (&x, &e)) in rate.abscissae.iter().zip(&rate.errors).enumerate() {
            let se = standard_error(&rate.label, &reports[j]);
            let _ = writeln!(
                out,
                "{},{},{x},{e},{se},{},{},{},{}",
                rate.label, levels[j], rate.slope, rate.intercept, rate.half_width, rate.residual
            );
        }
    }
    out
}

fn standard_error(label: &str, report: &ErrorReport) -> f64 {
    if label == "h2" {
        return report.h2_se;
    }
    for (i, q) in report.q.iter().enumerate() {
        if label == format!("sup_2q[q={q}]") {
            return report.sup_2q_se[i];
        }
        if label == format!("sup_4q[q={q}]") {
            return report.sup_4q_se[i];
        }
    }
    f64::NAN
}

pub fn raw_norms_csv(rows: &[RawNormRow]) -> String {
    let mut out = String::from("path,seed,level,sup_l2,h2_sq,ref_sup_sq\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.path, r.seed, r.level, r.errors.sup_l2, r.errors.h2_sq, r.errors.ref_sup_sq
        );
    }
    out
}

pub fn moments_csv(report: &MomentReport) -> String {
    let mut out = String::from(
        "steps,sup_l2_pow2,sup_l2_pow4,sup_l2_pow8,se_pow2,se_pow4,se_pow8,h2_energy,h2_energy_se\n",
    );
    for r in &report.rows {
        let [a, b, c] = r.sup_moments;
        let [sa, sb, sc] = r.sup_moments_se;
        let _ = writeln!(
            out,
            "{},{a},{b},{c},{sa},{sb},{sc},{},{}",
            r.steps, r.h2_energy, r.h2_energy_se
        );
    }
    out
}

pub fn holder_csv(table: &HolderTable) -> String {
    let mut out = String::from("m,q,gap,gap_time,quotient,mean_quotient\n");
    for r in &table.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.m, r.q, r.gap, r.gap_time, r.quotient, r.mean_quotient
        );
    }
    out
}

pub fn localized_csv(outcome: &LocalizedOutcome) -> String {
    let mut out = String::from(
        "elements,h,rho,probability,q,sup_2q,sup_2q_loc,sup_4q,sup_4q_loc,h2,h2_loc\n",
    );
    for rung in &outcome.rungs {
        let rep = &rung.report;
        let Some(loc) = rep.localized.as_ref() else {
            continue;
        };
        for (i, q) in rep.q.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{q},{},{},{},{},{},{}",
                rung.elements,
                rung.h,
                rung.rho,
                loc.probability,
                rep.sup_2q[i],
                loc.sup_2q[i],
                rep.sup_4q[i],
                loc.sup_4q[i],
                rep.h2,
                loc.h2
            );
        }
    }
    out
}

pub fn gronwall_csv(summary: &GronwallSummary) -> String {
    let mut out = String::from("seed,n,q,alpha,lhs,rhs,rel_se,holds\n");
    for r in &summary.checks {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.seed, r.n, r.q, r.alpha, r.check.lhs, r.check.rhs, r.check.rel_se, r.check.holds
        );
    }
    out
}

/// Convergence outcome without the raw per-path rows (those go to their own CSV).
pub fn convergence_summary(outcome: &ConvergenceOutcome) -> serde_json::Value {
    let mut slim = outcome.clone();
    slim.raw.clear();
    if let Some(c) = slim.deterministic_control.as_mut() {
        c.raw.clear();
    }
    serde_json::to_value(slim).unwrap_or(serde_json::Value::Null)
}

/// Hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub rng: &'static str,
    pub kind: String,
    pub master_seed: u64,
    /// Stream tags of the seed split: `derive_seed(master, [kind_tag, path])`.
    pub seed_stream: [u64; 1],
    pub config: RunConfig,
    /// SHA-256 of the canonical config text.
    pub input_hash: String,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn new(cfg: &RunConfig, files: Vec<String>) -> Self {
        Self {
            tool: "sks",
            version: VERSION,
            rng: RNG_ID,
            kind: cfg.kind.to_string(),
            master_seed: cfg.seed,
            seed_stream: [cfg.kind.seed_tag()],
            config: cfg.clone(),
            input_hash: sha256_hex(cfg.canonical_text().as_bytes()),
            files,
        }
    }
}

/// Machine-readable failure record.
pub fn error_json(err: &Error, kind: Option<&str>) -> serde_json::Value {
    let mut v = serde_json::json!({
        "status": "error",
        "error": err.kind(),
        "exit_code": err.exit_code(),
        "message": err.to_string(),
    });
    if let Some(k) = kind {
        v["experiment"] = k.into();
    }
    if let Error::Path {
        path,
        seed,
        steps,
        elements,
        ..
    } = err
    {
        v["path"] = serde_json::json!({ "index": path, "seed": seed, "steps": steps, "elements": elements });
    }
    match err.root() {
        Error::NewtonDivergence {
            step,
            iterations,
            residual,
            tolerance,
        } => {
            v["newton"] = serde_json::json!({
                "step": step, "iterations": iterations, "residual": residual, "tolerance": tolerance
            });
        }
        Error::Config { line, .. } => {
            v["line"] = serde_json::json!(line);
        }
        Error::Overflow { kappa, exponent } => {
            v["overflow"] = serde_json::json!({ "kappa": kappa, "exponent": exponent });
        }
        _ => {}
    }
    v
}

pub fn write_text(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

pub fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(dir, name, &text)
}
