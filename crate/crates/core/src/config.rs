//! Run configuration: flat `key = value` text with `[section]` headers, plus
//! command-line overrides.
//!
//! ```text
//! # comment
//! [space]
//! L = 6.283185307179586
//! N = 64
//! r = 4
//! [scheme]
//! M_list = 64, 128, 256
//! ```
//!
//! Keys may also appear before the first section header. Unknown sections or keys,
//! and keys placed in the wrong section, are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::noise::{DiffusionModel, MAX_LEVEL};
use crate::stepper::SchemeParams;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Simulate,
    ConvergenceTime,
    ConvergenceSpace,
    Stability,
    Holder,
    ExpMoment,
    Localized,
    GronwallCheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Simulate,
        ExperimentKind::ConvergenceTime,
        ExperimentKind::ConvergenceSpace,
        ExperimentKind::Stability,
        ExperimentKind::Holder,
        ExperimentKind::ExpMoment,
        ExperimentKind::Localized,
        ExperimentKind::GronwallCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::ConvergenceTime => "convergence-time",
            ExperimentKind::ConvergenceSpace => "convergence-space",
            ExperimentKind::Stability => "stability",
            ExperimentKind::Holder => "holder",
            ExperimentKind::ExpMoment => "exp-moment",
            ExperimentKind::Localized => "localized",
            ExperimentKind::GronwallCheck => "gronwall-check",
        }
    }

    /// Stream tag used when deriving per-path seeds.
    pub fn seed_tag(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| Error::config(format!("unknown experiment kind '{s}'")))
    }
}

/// Initial condition family, scaled by `u0_scale`; `omega = 2 pi / L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCondition {
    /// `sin(omega x)`
    Sin,
    /// `sin(omega x) + 0.3 cos(2 omega x)`
    SinCos,
    Zero,
}

impl FromStr for InitialCondition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sin" => Ok(InitialCondition::Sin),
            "sin_cos" => Ok(InitialCondition::SinCos),
            "zero" => Ok(InitialCondition::Zero),
            other => Err(Error::config(format!(
                "unknown initial condition '{other}' (expected sin, sin_cos, zero)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub kind: ExperimentKind,
    pub length: f64,
    pub elements: usize,
    pub order: usize,
    pub n_list: Vec<usize>,
    pub n_ref: usize,
    pub nu: f64,
    pub horizon: f64,
    pub steps: usize,
    pub m_list: Vec<usize>,
    pub m_ref: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub damping: f64,
    pub model: DiffusionModel,
    /// Overrides the model's `L0`.
    pub l0: Option<f64>,
    /// Overrides the model's `C_B`.
    pub c_b: Option<f64>,
    pub u0: InitialCondition,
    pub u0_scale: f64,
    pub mc: usize,
    pub seed: u64,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub q_list: Vec<f64>,
    pub beta: f64,
    pub c_e: f64,
    pub kappa: Option<f64>,
    pub kappa_threshold: Option<f64>,
    pub instances: usize,
    pub gronwall_n: usize,
    pub gronwall_samples: usize,
    pub holder_m: Vec<usize>,
    pub holder_q: Vec<f64>,
    pub holder_gaps: Vec<usize>,
}

impl RunConfig {
    /// Desk-scale defaults for `kind`.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let mut c = RunConfig {
            kind,
            length: 2.0 * std::f64::consts::PI,
            elements: 64,
            order: 4,
            n_list: vec![8, 16, 32, 64],
            n_ref: 256,
            nu: 1.0,
            horizon: 0.25,
            steps: 256,
            m_list: vec![64, 128, 256, 512, 1024],
            m_ref: 8192,
            newton_tol: 1e-10,
            newton_max_iter: 30,
            damping: 0.5,
            model: DiffusionModel::Sin,
            l0: None,
            c_b: None,
            u0: InitialCondition::Sin,
            u0_scale: 1.0,
            mc: 64,
            seed: 20240601,
            workers: default_workers(),
            out: None,
            q_list: vec![0.5, 0.75],
            beta: 0.5,
            c_e: 1.0,
            kappa: None,
            kappa_threshold: None,
            instances: 1000,
            gronwall_n: 64,
            gronwall_samples: 400,
            holder_m: vec![0, 1, 2],
            holder_q: vec![1.0],
            holder_gaps: vec![1, 2, 4, 8],
        };
        match kind {
            ExperimentKind::ConvergenceSpace => {
                c.steps = 4096;
                c.mc = 32;
            }
            ExperimentKind::Localized => {
                c.model = DiffusionModel::Linear { lambda: 0.5 };
                c.u0_scale = 0.1;
                c.steps = 512;
                c.mc = 32;
            }
            ExperimentKind::Holder => {
                c.steps = 1024;
            }
            ExperimentKind::ExpMoment => {
                c.elements = 32;
                c.mc = 512;
            }
            _ => {}
        }
        c
    }

    pub fn scheme(&self, steps: usize) -> SchemeParams {
        SchemeParams {
            nu: self.nu,
            horizon: self.horizon,
            steps,
            newton_tol: self.newton_tol,
            newton_max_iter: self.newton_max_iter,
            damping: self.damping,
            linearized: false,
        }
    }

    /// `L0` in use: the override, else the model's own bound.
    pub fn effective_l0(&self) -> Option<f64> {
        self.l0.or_else(|| self.model.l0(self.length))
    }

    pub fn effective_c_b(&self) -> f64 {
        self.c_b.unwrap_or_else(|| self.model.lipschitz_constant())
    }

    pub fn initial_condition(&self) -> impl Fn(f64) -> f64 + Send + Sync + Copy {
        let omega = 2.0 * std::f64::consts::PI / self.length;
        let scale = self.u0_scale;
        let ic = self.u0;
        move |x: f64| match ic {
            InitialCondition::Sin => scale * (omega * x).sin(),
            InitialCondition::SinCos => scale * ((omega * x).sin() + 0.3 * (2.0 * omega * x).cos()),
            InitialCondition::Zero => 0.0,
        }
    }

    /// Parses `text` (may be empty) for `kind`, then applies `overrides` in order.
    pub fn parse(
        kind: Option<ExperimentKind>,
        text: &str,
        overrides: &[(String, String)],
    ) -> Result<Self> {
        let entries = parse_entries(text)?;
        let file_kind = entries
            .get("kind")
            .map(|(v, line)| v.parse::<ExperimentKind>().map_err(|e| at_line(e, *line)))
            .transpose()?;
        let kind = kind
            .or(file_kind)
            .ok_or_else(|| Error::config("no experiment kind given"))?;
        let mut cfg = RunConfig::defaults(kind);
        // model before lambda so `lambda` can refine it regardless of order
        let mut ordered: Vec<(&str, &str, Option<usize>)> = entries
            .iter()
            .map(|(k, (v, l))| (k.as_str(), v.as_str(), Some(*l)))
            .collect();
        ordered.sort_by_key(|(k, _, _)| *k == "lambda");
        for (k, v, line) in ordered {
            if k != "kind" {
                cfg.apply(k, v).map_err(|e| match line {
                    Some(l) => at_line(e, l),
                    None => e,
                })?;
            }
        }
        let mut overrides: Vec<&(String, String)> = overrides.iter().collect();
        overrides.sort_by_key(|(k, _)| k == "lambda");
        for (k, v) in overrides {
            let key =
                canonical_key(k).ok_or_else(|| Error::config(format!("unknown option '{k}'")))?;
            cfg.apply(key, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "L" => self.length = num(key, v)?,
            "N" => self.elements = num(key, v)?,
            "r" => self.order = num(key, v)?,
            "N_list" => self.n_list = list(key, v)?,
            "N_ref" => self.n_ref = num(key, v)?,
            "nu" => self.nu = num(key, v)?,
            "T" => self.horizon = num(key, v)?,
            "M" => self.steps = num(key, v)?,
            "M_list" => self.m_list = list(key, v)?,
            "M_ref" => self.m_ref = num(key, v)?,
            "newton_tol" => self.newton_tol = num(key, v)?,
            "newton_max_iter" => self.newton_max_iter = num(key, v)?,
            "damping" => self.damping = num(key, v)?,
            "model" => self.model = v.parse().map_err(|e: Error| Error::config(e.to_string()))?,
            "lambda" => match self.model {
                DiffusionModel::Linear { .. } => {
                    self.model = DiffusionModel::Linear {
                        lambda: num(key, v)?,
                    }
                }
                other => {
                    return Err(Error::config(format!(
                        "lambda only applies to the linear model (model is {other})"
                    )))
                }
            },
            "L0" => self.l0 = Some(num(key, v)?),
            "C_B" => self.c_b = Some(num(key, v)?),
            "u0" => self.u0 = v.parse()?,
            "u0_scale" => self.u0_scale = num(key, v)?,
            "mc" => self.mc = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "workers" => self.workers = num(key, v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "q" => self.q_list = list(key, v)?,
            "beta" => self.beta = num(key, v)?,
            "ce" => self.c_e = num(key, v)?,
            "kappa" => self.kappa = Some(num(key, v)?),
            "kappa_threshold" => self.kappa_threshold = Some(num(key, v)?),
            "instances" => self.instances = num(key, v)?,
            "gronwall_n" => self.gronwall_n = num(key, v)?,
            "gronwall_samples" => self.gronwall_samples = num(key, v)?,
            "holder_m" => self.holder_m = list(key, v)?,
            "holder_q" => self.holder_q = list(key, v)?,
            "holder_gaps" => self.holder_gaps = list(key, v)?,
            _ => return Err(Error::config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Checks every downstream precondition, naming the violated one.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::config(m));
        if self.order < 4 {
            return fail(format!(
                "r = {} is not allowed: the spline order must satisfy r >= 4 (H^2-conforming elements)",
                self.order
            ));
        }
        if self.order > 6 {
            return fail(format!(
                "r = {} is not supported (r must be 4, 5 or 6)",
                self.order
            ));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return fail(format!("L = {} must be positive", self.length));
        }
        if self.elements < self.order {
            return fail(format!(
                "N = {} must be at least r = {}",
                self.elements, self.order
            ));
        }
        if !(self.nu > 0.0) {
            return fail(format!("nu = {} must be positive", self.nu));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return fail(format!("T = {} must be positive", self.horizon));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return fail(format!("damping = {} must lie in (0, 1]", self.damping));
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iter == 0 {
            return fail("newton_tol and newton_max_iter must be positive".into());
        }
        if self.mc == 0 {
            return fail("mc must be at least 1".into());
        }
        if self.workers == 0 {
            return fail("workers must be at least 1".into());
        }
        if !self.u0_scale.is_finite() {
            return fail("u0_scale must be finite".into());
        }
        if let Some(l0) = self.l0 {
            if !(l0 >= 0.0) {
                return fail(format!("L0 = {l0} must be nonnegative"));
            }
        }
        if let Some(cb) = self.c_b {
            if !(cb >= 0.0) {
                return fail(format!("C_B = {cb} must be nonnegative"));
            }
        }
        for &q in &self.q_list {
            if !(q > 0.0 && q < 0.99) {
                return fail(format!("q = {q} must lie in (0, 0.99)"));
            }
        }
        if self.q_list.is_empty() {
            return fail("q list must not be empty".into());
        }
        let dyadic = |name: &str, m: usize| -> Result<()> {
            if !m.is_power_of_two() {
                return Err(Error::config(format!(
                    "{name} = {m} must be a power of two (paths are coupled by dyadic coarsening of one Brownian path)"
                )));
            }
            if m.trailing_zeros() > MAX_LEVEL {
                return Err(Error::config(format!("{name} = {m} exceeds 2^{MAX_LEVEL}")));
            }
            Ok(())
        };
        match self.kind {
            ExperimentKind::GronwallCheck => {
                if self.gronwall_n == 0 || self.instances == 0 || self.gronwall_samples < 2 {
                    return fail(
                        "gronwall_n, instances must be >= 1 and gronwall_samples >= 2".into(),
                    );
                }
                return Ok(());
            }
            ExperimentKind::ConvergenceTime => {
                if self.m_list.len() < 3 {
                    return fail(format!(
                        "M_list needs at least 3 step counts to fit a rate (got {})",
                        self.m_list.len()
                    ));
                }
                for &m in &self.m_list {
                    dyadic("M_list entry", m)?;
                }
                if self.m_list.windows(2).any(|w| w[0] >= w[1]) {
                    return fail("M_list must be strictly increasing".into());
                }
                dyadic("M_ref", self.m_ref)?;
                let max = *self.m_list.last().unwrap();
                if self.m_ref < 8 * max {
                    return fail(format!(
                        "M_ref = {} must be at least 8 x the largest M ({max})",
                        self.m_ref
                    ));
                }
            }
            ExperimentKind::ConvergenceSpace | ExperimentKind::Localized => {
                dyadic("M", self.steps)?;
                if self.kind == ExperimentKind::ConvergenceSpace && self.n_list.len() < 3 {
                    return fail(format!(
                        "N_list needs at least 3 element counts to fit a rate (got {})",
                        self.n_list.len()
                    ));
                }
                if self.n_list.is_empty() {
                    return fail("N_list must not be empty".into());
                }
                if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
                    return fail("N_list must be strictly increasing".into());
                }
                for &n in &self.n_list {
                    if n < self.order {
                        return fail(format!("N_list entry {n} is below r = {}", self.order));
                    }
                    if !self.n_ref.is_multiple_of(n) || !(self.n_ref / n).is_power_of_two() {
                        return fail(format!(
                            "N_list entry {n} is not nested in N_ref = {} (ratio must be a power of two)",
                            self.n_ref
                        ));
                    }
                }
                let max = *self.n_list.last().unwrap();
                if self.n_ref < 4 * max {
                    return fail(format!(
                        "N_ref = {} must be at least 4 x the largest N ({max})",
                        self.n_ref
                    ));
                }
                if !(self.beta > 0.0) || !(self.c_e > 0.0) {
                    return fail("beta and ce must be positive".into());
                }
                if self.kind == ExperimentKind::Localized {
                    let hmax = self.length / self.n_list[0] as f64;
                    if hmax >= 1.0 {
                        return fail(format!(
                            "the coarsest mesh size h = {hmax} must be below 1 so that rho = nu ln(h^-beta) / (36 C_e^2 T) is positive"
                        ));
                    }
                }
            }
            ExperimentKind::Stability => {
                dyadic("M", self.steps)?;
                dyadic("2M", 2 * self.steps)?;
            }
            ExperimentKind::Holder => {
                dyadic("M", self.steps)?;
                if self.holder_m.is_empty() || self.holder_m.iter().any(|&m| m > 2) {
                    return fail("holder_m entries must lie in {0, 1, 2}".into());
                }
                if self.holder_gaps.is_empty()
                    || self.holder_gaps.iter().any(|&g| g == 0 || g > self.steps)
                {
                    return fail(format!(
                        "holder_gaps must be positive step counts not exceeding M = {}",
                        self.steps
                    ));
                }
                if self.holder_q.is_empty() || self.holder_q.iter().any(|&q| !(q > 0.0)) {
                    return fail("holder_q entries must be positive".into());
                }
            }
            ExperimentKind::ExpMoment => {
                dyadic("M", self.steps)?;
                if self.kappa.is_some_and(|k| !(k >= 0.0)) {
                    return fail("kappa must be nonnegative".into());
                }
                if self.mc < 2 {
                    return fail("exp-moment needs mc >= 2 to compare sample halves".into());
                }
            }
            ExperimentKind::Simulate => dyadic("M", self.steps)?,
        }
        Ok(())
    }

    /// Canonical `key = value` rendering (sorted, full precision), used for hashing.
    pub fn canonical_text(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn at_line(e: Error, line: usize) -> Error {
    match e {
        Error::Config { message, .. } => Error::Config {
            line: Some(line),
            message,
        },
        other => Error::Config {
            line: Some(line),
            message: other.to_string(),
        },
    }
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::config(format!("invalid value '{v}' for key '{key}'")))
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect()
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("space", &["L", "N", "r", "N_list", "N_ref"]),
    (
        "scheme",
        &[
            "nu",
            "T",
            "M",
            "M_list",
            "M_ref",
            "newton_tol",
            "newton_max_iter",
            "damping",
        ],
    ),
    ("noise", &["model", "lambda", "L0", "C_B"]),
    ("initial", &["u0", "u0_scale"]),
    ("run", &["kind", "mc", "seed", "workers", "out"]),
    (
        "experiment",
        &[
            "q",
            "beta",
            "ce",
            "kappa",
            "kappa_threshold",
            "instances",
            "gronwall_n",
            "gronwall_samples",
            "holder_m",
            "holder_q",
            "holder_gaps",
        ],
    ),
];

/// Maps a flag or key spelling (`--nu`, `nu`, `n-list`) to the canonical key.
pub fn canonical_key(name: &str) -> Option<&'static str> {
    let n = name.trim_start_matches('-');
    let keys = || SECTIONS.iter().flat_map(|(_, keys)| keys.iter().copied());
    keys().find(|k| *k == n).or_else(|| {
        keys().find(|k| {
            k.len() > 1
                && k.replace('_', "-")
                    .eq_ignore_ascii_case(&n.replace('_', "-"))
        })
    })
}

/// `key -> (value, line)`; later duplicates are an error.
fn parse_entries(text: &str) -> Result<BTreeMap<String, (String, usize)>> {
    let mut out = BTreeMap::new();
    let mut section: Option<&'static [&'static str]> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |m: String| Error::Config {
            line: Some(line_no),
            message: m,
        };
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim();
            section = Some(
                SECTIONS
                    .iter()
                    .find(|(s, _)| *s == name)
                    .map(|(_, keys)| *keys)
                    .ok_or_else(|| err(format!("unknown section [{name}]")))?,
            );
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected 'key = value', found '{line}'")))?;
        let k = k.trim();
        let known = SECTIONS.iter().any(|(_, keys)| keys.contains(&k));
        if !known {
            return Err(err(format!("unknown key '{k}'")));
        }
        if let Some(keys) = section {
            if !keys.contains(&k) {
                return Err(err(format!("key '{k}' does not belong in this section")));
            }
        }
        if out
            .insert(k.to_string(), (v.trim().to_string(), line_no))
            .is_some()
        {
            return Err(err(format!("duplicate key '{k}'")));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    #[test]
    fn empty_file_with_flags_is_valid() {
        let cfg = RunConfig::parse(
            Some(ExperimentKind::Simulate),
            "",
            &flags(&[
                ("--nu", "0.5"),
                ("--N", "32"),
                ("--M", "128"),
                ("--model", "cos"),
            ]),
        )
        .unwrap();
        assert_eq!(cfg.nu, 0.5);
        assert_eq!(cfg.elements, 32);
        assert_eq!(cfg.steps, 128);
        assert_eq!(cfg.model, DiffusionModel::Cos);
    }

    #[test]
    fn non_dyadic_step_count_rejected() {
        let e = RunConfig::parse(Some(ExperimentKind::Simulate), "", &flags(&[("M", "100")]))
            .unwrap_err();
        assert!(e.to_string().contains("power of two"), "{e}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn low_order_rejected_with_reason() {
        let e =
            RunConfig::parse(Some(ExperimentKind::Simulate), "[space]\nr = 3\n", &[]).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("r >= 4"), "{msg}");
    }

    #[test]
    fn file_sections_and_flag_precedence() {
        let text = "kind = stability\n[space]\nN = 32 # comment\n[scheme]\nnu = 2\n[noise]\nlambda = 0.3\nmodel = linear\n";
        let cfg = RunConfig::parse(None, text, &flags(&[("--nu", "3")])).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Stability);
        assert_eq!(cfg.elements, 32);
        assert_eq!(cfg.nu, 3.0);
        assert_eq!(cfg.model, DiffusionModel::Linear { lambda: 0.3 });
    }

    #[test]
    fn unknown_and_misplaced_keys_rejected() {
        let k = Some(ExperimentKind::Simulate);
        assert!(RunConfig::parse(k, "foo = 1", &[]).is_err());
        assert!(RunConfig::parse(k, "[space]\nnu = 1", &[]).is_err());
        assert!(RunConfig::parse(k, "[bogus]\n", &[]).is_err());
        assert!(RunConfig::parse(k, "N 5", &[]).is_err());
        assert!(RunConfig::parse(k, "N = 16\nN = 32", &[]).is_err());
        assert!(RunConfig::parse(k, "", &flags(&[("--frobnicate", "1")])).is_err());
        assert!(RunConfig::parse(k, "N = sixteen", &[]).is_err());
    }

    #[test]
    fn convergence_preconditions() {
        let k = Some(ExperimentKind::ConvergenceTime);
        assert!(RunConfig::parse(k, "", &flags(&[("M_list", "64")])).is_err());
        assert!(RunConfig::parse(k, "", &flags(&[("M_ref", "2048")])).is_err());
        let s = Some(ExperimentKind::ConvergenceSpace);
        assert!(
            RunConfig::parse(s, "", &flags(&[("N_list", "8,12,16"), ("N_ref", "64")])).is_err()
        );
        assert!(
            RunConfig::parse(s, "", &flags(&[("N_list", "8,16,32"), ("N_ref", "64")])).is_err()
        );
        assert!(
            RunConfig::parse(s, "", &flags(&[("N_list", "8,16,32"), ("N_ref", "128")])).is_ok()
        );
    }

    #[test]
    fn flag_spellings() {
        assert_eq!(canonical_key("--nu"), Some("nu"));
        assert_eq!(canonical_key("--L"), Some("L"));
        assert_eq!(canonical_key("--ce"), Some("ce"));
        assert_eq!(canonical_key("n-list"), Some("N_list"));
        assert_eq!(canonical_key("--x"), None);
    }
}
