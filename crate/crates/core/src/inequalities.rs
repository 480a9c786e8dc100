//! Numeric checks of the discrete stochastic Gronwall inequality and the classical
//! discrete Gronwall majorant.
//!
//! For nonnegative adapted `X, F, G` and a martingale `M` with `M_0 = 0` satisfying
//! `X_n <= F_n + M_n + sum_{l<n} G_l X_l`, every `q in (0, 1)` and conjugate pair
//! `(alpha, beta)` with `q alpha < 1` give
//!
//! ```text
//! E[sup X^q] <= (1 + 1/(1 - alpha q))^{1/alpha} ||prod (1 + G_l)^q||_{L^beta} (E[sup F])^q.
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::noise::derive_seed;
use crate::{Error, Result};

/// Sampler settings for [`generate_instance`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerParams {
    /// Monte Carlo sample count.
    pub samples: usize,
    /// Upper bound of the predictable martingale weights `xi`.
    pub xi_max: f64,
    /// `G_l` is drawn uniformly from `[0, g_total / n]`; zero gives `G = 0`.
    pub g_total: f64,
    /// Upper bound of the nonnegative base part of `F`.
    pub f_max: f64,
    /// `X` is the hypothesis' right side times `1 - s`, `s` uniform in `[0, slack_max]`.
    pub slack_max: f64,
}

impl Default for SamplerParams {
    fn default() -> Self {
        Self {
            samples: 400,
            xi_max: 1.0,
            g_total: 1.0,
            f_max: 1.0,
            slack_max: 0.5,
        }
    }
}

/// Monte Carlo sample of an adapted sequence satisfying the Gronwall hypothesis on every path.
///
/// Arrays are indexed `[sample][time]` with times `0..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GronwallInstance {
    pub seed: u64,
    pub n: usize,
    pub q: f64,
    pub alpha: f64,
    /// Conjugate of `alpha`; infinite when `alpha = 1`.
    pub beta: f64,
    pub x: Vec<Vec<f64>>,
    pub f: Vec<Vec<f64>>,
    pub g: Vec<Vec<f64>>,
    pub m: Vec<Vec<f64>>,
    /// Rademacher innovations `eta_1..eta_n` (index 0 unused and zero).
    pub eta: Vec<Vec<f64>>,
}

/// Conjugate exponent `alpha / (alpha - 1)`.
pub fn conjugate(alpha: f64) -> f64 {
    if alpha == 1.0 {
        f64::INFINITY
    } else {
        alpha / (alpha - 1.0)
    }
}

fn check_exponents(q: f64, alpha: f64) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "q = {q} must lie in (0, 1)"
        )));
    }
    if !(alpha >= 1.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "alpha = {alpha} must be finite and >= 1"
        )));
    }
    if q * alpha >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "q alpha = {} must be below 1 (q = {q}, alpha = {alpha})",
            q * alpha
        )));
    }
    Ok(())
}

/// Builds an instance: `M_n = sum_j xi_j eta_j` with Rademacher `eta` and `xi_j` a bounded
/// function of `eta_1..eta_{j-1}`; `F_n = base_n + max(-M_n, 0)` keeps the right side
/// nonnegative; `X_n` is the right side shrunk by a random slack.
pub fn generate_instance(
    seed: u64,
    n: usize,
    q: f64,
    alpha: f64,
    params: &SamplerParams,
) -> Result<GronwallInstance> {
    check_exponents(q, alpha)?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if params.samples < 2 {
        return Err(Error::InvalidArgument(
            "at least 2 samples are needed".into(),
        ));
    }
    let bad = |v: f64| !(v >= 0.0 && v.is_finite());
    if bad(params.xi_max) || bad(params.g_total) || bad(params.f_max) {
        return Err(Error::InvalidArgument(
            "sampler bounds must be nonnegative".into(),
        ));
    }
    if !(0.0..1.0).contains(&params.slack_max) {
        return Err(Error::InvalidArgument(
            "slack_max must lie in [0, 1)".into(),
        ));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let s = params.samples;
    let mut inst = GronwallInstance {
        seed,
        n,
        q,
        alpha,
        beta: conjugate(alpha),
        x: vec![vec![0.0; n + 1]; s],
        f: vec![vec![0.0; n + 1]; s],
        g: vec![vec![0.0; n + 1]; s],
        m: vec![vec![0.0; n + 1]; s],
        eta: vec![vec![0.0; n + 1]; s],
    };
    let g_max = params.g_total / n as f64;
    for p in 0..s {
        let mut walk = 0.0;
        let mut acc = 0.0; // sum_{l<t} G_l X_l
        for t in 0..=n {
            if t > 0 {
                let xi = params.xi_max * 0.5 * (1.0 + (walk / (t as f64).sqrt()).tanh());
                let eta = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                inst.eta[p][t] = eta;
                inst.m[p][t] = inst.m[p][t - 1] + xi * eta;
                walk += eta;
            }
            let m = inst.m[p][t];
            let f = params.f_max * rng.random::<f64>() + (-m).max(0.0);
            let slack = params.slack_max * rng.random::<f64>();
            let x = ((f + m + acc) * (1.0 - slack)).max(0.0);
            let g = g_max * rng.random::<f64>();
            inst.f[p][t] = f;
            inst.x[p][t] = x;
            inst.g[p][t] = g;
            acc += g * x;
        }
    }
    Ok(inst)
}

impl GronwallInstance {
    pub fn samples(&self) -> usize {
        self.x.len()
    }

    /// Largest violation `X_n - (F_n + M_n + sum_{l<n} G_l X_l)` over all paths and times.
    pub fn hypothesis_gap(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for p in 0..self.samples() {
            let mut acc = 0.0;
            for t in 0..=self.n {
                let rhs = self.f[p][t] + self.m[p][t] + acc;
                worst = worst.max(self.x[p][t] - rhs);
                acc += self.g[p][t] * self.x[p][t];
            }
        }
        worst
    }

    /// Multiplies `X` and `F` (and `M`, keeping the hypothesis) by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let s = |a: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            a.iter()
                .map(|r| r.iter().map(|v| v * lambda).collect())
                .collect()
        };
        Self {
            x: s(&self.x),
            f: s(&self.f),
            m: s(&self.m),
            ..self.clone()
        }
    }
}

/// Outcome of [`verify_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    /// `E[sup X^q]` (sample mean).
    pub lhs: f64,
    pub rhs: f64,
    /// Relative standard error used for the tolerance.
    pub rel_se: f64,
    pub holds: bool,
}

/// Estimates both sides on the same sample; `holds` means `lhs <= rhs (1 + 3 rel_se)`,
/// with `rel_se` the delta-method relative error of `lhs / rhs`.
pub fn verify_bound(inst: &GronwallInstance) -> BoundCheck {
    let q = inst.q;
    let s = inst.samples() as f64;
    let sup_xq: Vec<f64> = inst
        .x
        .iter()
        .map(|r| r.iter().copied().fold(0.0, f64::max).powf(q))
        .collect();
    let sup_f: Vec<f64> = inst
        .f
        .iter()
        .map(|r| r.iter().copied().fold(0.0, f64::max))
        .collect();
    // prod_{l<n} (1 + G_l)^q
    let prods: Vec<f64> = inst
        .g
        .iter()
        .map(|r| r[..inst.n].iter().map(|g| (1.0 + g).powf(q)).product())
        .collect();
    let (lhs, lhs_se) = mean_se(&sup_xq);
    let (mf, mf_se) = mean_se(&sup_f);
    let prod_norm = if inst.beta.is_infinite() {
        prods.iter().copied().fold(0.0, f64::max)
    } else {
        (prods.iter().map(|v| v.powf(inst.beta)).sum::<f64>() / s).powf(1.0 / inst.beta)
    };
    let constant = (1.0 + 1.0 / (1.0 - inst.alpha * q)).powf(1.0 / inst.alpha);
    let rhs = constant * prod_norm * mf.powf(q);
    let rel = |m: f64, se: f64| if m > 0.0 { se / m } else { 0.0 };
    let rel_se = rel(lhs, lhs_se) + q * rel(mf, mf_se);
    BoundCheck {
        lhs,
        rhs,
        rel_se,
        holds: lhs <= rhs * (1.0 + 3.0 * rel_se),
    }
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Conditional mean of the martingale increment given the signs of the last `depth`
/// innovations, one entry per observed sign pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncrementGroup {
    pub step: usize,
    /// Bit `i` set when `eta_{step - i}` is positive.
    pub pattern: u32,
    pub count: usize,
    pub mean: f64,
    pub se: f64,
}

impl IncrementGroup {
    /// `|mean| / se` (zero when the group is degenerate).
    pub fn z(&self) -> f64 {
        if self.se > 0.0 {
            self.mean.abs() / self.se
        } else if self.mean == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Groups `M_{j+1} - M_j` by the sign pattern of `eta_j, ..., eta_{j-depth+1}`.
pub fn martingale_increments(
    inst: &GronwallInstance,
    step: usize,
    depth: usize,
) -> Vec<IncrementGroup> {
    assert!(
        step < inst.n,
        "step {step} has no successor (n = {})",
        inst.n
    );
    let depth = depth.min(step).min(16);
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); 1 << depth];
    for p in 0..inst.samples() {
        let mut pattern = 0usize;
        for i in 0..depth {
            if inst.eta[p][step - i] > 0.0 {
                pattern |= 1 << i;
            }
        }
        groups[pattern].push(inst.m[p][step + 1] - inst.m[p][step]);
    }
    groups
        .into_iter()
        .enumerate()
        .filter(|(_, g)| g.len() >= 2)
        .map(|(pattern, g)| {
            let (mean, se) = mean_se(&g);
            IncrementGroup {
                step,
                pattern: pattern as u32,
                count: g.len(),
                mean,
                se,
            }
        })
        .collect()
}

/// Summary of a batch of generated instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GronwallSummary {
    pub instances: usize,
    pub violations: usize,
    /// Largest `lhs / rhs` observed.
    pub worst_ratio: f64,
    /// Largest hypothesis gap observed (should be `<= 0` up to rounding).
    pub worst_hypothesis_gap: f64,
    pub checks: Vec<InstanceRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub seed: u64,
    pub n: usize,
    pub q: f64,
    pub alpha: f64,
    pub check: BoundCheck,
}

/// Exponents used by [`gronwall_suite`].
pub const SUITE_Q: [f64; 3] = [0.3, 0.5, 0.7];

/// Generates `instances` random instances (`n` uniform in `1..=max_n`, `q` cycling through
/// [`SUITE_Q`], `alpha` uniform in `[1, 0.95 / q)`) and checks the bound on each.
pub fn gronwall_suite(
    master: u64,
    instances: usize,
    max_n: usize,
    params: &SamplerParams,
) -> Result<GronwallSummary> {
    if max_n == 0 {
        return Err(Error::InvalidArgument("max_n must be at least 1".into()));
    }
    let mut checks = Vec::with_capacity(instances);
    let mut violations = 0;
    let mut worst_ratio = 0.0f64;
    let mut worst_gap = f64::NEG_INFINITY;
    for i in 0..instances {
        let seed = derive_seed(master, &[0x6772_6f6e, i as u64]);
        let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x5eed);
        let n = rng.random_range(1..=max_n);
        let q = SUITE_Q[i % SUITE_Q.len()];
        let alpha = if i % 7 == 0 {
            1.0
        } else {
            1.0 + rng.random::<f64>() * (0.95 / q - 1.0)
        };
        let mut p = *params;
        if i % 5 == 0 {
            p.g_total = 0.0;
        } else {
            p.g_total *= 2.0 * rng.random::<f64>();
        }
        let inst = generate_instance(seed, n, q, alpha, &p)?;
        worst_gap = worst_gap.max(inst.hypothesis_gap());
        let check = verify_bound(&inst);
        if !check.holds {
            violations += 1;
        }
        if check.rhs > 0.0 {
            worst_ratio = worst_ratio.max(check.lhs / check.rhs);
        }
        checks.push(InstanceRecord {
            seed,
            n,
            q,
            alpha,
            check,
        });
    }
    Ok(GronwallSummary {
        instances,
        violations,
        worst_ratio,
        worst_hypothesis_gap: worst_gap,
        checks,
    })
}

/// Majorant `Y_0 = a0`, `Y_{n+1} = Y_n (1 + rates_n) + sources_n`.
///
/// Every `y` with `y_0 <= a0` and `y_{n+1} <= y_n (1 + rates_n) + sources_n`, or with
/// `y_n <= a0 + sum_{l<n} (rates_l y_l + sources_l)`, stays below it.
pub fn deterministic_gronwall(a0: f64, rates: &[f64], sources: &[f64]) -> Result<Vec<f64>> {
    if rates.len() != sources.len() {
        return Err(Error::InvalidArgument(format!(
            "{} rates but {} sources",
            rates.len(),
            sources.len()
        )));
    }
    if !(a0 >= 0.0) || rates.iter().chain(sources).any(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidArgument(
            "Gronwall inputs must be nonnegative".into(),
        ));
    }
    let mut out = Vec::with_capacity(rates.len() + 1);
    let mut y = a0;
    out.push(y);
    for (r, s) in rates.iter().zip(sources) {
        y = y * (1.0 + r) + s;
        out.push(y);
    }
    Ok(out)
}
