//! Scalar Wiener paths with exact dyadic coarsening, and the multiplicative
//! diffusion operators `B`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::assembly::Operators;
use crate::spline::{compensated_sum, Coefficients};
use crate::{Error, Result};

/// Identifier of the random stream algorithm, recorded in every output manifest.
pub const RNG_ID: &str =
    "chacha20 (rand_chacha 0.9, seed_from_u64) + ziggurat standard normal (rand_distr 0.5); seeds split by splitmix64 chain";

pub const MAX_LEVEL: u32 = 24;

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed and a stream path, e.g.
/// `derive_seed(master, &[experiment_tag, path_index])`.
pub fn derive_seed(master: u64, stream: &[u64]) -> u64 {
    stream.iter().fold(splitmix64(master), |acc, &s| {
        splitmix64(acc ^ splitmix64(s))
    })
}

/// A Brownian path on `[0, T]` stored at every dyadic level.
///
/// Level `max_level` holds `2^max_level` i.i.d. `N(0, T / 2^max_level)` increments; each
/// coarser increment is the sum of its two children, so coarse and fine resolutions
/// driven by the same path see the same Brownian motion.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerPath {
    seed: u64,
    horizon: f64,
    /// `levels[l]` has `2^l` increments.
    levels: Vec<Vec<f64>>,
}

impl WienerPath {
    pub fn sample(seed: u64, horizon: f64, max_level: u32) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "path horizon T = {horizon} must be positive"
            )));
        }
        if max_level > MAX_LEVEL {
            return Err(Error::InvalidArgument(format!(
                "max_level {max_level} exceeds {MAX_LEVEL}"
            )));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let count = 1usize << max_level;
        let sd = (horizon / count as f64).sqrt();
        let finest: Vec<f64> = (0..count)
            .map(|_| sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        let mut levels = vec![finest];
        while levels.last().unwrap().len() > 1 {
            let fine = levels.last().unwrap();
            let coarse = fine.chunks_exact(2).map(|p| p[0] + p[1]).collect();
            levels.push(coarse);
        }
        levels.reverse();
        Ok(Self {
            seed,
            horizon,
            levels,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn max_level(&self) -> u32 {
        (self.levels.len() - 1) as u32
    }

    /// Increments on the uniform grid of `m` steps; `m` must be a power of two not
    /// exceeding `2^max_level`.
    pub fn increments_at(&self, m: usize) -> Result<&[f64]> {
        if !m.is_power_of_two() || m > 1usize << self.max_level() {
            return Err(Error::InvalidArgument(format!(
                "step count {m} is not a power-of-two divisor of 2^{}",
                self.max_level()
            )));
        }
        Ok(&self.levels[m.trailing_zeros() as usize])
    }

    /// `W(T)`.
    pub fn terminal_value(&self) -> f64 {
        self.levels[0][0]
    }

    /// Re-checks that every coarse increment is exactly the sum of its children.
    pub fn check_consistency(&self) -> Result<()> {
        for l in 0..self.levels.len() - 1 {
            let (coarse, fine) = (&self.levels[l], &self.levels[l + 1]);
            for (n, &c) in coarse.iter().enumerate() {
                if c != fine[2 * n] + fine[2 * n + 1] {
                    return Err(Error::Invariant(format!(
                        "Wiener path seed {}: level {l} increment {n} is not the sum of its children",
                        self.seed
                    )));
                }
            }
        }
        Ok(())
    }

    /// Writes `level,index,value` rows for every level.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "level,index,value")?;
        for (l, inc) in self.levels.iter().enumerate() {
            for (i, v) in inc.iter().enumerate() {
                writeln!(w, "{l},{i},{v:?}")?;
            }
        }
        Ok(())
    }
}

/// `sample_path(seed, T, max_level)`.
pub fn sample_path(seed: u64, horizon: f64, max_level: u32) -> Result<WienerPath> {
    WienerPath::sample(seed, horizon, max_level)
}

/// Pointwise diffusion nonlinearities `b` with `B(u)(x) = b(u(x))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "lowercase")]
pub enum DiffusionModel {
    Zero,
    Sin,
    Cos,
    /// `u^2 / (1 + u^2)`
    Rational,
    Linear {
        lambda: f64,
    },
}

impl DiffusionModel {
    #[inline]
    pub fn pointwise(&self, u: f64) -> f64 {
        match *self {
            DiffusionModel::Zero => 0.0,
            DiffusionModel::Sin => u.sin(),
            DiffusionModel::Cos => u.cos(),
            DiffusionModel::Rational => {
                let u2 = u * u;
                u2 / (1.0 + u2)
            }
            DiffusionModel::Linear { lambda } => lambda * u,
        }
    }

    /// Whether `||B(u)||` is uniformly bounded.
    pub fn bounded(&self) -> bool {
        !matches!(self, DiffusionModel::Linear { .. })
    }

    /// Uniform bound `L0` on `||B(u)||_{L^2}` over a domain of length `length`.
    /// Models with `|b| <= 1` give `sqrt(L)`; removing the mean cannot increase the norm.
    pub fn l0(&self, length: f64) -> Option<f64> {
        match self {
            DiffusionModel::Zero => Some(0.0),
            DiffusionModel::Sin | DiffusionModel::Cos | DiffusionModel::Rational => {
                Some(length.sqrt())
            }
            DiffusionModel::Linear { .. } => None,
        }
    }

    /// Lipschitz constant `C_B` of `b`, which bounds the L² Lipschitz constant of `B`.
    pub fn lipschitz_constant(&self) -> f64 {
        match *self {
            DiffusionModel::Zero => 0.0,
            DiffusionModel::Sin | DiffusionModel::Cos => 1.0,
            // max of |2u / (1 + u^2)^2| at u = 1/sqrt(3)
            DiffusionModel::Rational => 3.0 * 3f64.sqrt() / 8.0,
            DiffusionModel::Linear { lambda } => lambda.abs(),
        }
    }

    pub fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for DiffusionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiffusionModel::Zero => f.write_str("zero"),
            DiffusionModel::Sin => f.write_str("sin"),
            DiffusionModel::Cos => f.write_str("cos"),
            DiffusionModel::Rational => f.write_str("rational"),
            DiffusionModel::Linear { lambda } => write!(f, "linear({lambda})"),
        }
    }
}

impl FromStr for DiffusionModel {
    type Err = Error;

    /// Accepts `zero`, `sin`, `cos`, `rational`, `linear` (lambda 1) and `linear(<lambda>)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Ok(match s {
            "zero" => DiffusionModel::Zero,
            "sin" => DiffusionModel::Sin,
            "cos" => DiffusionModel::Cos,
            "rational" => DiffusionModel::Rational,
            "linear" => DiffusionModel::Linear { lambda: 1.0 },
            _ => {
                let inner = s
                    .strip_prefix("linear(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| {
                        Error::InvalidArgument(format!(
                            "unknown diffusion model '{s}' (expected zero, sin, cos, rational, linear(<lambda>))"
                        ))
                    })?;
                let lambda: f64 = inner.trim().parse().map_err(|_| {
                    Error::InvalidArgument(format!("bad lambda in diffusion model '{s}'"))
                })?;
                DiffusionModel::Linear { lambda }
            }
        })
    }
}

/// Mean-corrected load `(b(v) - mean(b(v)), B_i)`; entries sum to zero.
pub fn diffusion_load(model: &DiffusionModel, ops: &Operators, c: &[f64]) -> Vec<f64> {
    let space = ops.space();
    let n = space.dim();
    if matches!(model, DiffusionModel::Zero) {
        return vec![0.0; n];
    }
    let r = space.order();
    let h = space.mesh_size();
    let mut load = vec![0.0; n];
    for e in 0..n {
        for (q, &w) in space.rule().weights().iter().enumerate() {
            let mut v = 0.0;
            for a in 0..r {
                v += c[space.dof(e, a)] * space.tabulated(q, 0, a);
            }
            let f = w * h * model.pointwise(v);
            for a in 0..r {
                load[space.dof(e, a)] += f * space.tabulated(q, 0, a);
            }
        }
    }
    // the basis is a partition of unity, so the loads sum to the integral
    let mean = compensated_sum(load.iter().copied()) / space.length();
    for v in load.iter_mut() {
        *v -= mean * h;
    }
    load
}

/// Coefficients of `P_h (B(v) - mean)`, with the mean of the result reset to zero.
pub fn apply_diffusion(model: &DiffusionModel, ops: &Operators, c: &[f64]) -> Coefficients {
    let space = ops.space();
    if matches!(model, DiffusionModel::Zero) {
        return Coefficients::zeros(space.dim());
    }
    let d = ops.solve_mass(&diffusion_load(model, ops, c));
    space.enforce_zero_mean(&d)
}

/// Largest sampled ratio `||B(u) - B(v)|| / ||u - v||` over random zero-mean pairs.
///
/// States are random trigonometric sums projected onto the space, with amplitudes
/// drawn on several scales so both the small- and large-deviation regimes are probed.
pub fn lipschitz_probe(
    model: &DiffusionModel,
    ops: &Operators,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidArgument(
            "lipschitz_probe needs trials >= 1".into(),
        ));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for t in 0..trials {
        let u = random_state(ops, &mut rng, 3.0);
        let scale = [1.0, 1e-1, 1e-3][t % 3];
        let mut v = random_state(ops, &mut rng, scale);
        for (vi, ui) in v.iter_mut().zip(u.iter()) {
            *vi += ui;
        }
        let bu = apply_diffusion(model, ops, &u);
        let bv = apply_diffusion(model, ops, &v);
        let db: Vec<f64> = bu.iter().zip(bv.iter()).map(|(a, b)| a - b).collect();
        let du: Vec<f64> = u.iter().zip(v.iter()).map(|(a, b)| a - b).collect();
        let den = ops.l2_norm_sq(&du).sqrt();
        if den > 0.0 {
            worst = worst.max(ops.l2_norm_sq(&db).sqrt() / den);
        }
    }
    Ok(worst)
}

/// Random zero-mean state: a few Fourier modes with normal amplitudes times `scale`.
pub(crate) fn random_state(ops: &Operators, rng: &mut ChaCha20Rng, scale: f64) -> Coefficients {
    let l = ops.space().length();
    let modes: Vec<(f64, f64, f64)> = (1..=4)
        .map(|k| {
            let a: f64 = StandardNormal.sample(rng);
            let b: f64 = StandardNormal.sample(rng);
            (
                2.0 * std::f64::consts::PI * k as f64 / l,
                scale * a,
                scale * b,
            )
        })
        .collect();
    let c = ops.l2_project(|x| {
        modes
            .iter()
            .map(|&(w, a, b)| a * (w * x).sin() + b * (w * x).cos())
            .sum()
    });
    ops.space().enforce_zero_mean(&c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spline::SplineSpace;
    use std::f64::consts::PI;

    fn ops(n: usize) -> Operators {
        Operators::assemble(&SplineSpace::new(2.0 * PI, n, 4).unwrap()).unwrap()
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_path(7, 0.25, 10).unwrap();
        let b = sample_path(7, 0.25, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_path(8, 0.25, 10).unwrap());
    }

    #[test]
    fn levels_telescope() {
        let p = sample_path(3, 1.0, 12).unwrap();
        p.check_consistency().unwrap();
        let wt = p.terminal_value();
        for l in 0..=12 {
            let s: f64 = p.increments_at(1 << l).unwrap().iter().sum();
            assert!((s - wt).abs() < 1e-12);
        }
        assert_eq!(p.increments_at(1).unwrap(), &[wt]);
        assert_eq!(p.increments_at(4096).unwrap().len(), 4096);
        let c = p.increments_at(256).unwrap();
        let f = p.increments_at(512).unwrap();
        for n in 0..256 {
            assert_eq!(c[n], f[2 * n] + f[2 * n + 1]);
        }
    }

    #[test]
    fn bad_step_counts_rejected() {
        let p = sample_path(3, 1.0, 6).unwrap();
        assert!(p.increments_at(100).is_err());
        assert!(p.increments_at(128).is_err());
        assert!(sample_path(1, 1.0, 25).is_err());
        assert!(sample_path(1, 0.0, 5).is_err());
    }

    #[test]
    fn model_parsing() {
        assert_eq!(
            "sin".parse::<DiffusionModel>().unwrap(),
            DiffusionModel::Sin
        );
        assert_eq!(
            "linear(0.5)".parse::<DiffusionModel>().unwrap(),
            DiffusionModel::Linear { lambda: 0.5 }
        );
        assert!("tanh".parse::<DiffusionModel>().is_err());
        let m = DiffusionModel::Linear { lambda: 0.25 };
        assert_eq!(m.to_string().parse::<DiffusionModel>().unwrap(), m);
    }

    #[test]
    fn zero_model_gives_zero() {
        let o = ops(16);
        let c = o.l2_project(|x| x.sin());
        assert!(apply_diffusion(&DiffusionModel::Zero, &o, &c)
            .iter()
            .all(|&v| v == 0.0));
        let p = lipschitz_probe(&DiffusionModel::Zero, &o, 5, 1).unwrap();
        assert_eq!(p, 0.0);
    }

    #[test]
    fn linear_model_reproduces_scaled_state() {
        let o = ops(16);
        let c = o
            .space()
            .enforce_zero_mean(&o.l2_project(|x| x.sin() + 0.3 * (2.0 * x).cos()));
        let d = apply_diffusion(&DiffusionModel::Linear { lambda: 0.5 }, &o, &c);
        for (a, b) in d.iter().zip(c.iter()) {
            assert!((a - 0.5 * b).abs() < 1e-11);
        }
        let ratio = lipschitz_probe(&DiffusionModel::Linear { lambda: 0.5 }, &o, 6, 2).unwrap();
        assert!((ratio - 0.5).abs() < 1e-9, "{ratio}");
    }

    #[test]
    fn bounded_models_respect_l0_and_mean() {
        let o = ops(32);
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for model in [
            DiffusionModel::Sin,
            DiffusionModel::Cos,
            DiffusionModel::Rational,
        ] {
            let l0 = model.l0(o.space().length()).unwrap();
            for _ in 0..50 {
                let c = random_state(&o, &mut rng, 4.0);
                let d = apply_diffusion(&model, &o, &c);
                assert!(o.l2_norm_sq(&d).sqrt() <= l0 * (1.0 + 1e-6));
                assert!(o.space().mean_value(&d).abs() <= 1e-12);
            }
            let lip = lipschitz_probe(&model, &o, 30, 5).unwrap();
            assert!(
                lip <= model.lipschitz_constant() * (1.0 + 1e-6),
                "{model}: {lip}"
            );
        }
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(1, &[0, 0]);
        let b = derive_seed(1, &[0, 1]);
        let c = derive_seed(2, &[0, 0]);
        assert!(a != b && a != c && b != c);
        assert_eq!(a, derive_seed(1, &[0, 0]));
    }
}
