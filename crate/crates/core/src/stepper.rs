//! Implicit Euler–Maruyama in time, periodic splines in space.
//!
//! One step finds `c` with
//!
//! ```text
//! F(c) = (M + k nu A - k G) c + k N(c) - M c_n - M d_n dW_n = 0
//! ```
//!
//! where `M`, `A`, `G` are the mass, bending and gradient matrices, `N` is the
//! convection vector and `d_n` the projected, mean-corrected diffusion `B(u_n)`.
//! The drift is implicit; the noise is evaluated at the old state.

use serde::{Deserialize, Serialize};

use crate::assembly::{convection_into, Operators};
use crate::band::PeriodicBandMatrix;
use crate::noise::{apply_diffusion, DiffusionModel, WienerPath};
use crate::spline::{Coefficients, SpaceDescriptor};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    /// Fourth-order viscosity `nu`.
    pub nu: f64,
    /// Horizon `T`.
    pub horizon: f64,
    /// Number of steps `M`; `k = T / M`.
    pub steps: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Backtracking factor for damped Newton; `1` disables backtracking.
    pub damping: f64,
    /// Diagnostic switch dropping the convection term (linear scheme).
    #[serde(default)]
    pub linearized: bool,
}

impl SchemeParams {
    pub fn new(nu: f64, horizon: f64, steps: usize) -> Self {
        Self {
            nu,
            horizon,
            steps,
            newton_tol: 1e-10,
            newton_max_iter: 30,
            damping: 0.5,
            linearized: false,
        }
    }

    pub fn step_size(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return bad(format!("viscosity nu = {} must be positive", self.nu));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon T = {} must be positive", self.horizon));
        }
        if self.steps == 0 {
            return bad("step count M must be positive".into());
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad(format!("damping {} must lie in (0, 1]", self.damping));
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iter == 0 {
            return bad("Newton tolerance and iteration limit must be positive".into());
        }
        Ok(())
    }
}

/// Newton diagnostics for one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonStats {
    pub iterations: usize,
    pub residual: f64,
    /// Residual before the last update (for convergence-order checks).
    pub previous_residual: f64,
    pub damped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub seed: u64,
    pub params: SchemeParams,
    pub model: DiffusionModel,
    pub space: SpaceDescriptor,
}

/// States `u_h^0, ..., u_h^M` of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Coefficients>,
    pub meta: TrajectoryMeta,
    pub newton_stats: Vec<NewtonStats>,
}

impl Trajectory {
    pub fn step_size(&self) -> f64 {
        self.meta.params.step_size()
    }

    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn terminal(&self) -> &Coefficients {
        self.states.last().expect("trajectory has an initial state")
    }
}

/// `P_h u0` with the mean removed.
pub fn initial_state(ops: &Operators, u0: impl Fn(f64) -> f64) -> Coefficients {
    ops.space().enforce_zero_mean(&ops.l2_project(u0))
}

/// Per-path stepping context: the fixed linear part `M + k nu A - k G` and work buffers.
pub struct Stepper<'a> {
    ops: &'a Operators,
    params: SchemeParams,
    model: DiffusionModel,
    linear: PeriodicBandMatrix,
    jac: PeriodicBandMatrix,
    system: PeriodicBandMatrix,
    k: f64,
}

impl<'a> Stepper<'a> {
    pub fn new(ops: &'a Operators, params: &SchemeParams, model: &DiffusionModel) -> Result<Self> {
        params.validate()?;
        let k = params.step_size();
        let linear = ops
            .mass
            .add_scaled(k * params.nu, &ops.bending)
            .add_scaled(-k, &ops.gradient);
        let n = ops.space().dim();
        let b = ops.mass.half_bandwidth();
        Ok(Self {
            ops,
            params: *params,
            model: *model,
            jac: PeriodicBandMatrix::zeros(n, b),
            system: PeriodicBandMatrix::zeros(n, b),
            linear,
            k,
        })
    }

    pub fn step_size(&self) -> f64 {
        self.k
    }

    /// Residual `F(c)` for right-hand side `rhs = M c_n + s_n`; also refreshes the
    /// convection Jacobian when `with_jacobian` is set.
    fn residual(&mut self, c: &[f64], rhs: &[f64], out: &mut [f64], with_jacobian: bool) {
        let n = c.len();
        if self.params.linearized {
            out.fill(0.0);
            if with_jacobian {
                self.jac.fill_zero();
            }
        } else {
            let jac = if with_jacobian {
                Some(&mut self.jac)
            } else {
                None
            };
            convection_into(self.ops.space(), c, out, jac);
        }
        let lin = self.linear.matvec(c);
        for i in 0..n {
            out[i] = lin[i] + self.k * out[i] - rhs[i];
        }
    }

    /// Discrete dual norm `|r| / sqrt(h)`, comparable to the L² norm of `M^{-1} r`.
    fn norm(&self, r: &[f64]) -> f64 {
        (r.iter().map(|v| v * v).sum::<f64>() / self.ops.space().mesh_size()).sqrt()
    }

    /// Advances `c_n` by one step with Brownian increment `dw`.
    pub fn step(&mut self, c_n: &[f64], dw: f64) -> Result<(Coefficients, NewtonStats)> {
        self.step_indexed(c_n, dw, 0)
    }

    fn step_indexed(
        &mut self,
        c_n: &[f64],
        dw: f64,
        index: usize,
    ) -> Result<(Coefficients, NewtonStats)> {
        let n = c_n.len();
        assert_eq!(n, self.ops.space().dim());
        if !dw.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite increment {dw}")));
        }
        let mut rhs = self.ops.mass.matvec(c_n);
        if dw != 0.0 && !matches!(self.model, DiffusionModel::Zero) {
            let d = apply_diffusion(&self.model, self.ops, c_n);
            let md = self.ops.mass.matvec(&d);
            for (r, v) in rhs.iter_mut().zip(md) {
                *r += v * dw;
            }
        }
        let tol = self.params.newton_tol * (1.0 + self.norm(&rhs));
        let mut c = c_n.to_vec();
        let mut res = vec![0.0; n];
        self.residual(&c, &rhs, &mut res, true);
        let mut rnorm = self.norm(&res);
        let mut prev = f64::NAN;
        let mut damped = false;
        let mut iterations = 0;
        let mut trial = vec![0.0; n];
        let mut trial_res = vec![0.0; n];
        while !(rnorm <= tol) {
            if iterations >= self.params.newton_max_iter || !rnorm.is_finite() {
                return Err(Error::NewtonDivergence {
                    step: index,
                    iterations,
                    residual: rnorm,
                    tolerance: tol,
                });
            }
            iterations += 1;
            self.system.assign_sum(&self.linear, self.k, &self.jac);
            let lu = self
                .system
                .factorize()
                .map_err(|_| Error::NewtonDivergence {
                    step: index,
                    iterations,
                    residual: rnorm,
                    tolerance: tol,
                })?;
            let mut delta: Vec<f64> = res.iter().map(|v| -v).collect();
            lu.solve_in_place(&mut delta);
            let mut lambda = 1.0;
            loop {
                for i in 0..n {
                    trial[i] = c[i] + lambda * delta[i];
                }
                self.residual(&trial, &rhs, &mut trial_res, false);
                let tn = self.norm(&trial_res);
                if tn < rnorm || self.params.damping >= 1.0 || lambda < 1e-4 {
                    break;
                }
                lambda *= self.params.damping;
                damped = true;
            }
            std::mem::swap(&mut c, &mut trial);
            prev = rnorm;
            // recompute with the Jacobian at the accepted iterate
            self.residual(&c, &rhs, &mut res, true);
            rnorm = self.norm(&res);
        }
        Ok((
            Coefficients(c),
            NewtonStats {
                iterations,
                residual: rnorm,
                previous_residual: prev,
                damped,
            },
        ))
    }

    /// Runs `M` steps from `c0` using the path's increments at resolution `M`.
    pub fn run(&mut self, c0: Coefficients, path: &WienerPath) -> Result<Trajectory> {
        let m = self.params.steps;
        let increments = path.increments_at(m)?;
        let mut states = Vec::with_capacity(m + 1);
        let mut stats = Vec::with_capacity(m);
        states.push(c0);
        for (n, &dw) in increments.iter().enumerate() {
            let (next, st) = self.step_indexed(&states[n], dw, n)?;
            states.push(next);
            stats.push(st);
        }
        Ok(Trajectory {
            states,
            meta: TrajectoryMeta {
                seed: path.seed(),
                params: self.params,
                model: self.model,
                space: self.ops.space().descriptor(),
            },
            newton_stats: stats,
        })
    }
}

/// One step of the scheme; builds a temporary [`Stepper`].
pub fn step(
    ops: &Operators,
    params: &SchemeParams,
    model: &DiffusionModel,
    c_n: &[f64],
    dw: f64,
) -> Result<(Coefficients, NewtonStats)> {
    Stepper::new(ops, params, model)?.step(c_n, dw)
}

/// Projects `u0` and integrates the whole path.
pub fn run_path(
    ops: &Operators,
    params: &SchemeParams,
    model: &DiffusionModel,
    u0: impl Fn(f64) -> f64,
    path: &WienerPath,
) -> Result<Trajectory> {
    let c0 = initial_state(ops, u0);
    Stepper::new(ops, params, model)?.run(c0, path)
}
