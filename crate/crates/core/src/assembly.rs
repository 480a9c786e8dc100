//! Discrete operators of the scheme: mass, bending, gradient, load vectors, the L²
//! projection and the convection term with its Jacobian.
//!
//! Every integral is evaluated element by element with the space's Gauss rule, which
//! is exact for all polynomial integrands that occur here (in particular the cubic
//! convection term), so identities such as `c · N(c) = 0` hold to rounding.

use crate::band::{Factorization, PeriodicBandMatrix};
use crate::spline::{Coefficients, SplineSpace};
use crate::Result;

/// Load vector `(f, B_i)`.
pub type LoadVector = Vec<f64>;

fn assemble_pair(space: &SplineSpace, deriv: usize) -> PeriodicBandMatrix {
    let n = space.dim();
    let r = space.order();
    let h = space.mesh_size();
    let scale = h.powi(1 - 2 * deriv as i32);
    let mut m = PeriodicBandMatrix::zeros(n, r - 1);
    // element matrix is identical on every element of a uniform mesh
    let mut local = vec![0.0; r * r];
    for (q, &w) in space.rule().weights().iter().enumerate() {
        for a in 0..r {
            let va = space.tabulated(q, deriv, a);
            for b in 0..r {
                local[a * r + b] += w * va * space.tabulated(q, deriv, b);
            }
        }
    }
    for e in 0..n {
        for a in 0..r {
            for b in 0..r {
                m.add(space.dof(e, a), space.dof(e, b), scale * local[a * r + b]);
            }
        }
    }
    m
}

/// Mass matrix `(B_j, B_i)`.
pub fn assemble_mass(space: &SplineSpace) -> PeriodicBandMatrix {
    assemble_pair(space, 0)
}

/// Bending matrix `(B_j'', B_i'')`.
pub fn assemble_bending(space: &SplineSpace) -> PeriodicBandMatrix {
    assemble_pair(space, 2)
}

/// Gradient matrix `(B_j', B_i')`.
pub fn assemble_gradient(space: &SplineSpace) -> PeriodicBandMatrix {
    assemble_pair(space, 1)
}

/// `(f, B_i)` by element quadrature.
pub fn assemble_load(space: &SplineSpace, f: impl Fn(f64) -> f64) -> LoadVector {
    let n = space.dim();
    let r = space.order();
    let h = space.mesh_size();
    let mut load = vec![0.0; n];
    for e in 0..n {
        for (q, &w) in space.rule().weights().iter().enumerate() {
            let fx = f(space.node_position(e, q)) * w * h;
            for a in 0..r {
                load[space.dof(e, a)] += fx * space.tabulated(q, 0, a);
            }
        }
    }
    load
}

/// Values `v` and `v'` of the spline with coefficients `c` at node `q` of element `e`.
#[inline]
fn value_and_slope(space: &SplineSpace, c: &[f64], e: usize, q: usize) -> (f64, f64) {
    let mut v = 0.0;
    let mut dv = 0.0;
    for a in 0..space.order() {
        let ci = c[space.dof(e, a)];
        v += ci * space.tabulated(q, 0, a);
        dv += ci * space.tabulated(q, 1, a);
    }
    (v, dv / space.mesh_size())
}

/// Convection vector `(v v', B_i)` where `v` has coefficients `c`.
pub fn convection_vector(space: &SplineSpace, c: &[f64]) -> LoadVector {
    let mut out = vec![0.0; space.dim()];
    convection_into(space, c, &mut out, None);
    out
}

/// Jacobian of [`convection_vector`]: `J_ij = ((v' B_j + v B_j'), B_i)`.
pub fn convection_jacobian(space: &SplineSpace, c: &[f64]) -> PeriodicBandMatrix {
    let mut jac = PeriodicBandMatrix::zeros(space.dim(), space.order() - 1);
    let mut out = vec![0.0; space.dim()];
    convection_into(space, c, &mut out, Some(&mut jac));
    jac
}

/// Fills the convection vector and, optionally, accumulates its Jacobian into `jac`
/// (which is zeroed first).
pub fn convection_into(
    space: &SplineSpace,
    c: &[f64],
    out: &mut [f64],
    mut jac: Option<&mut PeriodicBandMatrix>,
) {
    assert_eq!(c.len(), space.dim());
    let n = space.dim();
    let r = space.order();
    let h = space.mesh_size();
    out.fill(0.0);
    if let Some(j) = jac.as_deref_mut() {
        j.fill_zero();
    }
    let mut dofs = vec![0usize; r];
    for e in 0..n {
        for (a, d) in dofs.iter_mut().enumerate() {
            *d = space.dof(e, a);
        }
        for (q, &w) in space.rule().weights().iter().enumerate() {
            let (v, dv) = value_and_slope(space, c, e, q);
            let wh = w * h;
            let f = wh * v * dv;
            for a in 0..r {
                out[dofs[a]] += f * space.tabulated(q, 0, a);
            }
            if let Some(j) = jac.as_deref_mut() {
                for b in 0..r {
                    let col =
                        wh * (dv * space.tabulated(q, 0, b) + v * space.tabulated(q, 1, b) / h);
                    if col == 0.0 {
                        continue;
                    }
                    for a in 0..r {
                        j.add(dofs[a], dofs[b], col * space.tabulated(q, 0, a));
                    }
                }
            }
        }
    }
}

/// The space together with its assembled linear operators and the factored mass matrix.
#[derive(Debug, Clone)]
pub struct Operators {
    space: SplineSpace,
    pub mass: PeriodicBandMatrix,
    pub bending: PeriodicBandMatrix,
    pub gradient: PeriodicBandMatrix,
    mass_lu: Factorization,
}

impl Operators {
    pub fn assemble(space: &SplineSpace) -> Result<Self> {
        let mass = assemble_mass(space);
        let mass_lu = mass.factorize()?;
        Ok(Self {
            space: space.clone(),
            bending: assemble_bending(space),
            gradient: assemble_gradient(space),
            mass,
            mass_lu,
        })
    }

    pub fn space(&self) -> &SplineSpace {
        &self.space
    }

    pub fn mass_factorization(&self) -> &Factorization {
        &self.mass_lu
    }

    /// Solves `M c = load`.
    pub fn solve_mass(&self, load: &[f64]) -> Coefficients {
        Coefficients(self.mass_lu.solve(load))
    }

    /// L² projection onto the spline span.
    pub fn l2_project(&self, f: impl Fn(f64) -> f64) -> Coefficients {
        self.solve_mass(&assemble_load(&self.space, f))
    }

    /// Squared L² norm `c^T M c`.
    pub fn l2_norm_sq(&self, c: &[f64]) -> f64 {
        self.mass.quadratic_form(c)
    }

    /// Squared seminorm `||d^m v||^2` for `m` in `0..=2`.
    pub fn seminorm_sq(&self, c: &[f64], m: usize) -> f64 {
        match m {
            0 => self.mass.quadratic_form(c),
            1 => self.gradient.quadratic_form(c),
            2 => self.bending.quadratic_form(c),
            _ => panic!("seminorm order {m} not available (0..=2)"),
        }
    }
}

/// L² projection of `f` onto the span of `space` (assembles and factors the mass matrix).
pub fn l2_project(space: &SplineSpace, f: impl Fn(f64) -> f64) -> Result<Coefficients> {
    let mass = assemble_mass(space);
    let load = assemble_load(space, f);
    Ok(Coefficients(mass.solve(&load)?))
}
