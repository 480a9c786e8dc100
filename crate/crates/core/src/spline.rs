//! Uniform periodic B-spline spaces on `[0, L)`.
//!
//! Basis function `i` is the cardinal B-spline of degree `r - 1` supported on the
//! elements `i, i + 1, ..., i + r - 1` (indices mod `N`). On element `e` the nonzero
//! functions are `e - r + 1, ..., e` (mod `N`); local index `a` in `0..r` maps to the
//! global index `e - r + 1 + a`.

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::quadrature::QuadratureRule;
use crate::{Error, Result};

/// Highest derivative order tabulated and evaluated.
pub const MAX_DERIV: usize = 4;

/// B-spline coefficients of a function in the (unconstrained) spline span.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Coefficients(pub Vec<f64>);

impl Coefficients {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self(vec![value; n])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Coefficients {
    type Target = Vec<f64>;
    fn deref(&self) -> &Vec<f64> {
        &self.0
    }
}

impl DerefMut for Coefficients {
    fn deref_mut(&mut self) -> &mut Vec<f64> {
        &mut self.0
    }
}

impl From<Vec<f64>> for Coefficients {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Serializable summary of a space, recorded in output metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceDescriptor {
    pub length: f64,
    pub elements: usize,
    pub order: usize,
    pub origin: f64,
}

/// The periodic spline space of order `r` (degree `r - 1`, `C^{r-3}`) on a uniform
/// mesh of `N` elements.
#[derive(Debug, Clone)]
pub struct SplineSpace {
    length: f64,
    elements: usize,
    order: usize,
    origin: f64,
    h: f64,
    rule: QuadratureRule,
    /// Reference-element basis derivatives at the quadrature nodes, unscaled by `h`,
    /// laid out as `[(node * (MAX_DERIV + 1) + deriv) * order + local]`.
    table: Vec<f64>,
}

impl SplineSpace {
    pub fn new(length: f64, elements: usize, order: usize) -> Result<Self> {
        Self::with_origin(length, elements, order, 0.0)
    }

    pub fn with_origin(length: f64, elements: usize, order: usize, origin: f64) -> Result<Self> {
        if order < 4 {
            return Err(Error::InvalidSpace(format!(
                "order r = {order} is too small: the scheme needs H^2-conforming splines, r >= 4"
            )));
        }
        if elements < order {
            return Err(Error::InvalidSpace(format!(
                "element count N = {elements} must be at least the order r = {order}"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidSpace(format!(
                "domain length L = {length} must be positive and finite"
            )));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidSpace("knot origin must be finite".into()));
        }
        let rule = QuadratureRule::for_spline_order(order);
        let mut table = vec![0.0; rule.points_per_element() * (MAX_DERIV + 1) * order];
        let mut local = vec![[0.0; MAX_DERIV + 1]; order];
        for (q, &t) in rule.nodes().iter().enumerate() {
            reference_basis(order - 1, t, &mut local);
            for d in 0..=MAX_DERIV {
                for a in 0..order {
                    table[(q * (MAX_DERIV + 1) + d) * order + a] = local[a][d];
                }
            }
        }
        Ok(Self {
            length,
            elements,
            order,
            origin,
            h: length / elements as f64,
            rule,
            table,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Number of elements, equal to the dimension of the unconstrained space.
    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn dim(&self) -> usize {
        self.elements
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn degree(&self) -> usize {
        self.order - 1
    }

    /// Global smoothness class `C^{r-3}`.
    pub fn smoothness(&self) -> usize {
        self.order - 3
    }

    pub fn mesh_size(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn descriptor(&self) -> SpaceDescriptor {
        SpaceDescriptor {
            length: self.length,
            elements: self.elements,
            order: self.order,
            origin: self.origin,
        }
    }

    /// Global index of local basis function `a` on element `e`.
    #[inline]
    pub fn dof(&self, e: usize, a: usize) -> usize {
        (e + self.elements + a + 1 - self.order) % self.elements
    }

    /// Reference derivative `d` of local basis `a` at quadrature node `q`, in element
    /// coordinates; multiply by `h^{-d}` for the physical derivative.
    #[inline]
    pub fn tabulated(&self, q: usize, d: usize, a: usize) -> f64 {
        self.table[(q * (MAX_DERIV + 1) + d) * self.order + a]
    }

    /// Physical position of quadrature node `q` in element `e`.
    #[inline]
    pub fn node_position(&self, e: usize, q: usize) -> f64 {
        self.origin + (e as f64 + self.rule.nodes()[q]) * self.h
    }

    /// Locates `x` (wrapped periodically): element index and local coordinate in `[0, 1)`.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let y = (x - self.origin).rem_euclid(self.length);
        let s = y / self.h;
        let e = (s.floor() as usize).min(self.elements - 1);
        let t = (s - e as f64).clamp(0.0, 1.0);
        (e, t)
    }

    /// The `r` basis functions whose support contains `x`, with their `deriv`-th
    /// derivatives. Derivatives above `r - 1` are identically zero.
    pub fn eval_basis(&self, x: f64, deriv: usize) -> Vec<(usize, f64)> {
        assert!(deriv <= MAX_DERIV, "derivative order {deriv} not supported");
        let (e, t) = self.locate(x);
        let mut local = vec![[0.0; MAX_DERIV + 1]; self.order];
        reference_basis(self.degree(), t, &mut local);
        let scale = self.h.powi(-(deriv as i32));
        (0..self.order)
            .map(|a| (self.dof(e, a), local[a][deriv] * scale))
            .collect()
    }

    /// `sum_i c_i d^deriv B_i (x)`.
    pub fn function_eval(&self, c: &[f64], x: f64, deriv: usize) -> f64 {
        self.check_len(c);
        self.eval_basis(x, deriv)
            .into_iter()
            .map(|(i, v)| c[i] * v)
            .sum()
    }

    /// Mean value `(1/L) * integral of the function`; every basis function integrates to `h`.
    pub fn mean_value(&self, c: &[f64]) -> f64 {
        self.check_len(c);
        compensated_sum(c.iter().copied()) / self.elements as f64
    }

    /// Subtracts the mean: the constant function has all coefficients equal.
    pub fn enforce_zero_mean(&self, c: &[f64]) -> Coefficients {
        let m = self.mean_value(c);
        Coefficients(c.iter().map(|v| v - m).collect())
    }

    /// Integral of `f` over one period using the space's element quadrature.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        let mut total = 0.0;
        for e in 0..self.elements {
            let mut s = 0.0;
            for (q, &w) in self.rule.weights().iter().enumerate() {
                s += w * f(self.node_position(e, q));
            }
            total += s;
        }
        total * self.h
    }

    /// Coefficients of the same function in the nested space with `target` elements.
    ///
    /// Uses uniform dyadic subdivision: a degree-`p` cardinal B-spline is the sum of
    /// `2^-p * binom(p + 1, j)` copies of its half-width translates. `target` must be
    /// `N * 2^s`.
    pub fn refine(&self, c: &[f64], target: usize) -> Result<Coefficients> {
        self.check_len(c);
        let ratio = target / self.elements;
        if !target.is_multiple_of(self.elements) || !ratio.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "cannot refine N = {} to {target}: not a dyadic refinement",
                self.elements
            )));
        }
        let p = self.degree();
        let mask: Vec<f64> = (0..=p + 1)
            .map(|j| binomial(p + 1, j) / f64::powi(2.0, p as i32))
            .collect();
        let mut cur = c.to_vec();
        while cur.len() < target {
            let n = cur.len();
            let m = 2 * n;
            let mut next = vec![0.0; m];
            for (i, &ci) in cur.iter().enumerate() {
                if ci == 0.0 {
                    continue;
                }
                for (j, &w) in mask.iter().enumerate() {
                    next[(2 * i + j) % m] += w * ci;
                }
            }
            cur = next;
        }
        Ok(Coefficients(cur))
    }

    #[inline]
    fn check_len(&self, c: &[f64]) {
        assert_eq!(
            c.len(),
            self.elements,
            "coefficient vector length does not match the space dimension"
        );
    }
}

/// Neumaier summation.
pub(crate) fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// All nonzero B-splines of degree `p` on the unit-spaced knot vector `0, 1, ..., 2p + 1`
/// over the span `[p, p + 1)`, at `u = p + t`, with derivatives `0..=MAX_DERIV`.
///
/// `out[a][d]` is the `d`-th derivative of local function `a`, which is the cardinal
/// B-spline evaluated at `p - a + t`. Triangular table scheme with the inverse knot
/// differences stored below the diagonal.
fn reference_basis(p: usize, t: f64, out: &mut [[f64; MAX_DERIV + 1]]) {
    debug_assert_eq!(out.len(), p + 1);
    let span = p;
    let u = p as f64 + t;
    let knot = |j: usize| j as f64;
    let mut ndu = vec![vec![0.0; p + 1]; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = u - knot(span + 1 - j);
        right[j] = knot(span + j) - u;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    for row in out.iter_mut() {
        row.fill(0.0);
    }
    for j in 0..=p {
        out[j][0] = ndu[j][p];
    }
    let nd = MAX_DERIV.min(p);
    let mut a = vec![vec![0.0; p + 1]; 2];
    for r in 0..=p {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0][0] = 1.0;
        for k in 1..=nd {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = p - k;
            if r >= k {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                d = a[s2][0] * ndu[rk as usize][pk];
            }
            let j1: usize = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2: usize = if r as isize - 1 <= pk as isize {
                k - 1
            } else {
                p - r
            };
            for j in j1..=j2 {
                let idx = (rk + j as isize) as usize;
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                d += a[s2][j] * ndu[idx][pk];
            }
            if r <= pk {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            out[r][k] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut factor = p as f64;
    for k in 1..=nd {
        for row in out.iter_mut() {
            row[k] *= factor;
        }
        factor *= (p - k) as f64;
    }
}
