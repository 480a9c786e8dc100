//! Gauss–Legendre rules on the unit interval.

use std::f64::consts::PI;

/// Gauss–Legendre rule mapped to `[0, 1]`; weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// `points`-point Gauss–Legendre rule, exact for polynomials of degree `2 * points - 1`.
    pub fn gauss_legendre(points: usize) -> Self {
        assert!(points >= 1, "quadrature needs at least one point");
        let n = points;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        // Roots are symmetric; solve for the upper half by Newton on P_n.
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // map [-1, 1] -> [0, 1]
            nodes[i] = 0.5 * (1.0 - x);
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        Self { nodes, weights }
    }

    /// The rule used for splines of order `r`: `ceil((3r - 2) / 2)` points, enough to
    /// integrate the cubic convection term `v v' B_i` (degree `3r - 4`) exactly.
    pub fn for_spline_order(r: usize) -> Self {
        Self::gauss_legendre((3 * r - 2).div_ceil(2))
    }

    pub fn points_per_element(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Highest polynomial degree integrated exactly.
    pub fn exactness_degree(&self) -> usize {
        2 * self.nodes.len() - 1
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let len = b - a;
        self.iter().map(|(x, w)| w * f(a + len * x)).sum::<f64>() * len
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
