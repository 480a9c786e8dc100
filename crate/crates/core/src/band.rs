//! Cyclically banded matrices and their direct factorization.

use std::fmt::Write as _;

use crate::{Error, Result};

/// Relative pivot size below which a factorization reports singularity.
const PIVOT_TOL: f64 = 1e-13;

/// Square matrix whose entry `(i, j)` can be nonzero only when `(j - i) mod n`
/// lies within `[-b, b]`.
///
/// Row `i` stores the diagonals `-b..=b` (fewer when `n < 2b + 1`, in which case
/// offsets that coincide mod `n` share one slot).
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicBandMatrix {
    n: usize,
    b: usize,
    width: usize,
    data: Vec<f64>,
}

impl PeriodicBandMatrix {
    pub fn zeros(n: usize, half_bandwidth: usize) -> Self {
        assert!(n > 0, "matrix size must be positive");
        let width = (2 * half_bandwidth + 1).min(n);
        Self {
            n,
            b: half_bandwidth,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn identity(n: usize, half_bandwidth: usize) -> Self {
        let mut m = Self::zeros(n, half_bandwidth);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.b
    }

    /// Storage slot of `(i, j)`, or `None` outside the cyclic band.
    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let d = (j + self.n - i % self.n) % self.n;
        let hi = self.width - 1 - self.b.min(self.width - 1);
        let off = if d <= hi {
            d as isize
        } else {
            d as isize - self.n as isize
        };
        if off < -(self.b as isize) {
            return None;
        }
        let col = (off + self.b.min(self.width - 1) as isize) as usize;
        Some(i * self.width + col)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let s = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside the cyclic band"));
        self.data[s] = value;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        match self.slot(i, j) {
            Some(s) => self.data[s] += value,
            None => panic!("entry ({i}, {j}) outside the cyclic band"),
        }
    }

    /// Column indices (with multiplicity removed) that row `i` may touch.
    fn row_columns(&self, i: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let lo = self.b.min(self.width - 1);
        (0..self.width).map(move |c| {
            let j = (i + self.n + c - lo) % self.n;
            (j, i * self.width + c)
        })
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row_columns(i).map(|(j, s)| self.data[s] * x[j]).sum();
        }
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                x[i] * self
                    .row_columns(i)
                    .map(|(j, s)| self.data[s] * y[j])
                    .sum::<f64>()
            })
            .sum()
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    /// `self + alpha * other`; both must share the band layout.
    pub fn add_scaled(&self, alpha: f64, other: &PeriodicBandMatrix) -> PeriodicBandMatrix {
        assert_eq!((self.n, self.b), (other.n, other.b), "band layouts differ");
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        out
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn fill_zero(&mut self) {
        self.data.fill(0.0);
    }

    /// Overwrites `self` with `a + alpha * b` without allocating.
    pub fn assign_sum(&mut self, a: &PeriodicBandMatrix, alpha: f64, b: &PeriodicBandMatrix) {
        assert_eq!((self.n, self.b), (a.n, a.b));
        assert_eq!((self.n, self.b), (b.n, b.b));
        for ((o, x), y) in self.data.iter_mut().zip(&a.data).zip(&b.data) {
            *o = x + alpha * y;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, s) in self.row_columns(i) {
                row[j] = self.data[s];
            }
        }
        d
    }

    /// Nonzero entries as `row col value` lines, for debugging dumps.
    pub fn to_triplets(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            let mut cols: Vec<(usize, usize)> = self.row_columns(i).collect();
            cols.sort_unstable();
            for (j, s) in cols {
                let v = self.data[s];
                if v != 0.0 {
                    let _ = writeln!(out, "{i} {j} {v:e}");
                }
            }
        }
        out
    }

    pub fn factorize(&self) -> Result<Factorization> {
        Factorization::new(self)
    }

    /// Direct solve; convenience for one-off systems.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.factorize()?.solve(rhs))
    }
}

/// Solves `K x = rhs` with a fresh factorization.
pub fn solve_linear(matrix: &PeriodicBandMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    matrix.solve(rhs)
}

/// LU factorization of a [`PeriodicBandMatrix`].
///
/// Large matrices are split as `[[A11, A12], [A21, A22]]` with the last `b` unknowns
/// in the border; `A11` is an ordinary band matrix (factored with partial pivoting
/// inside the band) and the `b x b` Schur complement is factored densely.
#[derive(Debug, Clone)]
pub enum Factorization {
    Dense(DenseLu),
    Bordered(Box<BorderedLu>),
}

impl Factorization {
    pub fn new(a: &PeriodicBandMatrix) -> Result<Self> {
        let (n, b) = (a.n, a.b);
        if n < 3 * b + 2 {
            DenseLu::new(a.to_dense(), a.max_abs()).map(Factorization::Dense)
        } else {
            BorderedLu::new(a).map(|f| Factorization::Bordered(Box::new(f)))
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Factorization::Dense(d) => d.n,
            Factorization::Bordered(f) => f.n,
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.size(), "right-hand side has the wrong length");
        match self {
            Factorization::Dense(d) => d.solve_in_place(x),
            Factorization::Bordered(f) => f.solve_in_place(x),
        }
    }
}

/// Dense LU with partial pivoting.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    fn new(a: Vec<Vec<f64>>, scale: f64) -> Result<Self> {
        let n = a.len();
        let mut lu: Vec<f64> = a.into_iter().flatten().collect();
        let mut perm: Vec<usize> = (0..n).collect();
        let tol = PIVOT_TOL * scale.max(f64::MIN_POSITIVE);
        for k in 0..n {
            let (p, pv) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
            if !(pv > tol) {
                return Err(Error::Singular {
                    row: k,
                    pivot: pv,
                    scale,
                });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let piv = lu[k * n + k];
            for i in k + 1..n {
                let l = lu[i * n + k] / piv;
                lu[i * n + k] = l;
                if l != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= l * lu[k * n + j];
                    }
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| x[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[i * n + j] * y[j]).sum();
            y[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[i * n + j] * y[j]).sum();
            y[i] = (y[i] - s) / self.lu[i * n + i];
        }
        x.copy_from_slice(&y);
    }
}

/// Non-periodic band LU with partial pivoting; row `i` keeps columns `i - b ..= i + 2b`.
#[derive(Debug, Clone)]
struct BandLu {
    n: usize,
    b: usize,
    /// Row-major, `3b + 1` slots per row; slot `j - i + b` holds column `j`.
    u: Vec<f64>,
    /// Multipliers: `l[k * b + m]` eliminates row `k + 1 + m` with pivot row `k`.
    l: Vec<f64>,
    /// Row interchanged with row `k` at step `k`.
    piv: Vec<usize>,
}

impl BandLu {
    fn width(&self) -> usize {
        3 * self.b + 1
    }

    fn new(n: usize, b: usize, entry: impl Fn(usize, usize) -> f64, scale: f64) -> Result<Self> {
        let w = 3 * b + 1;
        let mut u = vec![0.0; n * w];
        for i in 0..n {
            for j in i.saturating_sub(b)..=(i + b).min(n - 1) {
                u[i * w + j + b - i] = entry(i, j);
            }
        }
        let mut l = vec![0.0; n * b];
        let mut piv = vec![0; n];
        let tol = PIVOT_TOL * scale.max(f64::MIN_POSITIVE);
        let at = |i: usize, j: usize| i * w + j + b - i;
        for k in 0..n {
            let last = (k + b).min(n - 1);
            let mut p = k;
            let mut pv = u[at(k, k)].abs();
            for i in k + 1..=last {
                let v = u[at(i, k)].abs();
                if v > pv {
                    p = i;
                    pv = v;
                }
            }
            if !(pv > tol) {
                return Err(Error::Singular {
                    row: k,
                    pivot: pv,
                    scale,
                });
            }
            piv[k] = p;
            let jmax = (k + 2 * b).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    u.swap(at(k, j), at(p, j));
                }
            }
            let d = u[at(k, k)];
            for i in k + 1..=last {
                let m = u[at(i, k)] / d;
                l[k * b + (i - k - 1)] = m;
                u[at(i, k)] = 0.0;
                if m != 0.0 {
                    for j in k + 1..=jmax {
                        u[at(i, j)] -= m * u[at(k, j)];
                    }
                }
            }
        }
        Ok(Self { n, b, u, l, piv })
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let (n, b, w) = (self.n, self.b, self.width());
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk != 0.0 {
                for i in k + 1..=(k + b).min(n - 1) {
                    x[i] -= self.l[k * b + (i - k - 1)] * xk;
                }
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..=(i + 2 * b).min(n - 1) {
                s -= self.u[i * w + j + b - i] * x[j];
            }
            x[i] = s / self.u[i * w + b];
        }
    }
}

#[derive(Debug, Clone)]
pub struct BorderedLu {
    n: usize,
    b: usize,
    inner: BandLu,
    /// `A11^{-1} A12`, row-major `(n - b) x b`.
    y: Vec<f64>,
    /// `A21`, row-major `b x (n - b)`; only the two ends of each row are nonzero.
    a21: Vec<f64>,
    schur: DenseLu,
}

impl BorderedLu {
    fn new(a: &PeriodicBandMatrix) -> Result<Self> {
        let (n, b) = (a.n, a.b);
        let n1 = n - b;
        let scale = a.max_abs();
        let inner = BandLu::new(n1, b, |i, j| a.get(i, j), scale)?;
        let mut y = vec![0.0; n1 * b];
        let mut col = vec![0.0; n1];
        for c in 0..b {
            for (i, v) in col.iter_mut().enumerate() {
                *v = a.get(i, n1 + c);
            }
            inner.solve_in_place(&mut col);
            for i in 0..n1 {
                y[i * b + c] = col[i];
            }
        }
        let mut a21 = vec![0.0; b * n1];
        for r in 0..b {
            for j in 0..n1 {
                a21[r * n1 + j] = a.get(n1 + r, j);
            }
        }
        let mut s = vec![vec![0.0; b]; b];
        for r in 0..b {
            for c in 0..b {
                let mut v = a.get(n1 + r, n1 + c);
                for j in 0..n1 {
                    let aij = a21[r * n1 + j];
                    if aij != 0.0 {
                        v -= aij * y[j * b + c];
                    }
                }
                s[r][c] = v;
            }
        }
        let schur = DenseLu::new(s, scale).map_err(|e| match e {
            Error::Singular { row, pivot, scale } => Error::Singular {
                row: n1 + row,
                pivot,
                scale,
            },
            other => other,
        })?;
        Ok(Self {
            n,
            b,
            inner,
            y,
            a21,
            schur,
        })
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let (n, b) = (self.n, self.b);
        let n1 = n - b;
        let (x1, x2) = x.split_at_mut(n1);
        self.inner.solve_in_place(x1);
        for r in 0..b {
            let mut s = 0.0;
            for j in 0..n1 {
                let aij = self.a21[r * n1 + j];
                if aij != 0.0 {
                    s += aij * x1[j];
                }
            }
            x2[r] -= s;
        }
        self.schur.solve_in_place(x2);
        for i in 0..n1 {
            let mut s = 0.0;
            for c in 0..b {
                s += self.y[i * b + c] * x2[c];
            }
            x1[i] -= s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_band(n: usize, b: usize, seed: u64, diag: f64) -> PeriodicBandMatrix {
        let mut state = seed;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut m = PeriodicBandMatrix::zeros(n, b);
        for i in 0..n {
            for o in -(b as isize)..=(b as isize) {
                let j = (i as isize + o).rem_euclid(n as isize) as usize;
                m.set(i, j, next());
            }
            m.add(i, i, diag);
        }
        m
    }

    #[test]
    fn slot_layout_roundtrip() {
        for &(n, b) in &[(10, 3), (7, 3), (5, 3), (4, 3), (3, 1)] {
            let mut m = PeriodicBandMatrix::zeros(n, b);
            for i in 0..n {
                for o in -(b as isize)..=(b as isize) {
                    let j = (i as isize + o).rem_euclid(n as isize) as usize;
                    m.set(i, j, (i * 100 + j) as f64);
                }
            }
            for i in 0..n {
                for o in -(b as isize)..=(b as isize) {
                    let j = (i as isize + o).rem_euclid(n as isize) as usize;
                    assert_eq!(m.get(i, j), (i * 100 + j) as f64);
                }
            }
        }
        let m = PeriodicBandMatrix::zeros(10, 2);
        assert_eq!(m.get(0, 5), 0.0);
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let id = PeriodicBandMatrix::identity(20, 3);
        let rhs: Vec<f64> = (0..20).map(|i| i as f64 - 3.5).collect();
        assert_eq!(solve_linear(&id, &rhs).unwrap(), rhs);
    }

    #[test]
    fn bordered_and_dense_solves_have_small_residual() {
        for &(n, b) in &[(8, 3), (12, 3), (40, 3), (65, 4), (200, 5), (9, 2)] {
            let m = random_band(n, b, n as u64 * 31 + b as u64, 0.0);
            let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
            let x = m.solve(&rhs).unwrap();
            let r = m.matvec(&x);
            let res: f64 = r
                .iter()
                .zip(&rhs)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            let nr: f64 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(res <= 1e-11 * nr, "n={n} b={b} res={res}");
        }
    }

    #[test]
    fn singular_matrix_reports_pivot() {
        // circulant second difference: constant kernel
        let mut m = PeriodicBandMatrix::zeros(30, 1);
        for i in 0..30 {
            m.set(i, i, 2.0);
            m.set(i, (i + 1) % 30, -1.0);
            m.set(i, (i + 29) % 30, -1.0);
        }
        match m.factorize() {
            Err(Error::Singular { pivot, .. }) => assert!(pivot < 1e-12),
            other => panic!("expected singularity, got {other:?}"),
        }
    }

    #[test]
    fn triplet_dump_lists_nonzeros() {
        let id = PeriodicBandMatrix::identity(3, 1);
        assert_eq!(id.to_triplets(), "0 0 1e0\n1 1 1e0\n2 2 1e0\n");
    }
}
