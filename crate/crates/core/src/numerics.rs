//! Dense linear algebra and scalar search used by the solvers and by the
//! test oracles.
//!
//! Everything here works on small row-major square matrices. Game matrices
//! are strictly row diagonally dominant, which both guarantees that the LU
//! factorization exists and lets the Jacobi iteration serve as an
//! independent cross-check.

use std::ops::{Index, IndexMut};

use crate::error::{check_len, Error, Result};

/// Default tolerance for linear solves.
pub const SOLVE_TOL: f64 = 1e-10;
/// Default tolerance for golden-section search.
pub const SCALAR_TOL: f64 = 1e-8;

/// Square matrix in row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            check_len("matrix row", n, row.len())?;
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    /// Builds a matrix from `n` columns.
    pub fn from_columns(cols: &[Vec<f64>]) -> Result<Self> {
        let n = cols.len();
        let mut m = Self::zeros(n);
        for (j, col) in cols.iter().enumerate() {
            check_len("matrix column", n, col.len())?;
            for (i, &v) in col.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n.max(1)).take(self.n)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        self.rows().map(|row| dot(row, x)).collect()
    }

    pub fn transpose_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        let mut out = vec![0.0; self.n];
        for (row, &xi) in self.rows().zip(x) {
            for (o, &m) in out.iter_mut().zip(row) {
                *o += m * xi;
            }
        }
        out
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        self.rows()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Returns the first row that is not strictly diagonally dominant.
    pub fn dominance_violation(&self) -> Option<(usize, f64, f64)> {
        self.rows().enumerate().find_map(|(i, row)| {
            let diag = row[i].abs();
            let off: f64 = row
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, v)| v.abs())
                .sum();
            (diag <= off).then_some((i, diag, off))
        })
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn l1_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct LuFactorization {
    lu: Matrix,
    perm: Vec<usize>,
}

impl LuFactorization {
    pub fn new(a: &Matrix) -> Result<Self> {
        let n = a.dim();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.inf_norm().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let (p, pivot) =
                (k..n)
                    .map(|i| (i, lu[(i, k)].abs()))
                    .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot <= f64::EPSILON * scale {
                return Err(Error::Singular { pivot: k });
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let d = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / d;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        let u = lu[(k, j)];
                        lu[(i, j)] -= f * u;
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.dim()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        debug_assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[(i, i)];
        }
        x
    }

    /// Solves `Aᵀ x = b` with the same factorization.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        debug_assert_eq!(b.len(), n);
        // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ z = b, Lᵀ y = z, x = Pᵀ y.
        let mut z = b.to_vec();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[(j, i)] * z[j]).sum();
            z[i] = (z[i] - s) / self.lu[(i, i)];
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[(j, i)] * z[j]).sum();
            z[i] -= s;
        }
        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = z[k];
        }
        x
    }
}

/// A dense system `m x = rhs`.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub m: Matrix,
    pub rhs: Vec<f64>,
}

impl LinearSystem {
    pub fn new(m: Matrix, rhs: Vec<f64>) -> Result<Self> {
        check_len("rhs", m.dim(), rhs.len())?;
        Ok(Self { m, rhs })
    }
}

/// Factorization of a strictly row diagonally dominant matrix. Every solve
/// is followed by a residual check against the original matrix.
#[derive(Debug, Clone)]
pub struct DominantSolver {
    m: Matrix,
    lu: LuFactorization,
    tol: f64,
}

impl DominantSolver {
    pub fn new(m: Matrix, tol: f64) -> Result<Self> {
        if let Some((row, diagonal, off_diagonal)) = m.dominance_violation() {
            return Err(Error::NotDiagonallyDominant {
                row,
                diagonal,
                off_diagonal,
            });
        }
        let lu = LuFactorization::new(&m)?;
        Ok(Self { m, lu, tol })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        check_len("rhs", self.dim(), rhs.len())?;
        let x = self.lu.solve(rhs);
        let r = residual(&self.m, &x, rhs, false);
        self.check(r, rhs)?;
        Ok(x)
    }

    pub fn solve_transpose(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        check_len("rhs", self.dim(), rhs.len())?;
        let x = self.lu.solve_transpose(rhs);
        let r = residual(&self.m, &x, rhs, true);
        self.check(r, rhs)?;
        Ok(x)
    }

    fn check(&self, residual: f64, rhs: &[f64]) -> Result<()> {
        let bound = self.tol * (1.0 + inf_norm(rhs));
        if residual > bound || !residual.is_finite() {
            return Err(Error::Residual { residual, bound });
        }
        Ok(())
    }
}

fn residual(m: &Matrix, x: &[f64], rhs: &[f64], transposed: bool) -> f64 {
    let mx = if transposed {
        m.transpose_mul_vec(x)
    } else {
        m.mul_vec(x)
    };
    inf_dist(&mx, rhs)
}

/// Solves a strictly diagonally dominant system by LU with partial pivoting.
pub fn solve_dd(sys: &LinearSystem, tol: f64) -> Result<Vec<f64>> {
    DominantSolver::new(sys.m.clone(), tol)?.solve(&sys.rhs)
}

/// Solves a general nonsingular system. The residual bound is relative to
/// `‖m‖·‖x‖ + ‖rhs‖` because no dominance is assumed.
pub fn solve_dense(sys: &LinearSystem, tol: f64) -> Result<Vec<f64>> {
    let lu = LuFactorization::new(&sys.m)?;
    let x = lu.solve(&sys.rhs);
    let r = residual(&sys.m, &x, &sys.rhs, false);
    let bound = tol * (sys.m.inf_norm() * inf_norm(&x) + inf_norm(&sys.rhs)).max(1.0);
    if r > bound || !r.is_finite() {
        return Err(Error::Residual { residual: r, bound });
    }
    Ok(x)
}

/// Jacobi iteration from zero. Converges whenever `m` is strictly row
/// diagonally dominant; used as the independent route in cross-checks.
pub fn jacobi(sys: &LinearSystem, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = sys.m.dim();
    let mut x = vec![0.0; n];
    for it in 0..max_iter {
        let next: Vec<f64> = (0..n)
            .map(|i| {
                let row = sys.m.row(i);
                let off: f64 = row
                    .iter()
                    .zip(&x)
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, (m, xj))| m * xj)
                    .sum();
                (sys.rhs[i] - off) / row[i]
            })
            .collect();
        let step = inf_dist(&next, &x);
        x = next;
        if step <= tol {
            return Ok(x);
        }
        if it + 1 == max_iter {
            return Err(Error::NotConverged {
                iterations: max_iter,
                residual: step,
                last: x,
            });
        }
    }
    Ok(x)
}

/// Golden-section search for the maximum of a unimodal function on
/// `[lo, hi]`. Returns `(argmax, max)`.
pub fn maximize_scalar<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    let fm = f(mid);
    [(c, fc), (d, fd), (mid, fm)]
        .into_iter()
        .fold((mid, fm), |best, cur| if cur.1 > best.1 { cur } else { best })
}

/// Central-difference gradient.
pub fn fd_gradient<F>(mut f: F, x0: &[f64], h: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut x = x0.to_vec();
    (0..x0.len())
        .map(|i| {
            x[i] = x0[i] + h;
            let up = f(&x);
            x[i] = x0[i] - h;
            let down = f(&x);
            x[i] = x0[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}
