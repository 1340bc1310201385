//! Small dense complex matrices.
//!
//! Everything here targets the 1x1 to 4x4 blocks that appear as per-node or
//! per-wavenumber symbols, so the routines favour clarity over blocking.

use num_complex::Complex64;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

const QR_MAX_ITER: usize = 500;

/// Square complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row slices. Panics if the rows are ragged.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "row {i} has wrong length");
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        m
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn diagonal(values: &[Complex64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.n, v.len());
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.n, other.n);
        CMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.n, other.n);
        CMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> CMatrix {
        CMatrix {
            n: self.n,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    /// Commutator `self * other - other * self`.
    pub fn commutator(&self, other: &CMatrix) -> CMatrix {
        self.matmul(other).sub(&other.matmul(self))
    }

    /// Gauss-Jordan inverse with partial pivoting.
    pub fn inverse(&self) -> Result<CMatrix> {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = CMatrix::identity(n);
        let scale = self.frobenius().max(f64::MIN_POSITIVE);
        for col in 0..n {
            let p = (col..n)
                .max_by(|&x, &y| a[(x, col)].norm().total_cmp(&a[(y, col)].norm()))
                .unwrap();
            if a[(p, col)].norm() <= 1e-14 * scale {
                return Err(Error::Decomposition("matrix is singular".into()));
            }
            a.swap_rows(p, col);
            inv.swap_rows(p, col);
            let piv = a[(col, col)].inv();
            for j in 0..n {
                a[(col, j)] *= piv;
                inv[(col, j)] *= piv;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if f == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    let ac = a[(col, j)];
                    let ic = inv[(col, j)];
                    a[(r, j)] -= f * ac;
                    inv[(r, j)] -= f * ic;
                }
            }
        }
        Ok(inv)
    }

    /// Solves `self * x = b`.
    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        Ok(self.inverse()?.mul_vec(b))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.n {
            self.data.swap(a * self.n + j, b * self.n + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.n {
            self.data.swap(i * self.n + a, i * self.n + b);
        }
    }

    /// Eigenvalues: closed form up to 2x2, shifted QR iteration above.
    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        if !self.is_finite() {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        match self.n {
            0 => Ok(vec![]),
            1 => Ok(vec![self[(0, 0)]]),
            2 => Ok(eig2(self[(0, 0)], self[(0, 1)], self[(1, 0)], self[(1, 1)]).to_vec()),
            _ => self.eigenvalues_qr(),
        }
    }

    fn eigenvalues_qr(&self) -> Result<Vec<Complex64>> {
        let n = self.n;
        let mut h = self.hessenberg();
        let mut eig = vec![Complex64::new(0.0, 0.0); n];
        let mut hi = n - 1;
        let mut iter = 0usize;
        let mut since_deflation = 0usize;
        loop {
            if hi == 0 {
                eig[0] = h[(0, 0)];
                break;
            }
            // locate the start of the active unreduced block
            let mut lo = hi;
            while lo > 0 {
                let sub = h[(lo, lo - 1)].norm();
                let diag = h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm();
                let floor = f64::EPSILON * diag.max(f64::MIN_POSITIVE);
                if sub <= floor {
                    h[(lo, lo - 1)] = Complex64::new(0.0, 0.0);
                    break;
                }
                lo -= 1;
            }
            if lo == hi {
                eig[hi] = h[(hi, hi)];
                hi -= 1;
                since_deflation = 0;
                continue;
            }
            iter += 1;
            since_deflation += 1;
            if iter > QR_MAX_ITER {
                return Err(Error::Decomposition("QR iteration did not converge".into()));
            }
            let mu = if since_deflation % 11 == 10 {
                h[(hi, hi)] + h[(hi, hi - 1)].norm()
            } else {
                let [e1, e2] = eig2(
                    h[(hi - 1, hi - 1)],
                    h[(hi - 1, hi)],
                    h[(hi, hi - 1)],
                    h[(hi, hi)],
                );
                let d = h[(hi, hi)];
                if (e1 - d).norm() <= (e2 - d).norm() {
                    e1
                } else {
                    e2
                }
            };
            qr_step(&mut h, lo, hi, mu);
        }
        Ok(eig)
    }

    /// Unitary similarity reduction to upper Hessenberg form using Givens rotations.
    fn hessenberg(&self) -> CMatrix {
        let n = self.n;
        let mut h = self.clone();
        for j in 0..n.saturating_sub(2) {
            for i in (j + 2..n).rev() {
                let a = h[(i - 1, j)];
                let b = h[(i, j)];
                if b == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let (c, s) = givens(a, b);
                for col in 0..n {
                    let x = h[(i - 1, col)];
                    let y = h[(i, col)];
                    h[(i - 1, col)] = c.conj() * x + s.conj() * y;
                    h[(i, col)] = -s * x + c * y;
                }
                for row in 0..n {
                    let x = h[(row, i - 1)];
                    let y = h[(row, i)];
                    h[(row, i - 1)] = x * c + y * s;
                    h[(row, i)] = -x * s.conj() + y * c.conj();
                }
            }
        }
        h
    }

    /// Basis of the null space assuming the matrix has rank `rank`.
    ///
    /// Gauss-Jordan elimination with complete pivoting is run for exactly
    /// `rank` steps; the remaining columns are free.
    pub fn null_space(&self, rank: usize) -> Vec<Vec<Complex64>> {
        let n = self.n;
        assert!(rank <= n);
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for step in 0..rank {
            let mut best = (step, step);
            let mut best_val = -1.0;
            for r in step..n {
                for c in step..n {
                    let v = a[(r, c)].norm();
                    if v > best_val {
                        best_val = v;
                        best = (r, c);
                    }
                }
            }
            if best_val <= 0.0 {
                break;
            }
            a.swap_rows(step, best.0);
            a.swap_cols(step, best.1);
            perm.swap(step, best.1);
            let piv = a[(step, step)].inv();
            for j in 0..n {
                a[(step, j)] *= piv;
            }
            for r in 0..n {
                if r == step {
                    continue;
                }
                let f = a[(r, step)];
                if f == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    let v = a[(step, j)];
                    a[(r, j)] -= f * v;
                }
            }
        }
        (rank..n)
            .map(|free| {
                let mut x = vec![Complex64::new(0.0, 0.0); n];
                x[free] = Complex64::new(1.0, 0.0);
                for i in 0..rank {
                    x[i] = -a[(i, free)];
                }
                let mut v = vec![Complex64::new(0.0, 0.0); n];
                for (i, xi) in x.into_iter().enumerate() {
                    v[perm[i]] = xi;
                }
                let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                v.iter().map(|z| z / norm).collect()
            })
            .collect()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

/// Rotation `(c, s)` such that `[[conj c, conj s], [-s, c]] * [a, b]^T = [r, 0]^T`.
fn givens(a: Complex64, b: Complex64) -> (Complex64, Complex64) {
    let r = a.norm().hypot(b.norm());
    if r == 0.0 {
        (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    } else {
        (a / r, b / r)
    }
}

fn qr_step(h: &mut CMatrix, lo: usize, hi: usize, mu: Complex64) {
    for i in lo..=hi {
        h[(i, i)] -= mu;
    }
    let mut rots = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
        for j in k..=hi {
            let x = h[(k, j)];
            let y = h[(k + 1, j)];
            h[(k, j)] = c.conj() * x + s.conj() * y;
            h[(k + 1, j)] = -s * x + c * y;
        }
        rots.push((k, c, s));
    }
    for (k, c, s) in rots {
        for i in lo..=(k + 2).min(hi) {
            let x = h[(i, k)];
            let y = h[(i, k + 1)];
            h[(i, k)] = x * c + y * s;
            h[(i, k + 1)] = -x * s.conj() + y * c.conj();
        }
    }
    for i in lo..=hi {
        h[(i, i)] += mu;
    }
}

/// Eigenvalues of `[[a, b], [c, d]]`, larger-modulus root first.
fn eig2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> [Complex64; 2] {
    let mean = (a + d) * 0.5;
    let half_diff = (a - d) * 0.5;
    let disc = (half_diff * half_diff + b * c).sqrt();
    let plus = mean + disc;
    let minus = mean - disc;
    let (big, small) = if plus.norm() >= minus.norm() {
        (plus, minus)
    } else {
        (minus, plus)
    };
    let det = a * d - b * c;
    // recover the small root from the product of roots to avoid cancellation
    let small = if big.norm() > 0.0 && small.norm() < 1e-3 * big.norm() {
        det / big
    } else {
        small
    };
    [big, small]
}
