//! The phi and psi functions of exponential integrators, on scalars and on
//! small diagonalizable matrices.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Below this modulus the Taylor series is used instead of the recurrence.
pub const SERIES_THRESHOLD: f64 = 1.0;
const SERIES_TERMS: usize = 30;
const MAX_PHI_ORDER: usize = 4;
const RESIDUAL_TOL: f64 = 1e-12;
const EIG_GROUP_TOL: f64 = 1e-12;

const INV_FACTORIAL: [f64; 5] = [1.0, 1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0];

fn check_args(k: usize, z: Complex64) -> Result<()> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite argument {z}")));
    }
    if k > MAX_PHI_ORDER {
        return Err(Error::InvalidInput(format!(
            "phi order {k} exceeds {MAX_PHI_ORDER}"
        )));
    }
    Ok(())
}

/// `phi_k(z) = sum_j z^j / (j + k)!`, truncated.
pub fn phi_series(k: usize, z: Complex64) -> Complex64 {
    // Horner on the coefficients 1/(j+k)!
    let mut coeffs = [0.0f64; SERIES_TERMS];
    let mut c = INV_FACTORIAL[k.min(4)];
    for kk in 5..=k {
        c /= kk as f64;
    }
    for (j, slot) in coeffs.iter_mut().enumerate() {
        *slot = c;
        c /= (j + k + 1) as f64;
    }
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

/// `phi_k` from `phi_0 = e^z` and `phi_k = (phi_{k-1} - 1/(k-1)!) / z`.
pub fn phi_recurrence(k: usize, z: Complex64) -> Complex64 {
    let mut phi = z.exp();
    for j in 1..=k {
        phi = (phi - INV_FACTORIAL[j - 1]) / z;
    }
    phi
}

/// Evaluates `phi_k(z)` for `k <= 4`.
pub fn eval_phi(k: usize, z: Complex64) -> Result<Complex64> {
    check_args(k, z)?;
    if k == 0 {
        return Ok(z.exp());
    }
    if z.norm() < SERIES_THRESHOLD {
        Ok(phi_series(k, z))
    } else {
        Ok(phi_recurrence(k, z))
    }
}

/// Evaluates `psi_k(z)` for `k` in `1..=2`.
pub fn eval_psi(k: usize, z: Complex64) -> Result<Complex64> {
    match k {
        1 => eval_phi(1, -z),
        2 => Ok(eval_phi(1, -z)? - eval_phi(2, -z)?),
        _ => Err(Error::InvalidInput(format!("psi order {k} not in 1..=2"))),
    }
}

/// The functions of `dt * L` that the schemes apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExpFunction {
    Phi0,
    Phi1,
    Phi2,
    Psi1,
    Psi2,
}

impl ExpFunction {
    pub fn eval(self, z: Complex64) -> Result<Complex64> {
        match self {
            ExpFunction::Phi0 => eval_phi(0, z),
            ExpFunction::Phi1 => eval_phi(1, z),
            ExpFunction::Phi2 => eval_phi(2, z),
            ExpFunction::Psi1 => eval_psi(1, z),
            ExpFunction::Psi2 => eval_psi(2, z),
        }
    }
}

/// Small dense complex matrix together with its eigendecomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolMatrix {
    entries: CMatrix,
    eig_values: Vec<Complex64>,
    eig_vectors: CMatrix,
    eig_vectors_inv: CMatrix,
}

impl SymbolMatrix {
    /// Diagonalizes `entries` numerically.
    pub fn new(entries: CMatrix) -> Result<Self> {
        let n = entries.dim();
        let values = entries.eigenvalues()?;
        let scale = entries.frobenius().max(f64::MIN_POSITIVE);

        // cluster numerically equal eigenvalues so each cluster gets a full eigenspace
        let mut assigned = vec![false; n];
        let mut ordered = Vec::with_capacity(n);
        let mut columns: Vec<Vec<Complex64>> = Vec::with_capacity(n);
        for i in 0..n {
            if assigned[i] {
                continue;
            }
            let members: Vec<usize> = (i..n)
                .filter(|&j| !assigned[j] && (values[j] - values[i]).norm() <= EIG_GROUP_TOL * scale)
                .collect();
            let mean = members.iter().map(|&j| values[j]).sum::<Complex64>() / members.len() as f64;
            let shifted = entries.sub(&CMatrix::identity(n).scale(mean));
            let basis = shifted.null_space(n - members.len());
            for (&j, v) in members.iter().zip(basis) {
                assigned[j] = true;
                ordered.push(values[j]);
                columns.push(v);
            }
        }

        let mut q = CMatrix::zeros(n);
        for (j, col) in columns.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                q[(i, j)] = *v;
            }
        }
        Self::from_parts(entries, ordered, q)
    }

    /// Builds a symbol from a known eigendecomposition, verifying it.
    pub fn from_parts(entries: CMatrix, eig_values: Vec<Complex64>, eig_vectors: CMatrix) -> Result<Self> {
        let n = entries.dim();
        if eig_values.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: eig_values.len(),
            });
        }
        if eig_vectors.dim() != n {
            return Err(Error::Dimension {
                expected: n,
                got: eig_vectors.dim(),
            });
        }
        let eig_vectors_inv = eig_vectors
            .inverse()
            .map_err(|_| Error::Decomposition("matrix is not diagonalizable".into()))?;
        let sym = Self {
            entries,
            eig_values,
            eig_vectors,
            eig_vectors_inv,
        };
        let (recon, ident) = sym.residuals();
        if recon > RESIDUAL_TOL || ident > RESIDUAL_TOL {
            return Err(Error::Decomposition(format!(
                "residual {recon:.3e} / {ident:.3e} above tolerance"
            )));
        }
        Ok(sym)
    }

    pub fn scalar(value: Complex64) -> Self {
        Self {
            entries: CMatrix::diagonal(&[value]),
            eig_values: vec![value],
            eig_vectors: CMatrix::identity(1),
            eig_vectors_inv: CMatrix::identity(1),
        }
    }

    /// Linear shallow-water symbol on the f-plane in `(phi', u, v)` for wavenumber `(kx, ky)`.
    ///
    /// Pass `f = 0` for the gravity-only operator.
    pub fn swe_plane(kx: f64, ky: f64, phi_bar: f64, f: f64) -> Result<Self> {
        if !(phi_bar > 0.0) {
            return Err(Error::InvalidInput("mean geopotential must be positive".into()));
        }
        let i = Complex64::i();
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let fc = Complex64::new(f, 0.0);
        let entries = CMatrix::from_rows(&[
            vec![zero, -i * kx * phi_bar, -i * ky * phi_bar],
            vec![-i * kx, zero, fc],
            vec![-i * ky, -fc, zero],
        ]);
        let k2 = kx * kx + ky * ky;
        if k2 == 0.0 && f == 0.0 {
            return Self::from_parts(entries, vec![zero; 3], CMatrix::identity(3));
        }
        let omega = (f * f + phi_bar * k2).sqrt();
        let values = vec![-i * omega, zero, i * omega];
        let mut q = CMatrix::zeros(3);
        if k2 == 0.0 {
            // pure inertial oscillation, geopotential decoupled
            let cols = [[zero, one, -i], [one, zero, zero], [zero, one, i]];
            for (j, col) in cols.iter().enumerate() {
                for (r, v) in col.iter().enumerate() {
                    q[(r, j)] = *v;
                }
            }
        } else {
            for (j, &lam) in values.iter().enumerate() {
                let col = if j == 1 {
                    [fc, -i * ky, i * kx]
                } else {
                    let d = lam * lam + f * f;
                    [one, (-i * kx * lam - i * ky * f) / d, (i * kx * f - i * ky * lam) / d]
                };
                let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                for (r, v) in col.iter().enumerate() {
                    q[(r, j)] = v / norm;
                }
            }
        }
        Self::from_parts(entries, values, q)
    }

    pub fn dim(&self) -> usize {
        self.entries.dim()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn eig_values(&self) -> &[Complex64] {
        &self.eig_values
    }

    pub fn eig_vectors(&self) -> &CMatrix {
        &self.eig_vectors
    }

    pub fn eig_vectors_inv(&self) -> &CMatrix {
        &self.eig_vectors_inv
    }

    /// Relative reconstruction residual and `Q Q^-1 - I` residual.
    pub fn residuals(&self) -> (f64, f64) {
        let n = self.dim();
        let recon = self
            .eig_vectors
            .matmul(&CMatrix::diagonal(&self.eig_values))
            .matmul(&self.eig_vectors_inv);
        let denom = self.entries.frobenius();
        let diff = recon.sub(&self.entries).frobenius();
        let recon_res = if denom > 0.0 { diff / denom } else { diff };
        let ident = self
            .eig_vectors
            .matmul(&self.eig_vectors_inv)
            .sub(&CMatrix::identity(n))
            .frobenius();
        (recon_res, ident)
    }

    /// `f(scale * M)` as a dense matrix.
    pub fn function_matrix(&self, f: ExpFunction, scale: f64) -> Result<CMatrix> {
        let d = self
            .eig_values
            .iter()
            .map(|&l| f.eval(l * scale))
            .collect::<Result<Vec<_>>>()?;
        Ok(self
            .eig_vectors
            .matmul(&CMatrix::diagonal(&d))
            .matmul(&self.eig_vectors_inv))
    }

    /// `f(scale * M) v` without forming the matrix.
    pub fn apply_fn(&self, f: ExpFunction, scale: f64, v: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut w = self.eig_vectors_inv.mul_vec(v);
        for (wi, &l) in w.iter_mut().zip(&self.eig_values) {
            *wi *= f.eval(l * scale)?;
        }
        Ok(self.eig_vectors.mul_vec(&w))
    }

    /// `M v`.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.entries.mul_vec(v)
    }

    /// `(I - alpha M)^{-1} v` through the eigenbasis.
    pub fn solve_shifted(&self, alpha: f64, v: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut w = self.eig_vectors_inv.mul_vec(v);
        for (wi, &l) in w.iter_mut().zip(&self.eig_values) {
            let d = 1.0 - l * alpha;
            if d.norm() < 1e-14 {
                return Err(Error::SingularConfiguration(format!(
                    "I - {alpha} L is singular"
                )));
            }
            *wi /= d;
        }
        Ok(self.eig_vectors.mul_vec(&w))
    }
}

/// `phi_k(scale * M)` through the eigendecomposition of `M`.
pub fn phi_of_matrix(k: usize, m: &SymbolMatrix, scale: f64) -> Result<CMatrix> {
    let f = match k {
        0 => ExpFunction::Phi0,
        1 => ExpFunction::Phi1,
        2 => ExpFunction::Phi2,
        _ => {
            let d = m
                .eig_values
                .iter()
                .map(|&l| eval_phi(k, l * scale))
                .collect::<Result<Vec<_>>>()?;
            return Ok(m
                .eig_vectors
                .matmul(&CMatrix::diagonal(&d))
                .matmul(&m.eig_vectors_inv));
        }
    };
    m.function_matrix(f, scale)
}

/// `psi_k(scale * M)` for `k` in `1..=2`.
pub fn psi_of_matrix(k: usize, m: &SymbolMatrix, scale: f64) -> Result<CMatrix> {
    let f = match k {
        1 => ExpFunction::Psi1,
        2 => ExpFunction::Psi2,
        _ => return Err(Error::InvalidInput(format!("psi order {k} not in 1..=2"))),
    };
    m.function_matrix(f, scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn euler_identity() {
        let v = eval_phi(0, c(0.0, PI)).unwrap();
        assert!((v - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn values_at_origin() {
        assert_eq!(eval_phi(1, c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        assert_eq!(eval_phi(2, c(0.0, 0.0)).unwrap(), c(0.5, 0.0));
        assert_eq!(eval_psi(1, c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        assert_eq!(eval_psi(2, c(0.0, 0.0)).unwrap(), c(0.5, 0.0));
    }

    #[test]
    fn psi1_at_i_pi() {
        let got = eval_psi(1, c(0.0, PI)).unwrap();
        let want = c(0.0, -2.0 / PI);
        assert!((got - want).norm() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(eval_phi(0, c(f64::NAN, 0.0)).is_err());
        assert!(eval_phi(5, c(0.1, 0.0)).is_err());
        assert!(eval_psi(3, c(0.1, 0.0)).is_err());
        assert!(eval_psi(0, c(0.1, 0.0)).is_err());
    }

    #[test]
    fn zero_matrix_exponential_is_identity() {
        let m = SymbolMatrix::new(CMatrix::zeros(3)).unwrap();
        let e = phi_of_matrix(0, &m, 0.7).unwrap();
        assert_eq!(e, CMatrix::identity(3));
    }

    #[test]
    fn jordan_block_is_rejected() {
        let j = CMatrix::from_real_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]);
        assert!(matches!(SymbolMatrix::new(j), Err(Error::Decomposition(_))));
    }

    #[test]
    fn gravity_symbol_eigenvalues() {
        let m = SymbolMatrix::swe_plane(3.0, 4.0, 2.0, 0.0).unwrap();
        let w = (2.0f64 * 25.0).sqrt();
        let ev = m.eig_values();
        assert!((ev[0] - c(0.0, -w)).norm() < 1e-14);
        assert!(ev[1].norm() < 1e-14);
        assert!((ev[2] - c(0.0, w)).norm() < 1e-14);
    }

    #[test]
    fn f_plane_symbol_at_zero_wavenumber() {
        let m = SymbolMatrix::swe_plane(0.0, 0.0, 1.0, 1.5).unwrap();
        let ev = m.eig_values();
        assert!((ev[0] - c(0.0, -1.5)).norm() < 1e-15);
        assert!((ev[2] - c(0.0, 1.5)).norm() < 1e-15);
    }

    #[test]
    fn shifted_solve_inverts() {
        let m = SymbolMatrix::swe_plane(1.0, -2.0, 1.0, 0.5).unwrap();
        let v = vec![c(1.0, 0.5), c(-0.3, 0.0), c(0.2, 0.1)];
        let x = m.solve_shifted(0.25, &v).unwrap();
        let back: Vec<_> = x
            .iter()
            .zip(m.apply(&x))
            .map(|(a, la)| a - la * 0.25)
            .collect();
        for (a, b) in back.iter().zip(&v) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
