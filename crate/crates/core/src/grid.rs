//! Periodic grids, the discrete Fourier pair, spectral derivatives and cubic
//! Lagrange interpolation.

use std::fmt;
use std::ops::{Add, Mul};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

const MAX_DERIVATIVE_ORDER: u32 = 8;

/// Plans for one transform length.
#[derive(Clone)]
struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FftPair {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }
}

/// Uniform periodic grid with `points` unique nodes on `[0, length)`.
#[derive(Clone)]
pub struct PeriodicGrid1D {
    length: f64,
    points: usize,
    dx: f64,
    fft: FftPair,
}

impl fmt::Debug for PeriodicGrid1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid1D")
            .field("length", &self.length)
            .field("points", &self.points)
            .finish()
    }
}

impl PartialEq for PeriodicGrid1D {
    fn eq(&self, other: &Self) -> bool {
        self.length == other.length && self.points == other.points
    }
}

impl PeriodicGrid1D {
    pub fn new(length: f64, points: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidInput(format!("grid length {length} must be positive")));
        }
        if points < 4 || points % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "grid needs an even number of points >= 4, got {points}"
            )));
        }
        Ok(Self {
            length,
            points,
            dx: length / points as f64,
            fft: FftPair::new(points),
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Spectral truncation `M = P / 2`.
    pub fn truncation(&self) -> usize {
        self.points / 2
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.x(i)).collect()
    }

    /// Signed integer wavenumber of FFT slot `idx`.
    pub fn mode_index(&self, idx: usize) -> i64 {
        signed_mode(idx, self.points)
    }

    /// Angular wavenumber `2 pi k / L` of FFT slot `idx`.
    pub fn wavenumber(&self, idx: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.mode_index(idx) as f64 / self.length
    }

    /// Minimal-image signed separation `a - b`.
    pub fn separation(&self, a: f64, b: f64) -> f64 {
        let d = a - b;
        d - (d / self.length).round() * self.length
    }

    pub fn wrap(&self, x: f64) -> f64 {
        x - (x / self.length).floor() * self.length
    }

    /// Forward transform with the `1/P` normalization.
    pub fn forward(&self, f: &[Complex64]) -> Result<SpectralCoefficients> {
        check_len(f.len(), self.points)?;
        let mut buf = f.to_vec();
        self.fft.forward.process(&mut buf);
        let s = 1.0 / self.points as f64;
        buf.iter_mut().for_each(|z| *z *= s);
        Ok(SpectralCoefficients {
            nx: self.points,
            ny: 1,
            lx: self.length,
            ly: 1.0,
            modes: buf,
        })
    }

    pub fn forward_real(&self, f: &[f64]) -> Result<SpectralCoefficients> {
        let c: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward(&c)
    }

    pub fn inverse(&self, c: &SpectralCoefficients) -> Result<Vec<Complex64>> {
        check_len(c.modes.len(), self.points)?;
        if c.ny != 1 {
            return Err(Error::Dimension { expected: 1, got: c.ny });
        }
        let mut buf = c.modes.clone();
        self.fft.inverse.process(&mut buf);
        Ok(buf)
    }

    /// Cubic Lagrange interpolation of nodal values at arbitrary positions.
    pub fn interp_cubic<T>(&self, f: &[T], targets: &[f64]) -> Result<Vec<T>>
    where
        T: Copy + Add<Output = T> + Mul<f64, Output = T>,
    {
        check_len(f.len(), self.points)?;
        Ok(targets.iter().map(|&x| self.interp_one(f, x)).collect())
    }

    /// Two-point linear interpolation.
    pub fn interp_linear<T>(&self, f: &[T], targets: &[f64]) -> Result<Vec<T>>
    where
        T: Copy + Add<Output = T> + Mul<f64, Output = T>,
    {
        check_len(f.len(), self.points)?;
        Ok(targets
            .iter()
            .map(|&x| {
                let (i, t) = self.cell(x);
                f[i] * (1.0 - t) + f[(i + 1) % self.points] * t
            })
            .collect())
    }

    fn cell(&self, x: f64) -> (usize, f64) {
        let pos = self.wrap(x) / self.dx;
        let l = pos.floor();
        ((l as i64).rem_euclid(self.points as i64) as usize, pos - l)
    }

    fn stencil(&self, x: f64) -> (usize, [f64; 4]) {
        let pos = self.wrap(x) / self.dx;
        let l = pos.floor();
        let theta = pos - l;
        let base = (l as i64 - 1).rem_euclid(self.points as i64) as usize;
        (base, lagrange_weights(theta))
    }

    fn interp_one<T>(&self, f: &[T], x: f64) -> T
    where
        T: Copy + Add<Output = T> + Mul<f64, Output = T>,
    {
        let (base, w) = self.stencil(x);
        let p = self.points;
        f[base] * w[0] + f[(base + 1) % p] * w[1] + f[(base + 2) % p] * w[2] + f[(base + 3) % p] * w[3]
    }
}

/// Weights of the four-point stencil `l-1, l, l+1, l+2` at offset `theta` from `l`.
pub fn lagrange_weights(theta: f64) -> [f64; 4] {
    let t = theta;
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

fn signed_mode(idx: usize, n: usize) -> i64 {
    if idx <= n / 2 {
        idx as i64
    } else {
        idx as i64 - n as i64
    }
}

fn check_len(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        Err(Error::Dimension { expected, got })
    } else {
        Ok(())
    }
}

/// Biperiodic tensor-product grid. Node `(ix, iy)` is stored at `iy * nx + ix`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicGrid2D {
    x: PeriodicGrid1D,
    y: PeriodicGrid1D,
}

impl PeriodicGrid2D {
    pub fn new(lx: f64, nx: usize, ly: f64, ny: usize) -> Result<Self> {
        Ok(Self {
            x: PeriodicGrid1D::new(lx, nx)?,
            y: PeriodicGrid1D::new(ly, ny)?,
        })
    }

    pub fn x_axis(&self) -> &PeriodicGrid1D {
        &self.x
    }

    pub fn y_axis(&self) -> &PeriodicGrid1D {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.points * self.y.points
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.x.points + ix
    }

    pub fn position(&self, idx: usize) -> (f64, f64) {
        (self.x.x(idx % self.x.points), self.y.x(idx / self.x.points))
    }

    pub fn forward(&self, f: &[Complex64]) -> Result<SpectralCoefficients> {
        let (nx, ny) = (self.x.points, self.y.points);
        check_len(f.len(), nx * ny)?;
        let mut buf = f.to_vec();
        for row in buf.chunks_mut(nx) {
            self.x.fft.forward.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); ny];
        for ix in 0..nx {
            for iy in 0..ny {
                col[iy] = buf[iy * nx + ix];
            }
            self.y.fft.forward.process(&mut col);
            for iy in 0..ny {
                buf[iy * nx + ix] = col[iy];
            }
        }
        let s = 1.0 / (nx * ny) as f64;
        buf.iter_mut().for_each(|z| *z *= s);
        Ok(SpectralCoefficients {
            nx,
            ny,
            lx: self.x.length,
            ly: self.y.length,
            modes: buf,
        })
    }

    pub fn inverse(&self, c: &SpectralCoefficients) -> Result<Vec<Complex64>> {
        let (nx, ny) = (self.x.points, self.y.points);
        check_len(c.modes.len(), nx * ny)?;
        let mut buf = c.modes.clone();
        for row in buf.chunks_mut(nx) {
            self.x.fft.inverse.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); ny];
        for ix in 0..nx {
            for iy in 0..ny {
                col[iy] = buf[iy * nx + ix];
            }
            self.y.fft.inverse.process(&mut col);
            for iy in 0..ny {
                buf[iy * nx + ix] = col[iy];
            }
        }
        Ok(buf)
    }

    /// Tensor-product cubic interpolation at `(x, y)` targets.
    pub fn interp_cubic<T>(&self, f: &[T], xs: &[f64], ys: &[f64]) -> Result<Vec<T>>
    where
        T: Copy + Add<Output = T> + Mul<f64, Output = T>,
    {
        check_len(f.len(), self.len())?;
        check_len(ys.len(), xs.len())?;
        let (nx, ny) = (self.x.points, self.y.points);
        Ok(xs
            .iter()
            .zip(ys)
            .map(|(&x, &y)| {
                let (bx, wx) = self.x.stencil(x);
                let (by, wy) = self.y.stencil(y);
                let row = |r: usize| {
                    let iy = (by + r) % ny;
                    let off = iy * nx;
                    f[off + bx] * wx[0]
                        + f[off + (bx + 1) % nx] * wx[1]
                        + f[off + (bx + 2) % nx] * wx[2]
                        + f[off + (bx + 3) % nx] * wx[3]
                };
                row(0) * wy[0] + row(1) * wy[1] + row(2) * wy[2] + row(3) * wy[3]
            })
            .collect())
    }
}

impl PeriodicGrid2D {
    /// Bilinear interpolation at `(x, y)` targets.
    pub fn interp_linear<T>(&self, f: &[T], xs: &[f64], ys: &[f64]) -> Result<Vec<T>>
    where
        T: Copy + Add<Output = T> + Mul<f64, Output = T>,
    {
        check_len(f.len(), self.len())?;
        check_len(ys.len(), xs.len())?;
        let (nx, ny) = (self.x.points, self.y.points);
        Ok(xs
            .iter()
            .zip(ys)
            .map(|(&x, &y)| {
                let (ix, tx) = self.x.cell(x);
                let (iy, ty) = self.y.cell(y);
                let at = |i: usize, j: usize| f[((iy + j) % ny) * nx + (ix + i) % nx];
                (at(0, 0) * (1.0 - tx) + at(1, 0) * tx) * (1.0 - ty)
                    + (at(0, 1) * (1.0 - tx) + at(1, 1) * tx) * ty
            })
            .collect())
    }
}

/// Fourier coefficients in FFT slot order, normalized by `1/P` on the forward side.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoefficients {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    modes: Vec<Complex64>,
}

impl SpectralCoefficients {
    pub fn modes(&self) -> &[Complex64] {
        &self.modes
    }

    pub fn modes_mut(&mut self) -> &mut [Complex64] {
        &mut self.modes
    }

    pub fn into_modes(self) -> Vec<Complex64> {
        self.modes
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    /// Truncation `M` along x.
    pub fn truncation(&self) -> usize {
        self.nx / 2
    }

    /// Coefficient of the signed mode `(kx, ky)`; `ky` is ignored in 1D.
    pub fn mode(&self, kx: i64, ky: i64) -> Complex64 {
        let ix = kx.rem_euclid(self.nx as i64) as usize;
        let iy = if self.ny == 1 { 0 } else { ky.rem_euclid(self.ny as i64) as usize };
        self.modes[iy * self.nx + ix]
    }

    /// Signed integer mode indices of slot `idx`.
    pub fn mode_indices(&self, idx: usize) -> (i64, i64) {
        let ix = idx % self.nx;
        let iy = idx / self.nx;
        let ky = if self.ny == 1 { 0 } else { signed_mode(iy, self.ny) };
        (signed_mode(ix, self.nx), ky)
    }

    /// Angular wavenumbers of slot `idx`.
    pub fn wavenumber(&self, idx: usize) -> (f64, f64) {
        let (kx, ky) = self.mode_indices(idx);
        let tau = 2.0 * std::f64::consts::PI;
        (tau * kx as f64 / self.lx, tau * ky as f64 / self.ly)
    }

    fn is_nyquist(&self, idx: usize) -> (bool, bool) {
        let ix = idx % self.nx;
        let iy = idx / self.nx;
        (ix == self.nx / 2, self.ny > 1 && iy == self.ny / 2)
    }

    /// Derivative of the given order along x.
    pub fn spectral_derivative(&self, order: u32) -> Result<Self> {
        self.derivative(0, order)
    }

    /// Derivative of the given order along `axis` (0 = x, 1 = y).
    pub fn derivative(&self, axis: usize, order: u32) -> Result<Self> {
        if order == 0 || order > MAX_DERIVATIVE_ORDER {
            return Err(Error::InvalidInput(format!(
                "derivative order {order} not in 1..={MAX_DERIVATIVE_ORDER}"
            )));
        }
        if axis > 1 || (axis == 1 && self.ny == 1) {
            return Err(Error::InvalidInput(format!("no axis {axis}")));
        }
        let mut out = self.clone();
        for (idx, m) in out.modes.iter_mut().enumerate() {
            let (kx, ky) = self.wavenumber(idx);
            let (nyq_x, nyq_y) = self.is_nyquist(idx);
            let (k, nyq) = if axis == 0 { (kx, nyq_x) } else { (ky, nyq_y) };
            if nyq && order % 2 == 1 {
                // the unpaired Nyquist mode has no well-defined odd derivative
                *m = Complex64::new(0.0, 0.0);
                continue;
            }
            *m *= Complex64::new(0.0, k).powu(order);
        }
        Ok(out)
    }

    /// Zeroes every mode outside the two-thirds dealiasing mask.
    pub fn dealias(&mut self) {
        let cx = (self.nx / 3) as i64;
        let cy = (self.ny / 3) as i64;
        for idx in 0..self.modes.len() {
            let (kx, ky) = self.mode_indices(idx);
            if kx.abs() > cx || (self.ny > 1 && ky.abs() > cy) {
                self.modes[idx] = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn energy(&self) -> f64 {
        self.modes.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// The spatial domain of a problem.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Line(PeriodicGrid1D),
    Plane(PeriodicGrid2D),
}

impl Domain {
    pub fn len(&self) -> usize {
        match self {
            Domain::Line(g) => g.points(),
            Domain::Plane(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dimensions(&self) -> usize {
        match self {
            Domain::Line(_) => 1,
            Domain::Plane(_) => 2,
        }
    }

    /// Smallest grid spacing.
    pub fn spacing(&self) -> f64 {
        match self {
            Domain::Line(g) => g.dx(),
            Domain::Plane(g) => g.x.dx().min(g.y.dx()),
        }
    }

    /// Node coordinates, one vector per dimension.
    pub fn coordinates(&self) -> Vec<Vec<f64>> {
        match self {
            Domain::Line(g) => vec![g.nodes()],
            Domain::Plane(g) => {
                let (xs, ys): (Vec<f64>, Vec<f64>) = (0..g.len()).map(|i| g.position(i)).unzip();
                vec![xs, ys]
            }
        }
    }

    pub fn forward(&self, f: &[Complex64]) -> Result<SpectralCoefficients> {
        match self {
            Domain::Line(g) => g.forward(f),
            Domain::Plane(g) => g.forward(f),
        }
    }

    pub fn inverse(&self, c: &SpectralCoefficients) -> Result<Vec<Complex64>> {
        match self {
            Domain::Line(g) => g.inverse(c),
            Domain::Plane(g) => g.inverse(c),
        }
    }

    /// Interpolates `f` at the points given per dimension.
    pub fn interp_cubic<T>(&self, f: &[T], points: &[Vec<f64>]) -> Result<Vec<T>>
    where
        T: Copy + Add<Output = T> + Mul<f64, Output = T>,
    {
        match self {
            Domain::Line(g) => g.interp_cubic(f, &points[0]),
            Domain::Plane(g) => g.interp_cubic(f, &points[0], &points[1]),
        }
    }

    pub fn interp_linear<T>(&self, f: &[T], points: &[Vec<f64>]) -> Result<Vec<T>>
    where
        T: Copy + Add<Output = T> + Mul<f64, Output = T>,
    {
        match self {
            Domain::Line(g) => g.interp_linear(f, &points[0]),
            Domain::Plane(g) => g.interp_linear(f, &points[0], &points[1]),
        }
    }

    /// Wraps a coordinate along dimension `dim` into the base period.
    pub fn wrap(&self, dim: usize, x: f64) -> f64 {
        match self {
            Domain::Line(g) => g.wrap(x),
            Domain::Plane(g) => {
                if dim == 0 {
                    g.x.wrap(x)
                } else {
                    g.y.wrap(x)
                }
            }
        }
    }

    /// Minimal-image separation along dimension `dim`.
    pub fn separation(&self, dim: usize, a: f64, b: f64) -> f64 {
        match self {
            Domain::Line(g) => g.separation(a, b),
            Domain::Plane(g) => {
                if dim == 0 {
                    g.x.separation(a, b)
                } else {
                    g.y.separation(a, b)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_field_has_only_the_mean() {
        let g = PeriodicGrid1D::new(10.0, 16).unwrap();
        let c = g.forward_real(&[3.0; 16]).unwrap();
        assert!((c.mode(0, 0) - Complex64::new(3.0, 0.0)).norm() < 1e-15);
        assert!(c.modes().iter().skip(1).all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn cosine_splits_between_plus_and_minus_one() {
        let g = PeriodicGrid1D::new(2.0, 32).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|x| (PI * x).cos()).collect();
        let c = g.forward_real(&f).unwrap();
        assert!((c.mode(1, 0).re - 0.5).abs() < 1e-15);
        assert!((c.mode(-1, 0).re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn odd_points_rejected() {
        assert!(PeriodicGrid1D::new(1.0, 7).is_err());
        assert!(PeriodicGrid1D::new(-1.0, 8).is_err());
    }

    #[test]
    fn node_targets_are_bit_exact() {
        let g = PeriodicGrid1D::new(10.0, 64).unwrap();
        let f: Vec<f64> = (0..64).map(|i| (i as f64 * 0.37).sin()).collect();
        let out = g.interp_cubic(&f, &g.nodes()).unwrap();
        assert_eq!(out, f);
    }

    #[test]
    fn cubic_reproduced_inside_one_period() {
        let g = PeriodicGrid1D::new(64.0, 64).unwrap();
        let p = |x: f64| 0.5 + x - 0.03 * x * x + 0.001 * x * x * x;
        let f: Vec<f64> = g.nodes().iter().map(|&x| p(x)).collect();
        let targets = [10.3, 20.75, 31.01, 40.5];
        let out = g.interp_cubic(&f, &targets).unwrap();
        for (o, t) in out.iter().zip(targets) {
            assert!((o - p(t)).abs() < 1e-11);
        }
    }

    #[test]
    fn wrapped_targets() {
        let g = PeriodicGrid1D::new(10.0, 32).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|x| (2.0 * PI * x / 10.0).sin()).collect();
        let a = g.interp_cubic(&f, &[1.234]).unwrap()[0];
        let b = g.interp_cubic(&f, &[1.234 + 30.0]).unwrap()[0];
        let c = g.interp_cubic(&f, &[1.234 - 20.0]).unwrap()[0];
        assert!((a - b).abs() < 1e-12 && (a - c).abs() < 1e-12);
    }

    #[test]
    fn odd_derivative_drops_nyquist() {
        let g = PeriodicGrid1D::new(1.0, 8).unwrap();
        let f: Vec<f64> = (0..8).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let d = g.forward_real(&f).unwrap().spectral_derivative(1).unwrap();
        assert!(d.modes().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn plane_roundtrip() {
        let g = PeriodicGrid2D::new(1.0, 8, 2.0, 4).unwrap();
        let f: Vec<Complex64> = (0..32).map(|i| Complex64::new(i as f64, -(i as f64) * 0.5)).collect();
        let back = g.inverse(&g.forward(&f).unwrap()).unwrap();
        for (a, b) in back.iter().zip(&f) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
