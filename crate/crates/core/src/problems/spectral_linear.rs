use num_complex::Complex64;

use super::{eulerian_advection, LinearOperator, Problem};
use crate::error::{Error, Result};
use crate::exp_core::SymbolMatrix;
use crate::field::Field;
use crate::grid::{Domain, PeriodicGrid1D};

/// Scalar linear model `Du/Dt = lambda_L u + lambda_N u` with per-mode rates and a
/// constant transport speed. The `lambda_N` part plays the role of `N~`.
#[derive(Debug, Clone)]
pub struct SpectralLinear {
    domain: Domain,
    linear: LinearOperator,
    lambda_n: Vec<Complex64>,
    speed: f64,
    initial: Field,
}

impl SpectralLinear {
    /// Same rates for every mode; the initial state is the Fourier mode `mode`.
    pub fn uniform(
        length: f64,
        points: usize,
        lambda_l: Complex64,
        lambda_n: Complex64,
        speed: f64,
        mode: i64,
    ) -> Result<Self> {
        Self::with_rates(length, points, |_| lambda_l, |_| lambda_n, speed, mode)
    }

    /// Rates given as functions of the angular wavenumber.
    pub fn with_rates(
        length: f64,
        points: usize,
        lambda_l: impl Fn(f64) -> Complex64,
        lambda_n: impl Fn(f64) -> Complex64,
        speed: f64,
        mode: i64,
    ) -> Result<Self> {
        let grid = PeriodicGrid1D::new(length, points)?;
        if mode.unsigned_abs() as usize >= points / 2 {
            return Err(Error::InvalidInput(format!("mode {mode} is not resolved")));
        }
        let kappas: Vec<f64> = (0..points).map(|i| grid.wavenumber(i)).collect();
        let linear = LinearOperator::Spectral(
            kappas.iter().map(|&k| SymbolMatrix::scalar(lambda_l(k))).collect(),
        );
        let lambda_n = kappas.iter().map(|&k| lambda_n(k)).collect();
        let kappa = 2.0 * std::f64::consts::PI * mode as f64 / length;
        let initial = vec![grid
            .nodes()
            .into_iter()
            .map(|x| Complex64::from_polar(1.0, kappa * x))
            .collect()];
        Ok(Self {
            domain: Domain::Line(grid),
            linear,
            lambda_n,
            speed,
            initial,
        })
    }

    pub fn with_initial(mut self, initial: Field) -> Result<Self> {
        if initial.len() != 1 || initial[0].len() != self.domain.len() {
            return Err(Error::Dimension {
                expected: self.domain.len(),
                got: initial.first().map_or(0, |c| c.len()),
            });
        }
        self.initial = initial;
        Ok(self)
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }
}

impl Problem for SpectralLinear {
    fn name(&self) -> &str {
        "spectral-linear"
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn components(&self) -> usize {
        1
    }

    fn initial_state(&self) -> Field {
        self.initial.clone()
    }

    fn linear(&self) -> &LinearOperator {
        &self.linear
    }

    fn nonlinear(&self, _t: f64, u: &Field) -> Result<Field> {
        let mut spec = self.domain.forward(&u[0])?;
        for (m, l) in spec.modes_mut().iter_mut().zip(&self.lambda_n) {
            *m *= l;
        }
        Ok(vec![self.domain.inverse(&spec)?])
    }

    fn advection(&self, t: f64, u: &Field) -> Result<Field> {
        eulerian_advection(&self.domain, &self.velocity(t, u), u, false)
    }

    fn velocity(&self, _t: f64, _u: &Field) -> Vec<Vec<f64>> {
        vec![vec![self.speed; self.domain.len()]]
    }

    fn parameters(&self) -> Vec<(String, String)> {
        vec![
            ("problem.points".into(), self.domain.len().to_string()),
            ("problem.velocity".into(), format!("{:.17e}", self.speed)),
        ]
    }
}
