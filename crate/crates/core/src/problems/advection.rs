use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::{eulerian_advection, LinearOperator, Problem};
use crate::error::Result;
use crate::exp_core::SymbolMatrix;
use crate::field::{self, Field};
use crate::grid::{Domain, PeriodicGrid1D};
use crate::linalg::CMatrix;

pub const LINE_LENGTH: f64 = 10.0;
pub const GAUSSIAN_CENTER: f64 = 5.0;
pub const GAUSSIAN_WIDTH2: f64 = 0.5;
/// Shifts every departure point by a whole number of cells for `dt = 2^-k`, `k <= 5`,
/// at 2048 points.
pub const ADVECTION_SPEED: f64 = 5.0 / 32.0;

type VelocityFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Prescribed transport velocity `v(t, x)`.
#[derive(Clone)]
pub enum VelocityField {
    Constant(f64),
    Function(VelocityFn),
}

impl VelocityField {
    pub fn function(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        VelocityField::Function(Arc::new(f))
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        match self {
            VelocityField::Constant(v) => *v,
            VelocityField::Function(f) => f(t, x),
        }
    }
}

impl fmt::Debug for VelocityField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VelocityField::Constant(v) => write!(f, "Constant({v})"),
            VelocityField::Function(_) => write!(f, "Function(..)"),
        }
    }
}

/// `Du/Dt = L(x) u` on `[0, 10)` with a Gaussian initial condition.
#[derive(Debug, Clone)]
pub struct AdvectionReaction {
    name: String,
    domain: Domain,
    components: usize,
    linear: LinearOperator,
    velocity: VelocityField,
    constant_rate: Option<f64>,
}

impl AdvectionReaction {
    /// Scalar problem; `constant_rate` enables the closed-form solution when `L` is that constant.
    pub fn scalar(
        name: &str,
        points: usize,
        l_fn: impl Fn(f64) -> f64,
        velocity: VelocityField,
        constant_rate: Option<f64>,
    ) -> Result<Self> {
        let grid = PeriodicGrid1D::new(LINE_LENGTH, points)?;
        let symbols = grid
            .nodes()
            .into_iter()
            .map(|x| SymbolMatrix::scalar(Complex64::new(l_fn(x), 0.0)))
            .collect();
        Ok(Self {
            name: name.to_string(),
            domain: Domain::Line(grid),
            components: 1,
            linear: LinearOperator::Pointwise(symbols),
            velocity,
            constant_rate,
        })
    }

    /// Two-component problem with a matrix-valued `L(x)`.
    pub fn vector(
        name: &str,
        points: usize,
        l_fn: impl Fn(f64) -> [[f64; 2]; 2],
        velocity: VelocityField,
    ) -> Result<Self> {
        let grid = PeriodicGrid1D::new(LINE_LENGTH, points)?;
        let symbols = grid
            .nodes()
            .into_iter()
            .map(|x| {
                let m = l_fn(x);
                SymbolMatrix::new(CMatrix::from_real_rows(&[m[0].to_vec(), m[1].to_vec()]))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            name: name.to_string(),
            domain: Domain::Line(grid),
            components: 2,
            linear: LinearOperator::Pointwise(symbols),
            velocity,
            constant_rate: None,
        })
    }

    pub fn with_velocity(mut self, velocity: VelocityField) -> Self {
        self.velocity = velocity;
        self
    }

    pub fn grid(&self) -> &PeriodicGrid1D {
        match &self.domain {
            Domain::Line(g) => g,
            Domain::Plane(_) => unreachable!("advection-reaction problems live on a line"),
        }
    }

    fn gaussian(&self, center: f64) -> Vec<Complex64> {
        let g = self.grid();
        g.nodes()
            .into_iter()
            .map(|x| {
                let d = g.separation(x, center);
                Complex64::new((-d * d / GAUSSIAN_WIDTH2).exp(), 0.0)
            })
            .collect()
    }
}

impl Problem for AdvectionReaction {
    fn name(&self) -> &str {
        &self.name
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn components(&self) -> usize {
        self.components
    }

    fn initial_state(&self) -> Field {
        vec![self.gaussian(GAUSSIAN_CENTER); self.components]
    }

    fn linear(&self) -> &LinearOperator {
        &self.linear
    }

    fn nonlinear(&self, _t: f64, u: &Field) -> Result<Field> {
        Ok(field::zeros_like(u))
    }

    fn advection(&self, t: f64, u: &Field) -> Result<Field> {
        eulerian_advection(&self.domain, &self.velocity(t, u), u, false)
    }

    fn velocity(&self, t: f64, _u: &Field) -> Vec<Vec<f64>> {
        vec![self
            .grid()
            .nodes()
            .into_iter()
            .map(|x| self.velocity.eval(t, x))
            .collect()]
    }

    fn exact_solution(&self, t: f64) -> Option<Field> {
        let rate = self.constant_rate?;
        let VelocityField::Constant(v) = self.velocity else {
            return None;
        };
        let growth = (rate * t).exp();
        let shifted = self.gaussian(GAUSSIAN_CENTER + v * t);
        Some(vec![
            shifted.into_iter().map(|z| z * growth).collect();
            self.components
        ])
    }

    fn parameters(&self) -> Vec<(String, String)> {
        let velocity = match &self.velocity {
            VelocityField::Constant(v) => format!("{v:.17e}"),
            VelocityField::Function(_) => "function".to_string(),
        };
        vec![
            ("problem.length".into(), format!("{LINE_LENGTH}")),
            ("problem.points".into(), self.grid().points().to_string()),
            ("problem.components".into(), self.components.to_string()),
            ("problem.velocity".into(), velocity),
            ("problem.initial".into(), format!(
                "gaussian center={GAUSSIAN_CENTER} width2={GAUSSIAN_WIDTH2} (all components)"
            )),
        ]
    }
}
