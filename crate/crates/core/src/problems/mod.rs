//! Test problems: advection-reaction on a line, a spectral linear model and the
//! shallow-water equations on a biperiodic f-plane.

mod advection;
mod spectral_linear;
mod swe;

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exp_core::{ExpFunction, SymbolMatrix};
use crate::field::{self, Field};
use crate::grid::Domain;

pub use advection::{AdvectionReaction, VelocityField, ADVECTION_SPEED, GAUSSIAN_CENTER, GAUSSIAN_WIDTH2, LINE_LENGTH};
pub use spectral_linear::SpectralLinear;
pub use swe::{CoriolisTreatment, SwePlane, SweSetup};

pub const PROBLEM_NAMES: [&str; 6] = [
    "scalar-constL",
    "scalar-sinL",
    "vector-L1",
    "vector-L2",
    "swe-plane-balanced",
    "swe-plane-perturbed",
];

/// A semi-discrete problem `dU/dt = L U + N~(U)` transported by a velocity field.
pub trait Problem: Send + Sync {
    fn name(&self) -> &str;
    fn domain(&self) -> &Domain;
    fn components(&self) -> usize;
    fn initial_state(&self) -> Field;
    fn linear(&self) -> &LinearOperator;

    /// `f(scale * L) u`.
    fn apply_exp(&self, f: ExpFunction, scale: f64, u: &Field) -> Result<Field> {
        self.linear()
            .map(self.domain(), u, |s, v| s.apply_fn(f, scale, v))
    }

    /// `L u`.
    fn apply_linear(&self, u: &Field) -> Result<Field> {
        self.linear().map(self.domain(), u, |s, v| Ok(s.apply(v)))
    }

    /// `(I - alpha L)^{-1} u`.
    fn solve_shifted(&self, alpha: f64, u: &Field) -> Result<Field> {
        self.linear()
            .map(self.domain(), u, |s, v| s.solve_shifted(alpha, v))
    }

    /// Non-advective remainder `N~` of the right-hand side.
    fn nonlinear(&self, t: f64, u: &Field) -> Result<Field>;

    /// Eulerian advection tendency `-(v . grad) u`.
    fn advection(&self, t: f64, u: &Field) -> Result<Field>;

    /// Transporting velocity at the nodes, one vector per dimension.
    fn velocity(&self, t: f64, u: &Field) -> Vec<Vec<f64>>;

    /// Restricts a state to the retained spectral modes.
    fn project(&self, _u: &mut Field) -> Result<()> {
        Ok(())
    }

    fn exact_solution(&self, _t: f64) -> Option<Field> {
        None
    }

    /// Parameters that determine the problem, for run manifests.
    fn parameters(&self) -> Vec<(String, String)>;
}

/// The linear operator `L`, either pointwise in grid space or per Fourier mode.
#[derive(Debug, Clone)]
pub enum LinearOperator {
    /// One symbol per grid node.
    Pointwise(Vec<SymbolMatrix>),
    /// One symbol per FFT slot.
    Spectral(Vec<SymbolMatrix>),
}

impl LinearOperator {
    pub fn symbols(&self) -> &[SymbolMatrix] {
        match self {
            LinearOperator::Pointwise(s) | LinearOperator::Spectral(s) => s,
        }
    }

    /// Applies `op` to the component vector of every node or mode.
    pub fn map<F>(&self, domain: &Domain, u: &Field, op: F) -> Result<Field>
    where
        F: Fn(&SymbolMatrix, &[Complex64]) -> Result<Vec<Complex64>>,
    {
        let symbols = self.symbols();
        let n = domain.len();
        if symbols.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: symbols.len(),
            });
        }
        if let Some(bad) = u.iter().find(|c| c.len() != n) {
            return Err(Error::Dimension {
                expected: n,
                got: bad.len(),
            });
        }
        let dim = symbols.first().map_or(0, |s| s.dim());
        if u.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: u.len(),
            });
        }
        match self {
            LinearOperator::Pointwise(_) => apply_nodewise(symbols, u, &op),
            LinearOperator::Spectral(_) => {
                let spectra = u
                    .iter()
                    .map(|c| domain.forward(c))
                    .collect::<Result<Vec<_>>>()?;
                let modes: Field = spectra.iter().map(|s| s.modes().to_vec()).collect();
                let out = apply_nodewise(symbols, &modes, &op)?;
                spectra
                    .into_iter()
                    .zip(out)
                    .map(|(mut s, m)| {
                        s.modes_mut().copy_from_slice(&m);
                        domain.inverse(&s)
                    })
                    .collect()
            }
        }
    }
}

fn apply_nodewise<F>(symbols: &[SymbolMatrix], u: &Field, op: &F) -> Result<Field>
where
    F: Fn(&SymbolMatrix, &[Complex64]) -> Result<Vec<Complex64>>,
{
    let mut out = field::zeros_like(u);
    for (i, s) in symbols.iter().enumerate() {
        let v = op(s, &field::node_vector(u, i))?;
        for (c, val) in v.into_iter().enumerate() {
            out[c][i] = val;
        }
    }
    Ok(out)
}

/// `-(v . grad) u` with spectral derivatives; products are dealiased on request.
pub fn eulerian_advection(domain: &Domain, velocity: &[Vec<f64>], u: &Field, dealias: bool) -> Result<Field> {
    let mut out = Vec::with_capacity(u.len());
    for comp in u {
        let spec = domain.forward(comp)?;
        let mut tend = vec![Complex64::new(0.0, 0.0); comp.len()];
        for (axis, v) in velocity.iter().enumerate() {
            let d = domain.inverse(&spec.derivative(axis, 1)?)?;
            for ((t, dv), vv) in tend.iter_mut().zip(d).zip(v) {
                *t -= dv * *vv;
            }
        }
        if dealias {
            let mut s = domain.forward(&tend)?;
            s.dealias();
            tend = domain.inverse(&s)?;
        }
        out.push(tend);
    }
    Ok(out)
}

/// Builds a named setup; `resolution` overrides the default number of points per axis.
pub fn build(name: &str, resolution: Option<usize>) -> Result<Arc<dyn Problem>> {
    let line = resolution.unwrap_or(2048);
    let plane = resolution.unwrap_or(64);
    let speed = VelocityField::Constant(ADVECTION_SPEED);
    Ok(match name {
        "scalar-constL" => Arc::new(AdvectionReaction::scalar(name, line, |_| 1.0, speed, Some(1.0))?),
        "scalar-sinL" => Arc::new(AdvectionReaction::scalar(name, line, f64::sin, speed, None)?),
        "vector-L1" => Arc::new(AdvectionReaction::vector(name, line, l1, speed)?),
        "vector-L2" => Arc::new(AdvectionReaction::vector(name, line, l2, speed)?),
        "swe-plane-balanced" => Arc::new(SwePlane::standard(SweSetup::Balanced, plane)?),
        "swe-plane-perturbed" => Arc::new(SwePlane::standard(SweSetup::Perturbed, plane)?),
        _ => {
            return Err(Error::Usage(format!(
                "unknown problem '{name}', expected one of: {}",
                PROBLEM_NAMES.join(", ")
            )))
        }
    })
}

/// Commuting family: `L1(x) L1(y) = L1(y) L1(x)`.
pub fn l1(x: f64) -> [[f64; 2]; 2] {
    [[x.sin(), x.cos()], [x.cos(), x.sin()]]
}

/// Non-commuting family.
pub fn l2(x: f64) -> [[f64; 2]; 2] {
    [[x.sin(), x.sin()], [x.sin(), x.cos()]]
}

/// Per-mode symbols of a problem whose linear part is spectral.
pub fn linear_symbol(problem: &dyn Problem) -> Result<&[SymbolMatrix]> {
    match problem.linear() {
        LinearOperator::Spectral(s) => Ok(s),
        LinearOperator::Pointwise(_) => Err(Error::InvalidInput(format!(
            "problem '{}' has a space-dependent linear part",
            problem.name()
        ))),
    }
}

/// `N~(U)` evaluated and projected onto the retained modes.
pub fn eval_nonlinear(problem: &dyn Problem, t: f64, u: &Field) -> Result<Field> {
    let mut n = problem.nonlinear(t, u)?;
    problem.project(&mut n)?;
    Ok(n)
}
