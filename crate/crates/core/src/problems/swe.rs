use std::f64::consts::PI;

use num_complex::Complex64;

use super::{eulerian_advection, LinearOperator, Problem};
use crate::error::{Error, Result};
use crate::exp_core::SymbolMatrix;
use crate::field::{self, Field};
use crate::grid::{Domain, PeriodicGrid2D};

const BALANCED_AMPLITUDE: f64 = 0.1;
const BUMP_AMPLITUDE: f64 = 0.01;
const BUMP_WIDTH2: f64 = 0.25;

/// Where the Coriolis term sits in the splitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoriolisTreatment {
    /// Part of `N~`, so `L` holds gravity only.
    Nonlinear,
    /// Part of the linear symbol.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweSetup {
    /// Geostrophically balanced zonal flow, a steady state.
    Balanced,
    /// Balanced flow plus a small geopotential bump.
    Perturbed,
}

/// Shallow-water equations on a biperiodic f-plane in `(phi', u, v)`.
#[derive(Debug, Clone)]
pub struct SwePlane {
    name: String,
    domain: Domain,
    grid: PeriodicGrid2D,
    phi_bar: f64,
    f: f64,
    coriolis: CoriolisTreatment,
    linear: LinearOperator,
    setup: SweSetup,
}

impl SwePlane {
    pub fn new(
        points: usize,
        phi_bar: f64,
        f: f64,
        coriolis: CoriolisTreatment,
        setup: SweSetup,
    ) -> Result<Self> {
        if setup == SweSetup::Balanced && f == 0.0 {
            return Err(Error::InvalidInput("geostrophic balance needs f != 0".into()));
        }
        let grid = PeriodicGrid2D::new(2.0 * PI, points, 2.0 * PI, points)?;
        let domain = Domain::Plane(grid.clone());
        let f_in_l = match coriolis {
            CoriolisTreatment::Linear => f,
            CoriolisTreatment::Nonlinear => 0.0,
        };
        let probe = domain.forward(&vec![Complex64::new(0.0, 0.0); grid.len()])?;
        let symbols = (0..grid.len())
            .map(|idx| {
                let (kx, ky) = probe.wavenumber(idx);
                SymbolMatrix::swe_plane(kx, ky, phi_bar, f_in_l)
            })
            .collect::<Result<Vec<_>>>()?;
        let name = match setup {
            SweSetup::Balanced => "swe-plane-balanced",
            SweSetup::Perturbed => "swe-plane-perturbed",
        };
        Ok(Self {
            name: name.into(),
            domain,
            grid,
            phi_bar,
            f,
            coriolis,
            linear: LinearOperator::Spectral(symbols),
            setup,
        })
    }

    /// `phi_bar = 1`, `f = 1`, Coriolis treated with `N~`.
    pub fn standard(setup: SweSetup, points: usize) -> Result<Self> {
        Self::new(points, 1.0, 1.0, CoriolisTreatment::Nonlinear, setup)
    }

    pub fn phi_bar(&self) -> f64 {
        self.phi_bar
    }

    pub fn coriolis(&self) -> f64 {
        self.f
    }

    pub fn grid(&self) -> &PeriodicGrid2D {
        &self.grid
    }

    /// `sum (phi_bar (u^2 + v^2) + phi'^2) / 2` over the nodes.
    pub fn energy(&self, u: &Field) -> f64 {
        let phi = &u[0];
        (0..phi.len())
            .map(|i| 0.5 * (self.phi_bar * (u[1][i].norm_sqr() + u[2][i].norm_sqr()) + phi[i].norm_sqr()))
            .sum()
    }

    fn divergence(&self, u: &Field) -> Result<Vec<Complex64>> {
        let ux = self.domain.forward(&u[1])?.derivative(0, 1)?;
        let vy = self.domain.forward(&u[2])?.derivative(1, 1)?;
        let mut spec = ux;
        for (a, b) in spec.modes_mut().iter_mut().zip(vy.modes()) {
            *a += b;
        }
        self.domain.inverse(&spec)
    }

    fn dealiased(&self, values: Vec<Complex64>) -> Result<Vec<Complex64>> {
        let mut s = self.domain.forward(&values)?;
        s.dealias();
        self.domain.inverse(&s)
    }
}

impl Problem for SwePlane {
    fn name(&self) -> &str {
        &self.name
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn components(&self) -> usize {
        3
    }

    fn initial_state(&self) -> Field {
        let n = self.grid.len();
        let mut u = field::zeros(3, n);
        let (lx, ly) = (self.grid.x_axis(), self.grid.y_axis());
        let (cx, cy) = (lx.length() / 2.0, ly.length() / 2.0);
        for i in 0..n {
            let (x, y) = self.grid.position(i);
            let mut phi = BALANCED_AMPLITUDE * y.cos();
            if self.setup == SweSetup::Perturbed {
                let dx = lx.separation(x, cx);
                let dy = ly.separation(y, cy);
                phi += BUMP_AMPLITUDE * (-(dx * dx + dy * dy) / BUMP_WIDTH2).exp();
            }
            u[0][i] = Complex64::new(phi, 0.0);
            u[1][i] = Complex64::new(BALANCED_AMPLITUDE / self.f * y.sin(), 0.0);
        }
        self.project(&mut u).expect("initial state matches the grid");
        u
    }

    fn linear(&self) -> &LinearOperator {
        &self.linear
    }

    fn nonlinear(&self, _t: f64, u: &Field) -> Result<Field> {
        let delta = self.divergence(u)?;
        let product: Vec<Complex64> = u[0].iter().zip(&delta).map(|(p, d)| -p * d).collect();
        let mut out = vec![self.dealiased(product)?, u[1].clone(), u[2].clone()];
        match self.coriolis {
            CoriolisTreatment::Nonlinear => {
                out[1] = u[2].iter().map(|v| v * self.f).collect();
                out[2] = u[1].iter().map(|v| -v * self.f).collect();
            }
            CoriolisTreatment::Linear => {
                out[1].iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
                out[2].iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            }
        }
        Ok(out)
    }

    fn advection(&self, t: f64, u: &Field) -> Result<Field> {
        eulerian_advection(&self.domain, &self.velocity(t, u), u, true)
    }

    fn velocity(&self, _t: f64, u: &Field) -> Vec<Vec<f64>> {
        vec![
            u[1].iter().map(|z| z.re).collect(),
            u[2].iter().map(|z| z.re).collect(),
        ]
    }

    fn project(&self, u: &mut Field) -> Result<()> {
        for comp in u.iter_mut() {
            *comp = self.dealiased(std::mem::take(comp))?;
        }
        Ok(())
    }

    /// The balanced flow is steady.
    fn exact_solution(&self, _t: f64) -> Option<Field> {
        (self.setup == SweSetup::Balanced).then(|| self.initial_state())
    }

    fn parameters(&self) -> Vec<(String, String)> {
        vec![
            ("problem.points".into(), self.grid.x_axis().points().to_string()),
            ("problem.length".into(), format!("{:.17e}", self.grid.x_axis().length())),
            ("problem.phi_bar".into(), format!("{}", self.phi_bar)),
            ("problem.f".into(), format!("{}", self.f)),
            ("problem.coriolis".into(), format!("{:?}", self.coriolis).to_lowercase()),
            ("problem.balanced_amplitude".into(), format!("{BALANCED_AMPLITUDE}")),
            ("problem.bump".into(), match self.setup {
                SweSetup::Balanced => "none".into(),
                SweSetup::Perturbed => format!("amplitude={BUMP_AMPLITUDE} width2={BUMP_WIDTH2}"),
            }),
            ("problem.dealiasing".into(), "two-thirds".into()),
        ]
    }
}
