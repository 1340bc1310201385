//! Departure points of semi-Lagrangian trajectories by the SETTLS extrapolation.

use crate::error::{Error, Result};
use crate::grid::Domain;

pub const DEFAULT_MAX_ITER: usize = 10;
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Nodal velocity at the current and previous time levels, one vector per dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityHistory {
    pub v_now: Vec<Vec<f64>>,
    pub v_prev: Vec<Vec<f64>>,
}

impl VelocityHistory {
    pub fn new(v_now: Vec<Vec<f64>>, v_prev: Vec<Vec<f64>>) -> Result<Self> {
        if v_now.len() != v_prev.len() {
            return Err(Error::Dimension {
                expected: v_now.len(),
                got: v_prev.len(),
            });
        }
        for (a, b) in v_now.iter().zip(&v_prev) {
            if a.len() != b.len() {
                return Err(Error::Dimension {
                    expected: a.len(),
                    got: b.len(),
                });
            }
        }
        Ok(Self { v_now, v_prev })
    }

    /// History with equal velocities at both levels.
    pub fn frozen(v: Vec<Vec<f64>>) -> Self {
        Self {
            v_prev: v.clone(),
            v_now: v,
        }
    }

    /// Shifts the history forward: the current level becomes the previous one.
    pub fn advance(&mut self, v_next: Vec<Vec<f64>>) {
        self.v_prev = std::mem::replace(&mut self.v_now, v_next);
    }

    fn is_finite(&self) -> bool {
        self.v_now
            .iter()
            .chain(&self.v_prev)
            .all(|c| c.iter().all(|v| v.is_finite()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VelocityInterpolation {
    #[default]
    Cubic,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettlsOptions {
    pub max_iter: usize,
    /// Convergence tolerance in units of the grid spacing.
    pub tolerance: f64,
    pub interpolation: VelocityInterpolation,
}

impl Default for SettlsOptions {
    fn default() -> Self {
        Self {
            max_iter: DEFAULT_MAX_ITER,
            tolerance: DEFAULT_TOLERANCE,
            interpolation: VelocityInterpolation::Cubic,
        }
    }
}

/// Departure points for every node, stored per dimension and wrapped into the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySet {
    pub departures: Vec<Vec<f64>>,
    /// `x_j - x_d` reduced to the minimal periodic image.
    pub displacements: Vec<Vec<f64>>,
    pub iterations_used: usize,
    pub converged: bool,
}

impl TrajectorySet {
    /// Trajectories that stay on their arrival node.
    pub fn stationary(domain: &Domain) -> Self {
        let coords = domain.coordinates();
        Self {
            displacements: coords.iter().map(|c| vec![0.0; c.len()]).collect(),
            departures: coords,
            iterations_used: 0,
            converged: true,
        }
    }

    pub fn max_displacement(&self) -> f64 {
        self.displacements
            .iter()
            .flatten()
            .fold(0.0f64, |m, s| m.max(s.abs()))
    }
}

pub fn compute_departure_points(hist: &VelocityHistory, domain: &Domain, dt: f64) -> Result<TrajectorySet> {
    compute_departure_points_with(hist, domain, dt, &SettlsOptions::default())
}

/// Fixed-point iteration `x_d = x_j - dt/2 [2 v_now(x_d) - v_prev(x_d) + v_now(x_j)]`.
pub fn compute_departure_points_with(
    hist: &VelocityHistory,
    domain: &Domain,
    dt: f64,
    opts: &SettlsOptions,
) -> Result<TrajectorySet> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidInput(format!("time step {dt} must be positive")));
    }
    let dims = domain.dimensions();
    if hist.v_now.len() != dims {
        return Err(Error::Dimension {
            expected: dims,
            got: hist.v_now.len(),
        });
    }
    for c in hist.v_now.iter().chain(&hist.v_prev) {
        if c.len() != domain.len() {
            return Err(Error::Dimension {
                expected: domain.len(),
                got: c.len(),
            });
        }
    }
    if !hist.is_finite() {
        return Err(Error::InvalidInput("velocity contains non-finite values".into()));
    }

    let arrival = domain.coordinates();
    let interp = |f: &[f64], pts: &[Vec<f64>]| match opts.interpolation {
        VelocityInterpolation::Cubic => domain.interp_cubic(f, pts),
        VelocityInterpolation::Linear => domain.interp_linear(f, pts),
    };

    let mut xd: Vec<Vec<f64>> = arrival
        .iter()
        .zip(&hist.v_now)
        .map(|(x, v)| x.iter().zip(v).map(|(x, v)| x - dt * v).collect())
        .collect();
    let tol = opts.tolerance * domain.spacing();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        let mut next = Vec::with_capacity(dims);
        for d in 0..dims {
            let vn = interp(&hist.v_now[d], &xd)?;
            let vp = interp(&hist.v_prev[d], &xd)?;
            let xj = &arrival[d];
            let vj = &hist.v_now[d];
            next.push(
                (0..xj.len())
                    .map(|i| xj[i] - 0.5 * dt * (2.0 * vn[i] - vp[i] + vj[i]))
                    .collect::<Vec<f64>>(),
            );
        }
        let change = next
            .iter()
            .zip(&xd)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        xd = next;
        iterations += 1;
        if change < tol {
            converged = true;
            break;
        }
    }

    let displacements = (0..dims)
        .map(|d| {
            arrival[d]
                .iter()
                .zip(&xd[d])
                .map(|(&a, &b)| domain.separation(d, a, b))
                .collect()
        })
        .collect();
    let departures = xd
        .into_iter()
        .enumerate()
        .map(|(d, c)| c.into_iter().map(|x| domain.wrap(d, x)).collect())
        .collect();
    Ok(TrajectorySet {
        departures,
        displacements,
        iterations_used: iterations,
        converged,
    })
}
