//! Convergence studies, error norms, diagnostics and machine-readable output.

pub mod config;
pub mod output;

use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{Domain, PeriodicGrid2D};
use crate::problems::{self, Problem};
use crate::schemes::{integrate, step_count, SchemeConfig, SchemeKind, StepState};

/// Points whose relative L2 error is below this are excluded from order fits.
pub const ERROR_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReferenceKind {
    /// Closed form when the problem has one, RK4 otherwise.
    #[default]
    Auto,
    Analytic,
    Rk4,
    /// The scheme under study at a finer step.
    SelfRefined,
}

impl ReferenceKind {
    pub fn name(self) -> &'static str {
        match self {
            ReferenceKind::Auto => "auto",
            ReferenceKind::Analytic => "analytic",
            ReferenceKind::Rk4 => "rk4",
            ReferenceKind::SelfRefined => "self",
        }
    }
}

impl FromStr for ReferenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "auto" => Ok(ReferenceKind::Auto),
            "analytic" | "exact" => Ok(ReferenceKind::Analytic),
            "rk4" => Ok(ReferenceKind::Rk4),
            "self" | "self-refined" => Ok(ReferenceKind::SelfRefined),
            other => Err(Error::Usage(format!(
                "unknown reference kind '{other}', expected one of: auto, analytic, rk4, self"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReferenceSettings {
    pub kind: ReferenceKind,
    /// Reference step; defaults to a tenth of the smallest study step.
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: String,
    pub scheme: SchemeKind,
    /// Sorted in descending order.
    pub dts: Vec<f64>,
    /// Points per axis; `None` keeps the problem default.
    pub resolutions: Vec<Option<usize>>,
    pub end_time: f64,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub viscosity_order: u32,
    pub viscosity_coeff: f64,
    pub reference: ReferenceSettings,
}

impl RunConfig {
    pub fn new(problem: &str, scheme: SchemeKind, dts: Vec<f64>, end_time: f64) -> Self {
        Self {
            problem: problem.to_string(),
            scheme,
            dts,
            resolutions: vec![None],
            end_time,
            output_dir: PathBuf::from("."),
            seed: 0,
            viscosity_order: 0,
            viscosity_coeff: 0.0,
            reference: ReferenceSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dts.is_empty() {
            return Err(Error::InvalidInput("empty time-step list".into()));
        }
        if self.dts.iter().any(|&dt| !(dt.is_finite() && dt > 0.0)) {
            return Err(Error::InvalidInput("time steps must be positive".into()));
        }
        if self.dts.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::InvalidInput("time steps must be strictly descending".into()));
        }
        if self.resolutions.is_empty() {
            return Err(Error::InvalidInput("empty resolution list".into()));
        }
        if let Some(bad) = self.resolutions.iter().flatten().find(|r| !r.is_power_of_two()) {
            return Err(Error::InvalidInput(format!("resolution {bad} is not a power of two")));
        }
        if !(self.end_time.is_finite() && self.end_time > 0.0) {
            return Err(Error::InvalidInput(format!("end time {} must be positive", self.end_time)));
        }
        for &dt in &self.dts {
            step_count(self.end_time, dt)?;
        }
        SchemeConfig::new(self.scheme, self.dts[0])?.with_viscosity(self.viscosity_order, self.viscosity_coeff)?;
        if let Some(dt) = self.reference.dt {
            step_count(self.end_time, dt)?;
        }
        Ok(())
    }

    fn reference_dt(&self) -> f64 {
        self.reference
            .dt
            .unwrap_or_else(|| self.dts[self.dts.len() - 1] / 10.0)
    }

    fn scheme_config(&self, dt: f64) -> Result<SchemeConfig> {
        SchemeConfig::new(self.scheme, dt)?.with_viscosity(self.viscosity_order, self.viscosity_coeff)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRecord {
    pub dt: f64,
    pub resolution: usize,
    pub rel_l2: Option<f64>,
    pub rel_linf: Option<f64>,
    pub wall_time: f64,
    pub blow_up: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderFit {
    pub resolution: usize,
    /// `None` when fewer than two points lie above the error floor.
    pub order: Option<f64>,
    pub points_used: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceResult {
    pub records: Vec<ErrorRecord>,
    pub fits: Vec<OrderFit>,
}

impl ConvergenceResult {
    /// Fitted order of the first resolution.
    pub fn order(&self) -> Option<f64> {
        self.fits.first().and_then(|f| f.order)
    }

    pub fn blow_up_count(&self) -> usize {
        self.records.iter().filter(|r| r.blow_up).count()
    }

    /// More than half of the runs blew up.
    pub fn blow_up_dominated(&self) -> bool {
        2 * self.blow_up_count() > self.records.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L2,
    Linf,
}

/// `||U - U_ref|| / ||U_ref||` over all components and nodes.
pub fn compute_error_norm(u: &Field, u_ref: &Field, norm: NormKind) -> Result<f64> {
    if u.len() != u_ref.len() {
        return Err(Error::Dimension {
            expected: u_ref.len(),
            got: u.len(),
        });
    }
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for (a, b) in u.iter().zip(u_ref) {
        if a.len() != b.len() {
            return Err(Error::Dimension {
                expected: b.len(),
                got: a.len(),
            });
        }
        for (x, y) in a.iter().zip(b) {
            let d = (x - y).norm();
            match norm {
                NormKind::L2 => {
                    num += d * d;
                    den += y.norm_sqr();
                }
                NormKind::Linf => {
                    num = num.max(d);
                    den = den.max(y.norm());
                }
            }
        }
    }
    if den == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(match norm {
        NormKind::L2 => (num / den).sqrt(),
        NormKind::Linf => num / den,
    })
}

/// Least-squares slope of `ln err` against `ln dt`.
pub fn fit_order(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), &(dt, e)| (a + dt.ln(), b + e.ln()));
    let (mx, my) = (sx / n, sy / n);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(dt, e) in points {
        let dx = dt.ln() - mx;
        sxy += dx * (e.ln() - my);
        sxx += dx * dx;
    }
    (sxx > 0.0).then(|| sxy / sxx)
}

/// States at each of `times` (multiples of `dt`), from the closed form when
/// available and from RK4 at step `dt` otherwise.
pub fn reference_solution(problem: &dyn Problem, times: &[f64], dt: f64, prefer_exact: bool) -> Result<Vec<Field>> {
    if prefer_exact {
        if let Some(exact) = times
            .iter()
            .map(|&t| problem.exact_solution(t))
            .collect::<Option<Vec<_>>>()
        {
            return Ok(exact);
        }
    }
    let cfg = SchemeConfig::new(SchemeKind::Rk4Ref, dt)?;
    march(problem, &cfg, times)
}

fn march(problem: &dyn Problem, cfg: &SchemeConfig, times: &[f64]) -> Result<Vec<Field>> {
    let mut state = StepState::initial(problem, problem.initial_state(), 0.0)?;
    let mut done = 0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let target = step_count(t, cfg.dt)?;
        if target < done {
            return Err(Error::InvalidInput("comparison times must be ascending".into()));
        }
        state = integrate(cfg, problem, state, target - done)?.0;
        done = target;
        out.push(state.u.clone());
    }
    Ok(out)
}

fn reference_for(cfg: &RunConfig, problem: &dyn Problem) -> Result<Field> {
    let end = [cfg.end_time];
    let dt = cfg.reference_dt();
    let mut states = match cfg.reference.kind {
        ReferenceKind::Auto => reference_solution(problem, &end, dt, true)?,
        ReferenceKind::Analytic => vec![problem.exact_solution(cfg.end_time).ok_or_else(|| {
            Error::InvalidInput(format!("problem '{}' has no closed-form solution", problem.name()))
        })?],
        ReferenceKind::Rk4 => reference_solution(problem, &end, dt, false)?,
        ReferenceKind::SelfRefined => march(problem, &cfg.scheme_config(dt)?, &end)?,
    };
    Ok(states.remove(0))
}

/// Integrates every `(dt, resolution)` pair to the end time and compares with the reference.
pub fn run_convergence(cfg: &RunConfig) -> Result<ConvergenceResult> {
    cfg.validate()?;
    let mut records = Vec::new();
    let mut fits = Vec::new();
    for &res in &cfg.resolutions {
        let problem = problems::build(&cfg.problem, res)?;
        let resolution = res.unwrap_or_else(|| axis_points(problem.as_ref()));
        let reference = reference_for(cfg, problem.as_ref())?;
        let rows: Vec<ErrorRecord> = cfg
            .dts
            .par_iter()
            .map(|&dt| -> Result<ErrorRecord> {
                let start = Instant::now();
                let scheme = cfg.scheme_config(dt)?;
                let n = step_count(cfg.end_time, dt)?;
                let state = StepState::initial(problem.as_ref(), problem.initial_state(), 0.0)?;
                let outcome = integrate(&scheme, problem.as_ref(), state, n);
                let wall_time = start.elapsed().as_secs_f64();
                match outcome {
                    Ok((end, _)) => Ok(ErrorRecord {
                        dt,
                        resolution,
                        rel_l2: Some(compute_error_norm(&end.u, &reference, NormKind::L2)?),
                        rel_linf: Some(compute_error_norm(&end.u, &reference, NormKind::Linf)?),
                        wall_time,
                        blow_up: false,
                    }),
                    Err(Error::BlowUp { .. }) => Ok(ErrorRecord {
                        dt,
                        resolution,
                        rel_l2: None,
                        rel_linf: None,
                        wall_time,
                        blow_up: true,
                    }),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<_>>()?;
        let points: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|r| r.rel_l2.filter(|&e| e >= ERROR_FLOOR).map(|e| (r.dt, e)))
            .collect();
        fits.push(OrderFit {
            resolution,
            order: fit_order(&points),
            points_used: points.len(),
        });
        records.extend(rows);
    }
    if records.iter().all(|r| r.blow_up) {
        return Err(Error::EmptyStudy);
    }
    Ok(ConvergenceResult { records, fits })
}

fn axis_points(problem: &dyn Problem) -> usize {
    match problem.domain() {
        Domain::Line(g) => g.points(),
        Domain::Plane(g) => g.x_axis().points(),
    }
}

/// `1/2 (|u_k|^2 + |v_k|^2)` summed over integer annuli `round(|k|)`, shell 0 first.
///
/// `state` holds `(phi', u, v)`; the sum over shells equals the grid mean of `(u^2 + v^2)/2`.
pub fn kinetic_energy_spectrum(grid: &PeriodicGrid2D, state: &Field) -> Result<Vec<f64>> {
    if state.len() != 3 {
        return Err(Error::Dimension {
            expected: 3,
            got: state.len(),
        });
    }
    let su = grid.forward(&state[1])?;
    let sv = grid.forward(&state[2])?;
    let (nx, ny) = su.shape();
    let kmax = (((nx / 2).pow(2) + (ny / 2).pow(2)) as f64).sqrt().round() as usize;
    let mut shells = vec![0.0; kmax + 1];
    for idx in 0..su.modes().len() {
        let (kx, ky) = su.mode_indices(idx);
        let shell = ((kx * kx + ky * ky) as f64).sqrt().round() as usize;
        shells[shell] += 0.5 * (su.modes()[idx].norm_sqr() + sv.modes()[idx].norm_sqr());
    }
    Ok(shells)
}
