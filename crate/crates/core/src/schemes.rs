//! One-step integrators with per-step operation counts.

use std::fmt;
use std::ops::AddAssign;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::exp_core::ExpFunction;
use crate::field::{self, Field};
use crate::grid::Domain;
use crate::problems::{eval_nonlinear, Problem};
use crate::settls::{compute_departure_points_with, SettlsOptions, TrajectorySet, VelocityHistory};

/// Coefficients above this modulus count as a blow-up.
pub const BLOW_UP_LIMIT: f64 = 1e30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    Etd1rk,
    Etd2rk,
    Se11,
    Se12,
    Se21,
    Se22,
    SlSiSettls,
    Rk4Ref,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 8] = [
        SchemeKind::Etd1rk,
        SchemeKind::Etd2rk,
        SchemeKind::Se11,
        SchemeKind::Se12,
        SchemeKind::Se21,
        SchemeKind::Se22,
        SchemeKind::SlSiSettls,
        SchemeKind::Rk4Ref,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Etd1rk => "ETD1RK",
            SchemeKind::Etd2rk => "ETD2RK",
            SchemeKind::Se11 => "SE11",
            SchemeKind::Se12 => "SE12",
            SchemeKind::Se21 => "SE21",
            SchemeKind::Se22 => "SE22",
            SchemeKind::SlSiSettls => "SL_SI_SETTLS",
            SchemeKind::Rk4Ref => "RK4_REF",
        }
    }

    pub fn is_semi_lagrangian(self) -> bool {
        matches!(
            self,
            SchemeKind::Se11 | SchemeKind::Se12 | SchemeKind::Se21 | SchemeKind::Se22 | SchemeKind::SlSiSettls
        )
    }

    /// Schemes that read `N~(U^{n-1})`.
    pub fn needs_nonlinear_history(self) -> bool {
        self == SchemeKind::SlSiSettls
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_uppercase();
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name().replace('_', "") == key)
            .ok_or_else(|| {
                let names: Vec<_> = SchemeKind::ALL.iter().map(|k| k.name()).collect();
                Error::Usage(format!("unknown scheme '{s}', expected one of: {}", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub scheme: SchemeKind,
    pub dt: f64,
    pub viscosity_order: u32,
    pub viscosity_coeff: f64,
    pub settls: SettlsOptions,
}

impl SchemeConfig {
    pub fn new(scheme: SchemeKind, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidInput(format!("time step {dt} must be positive")));
        }
        Ok(Self {
            scheme,
            dt,
            viscosity_order: 0,
            viscosity_coeff: 0.0,
            settls: SettlsOptions::default(),
        })
    }

    pub fn with_viscosity(mut self, order: u32, coeff: f64) -> Result<Self> {
        if order % 2 != 0 {
            return Err(Error::InvalidInput(format!("viscosity order {order} must be even")));
        }
        if !(coeff.is_finite() && coeff >= 0.0) {
            return Err(Error::InvalidInput(format!("viscosity {coeff} must be non-negative")));
        }
        if (order == 0) != (coeff == 0.0) {
            return Err(Error::InvalidInput(
                "viscosity order and coefficient must be zero together".into(),
            ));
        }
        self.viscosity_order = order;
        self.viscosity_coeff = coeff;
        Ok(self)
    }

    pub fn with_settls(mut self, opts: SettlsOptions) -> Self {
        self.settls = opts;
        self
    }
}

/// Work done in one step. Each count is per whole multi-component field.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounters {
    pub phi0_applications: usize,
    pub phi1: usize,
    pub phi2: usize,
    pub psi1: usize,
    pub psi2: usize,
    pub trajectory_solves: usize,
    pub interpolations: usize,
    pub linear_applications: usize,
    pub linear_solves: usize,
    pub advection_evals: usize,
    pub nonlinear_evals: usize,
}

impl OpCounters {
    pub const COLUMNS: [&'static str; 11] = [
        "phi0", "phi1", "phi2", "psi1", "psi2", "x_d", "interp", "L", "L_inv", "N_A", "N_R",
    ];

    /// Counts in the column order of [`OpCounters::COLUMNS`].
    pub fn row(&self) -> [usize; 11] {
        [
            self.phi0_applications,
            self.phi1,
            self.phi2,
            self.psi1,
            self.psi2,
            self.trajectory_solves,
            self.interpolations,
            self.linear_applications,
            self.linear_solves,
            self.advection_evals,
            self.nonlinear_evals,
        ]
    }
}

impl AddAssign for OpCounters {
    fn add_assign(&mut self, o: Self) {
        self.phi0_applications += o.phi0_applications;
        self.phi1 += o.phi1;
        self.phi2 += o.phi2;
        self.psi1 += o.psi1;
        self.psi2 += o.psi2;
        self.trajectory_solves += o.trajectory_solves;
        self.interpolations += o.interpolations;
        self.linear_applications += o.linear_applications;
        self.linear_solves += o.linear_solves;
        self.advection_evals += o.advection_evals;
        self.nonlinear_evals += o.nonlinear_evals;
    }
}

/// Prognostic state plus the history two-level schemes read.
#[derive(Debug, Clone, PartialEq)]
pub struct StepState {
    pub u: Field,
    pub t: f64,
    pub step_index: usize,
    /// `N~(U^{n-1})`.
    pub nonlinear_prev: Option<Field>,
    /// Transport velocity at `t_{n-1}`.
    pub velocity_prev: Option<Vec<Vec<f64>>>,
    /// Steps whose trajectory iteration hit the iteration cap.
    pub trajectory_warnings: usize,
}

impl StepState {
    /// State at `t0` with the first-step history `v_prev = v_now`, `N~_prev = N~(U^0)`.
    pub fn initial(problem: &dyn Problem, u0: Field, t0: f64) -> Result<Self> {
        let nonlinear_prev = eval_nonlinear(problem, t0, &u0)?;
        let velocity_prev = problem.velocity(t0, &u0);
        Ok(Self {
            u: u0,
            t: t0,
            step_index: 0,
            nonlinear_prev: Some(nonlinear_prev),
            velocity_prev: Some(velocity_prev),
            trajectory_warnings: 0,
        })
    }

    /// State without any history.
    pub fn bare(u: Field, t: f64) -> Self {
        Self {
            u,
            t,
            step_index: 0,
            nonlinear_prev: None,
            velocity_prev: None,
            trajectory_warnings: 0,
        }
    }
}

/// Problem access that tallies every operation.
struct Ops<'a> {
    p: &'a dyn Problem,
    c: OpCounters,
}

impl<'a> Ops<'a> {
    fn new(p: &'a dyn Problem) -> Self {
        Self {
            p,
            c: OpCounters::default(),
        }
    }

    fn f(&mut self, f: ExpFunction, scale: f64, u: &Field) -> Result<Field> {
        match f {
            ExpFunction::Phi0 => self.c.phi0_applications += 1,
            ExpFunction::Phi1 => self.c.phi1 += 1,
            ExpFunction::Phi2 => self.c.phi2 += 1,
            ExpFunction::Psi1 => self.c.psi1 += 1,
            ExpFunction::Psi2 => self.c.psi2 += 1,
        }
        self.p.apply_exp(f, scale, u)
    }

    fn ntilde(&mut self, t: f64, u: &Field) -> Result<Field> {
        self.c.nonlinear_evals += 1;
        eval_nonlinear(self.p, t, u)
    }

    fn nadv(&mut self, t: f64, u: &Field) -> Result<Field> {
        self.c.advection_evals += 1;
        self.p.advection(t, u)
    }

    fn lin(&mut self, u: &Field) -> Result<Field> {
        self.c.linear_applications += 1;
        self.p.apply_linear(u)
    }

    fn solve(&mut self, alpha: f64, u: &Field) -> Result<Field> {
        self.c.linear_solves += 1;
        self.p.solve_shifted(alpha, u)
    }

    fn trajectories(&mut self, hist: &VelocityHistory, dt: f64, opts: &SettlsOptions) -> Result<TrajectorySet> {
        self.c.trajectory_solves += 1;
        compute_departure_points_with(hist, self.p.domain(), dt, opts)
    }

    fn interp(&mut self, traj: &TrajectorySet, u: &Field) -> Result<Field> {
        self.c.interpolations += 1;
        interpolate_field(self.p.domain(), traj, u)
    }
}

/// `[u]_*`: every component evaluated at the departure points.
pub fn interpolate_field(domain: &Domain, traj: &TrajectorySet, u: &Field) -> Result<Field> {
    u.iter()
        .map(|c| domain.interp_cubic(c, &traj.departures))
        .collect()
}

fn velocity_history(problem: &dyn Problem, state: &StepState) -> Result<(Vec<Vec<f64>>, VelocityHistory)> {
    let prev = state
        .velocity_prev
        .clone()
        .ok_or_else(|| Error::State("velocity at the previous time level is missing".into()))?;
    let now = problem.velocity(state.t, &state.u);
    Ok((now.clone(), VelocityHistory::new(now, prev)?))
}

/// Advances `state` by one step of `cfg.scheme`.
pub fn step(cfg: &SchemeConfig, problem: &dyn Problem, state: &StepState) -> Result<(StepState, OpCounters)> {
    let h = cfg.dt;
    let t = state.t;
    let u = &state.u;
    let mut ops = Ops::new(problem);
    let mut warned = false;

    let needs_history = cfg.scheme.is_semi_lagrangian();
    let (v_now, traj) = if needs_history {
        let (v_now, hist) = velocity_history(problem, state)?;
        let traj = ops.trajectories(&hist, h, &cfg.settls)?;
        warned = !traj.converged;
        (Some(v_now), Some(traj))
    } else {
        (None, None)
    };
    let traj_ref = || traj.as_ref().expect("semi-Lagrangian scheme has trajectories");

    let (mut next, n0) = match cfg.scheme {
        SchemeKind::Etd1rk | SchemeKind::Etd2rk => {
            let n0 = ops.ntilde(t, u)?;
            let full0 = field::add(&n0, &ops.nadv(t, u)?);
            let u1 = field::axpy(&ops.f(ExpFunction::Phi0, h, u)?, h, &ops.f(ExpFunction::Phi1, h, &full0)?);
            if cfg.scheme == SchemeKind::Etd1rk {
                (u1, n0)
            } else {
                let full1 = field::add(&ops.ntilde(t + h, &u1)?, &ops.nadv(t + h, &u1)?);
                let corr = ops.f(ExpFunction::Phi2, h, &field::sub(&full1, &full0))?;
                (field::axpy(&u1, h, &corr), n0)
            }
        }
        SchemeKind::Se11 | SchemeKind::Se12 => {
            let traj = traj_ref();
            let n0 = ops.ntilde(t, u)?;
            let a = field::axpy(u, h, &ops.f(ExpFunction::Psi1, h, &n0)?);
            let a_star = ops.interp(traj, &a)?;
            let u1 = ops.f(ExpFunction::Phi0, h, &a_star)?;
            if cfg.scheme == SchemeKind::Se11 {
                (u1, n0)
            } else {
                let u2 = second_order_correction(&mut ops, traj, t, h, &u1, &n0)?;
                (u2, n0)
            }
        }
        SchemeKind::Se21 | SchemeKind::Se22 => {
            let traj = traj_ref();
            let half = ops.f(ExpFunction::Phi0, 0.5 * h, u)?;
            let half_star = ops.interp(traj, &half)?;
            let linear_part = ops.f(ExpFunction::Phi0, 0.5 * h, &half_star)?;
            let n0 = ops.ntilde(t, u)?;
            let b = field::scale(&ops.f(ExpFunction::Psi1, h, &n0)?, h);
            let b_star = ops.interp(traj, &b)?;
            let u1 = field::add(&linear_part, &ops.f(ExpFunction::Phi0, h, &b_star)?);
            if cfg.scheme == SchemeKind::Se21 {
                (u1, n0)
            } else {
                let u2 = second_order_correction(&mut ops, traj, t, h, &u1, &n0)?;
                (u2, n0)
            }
        }
        SchemeKind::SlSiSettls => {
            let traj = traj_ref();
            let n_prev = state
                .nonlinear_prev
                .as_ref()
                .ok_or_else(|| Error::State("N~ at the previous time level is missing".into()))?;
            let n0 = ops.ntilde(t, u)?;
            let a = field::axpy(u, 0.5 * h, &ops.lin(u)?);
            let a_star = ops.interp(traj, &a)?;
            let extrap = field::sub(&field::scale(&n0, 2.0), n_prev);
            let b_star = ops.interp(traj, &field::scale(&extrap, 0.5 * h))?;
            let rhs = field::axpy(&field::add(&a_star, &b_star), 0.5 * h, &n0);
            (ops.solve(0.5 * h, &rhs)?, n0)
        }
        SchemeKind::Rk4Ref => rk4_stages(&mut ops, t, h, u)?,
    };

    if cfg.viscosity_coeff > 0.0 {
        next = apply_hyperviscosity(problem.domain(), &next, h, cfg.viscosity_order, cfg.viscosity_coeff)?;
    }
    problem.project(&mut next)?;
    let index = state.step_index + 1;
    if !field::is_bounded(&next, BLOW_UP_LIMIT) {
        return Err(Error::BlowUp { step: index });
    }
    let new_state = StepState {
        u: next,
        t: t + h,
        step_index: index,
        nonlinear_prev: Some(n0),
        velocity_prev: Some(v_now.unwrap_or_else(|| problem.velocity(t, u))),
        trajectory_warnings: state.trajectory_warnings + usize::from(warned),
    };
    Ok((new_state, ops.c))
}

/// `U1 + h phi0(hL) [psi2(hL) N~(U1) - (psi2(hL) N~(U^n))_*]`.
fn second_order_correction(
    ops: &mut Ops,
    traj: &TrajectorySet,
    t: f64,
    h: f64,
    u1: &Field,
    n0: &Field,
) -> Result<Field> {
    let n1 = ops.ntilde(t + h, u1)?;
    let new_term = ops.f(ExpFunction::Psi2, h, &n1)?;
    let old_term = ops.f(ExpFunction::Psi2, h, n0)?;
    let old_star = ops.interp(traj, &old_term)?;
    let corr = ops.f(ExpFunction::Phi0, h, &field::sub(&new_term, &old_star))?;
    Ok(field::axpy(u1, h, &corr))
}

fn rk4_rhs(ops: &mut Ops, t: f64, u: &Field) -> Result<(Field, Field)> {
    let n = ops.ntilde(t, u)?;
    let rhs = field::add(&field::add(&ops.lin(u)?, &n), &ops.nadv(t, u)?);
    Ok((rhs, n))
}

fn rk4_stages(ops: &mut Ops, t: f64, h: f64, u: &Field) -> Result<(Field, Field)> {
    let (k1, n0) = rk4_rhs(ops, t, u)?;
    let (k2, _) = rk4_rhs(ops, t + 0.5 * h, &field::axpy(u, 0.5 * h, &k1))?;
    let (k3, _) = rk4_rhs(ops, t + 0.5 * h, &field::axpy(u, 0.5 * h, &k2))?;
    let (k4, _) = rk4_rhs(ops, t + h, &field::axpy(u, h, &k3))?;
    let mut next = u.clone();
    for (w, k) in [(1.0, &k1), (2.0, &k2), (2.0, &k3), (1.0, &k4)] {
        next = field::axpy(&next, h * w / 6.0, k);
    }
    Ok((next, n0))
}

/// Classical four-stage Runge-Kutta step on the full Eulerian right-hand side.
pub fn rk4_reference(problem: &dyn Problem, state: &StepState, dt: f64) -> Result<StepState> {
    let cfg = SchemeConfig::new(SchemeKind::Rk4Ref, dt)?;
    Ok(step(&cfg, problem, state)?.0)
}

/// `phi0(dt L) [U^n]_*`, ignoring `N~`.
pub fn linear_propagate_first_order(problem: &dyn Problem, state: &StepState, dt: f64) -> Result<StepState> {
    linear_propagate(problem, state, dt, false)
}

/// `phi0(dt L / 2) [phi0(dt L / 2) U^n]_*`, ignoring `N~`.
pub fn linear_propagate_second_order(problem: &dyn Problem, state: &StepState, dt: f64) -> Result<StepState> {
    linear_propagate(problem, state, dt, true)
}

fn linear_propagate(problem: &dyn Problem, state: &StepState, dt: f64, split: bool) -> Result<StepState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidInput(format!("time step {dt} must be positive")));
    }
    let (v_now, hist) = velocity_history(problem, state)?;
    let traj = compute_departure_points_with(&hist, problem.domain(), dt, &SettlsOptions::default())?;
    let mut next = if split {
        let half = problem.apply_exp(ExpFunction::Phi0, 0.5 * dt, &state.u)?;
        let star = interpolate_field(problem.domain(), &traj, &half)?;
        problem.apply_exp(ExpFunction::Phi0, 0.5 * dt, &star)?
    } else {
        let star = interpolate_field(problem.domain(), &traj, &state.u)?;
        problem.apply_exp(ExpFunction::Phi0, dt, &star)?
    };
    problem.project(&mut next)?;
    let index = state.step_index + 1;
    if !field::is_bounded(&next, BLOW_UP_LIMIT) {
        return Err(Error::BlowUp { step: index });
    }
    Ok(StepState {
        u: next,
        t: state.t + dt,
        step_index: index,
        nonlinear_prev: state.nonlinear_prev.clone(),
        velocity_prev: Some(v_now),
        trajectory_warnings: state.trajectory_warnings + usize::from(!traj.converged),
    })
}

/// Backward-Euler hyperviscosity applied as a separate stage.
pub fn hyperviscosity_step(problem: &dyn Problem, state: &StepState, cfg: &SchemeConfig) -> Result<StepState> {
    let mut next = state.clone();
    next.u = apply_hyperviscosity(problem.domain(), &state.u, cfg.dt, cfg.viscosity_order, cfg.viscosity_coeff)?;
    Ok(next)
}

/// Divides each mode by `1 + dt nu |k|^q`.
pub fn apply_hyperviscosity(domain: &Domain, u: &Field, dt: f64, order: u32, nu: f64) -> Result<Field> {
    if order % 2 != 0 || !(nu >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "invalid hyperviscosity order {order} / coefficient {nu}"
        )));
    }
    if nu == 0.0 {
        return Ok(u.clone());
    }
    u.iter()
        .map(|c| {
            let mut s = domain.forward(c)?;
            for idx in 0..s.modes().len() {
                let (kx, ky) = s.wavenumber(idx);
                let k2 = kx * kx + ky * ky;
                let factor = 1.0 / (1.0 + dt * nu * k2.powi(order as i32 / 2));
                s.modes_mut()[idx] *= factor;
            }
            domain.inverse(&s)
        })
        .collect()
}

/// Runs `n_steps` steps, summing the counters.
pub fn integrate(
    cfg: &SchemeConfig,
    problem: &dyn Problem,
    mut state: StepState,
    n_steps: usize,
) -> Result<(StepState, OpCounters)> {
    let mut total = OpCounters::default();
    for _ in 0..n_steps {
        let (next, c) = step(cfg, problem, &state)?;
        total += c;
        state = next;
    }
    Ok((state, total))
}

/// Number of steps of size `dt` covering `[0, end]`; errors unless it divides evenly.
pub fn step_count(end: f64, dt: f64) -> Result<usize> {
    let n = (end / dt).round();
    if !(n >= 0.0) || ((n * dt - end).abs() > 1e-9 * end.abs().max(1.0)) {
        return Err(Error::InvalidInput(format!(
            "time step {dt} does not divide the interval {end}"
        )));
    }
    Ok(n as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_names_roundtrip() {
        for k in SchemeKind::ALL {
            assert_eq!(k.name().parse::<SchemeKind>().unwrap(), k);
        }
        assert_eq!("sl-si-settls".parse::<SchemeKind>().unwrap(), SchemeKind::SlSiSettls);
        assert!(matches!("SE33".parse::<SchemeKind>(), Err(Error::Usage(_))));
    }

    #[test]
    fn viscosity_validation() {
        let c = SchemeConfig::new(SchemeKind::Se22, 0.1).unwrap();
        assert!(c.with_viscosity(3, 1.0).is_err());
        assert!(c.with_viscosity(2, 0.0).is_err());
        assert!(c.with_viscosity(0, 1.0).is_err());
        assert!(c.with_viscosity(4, 1e-3).is_ok());
        assert!(SchemeConfig::new(SchemeKind::Se22, 0.0).is_err());
    }

    #[test]
    fn step_count_requires_even_division() {
        assert_eq!(step_count(10.0, 0.25).unwrap(), 40);
        assert!(step_count(1.0, 0.3).is_err());
    }
}
