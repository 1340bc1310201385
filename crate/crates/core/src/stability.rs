//! Closed-form stability functions, region scans, the shift counterexample and
//! a power-method estimate of the dominant growth factor of a time stepper.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exp_core::{eval_phi, eval_psi};
use crate::field::{self, Field};
use crate::problems::Problem;
use crate::schemes::{step, SchemeConfig, SchemeKind, StepState};

/// Cells whose amplification is at most `1 + STABLE_SLACK` count as stable.
pub const STABLE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilitySample {
    pub xi_l: Complex64,
    pub xi_n: Complex64,
    pub kappa_s: f64,
    pub amplification: f64,
}

/// `{0, pi/10, ..., 2 pi}`.
pub fn kappa_set() -> Vec<f64> {
    (0..=20).map(|j| j as f64 * PI / 10.0).collect()
}

/// Both roots of the SL-SI-SETTLS amplification quadratic.
pub fn settls_roots(xi_l: Complex64, xi_n: Complex64, kappa_s: f64) -> Result<[Complex64; 2]> {
    let a = 1.0 - xi_l * 0.5;
    if a.norm() < 1e-14 {
        return Err(Error::SingularConfiguration(
            "leading coefficient vanishes at xi_L = 2".into(),
        ));
    }
    let shift = Complex64::from_polar(1.0, -kappa_s);
    let b = -(shift * (1.0 + xi_l * 0.5 + xi_n) + xi_n * 0.5);
    let c = xi_n * 0.5 * shift;
    let disc = (b * b - a * c * 4.0).sqrt();
    // pick the sign that avoids cancellation, then use the product of the roots
    let q = if (b.conj() * disc).re >= 0.0 {
        -(b + disc) * 0.5
    } else {
        -(b - disc) * 0.5
    };
    if q.norm() == 0.0 {
        return Ok([Complex64::new(0.0, 0.0); 2]);
    }
    Ok([q / a, c / q])
}

/// Amplification factor `|A|` of one Fourier mode for the given scheme.
pub fn stability_function(
    scheme: SchemeKind,
    xi_l: Complex64,
    xi_n: Complex64,
    kappa_s: f64,
) -> Result<StabilitySample> {
    let shift = Complex64::from_polar(1.0, -kappa_s);
    let adv = xi_n - Complex64::new(0.0, kappa_s);
    let amplification = match scheme {
        SchemeKind::Etd1rk => (eval_phi(0, xi_l)? + eval_phi(1, xi_l)? * adv).norm(),
        SchemeKind::Etd2rk => {
            let a1 = eval_phi(0, xi_l)? + eval_phi(1, xi_l)? * adv;
            (a1 + eval_phi(2, xi_l)? * adv * (a1 - 1.0)).norm()
        }
        SchemeKind::Se11 | SchemeKind::Se21 => se11(xi_l, xi_n, shift)?.norm(),
        SchemeKind::Se12 | SchemeKind::Se22 => {
            let a11 = se11(xi_l, xi_n, shift)?;
            (a11 + xi_n * eval_phi(2, xi_l)? * (a11 - shift)).norm()
        }
        SchemeKind::SlSiSettls => {
            let [r1, r2] = settls_roots(xi_l, xi_n, kappa_s)?;
            r1.norm().max(r2.norm())
        }
        SchemeKind::Rk4Ref => {
            return Err(Error::InvalidInput(
                "no closed-form stability function for RK4_REF".into(),
            ))
        }
    };
    Ok(StabilitySample {
        xi_l,
        xi_n,
        kappa_s,
        amplification,
    })
}

fn se11(xi_l: Complex64, xi_n: Complex64, shift: Complex64) -> Result<Complex64> {
    Ok(shift * eval_phi(0, xi_l)? * (1.0 + xi_n * eval_psi(1, xi_l)?))
}

/// Max over `kappa_set` of `|A|`.
pub fn max_amplification(scheme: SchemeKind, xi_l: Complex64, xi_n: Complex64, kappa_set: &[f64]) -> Result<f64> {
    kappa_set.iter().try_fold(0.0f64, |m, &ks| {
        Ok(m.max(stability_function(scheme, xi_l, xi_n, ks)?.amplification))
    })
}

/// `n` evenly spaced values on `[-extent, extent]`, mirrored exactly about zero.
pub fn symmetric_axis(n: usize, extent: f64) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n)
        .map(|i| extent * (2 * i as i64 - (n as i64 - 1)) as f64 / (n - 1) as f64)
        .collect()
}

/// Raster over purely imaginary `xi_L = i y` (rows) and `xi_N = i b` (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct RegionScan {
    pub xi_l_im: Vec<f64>,
    pub xi_n_im: Vec<f64>,
    /// Row-major `[row][column]`.
    pub amplification: Vec<f64>,
    pub stable: Vec<bool>,
}

impl RegionScan {
    pub fn at(&self, row: usize, col: usize) -> (f64, bool) {
        let i = row * self.xi_n_im.len() + col;
        (self.amplification[i], self.stable[i])
    }

    pub fn stable_count(&self) -> usize {
        self.stable.iter().filter(|&&s| s).count()
    }
}

pub fn region_scan(scheme: SchemeKind, xi_l_im: &[f64], xi_n_im: &[f64], kappa_set: &[f64]) -> Result<RegionScan> {
    let rows: Vec<Vec<f64>> = xi_l_im
        .par_iter()
        .map(|&y| {
            xi_n_im
                .iter()
                .map(|&b| max_amplification(scheme, Complex64::new(0.0, y), Complex64::new(0.0, b), kappa_set))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let amplification: Vec<f64> = rows.into_iter().flatten().collect();
    let stable = amplification.iter().map(|&a| a <= 1.0 + STABLE_SLACK).collect();
    Ok(RegionScan {
        xi_l_im: xi_l_im.to_vec(),
        xi_n_im: xi_n_im.to_vec(),
        amplification,
        stable,
    })
}

/// Periodic one-node shift to the right: `out[i] = u[i - 1]`.
pub fn shift_right(u: &[Complex64]) -> Vec<Complex64> {
    let n = u.len();
    (0..n).map(|i| u[(i + n - 1) % n]).collect()
}

/// One step of `u' = diag(lambda) u` with a one-node shift as the interpolation,
/// by the unsplit `phi0(dt L)[u]_*` and the split `phi0(dt L/2)[phi0(dt L/2) u]_*`.
pub fn shift_counterexample(
    lambda: &[Complex64],
    dt: f64,
    u: &[Complex64],
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if lambda.len() != u.len() {
        return Err(Error::Dimension {
            expected: lambda.len(),
            got: u.len(),
        });
    }
    let exp = |scale: f64, v: &[Complex64]| -> Result<Vec<Complex64>> {
        lambda
            .iter()
            .zip(v)
            .map(|(&l, &x)| Ok(eval_phi(0, l * scale)? * x))
            .collect()
    };
    let unsplit = exp(dt, &shift_right(u))?;
    let split = exp(0.5 * dt, &shift_right(&exp(0.5 * dt, u)?))?;
    Ok((unsplit, split))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthEstimate {
    pub dominant_eigenvalue: f64,
    pub growth_rate: f64,
    pub e_folding: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl GrowthEstimate {
    pub fn from_eigenvalue(lambda: f64, dt: f64, iterations: usize, converged: bool) -> Self {
        let log = lambda.ln();
        Self {
            dominant_eigenvalue: lambda,
            growth_rate: log / dt,
            e_folding: dt / log,
            iterations,
            converged,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerOptions {
    /// Perturbation size relative to the steady state (absolute when it vanishes).
    pub perturbation: f64,
    pub window: usize,
    pub tolerance: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub steady_tolerance: f64,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self {
            perturbation: 1e-8,
            window: 50,
            tolerance: 1e-6,
            max_iter: 5000,
            seed: 0,
            steady_tolerance: 1e-10,
        }
    }
}

/// Seeded random perturbation restricted to mid-range wavenumbers.
pub fn random_perturbation(problem: &dyn Problem, seed: u64) -> Result<Field> {
    let domain = problem.domain();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = domain.len();
    let mut out = Vec::with_capacity(problem.components());
    for _ in 0..problem.components() {
        let noise: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), 0.0)).collect();
        let mut spec = domain.forward(&noise)?;
        let (nx, _) = spec.shape();
        let lo = (nx / 16).max(1) as f64;
        let hi = (nx / 3) as f64;
        for idx in 0..spec.modes().len() {
            let (kx, ky) = spec.mode_indices(idx);
            let r = ((kx * kx + ky * ky) as f64).sqrt();
            if r < lo || r > hi {
                spec.modes_mut()[idx] = Complex64::new(0.0, 0.0);
            }
        }
        out.push(domain.inverse(&spec)?);
    }
    problem.project(&mut out)?;
    for z in out.iter_mut().flatten() {
        z.im = 0.0;
    }
    Ok(out)
}

/// Power iteration on the linearization of `g` about `steady`.
///
/// `g` maps a state to the state one step later. `initial` is the starting perturbation.
pub fn power_iteration_with<G>(
    mut g: G,
    steady: &Field,
    initial: Field,
    dt: f64,
    opts: &PowerOptions,
) -> Result<GrowthEstimate>
where
    G: FnMut(&Field) -> Result<Field>,
{
    let g_steady = g(steady)?;
    let steady_norm = field::l2_norm(steady);
    let drift = field::l2_norm(&field::sub(&g_steady, steady));
    if drift > opts.steady_tolerance * steady_norm.max(1.0) {
        return Err(Error::InvalidInput(format!(
            "state is not steady: one step moves it by {drift:.3e}"
        )));
    }
    let size = opts.perturbation * if steady_norm > 0.0 { steady_norm } else { 1.0 };
    let r0 = field::l2_norm(&initial);
    if !(r0 > 0.0) {
        return Err(Error::InvalidInput("initial perturbation is zero".into()));
    }
    let mut r = field::scale(&initial, size / r0);
    let mut ratios: Vec<f64> = Vec::new();
    for it in 1..=opts.max_iter {
        let next = g(&field::add(steady, &r))?;
        let r_next = field::sub(&next, &g_steady);
        let norm_next = field::l2_norm(&r_next);
        let ratio = norm_next / size;
        if !ratio.is_finite() || norm_next == 0.0 {
            return Ok(GrowthEstimate::from_eigenvalue(ratio, dt, it, false));
        }
        ratios.push(ratio);
        r = field::scale(&r_next, size / norm_next);
        if ratios.len() >= opts.window {
            let tail = &ratios[ratios.len() - opts.window..];
            let (lo, hi) = tail
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
            if hi - lo < opts.tolerance * hi {
                return Ok(GrowthEstimate::from_eigenvalue(ratio, dt, it, true));
            }
        }
    }
    let last = *ratios.last().unwrap_or(&f64::NAN);
    Ok(GrowthEstimate::from_eigenvalue(last, dt, opts.max_iter, false))
}

/// Dominant growth factor of one step of `cfg` about `steady`.
pub fn power_iteration_estimate(
    problem: &dyn Problem,
    cfg: &SchemeConfig,
    steady: &Field,
    opts: &PowerOptions,
) -> Result<GrowthEstimate> {
    let initial = random_perturbation(problem, opts.seed)?;
    power_iteration_with(
        |u| {
            let s = StepState::initial(problem, u.clone(), 0.0)?;
            Ok(step(cfg, problem, &s)?.0.u)
        },
        steady,
        initial,
        cfg.dt,
        opts,
    )
}
