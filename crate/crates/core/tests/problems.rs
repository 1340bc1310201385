use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use slexp::exp_core::ExpFunction;
use slexp::field::{self, Field};
use slexp::harness::{compute_error_norm, fit_order, reference_solution, NormKind};
use slexp::linalg::CMatrix;
use slexp::problems::{
    self, eval_nonlinear, l1, l2, linear_symbol, AdvectionReaction, CoriolisTreatment, Problem, SpectralLinear,
    SwePlane, SweSetup, VelocityField, PROBLEM_NAMES,
};
use slexp::schemes::{integrate, SchemeConfig, SchemeKind, StepState};
use slexp::Error;

fn mat(m: [[f64; 2]; 2]) -> CMatrix {
    CMatrix::from_real_rows(&[m[0].to_vec(), m[1].to_vec()])
}

proptest! {
    #[test]
    fn l1_family_commutes(x in -20.0..20.0f64, y in -20.0..20.0f64) {
        prop_assert!(mat(l1(x)).commutator(&mat(l1(y))).frobenius() <= 1e-14);
    }
}

#[test]
fn l2_family_does_not_commute() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let (x, y): (f64, f64) = (rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        if (x - y).abs() > 1e-3 {
            assert!(mat(l2(x)).commutator(&mat(l2(y))).frobenius() > 1e-8);
        }
    }
}

#[test]
fn every_named_setup_builds() {
    for name in PROBLEM_NAMES {
        let p = problems::build(name, Some(32)).unwrap();
        assert_eq!(p.name(), name);
        assert_eq!(p.initial_state().len(), p.components());
        assert!(!p.parameters().is_empty());
    }
    match problems::build("galewsky", None) {
        Err(Error::Usage(msg)) => assert!(PROBLEM_NAMES.iter().all(|n| msg.contains(n))),
        Err(e) => panic!("unexpected error {e}"),
        Ok(_) => panic!("unknown name accepted"),
    }
}

#[test]
fn plane_symbols_are_exposed_and_line_symbols_are_not() {
    let swe = SwePlane::standard(SweSetup::Balanced, 8).unwrap();
    let sym = linear_symbol(&swe).unwrap();
    assert_eq!(sym.len(), 64);
    assert!(sym[0].entries().frobenius() == 0.0);
    let line = problems::build("scalar-sinL", Some(16)).unwrap();
    assert!(linear_symbol(line.as_ref()).is_err());
}

fn swe_tendency(p: &SwePlane, u: &Field) -> Field {
    let lu = p.apply_linear(u).unwrap();
    let n = eval_nonlinear(p, 0.0, u).unwrap();
    let a = p.advection(0.0, u).unwrap();
    field::add(&field::add(&lu, &n), &a)
}

#[test]
fn balanced_state_has_zero_tendency() {
    for coriolis in [CoriolisTreatment::Nonlinear, CoriolisTreatment::Linear] {
        let p = SwePlane::new(64, 1.0, 1.0, coriolis, SweSetup::Balanced).unwrap();
        let u = p.initial_state();
        assert!(field::max_abs(&swe_tendency(&p, &u)) < 1e-10);
        assert_eq!(p.exact_solution(3.0).unwrap(), u);
    }
    assert!(SwePlane::new(16, 1.0, 0.0, CoriolisTreatment::Nonlinear, SweSetup::Balanced).is_err());
}

#[test]
fn divergence_free_state_has_no_reaction_term() {
    let p = SwePlane::standard(SweSetup::Perturbed, 16).unwrap();
    let g = p.grid().clone();
    let mut u = field::zeros(3, g.len());
    for i in 0..g.len() {
        let (x, y) = g.position(i);
        u[0][i] = Complex64::new(0.3 + x.cos(), 0.0);
        u[1][i] = Complex64::new(y.sin(), 0.0);
        u[2][i] = Complex64::new(x.cos(), 0.0);
    }
    let n = p.nonlinear(0.0, &u).unwrap();
    assert!(n[0].iter().all(|z| z.norm() < 1e-13));
}

/// Random real field whose spectrum lives in `|kx|, |ky| <= cut`.
fn band_limited(p: &SwePlane, cut: i64, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let d = p.domain();
    let noise: Vec<Complex64> = (0..d.len()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), 0.0)).collect();
    let mut s = d.forward(&noise).unwrap();
    for idx in 0..s.modes().len() {
        let (kx, ky) = s.mode_indices(idx);
        if kx.abs() > cut || ky.abs() > cut {
            s.modes_mut()[idx] = Complex64::new(0.0, 0.0);
        }
    }
    d.inverse(&s).unwrap().into_iter().map(|z| Complex64::new(z.re, 0.0)).collect()
}

#[test]
fn dealiased_product_matches_exact_convolution() {
    let n = 16usize;
    let cut = (n / 3) as i64;
    let p = SwePlane::standard(SweSetup::Perturbed, n).unwrap();
    let d = p.domain();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let u: Field = (0..3).map(|_| band_limited(&p, cut, &mut rng)).collect();
    let got = d.forward(&p.nonlinear(0.0, &u).unwrap()[0]).unwrap();

    let phi = d.forward(&u[0]).unwrap();
    let delta = {
        let ux = d.forward(&u[1]).unwrap().derivative(0, 1).unwrap();
        let vy = d.forward(&u[2]).unwrap().derivative(1, 1).unwrap();
        let mut s = ux;
        for (a, b) in s.modes_mut().iter_mut().zip(vy.modes()) {
            *a += b;
        }
        s
    };
    // direct convolution over signed modes, no aliasing
    for mx in -cut..=cut {
        for my in -cut..=cut {
            let mut want = Complex64::new(0.0, 0.0);
            for ax in -cut..=cut {
                for ay in -cut..=cut {
                    let (bx, by) = (mx - ax, my - ay);
                    if bx.abs() <= 2 * cut && by.abs() <= 2 * cut && bx.abs() < n as i64 / 2 && by.abs() < n as i64 / 2 {
                        want -= phi.mode(ax, ay) * delta.mode(bx, by);
                    }
                }
            }
            assert!((got.mode(mx, my) - want).norm() < 1e-10, "mode ({mx}, {my})");
        }
    }
    for idx in 0..got.modes().len() {
        let (kx, ky) = got.mode_indices(idx);
        if kx.abs() > cut || ky.abs() > cut {
            assert!(got.modes()[idx].norm() < 1e-14);
        }
    }
}

#[test]
fn exact_linear_propagation_conserves_energy() {
    for coriolis in [CoriolisTreatment::Nonlinear, CoriolisTreatment::Linear] {
        let p = SwePlane::new(32, 1.0, 1.0, coriolis, SweSetup::Perturbed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u: Field = (0..3).map(|_| band_limited(&p, 10, &mut rng)).collect();
        let e0 = p.energy(&u);
        for t in [0.1, 1.0, 7.3] {
            let ut = p.apply_exp(ExpFunction::Phi0, t, &u).unwrap();
            assert!((p.energy(&ut) - e0).abs() <= 1e-10 * e0);
            assert!(ut.iter().flatten().all(|z| z.im.abs() < 1e-12));
        }
    }
}

#[test]
fn pure_transport_preserves_extrema() {
    let p = AdvectionReaction::scalar("transport", 256, |_| 0.0, VelocityField::Constant(0.37), None).unwrap();
    let u0 = p.initial_state();
    let (lo, hi) = extrema(&u0);
    let cfg = SchemeConfig::new(SchemeKind::Se11, 0.1).unwrap();
    let s = StepState::initial(&p, u0, 0.0).unwrap();
    let (end, _) = integrate(&cfg, &p, s, 50).unwrap();
    let (lo1, hi1) = extrema(&end.u);
    assert!((hi1 - hi).abs() < 1e-3 && (lo1 - lo).abs() < 1e-3, "[{lo1}, {hi1}] vs [{lo}, {hi}]");
}

fn extrema(u: &Field) -> (f64, f64) {
    u[0].iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), z| (a.min(z.re), b.max(z.re)))
}

#[test]
fn rk4_reference_reproduces_closed_form() {
    let p = problems::build("scalar-constL", None).unwrap();
    let times = [5.0, 10.0];
    let rk4 = reference_solution(p.as_ref(), &times, 1.0 / 320.0, false).unwrap();
    for (t, state) in times.iter().zip(&rk4) {
        let exact = p.exact_solution(*t).unwrap();
        assert!(compute_error_norm(state, &exact, NormKind::L2).unwrap() <= 1e-8);
    }
}

#[test]
fn rk4_reference_self_converges_at_fourth_order() {
    let p = problems::build("scalar-sinL", Some(256)).unwrap();
    let fine = reference_solution(p.as_ref(), &[2.0], 1.0 / 160.0, false).unwrap();
    let pts: Vec<(f64, f64)> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&dt| {
            let u = reference_solution(p.as_ref(), &[2.0], dt, false).unwrap();
            (dt, compute_error_norm(&u[0], &fine[0], NormKind::L2).unwrap())
        })
        .collect();
    let order = fit_order(&pts).unwrap();
    assert!((order - 4.0).abs() < 0.3, "order {order} from {pts:?}");
}

#[test]
fn spectral_linear_rejects_unresolved_modes() {
    let ok = SpectralLinear::uniform(1.0, 16, Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0), 0.0, 7);
    assert!(ok.is_ok());
    let bad = SpectralLinear::uniform(1.0, 16, Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0), 0.0, 8);
    assert!(bad.is_err());
}
