//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use slexp::exp_core::{phi_of_matrix, SymbolMatrix};
use slexp::field;
use slexp::grid::{Domain, PeriodicGrid1D};
use slexp::harness::{run_convergence, ReferenceKind, ReferenceSettings, RunConfig};
use slexp::linalg::CMatrix;
use slexp::problems::{Problem, SpectralLinear, SwePlane, SweSetup};
use slexp::schemes::{apply_hyperviscosity, integrate, step, SchemeConfig, SchemeKind, StepState};
use slexp::settls::{compute_departure_points_with, SettlsOptions, VelocityHistory};
use slexp::stability::{
    kappa_set, power_iteration_estimate, region_scan, shift_counterexample, stability_function, symmetric_axis,
    PowerOptions,
};

type Outcome = Result<String, String>;

/// Per-step counts in the column order phi0, phi1, phi2, psi1, psi2, x_d, interp, L, L^-1, N_A, N_R.
const EXPECTED_COUNTS: [(SchemeKind, [usize; 11]); 7] = [
    (SchemeKind::Etd1rk, [1, 1, 0, 0, 0, 0, 0, 0, 0, 1, 1]),
    (SchemeKind::Etd2rk, [1, 1, 1, 0, 0, 0, 0, 0, 0, 2, 2]),
    (SchemeKind::Se11, [1, 0, 0, 1, 0, 1, 1, 0, 0, 0, 1]),
    (SchemeKind::Se12, [2, 0, 0, 1, 2, 1, 2, 0, 0, 0, 2]),
    (SchemeKind::Se21, [3, 0, 0, 1, 0, 1, 2, 0, 0, 0, 1]),
    (SchemeKind::Se22, [4, 0, 0, 1, 2, 1, 3, 0, 0, 0, 2]),
    (SchemeKind::SlSiSettls, [0, 0, 0, 0, 0, 1, 2, 1, 1, 0, 1]),
];

fn line_study_dts() -> Vec<f64> {
    (0..=5).map(|k| 0.5f64.powi(k)).collect()
}

fn line_study(problem: &str, scheme: SchemeKind, kind: ReferenceKind) -> Result<slexp::harness::ConvergenceResult, String> {
    let mut cfg = RunConfig::new(problem, scheme, line_study_dts(), 10.0);
    cfg.resolutions = vec![Some(2048)];
    cfg.reference = ReferenceSettings {
        kind,
        dt: Some(0.5f64.powi(5) / 10.0),
    };
    run_convergence(&cfg).map_err(|e| e.to_string())
}

fn order_within(problem: &str, scheme: SchemeKind, target: f64, tol: f64) -> Result<f64, String> {
    let r = line_study(problem, scheme, ReferenceKind::Rk4)?;
    let order = r.order().ok_or_else(|| format!("{problem}/{scheme}: no order fit"))?;
    if (order - target).abs() <= tol {
        Ok(order)
    } else {
        Err(format!("{problem}/{scheme}: order {order:.4}, want {target} +- {tol}"))
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let se12 = order_within("scalar-sinL", SchemeKind::Se12, 1.0, 0.2)?;
    let se22 = order_within("scalar-sinL", SchemeKind::Se22, 2.0, 0.2)?;
    let settls = order_within("scalar-sinL", SchemeKind::SlSiSettls, 2.0, 0.3)?;
    let secs = start.elapsed().as_secs_f64();
    if secs >= 300.0 {
        return Err(format!("took {secs:.1} s"));
    }
    Ok(format!("orders SE12 {se12:.3}, SE22 {se22:.3}, SL-SI-SETTLS {settls:.3} in {secs:.1} s"))
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0f64;
    for scheme in [SchemeKind::Se12, SchemeKind::Se22] {
        let r = line_study("scalar-constL", scheme, ReferenceKind::Analytic)?;
        for rec in &r.records {
            let e = rec.rel_l2.ok_or_else(|| format!("{scheme} blew up at dt {}", rec.dt))?;
            let emax = rec.rel_linf.unwrap_or(f64::INFINITY).max(e);
            if emax > 1e-8 {
                return Err(format!("{scheme} error {emax:.3e} at dt {}", rec.dt));
            }
            worst = worst.max(emax);
        }
    }
    Ok(format!("largest relative error {worst:.2e}"))
}

fn criterion_3() -> Outcome {
    let mut parts = Vec::new();
    for problem in ["vector-L1", "vector-L2"] {
        let a = order_within(problem, SchemeKind::Se12, 1.0, 0.2)?;
        let b = order_within(problem, SchemeKind::Se22, 2.0, 0.2)?;
        parts.push(format!("{problem}: SE12 {a:.3}, SE22 {b:.3}"));
    }
    Ok(parts.join("; "))
}

fn criterion_4() -> Outcome {
    let p = SwePlane::standard(SweSetup::Perturbed, 32).map_err(|e| e.to_string())?;
    for (kind, want) in EXPECTED_COUNTS {
        let cfg = SchemeConfig::new(kind, 0.05).map_err(|e| e.to_string())?;
        let mut s = StepState::initial(&p, p.initial_state(), 0.0).map_err(|e| e.to_string())?;
        for n in 0..2 {
            let (next, c) = step(&cfg, &p, &s).map_err(|e| e.to_string())?;
            if c.row() != want {
                return Err(format!("{kind} step {n}: {:?}, want {want:?}", c.row()));
            }
            s = next;
        }
    }
    Ok("all 7 rows match".into())
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let zero = Complex64::new(0.0, 0.0);
    let i = |y: f64| Complex64::new(0.0, y);

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let y: f64 = rng.gen_range(-50.0..50.0);
        let ks: f64 = rng.gen_range(0.0..2.0 * PI);
        for kind in [SchemeKind::Se11, SchemeKind::Se12] {
            let a = stability_function(kind, i(y), zero, ks).map_err(|e| e.to_string())?.amplification;
            if (a - 1.0).abs() > 1e-12 {
                return Err(format!("(a) {kind} |A| = {a} at xi_L = {y}i"));
            }
        }
    }

    let axis = symmetric_axis(401, 4.0);
    let ks = kappa_set();
    for kind in [SchemeKind::Etd1rk, SchemeKind::Etd2rk] {
        let row = region_scan(kind, &[0.0], &axis, &ks).map_err(|e| e.to_string())?;
        let count = axis
            .iter()
            .enumerate()
            .filter(|&(c, &b)| b != 0.0 && row.at(0, c).1)
            .count();
        if count != 0 {
            return Err(format!("(b) {kind} has {count} stable cells on the xi_L = 0 row"));
        }
    }

    let se11 = region_scan(SchemeKind::Se11, &axis, &axis, &ks).map_err(|e| e.to_string())?;
    let settls = region_scan(SchemeKind::SlSiSettls, &axis, &axis, &ks).map_err(|e| e.to_string())?;
    let diff = se11.stable.iter().zip(&settls.stable).filter(|(a, b)| a != b).count();
    if diff != 0 {
        return Err(format!("(c) SE11 and SL-SI-SETTLS rasters differ in {diff} cells"));
    }

    let full = region_scan(SchemeKind::Se12, &axis, &axis, &ks).map_err(|e| e.to_string())?;
    let single = region_scan(SchemeKind::Se12, &axis, &axis, &[0.0]).map_err(|e| e.to_string())?;
    if full.stable != single.stable {
        return Err("(d) SE12 raster depends on the kappa set".into());
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 60.0 {
        return Err(format!("took {secs:.1} s"));
    }
    Ok(format!(
        "(a)-(d) hold; {} shared stable cells; {secs:.1} s",
        se11.stable_count()
    ))
}

fn random_matrix(rng: &mut ChaCha8Rng) -> CMatrix {
    let rows: Vec<Vec<Complex64>> = (0..2)
        .map(|_| (0..2).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
        .collect();
    CMatrix::from_rows(&rows)
}

fn criterion_6() -> Outcome {
    let exp = |m: &CMatrix| -> Result<CMatrix, String> {
        let s = SymbolMatrix::new(m.clone()).map_err(|e| e.to_string())?;
        phi_of_matrix(0, &s, 1.0).map_err(|e| e.to_string())
    };
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let hs = [0.1, 0.05, 0.025, 0.0125];
    let mut worst = f64::INFINITY;
    for _ in 0..20 {
        let (a, b) = (random_matrix(&mut rng), random_matrix(&mut rng));
        let mut errs = Vec::new();
        for &h in &hs {
            let (ha, hb) = (a.scale(Complex64::new(h, 0.0)), b.scale(Complex64::new(h, 0.0)));
            let comm = hb.matmul(&ha).sub(&ha.matmul(&hb)).scale(Complex64::new(0.5, 0.0));
            let r = exp(&ha.add(&hb))?.sub(&exp(&ha)?.matmul(&exp(&hb)?)).sub(&comm);
            errs.push((h.ln(), r.frobenius().ln()));
        }
        let n = errs.len() as f64;
        let (sx, sy) = errs.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
        let (sxx, sxy) = errs.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x * x, b + x * y));
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        worst = worst.min(slope);
    }
    if worst < 2.7 {
        return Err(format!("commutator remainder slope {worst:.3}"));
    }

    let u: Vec<Complex64> = (0..8).map(|k| Complex64::new(1.0 + k as f64, 0.3 * k as f64)).collect();
    let dt = 0.4;
    let gap = |lam: &[Complex64]| -> Result<f64, String> {
        let (a, b) = shift_counterexample(lam, dt, &u).map_err(|e| e.to_string())?;
        Ok(a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max))
    };
    for c in [Complex64::new(1.0, 0.0), Complex64::new(-2.0, 3.0), Complex64::new(0.0, 0.0)] {
        let g = gap(&vec![c; 8])?;
        if g > 1e-13 {
            return Err(format!("shift outputs differ by {g:.2e} for Lambda = {c} I"));
        }
    }
    for trial in 0..20 {
        let lam: Vec<Complex64> = (0..8)
            .map(|_| Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
            .collect();
        let g = gap(&lam)?;
        if g < 1e-6 {
            return Err(format!("shift outputs agree ({g:.2e}) for non-scalar Lambda, trial {trial}"));
        }
    }
    Ok(format!("minimum commutator slope {worst:.3}; shift equality only for scalar Lambda"))
}

fn velocity(t: f64, x: f64) -> f64 {
    0.5 + 0.25 * x.sin() * (1.0 + (2.0 * t).sin())
}

fn departure_oracle(x: f64, t0: f64, t1: f64) -> f64 {
    let n = 2000;
    let h = -(t1 - t0) / n as f64;
    let (mut t, mut y) = (t1, x);
    for _ in 0..n {
        let k1 = velocity(t, y);
        let k2 = velocity(t + 0.5 * h, y + 0.5 * h * k1);
        let k3 = velocity(t + 0.5 * h, y + 0.5 * h * k2);
        let k4 = velocity(t + h, y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
    }
    y
}

fn criterion_7() -> Outcome {
    let g = PeriodicGrid1D::new(2.0 * PI, 512).map_err(|e| e.to_string())?;
    let d = Domain::Line(g.clone());
    let nodes = g.nodes();
    let t0 = 0.3;
    let opts = SettlsOptions {
        max_iter: 60,
        ..SettlsOptions::default()
    };
    let dts = [0.2, 0.1, 0.05, 0.025];
    let mut pts = Vec::new();
    for &dt in &dts {
        let at = |t: f64| vec![nodes.iter().map(|&x| velocity(t, x)).collect::<Vec<_>>()];
        let hist = VelocityHistory::new(at(t0), at(t0 - dt)).map_err(|e| e.to_string())?;
        let traj = compute_departure_points_with(&hist, &d, dt, &opts).map_err(|e| e.to_string())?;
        let err = nodes
            .iter()
            .zip(&traj.departures[0])
            .map(|(&x, &xd)| g.separation(xd, departure_oracle(x, t0, t0 + dt)).abs())
            .fold(0.0, f64::max);
        pts.push((dt, err));
    }
    let slope = slexp::harness::fit_order(&pts).ok_or("no fit")?;
    if slope < 2.7 {
        return Err(format!("departure-point error slope {slope:.3} from {pts:?}"));
    }
    Ok(format!("departure-point error slope {slope:.3}"))
}

fn criterion_8() -> Outcome {
    let (ll, ln) = (Complex64::new(-0.3, 1.7), Complex64::new(0.1, 0.4));
    let p = SpectralLinear::uniform(2.0 * PI, 32, ll, ln, 0.0, 1).map_err(|e| e.to_string())?;
    let steady = field::zeros(1, 32);
    let dt = 0.2;
    let mut worst = 0.0f64;
    for kind in [SchemeKind::Etd1rk, SchemeKind::Etd2rk, SchemeKind::Se11, SchemeKind::Se12, SchemeKind::Se22] {
        let cfg = SchemeConfig::new(kind, dt).map_err(|e| e.to_string())?;
        let g = power_iteration_estimate(&p, &cfg, &steady, &PowerOptions::default()).map_err(|e| e.to_string())?;
        let want = stability_function(kind, ll * dt, ln * dt, 0.0).map_err(|e| e.to_string())?.amplification;
        let err = (g.dominant_eigenvalue - want).abs();
        if !g.converged || err > 1e-8 {
            return Err(format!("{kind}: lambda {} vs {want}, converged {}", g.dominant_eigenvalue, g.converged));
        }
        if g.e_folding.to_bits() != (dt / g.dominant_eigenvalue.ln()).to_bits() {
            return Err(format!("{kind}: e-folding time is not dt / ln lambda"));
        }
        worst = worst.max(err);
    }
    Ok(format!("largest eigenvalue error {worst:.2e}; e-folding identity exact"))
}

fn criterion_9() -> Outcome {
    let p = SwePlane::standard(SweSetup::Balanced, 64).map_err(|e| e.to_string())?;
    let cfg = SchemeConfig::new(SchemeKind::Se22, 0.1).map_err(|e| e.to_string())?;
    let u0 = p.initial_state();
    let s = StepState::initial(&p, u0.clone(), 0.0).map_err(|e| e.to_string())?;
    let (end, _) = integrate(&cfg, &p, s, 100).map_err(|e| e.to_string())?;
    let drift = field::l2_norm(&field::sub(&end.u, &u0)) / field::l2_norm(&u0);
    if drift > 1e-8 {
        return Err(format!("balanced state drifted by {drift:.3e}"));
    }

    let d = p.domain();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let u: field::Field = (0..3)
        .map(|_| (0..d.len()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), 0.0)).collect())
        .collect();
    for (q, nu) in [(2, 1e-2), (4, 1e-4), (8, 1e-9)] {
        let out = apply_hyperviscosity(d, &u, 0.1, q, nu).map_err(|e| e.to_string())?;
        for (a, b) in u.iter().zip(&out) {
            let (sa, sb) = (d.forward(a).map_err(|e| e.to_string())?, d.forward(b).map_err(|e| e.to_string())?);
            for idx in 0..sa.modes().len() {
                let (kx, ky) = sa.mode_indices(idx);
                let (x, y) = (sa.modes()[idx], sb.modes()[idx]);
                if (kx, ky) != (0, 0) && !(y.norm() < x.norm()) {
                    return Err(format!("hyperviscosity q={q} does not contract mode ({kx}, {ky})"));
                }
            }
        }
    }
    if apply_hyperviscosity(d, &u, 0.1, 4, 0.0).map_err(|e| e.to_string())? != u {
        return Err("hyperviscosity with nu = 0 is not the identity".into());
    }

    let mut study = RunConfig::new("swe-plane-perturbed", SchemeKind::Se22, vec![0.1, 0.05, 0.025, 0.0125], 1.0);
    study.reference = ReferenceSettings {
        kind: ReferenceKind::SelfRefined,
        dt: Some(0.003125),
    };
    let r = run_convergence(&study).map_err(|e| e.to_string())?;
    let order = r.order().ok_or("no order fit")?;
    if (order - 2.0).abs() > 0.3 {
        return Err(format!("self-convergence order {order:.3}"));
    }
    Ok(format!("drift {drift:.2e}; hyperviscosity contracts; SE22 self-convergence order {order:.3}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("scalar convergence orders", criterion_1),
        ("constant-L exactness", criterion_2),
        ("vector convergence orders", criterion_3),
        ("per-step operation counts", criterion_4),
        ("stability-function suite", criterion_5),
        ("non-commutation properties", criterion_6),
        ("SETTLS departure-point order", criterion_7),
        ("power-method contract", criterion_8),
        ("shallow-water plane properties", criterion_9),
    ];
    let mut failed = 0;
    for (n, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(msg) => println!("PASS criterion {} ({name}): {msg}", n + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {msg}", n + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
