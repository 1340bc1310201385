use std::f64::consts::PI;

use slexp::grid::{Domain, PeriodicGrid1D, PeriodicGrid2D};
use slexp::settls::{
    compute_departure_points, compute_departure_points_with, SettlsOptions, VelocityHistory, VelocityInterpolation,
};
use slexp::Error;

fn velocity(t: f64, x: f64) -> f64 {
    0.5 + 0.25 * x.sin() * (1.0 + (2.0 * t).sin())
}

/// Backward RK4 along `dx/dt = v(t, x)` from `(t_end, x)` to `t_start`.
fn departure_oracle(x: f64, t_start: f64, t_end: f64) -> f64 {
    let n = 2000;
    let h = -(t_end - t_start) / n as f64;
    let (mut t, mut y) = (t_end, x);
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

fn settls_error(dt: f64) -> f64 {
    let g = PeriodicGrid1D::new(2.0 * PI, 512).unwrap();
    let t0 = 0.3;
    let nodes = g.nodes();
    let at = |t: f64| vec![nodes.iter().map(|&x| velocity(t, x)).collect::<Vec<_>>()];
    let hist = VelocityHistory::new(at(t0), at(t0 - dt)).unwrap();
    let opts = SettlsOptions {
        max_iter: 60,
        ..SettlsOptions::default()
    };
    let traj = compute_departure_points_with(&hist, &Domain::Line(g.clone()), dt, &opts).unwrap();
    assert!(traj.converged);
    nodes
        .iter()
        .zip(&traj.departures[0])
        .map(|(&x, &xd)| g.separation(xd, departure_oracle(x, t0, t0 + dt)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn departure_points_are_third_order_in_time() {
    let dts = [0.2, 0.1, 0.05, 0.025];
    let errs: Vec<f64> = dts.iter().map(|&dt| settls_error(dt)).collect();
    for w in errs.windows(2) {
        let local = (w[0] / w[1]).log2();
        assert!(local >= 2.7, "local slope {local} in {errs:?}");
    }
}

#[test]
fn zero_velocity_stays_put() {
    let g = PeriodicGrid2D::new(1.0, 8, 1.0, 8).unwrap();
    let d = Domain::Plane(g);
    let hist = VelocityHistory::frozen(vec![vec![0.0; 64], vec![0.0; 64]]);
    let traj = compute_departure_points(&hist, &d, 0.5).unwrap();
    assert_eq!(traj.departures, d.coordinates());
    assert_eq!(traj.max_displacement(), 0.0);
}

#[test]
fn uniform_velocity_is_an_exact_shift() {
    let g = PeriodicGrid1D::new(10.0, 64).unwrap();
    let hist = VelocityHistory::frozen(vec![vec![1.3; 64]]);
    let traj = compute_departure_points(&hist, &Domain::Line(g.clone()), 0.25).unwrap();
    for (x, (xd, s)) in g.nodes().iter().zip(traj.departures[0].iter().zip(&traj.displacements[0])) {
        assert!(g.separation(*xd, x - 0.325).abs() < 1e-14);
        assert!((s - 0.325).abs() < 1e-14);
    }
}

#[test]
fn departures_wrap_into_the_domain() {
    let g = PeriodicGrid1D::new(1.0, 16).unwrap();
    let hist = VelocityHistory::frozen(vec![vec![7.7; 16]]);
    let traj = compute_departure_points(&hist, &Domain::Line(g), 1.0).unwrap();
    assert!(traj.departures[0].iter().all(|x| (0.0..1.0).contains(x)));
}

#[test]
fn linear_velocity_interpolation_agrees_for_smooth_fields() {
    let g = PeriodicGrid1D::new(2.0 * PI, 256).unwrap();
    let v: Vec<f64> = g.nodes().iter().map(|&x| 0.3 + 0.1 * x.cos()).collect();
    let hist = VelocityHistory::frozen(vec![v]);
    let d = Domain::Line(g);
    let cubic = compute_departure_points(&hist, &d, 0.1).unwrap();
    let opts = SettlsOptions {
        interpolation: VelocityInterpolation::Linear,
        ..SettlsOptions::default()
    };
    let linear = compute_departure_points_with(&hist, &d, 0.1, &opts).unwrap();
    for (a, b) in cubic.displacements[0].iter().zip(&linear.displacements[0]) {
        assert!((a - b).abs() < 1e-5);
    }
}

#[test]
fn rejects_bad_input() {
    let g = Domain::Line(PeriodicGrid1D::new(1.0, 8).unwrap());
    let hist = VelocityHistory::frozen(vec![vec![0.1; 8]]);
    assert!(matches!(compute_departure_points(&hist, &g, 0.0), Err(Error::InvalidInput(_))));
    assert!(matches!(compute_departure_points(&hist, &g, f64::NAN), Err(Error::InvalidInput(_))));
    let bad = VelocityHistory::frozen(vec![vec![f64::NAN; 8]]);
    assert!(compute_departure_points(&bad, &g, 0.1).is_err());
    let short = VelocityHistory::frozen(vec![vec![0.1; 4]]);
    assert!(matches!(compute_departure_points(&short, &g, 0.1), Err(Error::Dimension { .. })));
}
