use std::time::Instant;

use travelwave::equilibrium::PhysicalParams;
use travelwave::operators::{Forcing, GaussianPressure, Model, State};
use travelwave::solver::{solve, Jacobian, Method, SolveOptions};
use travelwave::spaces::Grid;

fn model(nx: usize, nz: usize, amp: f64, gamma: f64) -> Model {
    let l = 16.0;
    let grid = Grid::new(l, nx, nz, 1.0).unwrap();
    let params = PhysicalParams::polytropic(1.0, 1.0, 1.0, 1.0, 1.0);
    let p = GaussianPressure { amplitude: amp, center: l / 2.0, width: 1.0, period: l };
    Model::new(grid, params, Forcing::gaussian_pressure(p, gamma)).unwrap()
}

#[test]
fn zero_forcing_converges_immediately() {
    let m = model(16, 10, 0.0, 1.0);
    let out = solve(&m, &SolveOptions::default(), None).unwrap();
    assert!(out.converged());
    assert_eq!(out.report.steps.len(), 1);
    assert_eq!(out.state, State::zeros(&m.grid));
}

#[test]
fn newton_and_nash_moser_agree_on_small_forcing() {
    let m = model(32, 12, 1e-3, 1.0);
    let t = Instant::now();
    let newton = solve(&m, &SolveOptions::default(), None).unwrap();
    eprintln!("newton {:?}\n{}", t.elapsed(), newton.report.to_log());
    assert!(newton.converged());
    let t = Instant::now();
    let opts = SolveOptions { method: Method::NashMoser, ..Default::default() };
    let nm = solve(&m, &opts, None).unwrap();
    eprintln!("nm {:?}\n{}", t.elapsed(), nm.report.to_log());
    assert!(nm.converged());
    assert!(newton.residual_y0 < 1e-9 && nm.residual_y0 < 1e-9, "{} {}", newton.residual_y0, nm.residual_y0);
    let d = newton.state.axpy(-1.0, &nm.state).max_abs();
    assert!(d < 1e-8, "{d}");
    assert!(newton.state.eta.iter().any(|v| v.abs() > 0.0));
}

#[test]
fn frozen_jacobian_also_converges() {
    let m = model(16, 10, 1e-3, 1.0);
    let opts = SolveOptions { jacobian: Jacobian::Frozen, ..Default::default() };
    let out = solve(&m, &opts, None).unwrap();
    assert!(out.converged(), "{}", out.report.to_log());
}
