use rand::rngs::StdRng;
use rand::SeedableRng;

use travelwave::diagnostics::{adapted_norm, eval_surface, power_balance, residual_balance, sanity_suite};
use travelwave::equilibrium::PhysicalParams;
use travelwave::operators::{Forcing, GaussianPressure, Model, State};
use travelwave::solver::{solve, SolveOptions};
use travelwave::spaces::{xspace_norm, Grid};

fn model(nx: usize, nz: usize, amp: f64, gamma: f64) -> Model {
    let l = 16.0;
    let grid = Grid::new(l, nx, nz, 1.0).unwrap();
    let params = PhysicalParams::polytropic(1.0, 1.0, 1.0, 1.0, 1.0);
    let p = GaussianPressure { amplitude: amp, center: l / 2.0, width: 1.0, period: l };
    Model::new(grid, params, Forcing::gaussian_pressure(p, gamma)).unwrap()
}

#[test]
fn trivial_state_has_zero_balance() {
    let m = model(16, 10, 0.0, 1.0);
    let z = State::zeros(&m.grid);
    let b = power_balance(&m, &z).unwrap();
    assert_eq!(b.dissipation, 0.0);
    assert_eq!(b.imbalance, 0.0);
    let r = residual_balance(&m, &z).unwrap();
    assert!(r.power().abs() < 1e-14, "{r:?}");
}

#[test]
fn residual_balance_holds_for_constrained_random_states() {
    let m = model(32, 24, 0.0, 1.0);
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..3 {
        let s = m.kinematic_project(&State::random(&m.grid, &mut rng, 1e-3));
        let r = residual_balance(&m, &s).unwrap();
        eprintln!("{r:?}");
        assert!(r.dissipation > 0.0);
        assert!(r.imbalance < 1e-9, "{r:?}");
    }
}

#[test]
fn forced_solution_balances_dissipation() {
    let m = model(32, 12, 1e-3, 1.0);
    let out = solve(&m, &SolveOptions::default(), None).unwrap();
    assert!(out.converged());
    let b = power_balance(&m, &out.state).unwrap();
    eprintln!("{b:?}");
    assert!(b.dissipation > 0.0);
    assert!(b.imbalance < 1e-6, "{b:?}");
    let r = residual_balance(&m, &out.state).unwrap();
    assert!(r.imbalance < 1e-6, "{r:?}");
    let s = sanity_suite(&m, &out.state, Some(8.0)).unwrap();
    eprintln!("{}", s.to_text(""));
    assert!(s.margins_positive());
    assert!(s.eta_decay.unwrap() < 1.0, "{}", s.to_text(""));
    assert!(s.eta_peak > 0.0);
}

#[test]
fn adapted_norm_reduces_to_xspace_on_zero_state() {
    let m = model(16, 10, 0.0, 1.0);
    let z = State::zeros(&m.grid);
    assert_eq!(adapted_norm(&m, &z, &z, 0.0).unwrap(), 0.0);
    let mut rng = StdRng::seed_from_u64(5);
    let s = State::random(&m.grid, &mut rng, 1e-2);
    let a = adapted_norm(&m, &s, &z, 0.0).unwrap();
    let x = xspace_norm(&m.grid, &s, 0.0);
    assert!(a >= x);
}

#[test]
fn surface_evaluation_matches_nodes() {
    let g = Grid::new(4.0, 16, 8, 1.0).unwrap();
    let vals: Vec<f64> = g.x(16).iter().map(|x| (std::f64::consts::PI * x / 2.0).sin() + 0.3).collect();
    let c = g.from_values(&vals);
    for (i, x) in g.x(16).iter().enumerate() {
        assert!((eval_surface(&g, &c, *x) - vals[i]).abs() < 1e-12);
    }
}
