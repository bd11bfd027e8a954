use std::f64::consts::E;

use travelwave::equilibrium::{build_profile, check_compatibility, EquilibriumProfile, PhysicalParams, PressureLaw};
use travelwave::spaces::Grid;

fn unit(alpha: f64) -> PhysicalParams {
    PhysicalParams::polytropic(1.0, alpha, 1.0, 1.0, 1.0)
}

/// RK4 for rho' = -g rho / P'(rho) from y = b down to y.
fn rk4(params: &PhysicalParams, y: f64) -> f64 {
    let f = |r: f64| -params.g * r / params.pressure.deriv(r);
    let steps = 4000;
    let h = (y - params.b) / steps as f64;
    let mut r = match params.pressure {
        PressureLaw::Polytropic { k, alpha } => (params.p_ext / k).powf(1.0 / alpha),
        _ => unreachable!(),
    };
    for _ in 0..steps {
        let k1 = f(r);
        let k2 = f(r + 0.5 * h * k1);
        let k3 = f(r + 0.5 * h * k2);
        let k4 = f(r + h * k3);
        r += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    r
}

#[test]
fn polytropic_alpha_one_profile() {
    let p = unit(1.0);
    let grid = Grid::new(16.0, 32, 16, 1.0).unwrap();
    let prof = build_profile(&p, &grid.y).unwrap();
    assert!((prof.rho[0] - E).abs() < 1e-12);
    assert!((prof.rho[grid.nz - 1] - 1.0).abs() < 1e-12);
    for (y, r) in grid.y.iter().zip(&prof.rho) {
        assert!((r - (1.0 - y).exp()).abs() < 1e-10);
        assert!((r - rk4(&p, *y)).abs() < 1e-8);
    }
}

#[test]
fn polytropic_alpha_two_profile() {
    let p = unit(2.0);
    let grid = Grid::new(16.0, 32, 16, 1.0).unwrap();
    let prof = build_profile(&p, &grid.y).unwrap();
    assert!((prof.rho[0] - 1.5).abs() < 1e-12);
    for (y, r) in grid.y.iter().zip(&prof.rho) {
        assert!((r - (1.0 + (1.0 - y) / 2.0)).abs() < 1e-10);
        let closed = EquilibriumProfile::polytropic_closed_form(1.0, 2.0, 1.0, 1.0, 1.0, *y);
        assert!((r - closed).abs() < 1e-10);
        assert!((r - rk4(&p, *y)).abs() < 1e-8);
    }
}

#[test]
fn enthalpy_values_and_inverse() {
    let prof = build_profile(&unit(1.0), &[0.0, 1.0]).unwrap();
    assert!((prof.enthalpy(1.0).unwrap() + 1.0).abs() < 1e-14);
    assert!((prof.inverse_enthalpy(0.0).unwrap() - E).abs() < 1e-13);
    for alpha in [1.0, 1.4, 2.0, 3.0] {
        let prof = build_profile(&unit(alpha), &[0.0, 1.0]).unwrap();
        for s in [0.05, 0.3, 1.0, 2.5, 10.0] {
            let back = prof.inverse_enthalpy(prof.enthalpy(s).unwrap()).unwrap();
            assert!((back - s).abs() <= 1e-10 * s);
        }
    }
}

#[derive(Debug)]
struct Cubic;
impl travelwave::equilibrium::ScalarLaw for Cubic {
    fn value(&self, t: f64) -> f64 {
        t + t * t * t
    }
    fn deriv(&self, t: f64) -> f64 {
        1.0 + 3.0 * t * t
    }
}

#[test]
fn generic_law_matches_quadrature_and_ode() {
    let mut p = unit(1.0);
    p.pressure = PressureLaw::Custom(std::sync::Arc::new(Cubic));
    p.p_ext = 2.0;
    let grid = Grid::new(16.0, 32, 16, 1.0).unwrap();
    let prof = build_profile(&p, &grid.y).unwrap();
    assert!((prof.s_b - 1.0).abs() < 1e-12);
    // H(s) = -g b + ln s + 3/2 (s^2 - 1) with s_b = 1
    for s in [0.2f64, 0.7, 1.3, 3.0] {
        let want = -1.0 + s.ln() + 1.5 * (s * s - 1.0);
        assert!((prof.enthalpy(s).unwrap() - want).abs() < 1e-11);
        assert!((prof.inverse_enthalpy(want).unwrap() - s).abs() < 1e-10 * s);
    }
    // ODE residual with spectral differentiation
    let pr: Vec<f64> = prof.rho.iter().map(|r| p.pressure.value(*r)).collect();
    let n = grid.nz;
    let scale = prof.rho.iter().fold(0.0f64, |m, r| m.max(p.g * r));
    for i in 0..n {
        let d: f64 = (0..n).map(|j| grid.dmat[i * n + j] * pr[j]).sum();
        assert!((d + p.g * prof.rho[i]).abs() <= 1e-8 * scale, "node {i}");
    }
    assert!(prof.rho.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn compatibility_reports() {
    let c = check_compatibility(&unit(1.0)).unwrap();
    assert!(c.admissible && c.margin == f64::INFINITY);
    for alpha in [1.0, 1.5, 2.0, 5.0] {
        for k in [0.1, 1.0, 7.0] {
            let c = check_compatibility(&PhysicalParams::polytropic(k, alpha, 1.0, 1.0, 1.0)).unwrap();
            assert!(c.admissible && c.integral.is_infinite());
        }
    }
    let mut p = unit(1.0);
    p.pressure = PressureLaw::Arctan;
    p.p_ext = 2.0;
    let c = check_compatibility(&p).unwrap();
    assert!(!c.admissible && !c.p_ext_in_range);
    assert!(build_profile(&p, &[0.0]).is_err());
}

#[test]
fn profile_invariants() {
    let p = unit(1.0);
    let grid = Grid::new(16.0, 32, 16, 1.0).unwrap();
    let prof = build_profile(&p, &grid.y).unwrap();
    assert!(prof.h_min < -1.0 && prof.h_max > 0.0);
    for (i, &y) in grid.y.iter().enumerate() {
        assert!((prof.drho[i] + (1.0 - y).exp()).abs() < 1e-10);
    }
    let (s, ds) = prof.inverse_enthalpy_with_deriv(-0.3).unwrap();
    let h = 1e-5;
    let fd = (prof.inverse_enthalpy(-0.3 + h).unwrap() - prof.inverse_enthalpy(-0.3 - h).unwrap()) / (2.0 * h);
    assert!((ds - fd).abs() < 1e-8 * s);
    assert!(prof.inverse_enthalpy(f64::INFINITY).is_err());
    let p2 = unit(2.0);
    let prof2 = build_profile(&p2, &grid.y).unwrap();
    assert!(prof2.inverse_enthalpy(prof2.h_min - 0.1).is_err());
}

#[test]
fn admissibility_of_coefficients() {
    let mut p = unit(1.0);
    assert!(p.validate(&[1.0]).is_ok());
    p.lambda = travelwave::equilibrium::Viscosity::Constant(0.0);
    assert!(p.validate(&[1.0]).is_err());
    p.n = 3;
    assert!(p.validate(&[1.0]).is_ok());
    p.tension = 0.0;
    assert!(p.validate(&[1.0]).is_err());
}
