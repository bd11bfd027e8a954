use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use travelwave::equilibrium::PhysicalParams;
use travelwave::operators::{Forcing, GaussianPressure, Model, State};
use travelwave::spaces::{random_row, xspace_constraints, Grid};

fn model(alpha: f64) -> Model {
    let grid = Grid::new(8.0, 16, 12, 1.0).unwrap();
    Model::new(grid, PhysicalParams::polytropic(1.0, alpha, 1.0, 1.0, 1.0), Forcing::zero(1.0)).unwrap()
}

fn small_state(m: &Model, seed: u64, amp: f64) -> State {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    m.kinematic_project(&State::random(&m.grid, &mut rng, amp))
}

#[test]
fn density_at_trivial_state_is_the_profile() {
    for alpha in [1.0, 2.0] {
        let m = model(alpha);
        let s = m.sigma(&State::zeros(&m.grid)).unwrap();
        let nx = m.grid.nx;
        for (k, v) in s.iter().enumerate() {
            assert!((v - m.profile.rho[k / nx]).abs() < 1e-12);
        }
    }
}

#[test]
fn surface_density_depends_on_q_only() {
    let m = model(1.0);
    let mut st = small_state(&m, 1, 1e-2);
    st.eta = random_row(&m.grid, &mut ChaCha8Rng::seed_from_u64(2), 4, 1.0, true).iter().map(|v| 0.05 * v).collect();
    let sigma = m.sigma(&st).unwrap();
    let (q, _, _, _) = st.values(&m.grid);
    let (nx, top) = (m.grid.nx, m.grid.nz - 1);
    for i in 0..nx {
        let want = m.profile.inverse_enthalpy(-m.params.g * m.grid.b + q[top * nx + i]).unwrap();
        assert!((sigma[top * nx + i] - want).abs() < 1e-12);
    }
}

#[test]
fn density_bounds_on_small_states() {
    let m = model(1.0);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for seed in 0..10 {
        for v in m.sigma(&small_state(&m, seed, 1e-2)).unwrap() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    assert!(lo > 0.9 && hi < 1.1 * std::f64::consts::E, "{lo} {hi}");
}

#[test]
fn trivial_state_has_zero_residual() {
    let m = model(1.0);
    assert_eq!(m.residual(&State::zeros(&m.grid)).unwrap().max_abs(), 0.0);
}

#[test]
fn shear_flow_stress() {
    let m = model(1.0);
    let g = &m.grid;
    let nx = g.nx;
    let mut u1 = vec![0.0; g.nz * nx];
    for (k, v) in u1.iter_mut().enumerate() {
        *v = g.y[k / nx];
    }
    let z = vec![0.0; g.nz * nx];
    let st = State::from_values(g, &z, &u1, &z, &vec![0.0; nx]);
    let r = m.evaluate(&st.unknowns(), &m.forcing).unwrap().into_residual();
    let mu = 1.0;
    assert!((r.k1[0] - m.gamma() * mu).abs() < 1e-12, "{}", r.k1[0]);
    assert!(r.k1[1..].iter().chain(&r.k2).all(|v| v.abs() < 1e-12));
    assert!(r.g.iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn kinematic_projection() {
    let m = model(1.0);
    let g = &m.grid;
    let adm = small_state(&m, 3, 1e-3);
    let again = m.kinematic_project(&adm);
    assert!(again.axpy(-1.0, &adm).max_abs() < 1e-12 * adm.max_abs());

    let mut st = State::zeros(g);
    let nc = g.nc();
    for j in 0..g.nz {
        st.u2[j * nc] = 0.3;
    }
    let p = m.kinematic_project(&st);
    assert!(g.row(&p.u2, 0).iter().all(|v| v.abs() < 1e-14));

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let p = m.kinematic_project(&State::random(g, &mut rng, 1.0));
    assert!(xspace_constraints(g, &p).satisfied(1e-12));
}

#[test]
fn eulerian_change_of_unknowns() {
    let m = model(1.0);
    let g = &m.grid;
    let e = m.to_eulerian(&State::zeros(g)).unwrap();
    assert!(e.v1.iter().chain(&e.v2).all(|&v| v == 0.0));
    for (k, s) in e.sigma.iter().enumerate() {
        assert!((s - m.profile.rho[k / g.nx]).abs() < 1e-12);
    }

    let mut flat = small_state(&m, 5, 1e-2);
    flat.eta = vec![0.0; g.nc()];
    let e = m.to_eulerian(&flat).unwrap();
    let (_, u1, u2, _) = flat.values(g);
    assert!(e.v1.iter().zip(&u1).chain(e.v2.iter().zip(&u2)).all(|(a, b)| (a - b).abs() < 1e-15));

    let st = small_state(&m, 6, 1e-2);
    let back = m.from_eulerian(&m.to_eulerian(&st).unwrap(), &st.eta).unwrap();
    assert!(back.axpy(-1.0, &st).max_abs() < 1e-10);
}

#[test]
fn gaussian_pressure_is_periodic() {
    let p = GaussianPressure { amplitude: 2.0, center: 1.0, width: 0.5, period: 8.0 };
    assert_eq!(p.value(1.0), 2.0);
    assert!((p.value(0.5) - p.value(1.5)).abs() < 1e-15);
    assert!((p.value(-7.5) - p.value(0.5)).abs() < 1e-14);
    assert!((p.value(8.5) - p.value(0.5)).abs() < 1e-14);
}

#[test]
fn model_rejects_bad_inputs() {
    let grid = Grid::new(8.0, 16, 12, 1.0).unwrap();
    let p = PhysicalParams::polytropic(1.0, 1.0, 1.0, 1.0, 1.0);
    assert!(Model::new(grid.clone(), p.clone(), Forcing::zero(0.0)).is_err());
    let mut p3 = p.clone();
    p3.n = 3;
    assert!(Model::new(grid.clone(), p3, Forcing::zero(1.0)).is_err());
    let odd = Grid::new(8.0, 16, 11, 1.0).unwrap();
    assert!(Model::new(odd, p.clone(), Forcing::zero(1.0)).is_err());
    let deep = PhysicalParams::polytropic(1.0, 1.0, 1.0, 1.0, 2.0);
    assert!(Model::new(grid, deep, Forcing::zero(1.0)).is_err());
}
