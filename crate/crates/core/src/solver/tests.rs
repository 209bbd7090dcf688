use super::*;
use crate::closure::{Closure, DEFAULT_ALPHA_MAX, DEFAULT_CACHE_NODES};
use crate::model::ThermoRadiationModel;
use approx::assert_relative_eq;

fn model_cache(n: usize, eps0: f64) -> (Model, TableCache) {
    let m = Model::new(ThermoRadiationModel::default(), n, DEFAULT_ALPHA_MAX, eps0).unwrap();
    let c = TableCache::new(&m.closure, DEFAULT_CACHE_NODES).unwrap();
    (m, c)
}

fn smooth(m: &Model, x: f64, amp: f64) -> Vec<f64> {
    let s = (2.0 * core::f64::consts::PI * x).sin();
    let c = (2.0 * core::f64::consts::PI * x).cos();
    m.equilibrium_vec(1.0 + amp * s, amp * c, 1.0 + amp * s)
}

#[test]
fn grid_validation() {
    assert!(Grid1D::new(7, 1.0).is_err());
    assert!(Grid1D::new(8, 0.0).is_err());
    let g = Grid1D::new(10, 2.0).unwrap();
    assert_relative_eq!(g.dx(), 0.2);
    assert_relative_eq!(g.x(0), 0.1);
}

#[test]
fn config_validation() {
    let bad = SolverConfig { cfl: 0.95, ..Default::default() };
    assert!(bad.validate().is_err());
    assert!(SolverConfig::default().validate().is_ok());
}

#[test]
fn wave_speed_examples() {
    let (m, cache) = model_cache(3, 0.5);
    let solver = Solver::new(&m, &cache, SolverConfig::default()).unwrap();
    let g = Grid1D::new(16, 1.0).unwrap();
    let u = m.equilibrium_vec(1.0, 0.0, 1.0);
    let s = FieldState::uniform(g, 0.1, &u).unwrap();
    let w = solver.max_wave_speed(&s).unwrap();
    let t = m.tables(&u).unwrap();
    let (radius, imag) = hyperbolicity_probe(&u[W..], &t).unwrap();
    assert!(imag < 1e-12);
    assert_relative_eq!(w.radiation, radius / 0.1, max_relative = 1e-10);
    assert_relative_eq!(w.max(), radius / 0.1, max_relative = 1e-10);
    let s2 = FieldState::uniform(g, 0.05, &u).unwrap();
    assert_relative_eq!(solver.max_wave_speed(&s2).unwrap().radiation, 2.0 * w.radiation, max_relative = 1e-14);
    let u = m.equilibrium_vec(1.3, -0.4, 1.7);
    let s = FieldState::uniform(g, 0.1, &u).unwrap();
    let w = solver.max_wave_speed(&s).unwrap();
    assert_relative_eq!(w.hydro, 0.4 + (5.0f64 / 3.0 * 1.7).sqrt(), max_relative = 1e-12);
}

#[test]
fn uniform_equilibrium_is_fixed_point() {
    let (m, cache) = model_cache(3, 0.5);
    let solver = Solver::new(&m, &cache, SolverConfig::default()).unwrap();
    let g = Grid1D::new(64, 1.0).unwrap();
    let u = m.equilibrium_vec(1.2, 0.3, 0.9);
    let s0 = FieldState::uniform(g, 0.1, &u).unwrap();
    let out = solver.run_with(s0.clone(), 1e9, Some(1000)).unwrap();
    assert_eq!(out.diagnostics.steps, 1000);
    let drift = out.final_state.data.iter().zip(&s0.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(drift <= 1e-12, "drift {drift}");
    assert_eq!(out.diagnostics.newton_iterations, 0);
}

#[test]
fn transport_conserves_mass_and_keeps_uniform() {
    let (m, cache) = model_cache(2, 0.5);
    let solver = Solver::new(&m, &cache, SolverConfig::default()).unwrap();
    let g = Grid1D::new(32, 1.0).unwrap();
    let mut s = FieldState::from_fn(g, 2, 0.2, |x| {
        let mut u = smooth(&m, x, 0.1);
        u[ALPHA] = 0.1 * (2.0 * core::f64::consts::PI * x).cos();
        u
    })
    .unwrap();
    let mass = s.mass();
    for _ in 0..20 {
        let dt = solver.stable_dt(&s).unwrap();
        solver.transport_substep(&mut s, dt).unwrap();
        assert!(((s.mass() - mass) / mass).abs() <= 1e-13);
    }
    let u = m.equilibrium_vec(1.0, 0.5, 1.0);
    let mut s = FieldState::uniform(g, 0.2, &u).unwrap();
    let before = s.clone();
    solver.transport_substep(&mut s, solver.stable_dt(&before).unwrap()).unwrap();
    assert_eq!(s.data, before.data);
}

#[test]
fn cfl_violation_is_rejected() {
    let (m, cache) = model_cache(2, 0.5);
    let solver = Solver::new(&m, &cache, SolverConfig::default()).unwrap();
    let g = Grid1D::new(16, 1.0).unwrap();
    let mut s = FieldState::uniform(g, 0.1, &m.equilibrium_vec(1.0, 0.0, 1.0)).unwrap();
    let dt = 2.0 * solver.stable_dt(&s).unwrap();
    assert!(matches!(solver.transport_substep(&mut s, dt), Err(Error::Cfl { .. })));
}

#[test]
fn equilibrium_relaxation_needs_no_iterations() {
    let (m, cache) = model_cache(3, 0.5);
    let solver = Solver::new(&m, &cache, SolverConfig::default()).unwrap();
    let u = m.equilibrium_vec(0.8, 0.2, 1.4);
    let (out, st) = solver.relax_cell(&u, 0.3, 0.1).unwrap();
    assert_eq!(st.iterations, 0);
    assert_eq!(out, u);
}

/// Classical RK4 on the cell ODE `dU/dt = Q(U; eps) / eps^2` with direct tables.
fn ode_oracle(m: &Model, u0: &[f64], eps: f64, t_end: f64, steps: usize) -> Vec<f64> {
    let f = |u: &[f64]| -> Vec<f64> {
        let t = m.tables(u).unwrap();
        m.source_q(u, eps, &t).unwrap().iter().map(|q| q / (eps * eps)).collect()
    };
    let h = t_end / steps as f64;
    let mut u = u0.to_vec();
    let add = |a: &[f64], b: &[f64], s: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + s * y).collect() };
    for _ in 0..steps {
        let k1 = f(&u);
        let k2 = f(&add(&u, &k1, 0.5 * h));
        let k3 = f(&add(&u, &k2, 0.5 * h));
        let k4 = f(&add(&u, &k3, h));
        for i in 0..u.len() {
            u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    u
}

#[test]
fn stiff_relaxation_reaches_equilibrium_of_the_ode() {
    let (m, cache) = model_cache(3, 0.5);
    let solver = Solver::new(&m, &cache, SolverConfig::default()).unwrap();
    let eps = 0.1;
    let mut u = m.equilibrium_vec(1.1, 0.3, 1.2);
    u[F0] *= 1.4;
    u[ALPHA] = 0.35;
    u[W + 2] = 0.05;
    u[W + 3] = -0.02;
    let (out, _) = solver.relax_cell(&u, 1e8, eps).unwrap();
    // equilibrium with the same coupled totals
    let t = m.tables(&u).unwrap();
    let theta = m.theta(&u).unwrap().theta;
    let mut ut = m.tilde_vector(&u, theta, eps, &t.moment_coefficients());
    for x in ut[W..].iter_mut() {
        *x = 0.0;
    }
    let eq = m.from_tilde(&ut, eps).unwrap();
    for k in 0..u.len() {
        assert!((out[k] - eq[k]).abs() <= 1e-8, "k={k} {} vs {}", out[k], eq[k]);
    }
    // the cell ODE itself relaxes to the same state
    let ode = ode_oracle(&m, &u, eps, 0.4, 4000);
    for k in 0..u.len() {
        assert!((ode[k] - eq[k]).abs() <= 1e-8, "ode k={k} {} vs {}", ode[k], eq[k]);
    }
}

#[test]
fn implicit_step_tracks_ode_and_keeps_coupled_energy() {
    let (m, cache) = model_cache(2, 0.5);
    let solver = Solver::new(&m, &cache, SolverConfig::default()).unwrap();
    let eps = 0.2;
    let mut u = m.equilibrium_vec(1.0, 0.1, 1.0);
    u[F0] *= 1.05;
    u[ALPHA] = 0.02;
    let dt = 1e-3;
    let (out, _) = solver.relax_cell(&u, dt, eps).unwrap();
    let ode = ode_oracle(&m, &u, eps, dt, 200);
    let energy = |v: &[f64]| v[ENERGY] + m.tables(v).unwrap().kappa[(0, 0)] * v[F0];
    assert!((energy(&out) - energy(&u)).abs() <= 1e-12);
    assert!((energy(&ode) - energy(&u)).abs() <= 1e-9);
    // first-order agreement of the implicit step with the exact flow
    let drift = out.iter().zip(&ode).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let change = u.iter().zip(&ode).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(drift < 0.5 * change, "drift {drift} change {change}");
}

#[test]
fn error_norm_examples() {
    let g = Grid1D::new(128, 1.0).unwrap();
    let amp = 0.3;
    let a: Vec<f64> = (0..128).map(|i| amp * (2.0 * core::f64::consts::PI * g.x(i)).sin()).collect();
    let z = alloc::vec![0.0; 128];
    let n0 = error_norm_slices(&g, &a, &z, 1, 0).unwrap();
    assert_relative_eq!(n0, amp * 0.5f64.sqrt(), max_relative = 1e-3);
    assert_eq!(error_norm_slices(&g, &a, &a, 1, 1).unwrap(), 0.0);
    let n1 = error_norm_slices(&g, &a, &z, 1, 1).unwrap();
    let n2 = error_norm_slices(&g, &a, &z, 1, 2).unwrap();
    assert!(n2 >= n1 && n1 >= n0);
    assert!(error_norm_slices(&g, &a[1..], &z[1..], 1, 0).is_err());
    assert!(error_norm_slices(&g, &a, &z, 1, 3).is_err());
}

#[test]
fn smooth_run_conserves_mass_and_totals() {
    let (m, cache) = model_cache(3, 0.5);
    for splitting in [Splitting::Lie, Splitting::Strang] {
        let cfg = SolverConfig { splitting, snapshot_every: 5, ..Default::default() };
        let solver = Solver::new(&m, &cache, cfg).unwrap();
        let g = Grid1D::new(32, 1.0).unwrap();
        let s = FieldState::from_fn(g, 3, 0.2, |x| smooth(&m, x, 0.1)).unwrap();
        let out = solver.run(s, 0.02).unwrap();
        let d = out.diagnostics;
        assert!(d.max_mass_drift <= 1e-12);
        assert!(((d.energy_final - d.energy_initial) / d.energy_initial).abs() <= 1e-12);
        assert!((d.momentum_final - d.momentum_initial).abs() <= 1e-12);
        assert_relative_eq!(out.final_state.t, 0.02, max_relative = 1e-12);
        assert_eq!(out.snapshots.len(), 1 + d.steps / 5);
    }
}

#[test]
fn epsilon_outside_range_is_usage_error() {
    let (m, cache) = model_cache(2, 0.5);
    let solver = Solver::new(&m, &cache, SolverConfig::default()).unwrap();
    let g = Grid1D::new(16, 1.0).unwrap();
    let u = m.equilibrium_vec(1.0, 0.0, 1.0);
    for eps in [0.0, 0.6] {
        let s = FieldState::uniform(g, eps, &u).unwrap();
        assert!(matches!(solver.run(s, 0.1), Err(Error::Usage(_))));
    }
}

#[test]
fn pure_transport_self_convergence() {
    let (m, cache) = model_cache(2, 1.0);
    let cfg = SolverConfig { source: false, ..Default::default() };
    let solver = Solver::new(&m, &cache, cfg).unwrap();
    let profile = |x: f64| {
        let s = (2.0 * core::f64::consts::PI * x).sin();
        let mut u = m.equilibrium_vec(1.0 + 0.1 * s, 0.5, 1.0 + 0.1 * s);
        u[ALPHA] = 0.05 * s;
        u
    };
    let runs: Vec<FieldState> = [64, 128, 256, 512]
        .iter()
        .map(|&c| {
            let s = FieldState::from_fn(Grid1D::new(c, 1.0).unwrap(), 2, 1.0, profile).unwrap();
            solver.run(s, 0.1).unwrap().final_state
        })
        .collect();
    let e: Vec<f64> = (0..3).map(|k| error_norms(&runs[k], &restrict(&runs[k + 1]).unwrap(), 0).unwrap()).collect();
    let o1 = (e[0] / e[1]).log2();
    let o2 = (e[1] / e[2]).log2();
    assert!(o1 >= 0.8 && o2 >= 0.8, "orders {o1} {o2} errors {e:?}");
}

