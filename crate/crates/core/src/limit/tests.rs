use super::*;
use crate::closure::{DEFAULT_ALPHA_MAX, DEFAULT_CACHE_NODES};
use crate::solver::Splitting;
use approx::assert_relative_eq;

fn model_cache(n: usize) -> (Model, TableCache) {
    let m = Model::new(ThermoRadiationModel::default(), n, DEFAULT_ALPHA_MAX, 1.0).unwrap();
    let c = TableCache::new(&m.closure, DEFAULT_CACHE_NODES).unwrap();
    (m, c)
}

#[test]
fn profile_names_round_trip() {
    for p in Profile::ALL {
        assert_eq!(p.as_str().parse::<Profile>().unwrap(), p);
    }
    assert!("ramp".parse::<Profile>().is_err());
}

#[test]
fn theta_recovery_inverts_the_energy() {
    let (m, _) = model_cache(2);
    for &(rho, v, theta) in &[(1.0, 0.0, 1.0), (0.5, 0.3, 2.0), (2.0, -0.7, 0.5)] {
        let u = m.equilibrium_vec(rho, v, theta);
        let z = u[ENERGY] + m.thermo.planck(theta);
        let t = recover_theta(&m.thermo, rho, u[MOM], z).unwrap();
        assert_relative_eq!(t, theta, max_relative = 1e-12);
    }
    assert!(recover_theta(&m.thermo, 1.0, 0.0, -1.0).is_err());
    assert_relative_eq!(recover_theta(&m.thermo, 1.0, 0.0, 2.5).unwrap(), 1.0, max_relative = 1e-14);
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(100))]
    #[test]
    fn theta_round_trip(rho in 0.1f64..5.0, v in -2.0f64..2.0, theta in 0.2f64..3.0) {
        let m = Model::with_defaults(2);
        let u = m.equilibrium_vec(rho, v, theta);
        let z = u[ENERGY] + m.thermo.planck(theta);
        let t = recover_theta(&m.thermo, rho, u[MOM], z).unwrap();
        proptest::prop_assert!((t - theta).abs() <= 1e-11 * theta);
    }
}

#[test]
fn uniform_limit_state_is_steady() {
    let (m, _) = model_cache(2);
    let g = Grid1D::new(32, 1.0).unwrap();
    let f = LimitField::from_profile(&m, g, Profile::Uniform, 0.1);
    let run = limit_run(&m, f.clone(), 0.05, 0.8, 0).unwrap();
    for (a, b) in run.final_field.data.iter().zip(&f.data) {
        for k in 0..3 {
            assert!((a[k] - b[k]).abs() < 1e-13);
        }
    }
}

#[test]
fn limit_run_conserves_integrals() {
    let (m, _) = model_cache(2);
    let g = Grid1D::new(64, 1.0).unwrap();
    let f = LimitField::from_profile(&m, g, Profile::Sine, 0.1);
    let run = limit_run(&m, f, 0.05, 0.8, 5).unwrap();
    assert!(run.max_integral_drift() < 1e-12, "{}", run.max_integral_drift());
    assert!(run.snapshots.len() > 1);
}

#[test]
fn diffusion_operator_is_dissipative() {
    let (m, _) = model_cache(2);
    let g = Grid1D::new(64, 1.0).unwrap();
    for p in [Profile::Sine, Profile::Temperature, Profile::Density] {
        let f = LimitField::from_profile(&m, g, p, 0.2);
        let q = diffusion_quadratic_form(&m, &f).unwrap();
        assert!(q <= 1e-14, "{p:?}: {q}");
    }
    let f = LimitField::from_profile(&m, g, Profile::Uniform, 0.2);
    assert!(diffusion_quadratic_form(&m, &f).unwrap().abs() < 1e-14);
}

#[test]
fn pure_diffusion_decays_like_heat_equation() {
    // small temperature mode at rest: b relaxes with rate ~ k^2 D b' / (rho e_theta + b')
    let (m, _) = model_cache(2);
    let g = Grid1D::new(128, 1.0).unwrap();
    let amp = 1e-4;
    let f = LimitField::from_profile(&m, g, Profile::Temperature, amp);
    let th = &m.thermo;
    let t_end = 0.02;
    let run = limit_run(&m, f, t_end, 0.8, 0).unwrap();
    let theta: Vec<f64> = (0..128).map(|i| run.final_field.theta(&m, i).unwrap()).collect();
    let mean = theta.iter().sum::<f64>() / 128.0;
    let peak = theta.iter().fold(0.0f64, |a, t| a.max((t - mean).abs()));
    assert!(peak < amp, "the temperature mode must decay");
    let _ = th;
}

#[test]
fn corrector_alpha_matches_identity() {
    let (m, _) = model_cache(3);
    let g = Grid1D::new(64, 1.0).unwrap();
    for p in [Profile::Sine, Profile::Temperature] {
        let f = LimitField::from_profile(&m, g, p, 0.1);
        let w1 = corrector_w1(&m, &f).unwrap();
        let a1 = alpha1_identity(&m, &f).unwrap();
        let scale = a1.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        assert!(scale > 1e-3);
        for i in 0..64 {
            assert!((w1[i][1] - a1[i]).abs() <= 1e-8 * scale, "{p:?} cell {i}: {} vs {}", w1[i][1], a1[i]);
        }
    }
}

#[test]
fn corrector_vanishes_for_uniform_data() {
    let (m, _) = model_cache(2);
    let g = Grid1D::new(16, 1.0).unwrap();
    let f = LimitField::from_profile(&m, g, Profile::Uniform, 0.1);
    for w in corrector_w1(&m, &f).unwrap() {
        assert!(w.norm() < 1e-14);
    }
}

#[test]
fn tilde_source_block_is_invertible_with_negative_spectrum() {
    let (m, _) = model_cache(4);
    let u = m.equilibrium_vec(1.3, 0.2, 1.1);
    let lin = tilde_linearization(&m, &u).unwrap();
    for z in lin.q_w.complex_eigenvalues().iter() {
        assert!(z.re < 0.0, "{z}");
    }
    // the corrector map has rank one: w_1 moves along a single direction
    let x = lin.q_w.clone().lu().solve(&lin.a21).unwrap();
    let sv = x.svd(false, false).singular_values;
    assert!(sv[0] > 1e-6);
    assert!(sv[1] <= 1e-8 * sv[0], "{sv}");
}

#[test]
fn fit_rate_of_exact_exponential() {
    let tau: Vec<f64> = (0..200).map(|k| k as f64 * 0.1).collect();
    let norms: Vec<f64> = tau.iter().map(|t| 3.0 * (-1.7 * t).exp()).collect();
    assert_relative_eq!(fit_rate(&tau, &norms).unwrap(), 1.7, max_relative = 1e-10);
    let flat = alloc::vec![1.0; 200];
    assert!(fit_rate(&tau, &flat).is_none());
}

#[test]
fn initial_layer_decays_at_the_linear_rate() {
    let (m, c) = model_cache(2);
    let g = Grid1D::new(8, 1.0).unwrap();
    let limit = LimitField::from_profile(&m, g, Profile::Uniform, 0.0);
    let init = relaxation_initial(&m, &limit, 1e-3, InitialData::Unprepared, 1e-3).unwrap();
    let cells: Vec<Vec<f64>> = (0..8).map(|i| init.cell(i).to_vec()).collect();
    let layer = initial_layer(&m, &c, &cells, 40.0, &g).unwrap();
    assert!(layer.decay_at(30.0) < 1e-9);
    assert_relative_eq!(layer.rate, layer.linear_rate, max_relative = 0.05);
    // the slowest mode is the one on the Planck source, rate ~ rho sigma_a
    assert_relative_eq!(layer.linear_rate, m.thermo.sigma_a(1.0), max_relative = 0.6);
}

#[test]
fn equilibrium_data_has_no_layer() {
    let (m, c) = model_cache(2);
    let g = Grid1D::new(8, 1.0).unwrap();
    let limit = LimitField::from_profile(&m, g, Profile::Sine, 0.1);
    let init = relaxation_initial(&m, &limit, 0.1, InitialData::Equilibrium, 0.0).unwrap();
    let cells: Vec<Vec<f64>> = (0..8).map(|i| init.cell(i).to_vec()).collect();
    let layer = integrate_layer(&m, &c, &cells, 5.0, &g).unwrap();
    assert!(layer.norms.iter().all(|n| *n < 1e-13), "{:?}", &layer.norms[..3]);
}

#[test]
fn layer_ratio_bounded_by_fitted_rate() {
    let (m, c) = model_cache(3);
    let g = Grid1D::new(8, 1.0).unwrap();
    let limit = LimitField::from_profile(&m, g, Profile::Sine, 0.1);
    let init = relaxation_initial(&m, &limit, 0.05, InitialData::Unprepared, 1e-2).unwrap();
    let cells: Vec<Vec<f64>> = (0..8).map(|i| init.cell(i).to_vec()).collect();
    let layer = initial_layer(&m, &c, &cells, 40.0, &g).unwrap();
    let lam = layer.rate;
    assert_relative_eq!(lam, layer.linear_rate, max_relative = 0.2);
    let tau_star = 5.0 / lam;
    let ratio = layer.decay_at(2.0 * tau_star) / layer.decay_at(tau_star);
    assert!(ratio <= (-lam * tau_star).exp() * 1.1, "{ratio}");
    // monotone after the transient
    let start = layer.tau.partition_point(|t| *t < tau_star);
    let floor = 1e-12 * layer.norms[0];
    assert!(layer.norms[start..].windows(2).all(|w| w[1] <= w[0] || w[0] < floor));
}

#[test]
fn relaxation_initial_respects_the_limit_data() {
    let (m, c) = model_cache(2);
    let g = Grid1D::new(16, 1.0).unwrap();
    let limit = LimitField::from_profile(&m, g, Profile::Sine, 0.1);
    for data in [InitialData::Equilibrium, InitialData::Corrected, InitialData::Unprepared] {
        let s = relaxation_initial(&m, &limit, 0.1, data, 0.1).unwrap();
        let t = tilde_field(&m, &c, &s).unwrap();
        for i in 0..16 {
            for k in 0..3 {
                assert_relative_eq!(t[i * s.stride() + k], limit.data[i][k], max_relative = 1e-8);
            }
        }
    }
}

#[test]
fn study_validation() {
    let mut cfg = StudyConfig::default();
    assert!(cfg.validate().is_ok());
    cfg.eps_list = alloc::vec![0.1, 0.2];
    assert!(cfg.validate().is_err());
    cfg.eps_list = alloc::vec![];
    assert!(cfg.validate().is_err());
}

#[test]
fn assemble_study_orders() {
    let row = |eps: f64, e: f64| MemberResult { eps, cells: 64, err_l2: e, err_h1: 2.0 * e, steps: 1, mass_drift: 0.0 };
    let rows = alloc::vec![row(0.2, 0.04), row(0.1, 0.01), row(0.05, 0.0025)];
    let r = assemble_study(rows.clone(), None);
    for o in &r.pairwise_l2 {
        assert_relative_eq!(*o, 2.0, max_relative = 1e-12);
    }
    assert_relative_eq!(r.order_h1.unwrap(), 2.0, max_relative = 1e-12);
    assert!(r.pass(MIN_ORDER));
    let bad = row(0.05, 0.0035);
    let r = assemble_study(rows.clone(), Some((rows[2], bad)));
    assert!(r.inconclusive());
    assert!(r.order_l2.is_none());
}

#[test]
fn layer_correction_removes_uniform_transient() {
    let (m, c) = model_cache(2);
    let cfg = StudyConfig { profile: Profile::Uniform, cells: 16, ..Default::default() };
    let r = layer_comparison(&m, &c, &cfg, 0.1).unwrap();
    assert!(r.reduction() > 10.0, "{r:?}");
}
