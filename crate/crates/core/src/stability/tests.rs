use super::*;
use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn setup(n: usize, rho: f64, v: f64, theta: f64) -> (Model, Vec<f64>, ClosureTables) {
    let m = Model::with_defaults(n);
    let u = m.equilibrium_vec(rho, v, theta);
    let t = m.tables(&u).unwrap();
    (m, u, t)
}

#[test]
fn qu_displayed_entries() {
    let (m, u, t) = setup(3, 1.0, 0.0, 1.0);
    let q = jacobian_qu(&m, &u, &t).unwrap();
    assert_relative_eq!(q[(ENERGY, F0)], 2.0, epsilon = 1e-14);
    // dS_1/dalpha = 2 rho sigma_a b, visible as the f0 row times -2 in Q_1
    let fd = fd_source_jacobian(&m, &u, 0.0).unwrap();
    assert_relative_eq!(fd[(ENERGY, F0)], 2.0, max_relative = 1e-8);
    let qa = fd[(W + 1, W + 1)];
    assert_relative_eq!(qa, -1.0, max_relative = 1e-7);
}

#[test]
fn alpha_source_derivative_is_two_rho_sigma_b() {
    let (m, u, t) = setup(3, 1.3, 0.2, 1.4);
    let b = m.thermo.planck(1.4);
    let h = 1e-6;
    let mut up = u.clone();
    let mut dn = u.clone();
    up[W + 1] += h;
    dn[W + 1] -= h;
    let sp = m.source_hat(&up, 1.4, 0.0, &m.tables(&up).unwrap());
    let sm = m.source_hat(&dn, 1.4, 0.0, &m.tables(&dn).unwrap());
    let _ = t;
    assert_relative_eq!((sp[1] - sm[1]) / (2.0 * h), 2.0 * 1.3 * b, max_relative = 1e-7);
}

#[test]
fn off_equilibrium_is_rejected() {
    let (m, mut u, t) = setup(3, 1.0, 0.0, 1.0);
    u[W + 1] = 0.2;
    let t2 = m.tables(&u).unwrap();
    assert!(matches!(jacobian_qu(&m, &u, &t2), Err(Error::OffEquilibrium { .. })));
    let _ = t;
    assert!(check_tilde_structure(&m, &u, &t2, &Tolerances::default()).is_err());
}

#[test]
fn qu_matches_fd_and_has_rank_n_plus_one() {
    for (n, rho, v, theta) in [(2, 0.7, 0.3, 1.6), (3, 1.0, 0.0, 1.0), (4, 1.9, -0.8, 0.6)] {
        let (m, u, t) = setup(n, rho, v, theta);
        let q = jacobian_qu(&m, &u, &t).unwrap();
        let fd = fd_source_jacobian(&m, &u, 0.0).unwrap();
        assert!(relative_entry_error(&q, &fd, JACOBIAN_FLOOR) <= 1e-6, "n={n}");
        let sv = linalg::singular_values(&q);
        assert!(sv[n] > 0.0 && sv[n + 1] <= 1e-10 * sv[0]);
    }
}

#[test]
fn p_determinant_and_a_max() {
    let (m, u, _) = setup(3, 1.0, 0.0, 1.0);
    let am = a_max(&m, &u).unwrap();
    let th = m.theta(&u).unwrap();
    let t0 = m.closure.tables(0.0).unwrap();
    let rad = (2..=3).map(|k| 2.0 * t0.beta[k] * t0.lambda_tilde[k]).fold(f64::INFINITY, f64::min);
    assert_relative_eq!(am.radiation, rad, max_relative = 1e-14);
    assert_relative_eq!(am.alpha, 16.0 / 3.0, max_relative = 1e-14);
    let big = th.gradient_norm_sq();
    assert_relative_eq!(am.hydro, (4.0 + 8.0 * big) / (4.0 + 16.0 * big), max_relative = 1e-14);
    let a = 0.9 * am.a_max();
    let p = build_p(&m, &u, a).unwrap();
    let det = p.view((0, 0), (4, 4)).into_owned().determinant();
    let expect = a.powi(4) * 2.0 * (1.0 + 4.0 * th.d_energy);
    assert_relative_eq!(det / expect, 1.0, epsilon = 1e-10);
    assert_relative_eq!(build_p1(&m, &u).unwrap().determinant(), 2.0 * (1.0 + 4.0 * th.d_energy), max_relative = 1e-12);
    assert!(matches!(build_p(&m, &u, 0.0), Err(Error::CertificationParameter { .. })));
    assert!(build_p(&m, &u, 1.01 * am.a_max()).is_err());
}

#[test]
fn a_max_is_degree_one_in_sigma_a() {
    let base = Model::with_defaults(3);
    let mut scaled = base.clone();
    scaled.thermo.sigma_a = 3.0;
    let u = base.equilibrium_vec(1.2, 0.1, 0.9);
    let a1 = a_max(&base, &u).unwrap().a_max_sq();
    let a3 = a_max(&scaled, &u).unwrap().a_max_sq();
    assert_relative_eq!(a3, 3.0 * a1, max_relative = 1e-12);
}

#[test]
fn condition_i_block_form() {
    let tol = Tolerances::default();
    for (n, rho, v, theta) in [(2, 0.5, 1.0, 2.0), (3, 1.0, 0.0, 1.0), (4, 1.7, -0.4, 0.55)] {
        let (m, u, t) = setup(n, rho, v, theta);
        let a = 0.9 * a_max(&m, &u).unwrap().a_max();
        let c = check_condition_i(&m, &u, a, &t, &tol).unwrap();
        let th = m.theta(&u).unwrap();
        let bp = m.thermo.planck_prime(theta);
        assert!(c.pass, "{c:?}");
        assert_relative_eq!(c.s_scalar, -rho * (1.0 + bp * th.d_energy), max_relative = 1e-12);
    }
}

#[test]
fn condition_ii_off_equilibrium() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in [2, 3, 4] {
        let m = Model::with_defaults(n);
        let r = condition_ii_sweep(&mut rng, &m, 12, &[0.0, 0.1, 0.5], &SamplingBox::default()).unwrap();
        assert!(r <= 1e-10, "n={n} r={r}");
    }
}

#[test]
fn rank_one_identity_and_radiation_block() {
    let tol = Tolerances::default();
    let (m, u, t) = setup(4, 1.4, 0.3, 1.2);
    let a = 0.9 * a_max(&m, &u).unwrap().a_max();
    let c = check_condition_iii(&m, &u, a, &t, &tol).unwrap();
    assert!(c.rank_one_residual <= 1e-10);
    assert!(c.radiation_lambda_max <= 1e-10 * c.scale);
}

#[test]
fn hydro_block_matches_closed_form() {
    let tol = Tolerances::default();
    for (n, rho, v, theta) in [(2, 0.8, 0.5, 0.7), (3, 1.0, 0.0, 1.0), (4, 2.0, -1.0, 1.9)] {
        let (m, u, t) = setup(n, rho, v, theta);
        let a = 0.9 * a_max(&m, &u).unwrap().a_max();
        let c = check_condition_iii(&m, &u, a, &t, &tol).unwrap();
        let closed = hydro_lambda_max_closed_form(&m, &u, a).unwrap();
        assert_relative_eq!(c.hydro_lambda_max, closed, max_relative = 1e-9);
    }
}

#[test]
fn hydro_block_is_indefinite_unless_l_parallel_k() {
    // L ∥ K exactly when b' theta^2 = 2 b', i.e. theta^5 = 1/2 for b = theta^4
    let theta_star = 0.5f64.powf(0.2);
    let tol = Tolerances::default();
    let (m, u, t) = setup(3, 1.0, 0.0, theta_star);
    let c0 = hydro_lambda_max_closed_form(&m, &u, 0.0).unwrap();
    let scale = linalg::inf_norm(&condition_iii_matrix(&m, &u, 1e-3, &t).unwrap());
    assert!(c0.abs() <= 1e-10 * scale);
    let (m, u, t) = setup(3, 1.0, 0.0, 1.0);
    let c = check_condition_iii(&m, &u, 0.9 * a_max(&m, &u).unwrap().a_max(), &t, &tol).unwrap();
    assert!(c.lambda_max > 1e-3 * c.scale);
    assert!(!c.pass);
    assert_eq!(largest_certifiable_a(&m, &u, &t, &tol).unwrap(), 0.0);
}

#[test]
fn rescaled_symmetrizer_certifies() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (i, (rho, v, theta)) in sample_equilibria(&mut rng, 9, &SamplingBox::default()).into_iter().enumerate() {
        let (m, u, t) = setup(2 + i % 3, rho, v, theta);
        let (lam, scale, a) = rescaled_condition_iii(&m, &u, &t, 0.9).unwrap();
        assert!(a > 0.0);
        assert!(lam <= 1e-10 * scale, "lam={lam} scale={scale}");
    }
}

#[test]
fn tilde_structure() {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (i, (rho, v, theta)) in sample_equilibria(&mut rng, 6, &SamplingBox::default()).into_iter().enumerate() {
        let (m, u, t) = setup(2 + i % 3, rho, v, theta);
        let s = check_tilde_structure(&m, &u, &t, &tol).unwrap();
        assert!(s.pass, "{s:?}");
        assert!(s.a21_sigma1 > 1e-6);
    }
}

#[test]
fn certify_record_and_summary() {
    let tol = Tolerances::default();
    let m = Model::with_defaults(3);
    let r = certify_state(&m, 1.0, 0.0, 1.0, &tol).unwrap();
    assert!(r.condition_i.pass && r.tilde.pass);
    assert!(!r.pass);
    assert_eq!(r.worst_ratio(&tol).1, "condition-iii");
    let rep = StabilityReport { records: alloc::vec![r.clone()], off_equilibrium_symmetry: 0.0, tolerances: tol };
    assert!(rep.summary().starts_with("FAIL 0/1"));
    let mut good = r;
    good.pass = true;
    let rep = StabilityReport { records: alloc::vec![good.clone(), good], off_equilibrium_symmetry: 0.0, tolerances: tol };
    assert_eq!(rep.summary(), "PASS 2/2");
}

#[test]
fn sampling_is_reproducible_and_in_box() {
    let bx = SamplingBox::default();
    let a = sample_equilibria(&mut ChaCha8Rng::seed_from_u64(42), 50, &bx);
    let b = sample_equilibria(&mut ChaCha8Rng::seed_from_u64(42), 50, &bx);
    assert_eq!(a, b);
    for (rho, v, theta) in a {
        assert!((0.5..=2.0).contains(&rho) && (-1.0..=1.0).contains(&v) && (0.5..=2.0).contains(&theta));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn condition_i_and_jacobian_hold(rho in 0.5f64..2.0, v in -1.0f64..1.0, theta in 0.5f64..2.0, n in 2usize..=4) {
        let tol = Tolerances::default();
        let (m, u, t) = setup(n, rho, v, theta);
        let a = 0.9 * a_max(&m, &u).unwrap().a_max();
        prop_assert!(check_condition_i(&m, &u, a, &t, &tol).unwrap().pass);
        let q = jacobian_qu(&m, &u, &t).unwrap();
        let fd = fd_source_jacobian(&m, &u, 0.0).unwrap();
        prop_assert!(relative_entry_error(&q, &fd, JACOBIAN_FLOOR) <= 1e-6);
    }
}


#[test]
fn entry_error_floors_small_entries() {
    let a = DMatrix::from_row_slice(2, 2, &[40.0, 0.0, 1.0, 2.0]);
    let mut b = a.clone();
    b[(0, 1)] = -1e-8;
    assert_relative_eq!(relative_entry_error(&a, &b, 1e-3), 1e-8 / 0.04, max_relative = 1e-12);
    b[(1, 1)] = 2.0 + 2e-5;
    assert_relative_eq!(relative_entry_error(&a, &b, 1e-3), 2e-5 / (2.0 + 2e-5), max_relative = 1e-12);
}
