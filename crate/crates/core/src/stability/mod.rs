//! Numerical certification of the structural stability condition at equilibrium states.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
#[allow(unused_imports)] // inherent float math once a dependency turns on num-traits/std
use num_traits::Float;

use crate::closure::ClosureTables;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{Model, ENERGY, F0, RHO, W};

/// Tolerances of the certification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub symmetry: f64,
    pub block: f64,
    pub condition_iii: f64,
    pub jacobian: f64,
    pub rank_gap: f64,
    pub a11: f64,
    pub a11_derivative: f64,
    pub a21_rank: f64,
    pub a0_offdiag: f64,
    /// Certify at `a = a_fraction * a_max`.
    pub a_fraction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            symmetry: 1e-10,
            block: 1e-10,
            condition_iii: 1e-10,
            jacobian: 1e-6,
            rank_gap: 1e8,
            a11: 1e-10,
            a11_derivative: 1e-6,
            a21_rank: 1e-8,
            a0_offdiag: 1e-12,
            a_fraction: 0.9,
        }
    }
}

fn require_equilibrium(model: &Model, u: &[f64], tables: &ClosureTables) -> Result<()> {
    let q = model.source_q(u, 0.0, tables)?;
    let residual = q.amax();
    let scale = model.thermo.planck(model.theta(u)?.theta).max(1.0) * u[RHO] * model.thermo.sigma_a;
    if residual > 1e-10 * scale {
        return Err(Error::OffEquilibrium { residual });
    }
    Ok(())
}

/// `K = rho sigma_a (-b' theta_u, 2)` and `L = (theta_u / theta^2, -1)`.
pub fn k_and_l(model: &Model, u: &[f64]) -> Result<([f64; 4], [f64; 4])> {
    let t = model.theta(u)?;
    let rs = u[RHO] * model.thermo.sigma_a(t.theta);
    let bp = model.thermo.planck_prime(t.theta);
    let g = t.gradient();
    let th2 = t.theta * t.theta;
    Ok((
        [-rs * bp * g[0], -rs * bp * g[1], -rs * bp * g[2], 2.0 * rs],
        [g[0] / th2, g[1] / th2, g[2] / th2, -1.0],
    ))
}

/// Analytic `Q_U(U_eq; 0) = diag(Q_1, -rho sigma_a I_N)` with `Q_1 = (0, 0, 1, -1/2)^T K`.
pub fn jacobian_qu(model: &Model, u: &[f64], tables: &ClosureTables) -> Result<DMatrix<f64>> {
    require_equilibrium(model, u, tables)?;
    let (k, _) = k_and_l(model, u)?;
    let n = model.len();
    let theta = model.theta(u)?.theta;
    let rs = u[RHO] * model.thermo.sigma_a(theta);
    let mut q = DMatrix::zeros(n, n);
    for j in 0..4 {
        q[(ENERGY, j)] = k[j];
        q[(F0, j)] = -0.5 * k[j];
    }
    for i in W + 1..n {
        q[(i, i)] = -rs;
    }
    Ok(q)
}

/// Central-difference Jacobian of `Q(.; eps)`, rebuilding tables for every perturbed state.
pub fn fd_source_jacobian(model: &Model, u: &[f64], epsilon: f64) -> Result<DMatrix<f64>> {
    let n = model.len();
    let mut jac = DMatrix::zeros(n, n);
    for k in 0..n {
        let h = 1e-6 * u[k].abs().max(1.0);
        let mut up = u.to_vec();
        let mut dn = u.to_vec();
        up[k] += h;
        dn[k] -= h;
        let qp = model.source_q(&up, epsilon, &model.tables(&up)?)?;
        let qm = model.source_q(&dn, epsilon, &model.tables(&dn)?)?;
        jac.set_column(k, &((qp - qm) / (2.0 * h)));
    }
    Ok(jac)
}

/// The three branches of the admissible-`a` bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AMax {
    pub radiation: f64,
    pub alpha: f64,
    pub hydro: f64,
}

impl AMax {
    pub fn a_max_sq(&self) -> f64 {
        self.radiation.min(self.alpha).min(self.hydro)
    }

    pub fn a_max(&self) -> f64 {
        self.a_max_sq().sqrt()
    }
}

/// `a_max^2 = min{2 rho sigma_a beta_k(0) kappa~_kk(0), 16/3 rho sigma_a b^2,
/// rho sigma_a (4 + 2 b' Theta / theta^2) / (4 + b'^2 Theta)}`.
pub fn a_max(model: &Model, u: &[f64]) -> Result<AMax> {
    let t = model.theta(u)?;
    let rs = u[RHO] * model.thermo.sigma_a(t.theta);
    let b = model.thermo.planck(t.theta);
    let bp = model.thermo.planck_prime(t.theta);
    let t0 = model.closure.tables(0.0)?;
    let radiation = (2..=model.n())
        .map(|k| 2.0 * rs * t0.beta[k] * t0.lambda_tilde[k])
        .fold(f64::INFINITY, f64::min);
    let big = t.gradient_norm_sq();
    Ok(AMax {
        radiation,
        alpha: 16.0 / 3.0 * rs * b * b,
        hydro: rs * (4.0 + 2.0 * bp * big / (t.theta * t.theta)) / (4.0 + bp * bp * big),
    })
}

pub fn build_p1(model: &Model, u: &[f64]) -> Result<DMatrix<f64>> {
    let t = model.theta(u)?;
    let bp = model.thermo.planck_prime(t.theta);
    let g = t.gradient();
    Ok(DMatrix::from_row_slice(4, 4, &[
        1.0, 0.0, 0.0, 0.0,
        0.0, 1.0, 0.0, 0.0,
        0.0, 0.0, 1.0, 2.0,
        -bp * g[0], -bp * g[1], -bp * g[2], 2.0,
    ]))
}

/// `P = a diag(P_1, I_N)`.
pub fn build_p(model: &Model, u: &[f64], a: f64) -> Result<DMatrix<f64>> {
    let am = a_max(model, u)?;
    if a == 0.0 || !a.is_finite() || a * a > am.a_max_sq() * (1.0 + 1e-12) {
        return Err(Error::CertificationParameter { a, a_max: am.a_max() });
    }
    let n = model.len();
    let mut p = DMatrix::identity(n, n);
    p.view_mut((0, 0), (4, 4)).copy_from(&build_p1(model, u)?);
    Ok(p * a)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionI {
    /// Largest entry of the blocks of `P Q_U P^-1` that must vanish, relative to `|Q_U|`.
    pub block_residual: f64,
    pub min_singular: f64,
    pub singular_bound: f64,
    /// The `(f_0, f_0)` entry of `P Q_U P^-1`, `-rho sigma_a (1 + b' theta_E)`.
    pub s_scalar: f64,
    pub pass: bool,
}

pub fn check_condition_i(model: &Model, u: &[f64], a: f64, tables: &ClosureTables, tol: &Tolerances) -> Result<ConditionI> {
    let q = jacobian_qu(model, u, tables)?;
    let p = build_p(model, u, a)?;
    let m = &p * &q * linalg::inverse(&p)?;
    let n = model.len();
    let r = n - 3;
    let scale = linalg::inf_norm(&q);
    let block_residual = linalg::max_abs(&m.view((0, 0), (3, 3)).into_owned())
        .max(linalg::max_abs(&m.view((0, 3), (3, r)).into_owned()))
        .max(linalg::max_abs(&m.view((3, 0), (r, 3)).into_owned()))
        / scale;
    let s = m.view((3, 3), (r, r)).into_owned();
    let sv = linalg::singular_values(&s);
    let min_singular = *sv.last().unwrap_or(&0.0);
    let t = model.theta(u)?;
    let rs = u[RHO] * model.thermo.sigma_a(t.theta);
    let bp = model.thermo.planck_prime(t.theta);
    let singular_bound = rs * (1.0f64).min(1.0 + bp * t.d_energy) * (1.0 - 1e-6);
    Ok(ConditionI {
        block_residual,
        min_singular,
        singular_bound,
        s_scalar: m[(F0, F0)],
        pass: block_residual <= tol.block && min_singular >= singular_bound,
    })
}

/// `|A_0 A - (A_0 A)^T|` relative to `|A_0 A|`.
pub fn condition_ii_residual(model: &Model, u: &[f64], epsilon: f64, tables: &ClosureTables) -> Result<f64> {
    let a0 = model.symmetrizer_a0(u, tables)?;
    let s = a0 * model.assemble_a(u, epsilon, tables)?;
    Ok(linalg::symmetry_residual(&s) / linalg::inf_norm(&s).max(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionIii {
    pub lambda_max: f64,
    pub scale: f64,
    /// Largest eigenvalue of the hydro (first four rows) block.
    pub hydro_lambda_max: f64,
    /// Largest eigenvalue of the `(alpha, f_2, ..)` block.
    pub radiation_lambda_max: f64,
    /// `|P_1^T diag(0,0,0,1) P_1 - K^T K / (rho sigma_a)^2|` relative.
    pub rank_one_residual: f64,
    pub pass: bool,
}

/// `A_0 Q_U + Q_U^T A_0 + P^T diag(0, 0, 0, 1, I_N) P`.
pub fn condition_iii_matrix(model: &Model, u: &[f64], a: f64, tables: &ClosureTables) -> Result<DMatrix<f64>> {
    let q = jacobian_qu(model, u, tables)?;
    let a0 = model.symmetrizer_a0(u, tables)?;
    let n = model.len();
    let mut mask = DMatrix::identity(n, n);
    for i in 0..3 {
        mask[(i, i)] = 0.0;
    }
    let p = build_p(model, u, a)?;
    Ok(&a0 * &q + q.transpose() * &a0 + p.transpose() * mask * p)
}

pub fn check_condition_iii(model: &Model, u: &[f64], a: f64, tables: &ClosureTables, tol: &Tolerances) -> Result<ConditionIii> {
    let m = condition_iii_matrix(model, u, a, tables)?;
    let n = model.len();
    let scale = linalg::inf_norm(&m);
    let eig = linalg::symmetric_eigenvalues(&m);
    let lambda_max = *eig.last().unwrap();
    let hydro = linalg::symmetric_eigenvalues(&m.view((0, 0), (4, 4)).into_owned());
    let rad = linalg::symmetric_eigenvalues(&m.view((4, 4), (n - 4, n - 4)).into_owned());

    let (k, _) = k_and_l(model, u)?;
    let p1 = build_p1(model, u)?;
    let mut d = DMatrix::zeros(4, 4);
    d[(3, 3)] = 1.0;
    let lhs = p1.transpose() * d * &p1;
    let kv = DVector::from_row_slice(&k);
    let rs = k[3] / 2.0;
    let rhs = &kv * kv.transpose() / (rs * rs);
    let rank_one_residual = linalg::max_abs(&(lhs - &rhs)) / linalg::max_abs(&rhs);

    Ok(ConditionIii {
        lambda_max,
        scale,
        hydro_lambda_max: *hydro.last().unwrap(),
        radiation_lambda_max: *rad.last().unwrap(),
        rank_one_residual,
        pass: lambda_max <= tol.condition_iii * scale,
    })
}

/// Closed form of the hydro-block eigenvalue: with `y = L + a^2 K / (2 rho^2 sigma_a^2)`
/// the matrix `y^T K + K^T y` has largest eigenvalue `y.K + |y| |K|`.
pub fn hydro_lambda_max_closed_form(model: &Model, u: &[f64], a: f64) -> Result<f64> {
    let (k, l) = k_and_l(model, u)?;
    let rs = k[3] / 2.0;
    let c = a * a / (2.0 * rs * rs);
    let y: Vec<f64> = l.iter().zip(&k).map(|(li, ki)| li + c * ki).collect();
    let dot: f64 = y.iter().zip(&k).map(|(a, b)| a * b).sum();
    let ny = y.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nk = k.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(dot + ny * nk)
}

/// Condition (iii) with the radiation block of `A_0` weighted by `2 / (b' theta^2)`,
/// which aligns `L` with `-K`. Returns `(lambda_max, scale, a)` at `a = fraction * a_max'`.
pub fn rescaled_condition_iii(model: &Model, u: &[f64], tables: &ClosureTables, fraction: f64) -> Result<(f64, f64, f64)> {
    let q = jacobian_qu(model, u, tables)?;
    let mut a0 = model.symmetrizer_a0(u, tables)?;
    let t = model.theta(u)?;
    let bp = model.thermo.planck_prime(t.theta);
    let c = 2.0 / (bp * t.theta * t.theta);
    let n = model.len();
    for i in W..n {
        for j in W..n {
            a0[(i, j)] *= c;
        }
    }
    let rs = u[RHO] * model.thermo.sigma_a(t.theta);
    let min_rad = (W + 1..n).map(|i| a0[(i, i)]).fold(f64::INFINITY, f64::min);
    let a_sq = (2.0 * rs / (bp * t.theta * t.theta)).min(2.0 * rs * min_rad);
    let a = fraction * a_sq.sqrt();
    let mut mask = DMatrix::identity(n, n);
    for i in 0..3 {
        mask[(i, i)] = 0.0;
    }
    let mut p = DMatrix::identity(n, n);
    p.view_mut((0, 0), (4, 4)).copy_from(&build_p1(model, u)?);
    let p = p * a;
    let m = &a0 * &q + q.transpose() * &a0 + p.transpose() * mask * p;
    Ok((*linalg::symmetric_eigenvalues(&m).last().unwrap(), linalg::inf_norm(&m), a))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TildeStructure {
    pub a11_norm: f64,
    pub a11_derivative: f64,
    pub a21_sigma1: f64,
    pub a21_sigma2: f64,
    /// Hydro/radiation coupling block of `A_0(U_eq; 0)`, relative.
    pub a0_offdiag: f64,
    /// The same block of `D^-T A_0 D^-1` in tilde variables.
    pub a0_tilde_offdiag: f64,
    pub pass: bool,
}

fn a_tilde(model: &Model, u: &[f64], tables: &ClosureTables) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let tt = model.tilde_transform(u, 0.0, tables)?;
    let a = model.assemble_a(u, 0.0, tables)?;
    Ok((&tt.jacobian * a * &tt.inverse, tt.jacobian, tt.inverse))
}

pub fn check_tilde_structure(model: &Model, u: &[f64], tables: &ClosureTables, tol: &Tolerances) -> Result<TildeStructure> {
    require_equilibrium(model, u, tables)?;
    let n = model.len();
    let (at, _, dinv) = a_tilde(model, u, tables)?;
    let a11_norm = linalg::max_abs(&at.view((0, 0), (3, 3)).into_owned());

    let theta = model.theta(u)?.theta;
    let k = tables.moment_coefficients();
    let ut = model.tilde_vector(u, theta, 0.0, &k);
    let mut a11_derivative: f64 = 0.0;
    for j in 0..3 {
        let h = 1e-4 * ut[j].abs().max(1.0);
        let mut blocks = [DMatrix::zeros(3, 3), DMatrix::zeros(3, 3)];
        for (s, sign) in [1.0, -1.0].into_iter().enumerate() {
            let mut p = ut.clone();
            p[j] += sign * h;
            let up = model.from_tilde(&p, 0.0)?;
            let (ap, _, _) = a_tilde(model, &up, &model.tables(&up)?)?;
            blocks[s] = ap.view((0, 0), (3, 3)).into_owned();
        }
        a11_derivative = a11_derivative.max(linalg::max_abs(&((&blocks[0] - &blocks[1]) / (2.0 * h))));
    }

    let a21 = at.view((3, 0), (n - 3, 3)).into_owned();
    let sv = linalg::singular_values(&a21);
    let a0 = model.symmetrizer_a0(u, tables)?;
    let a0_offdiag = linalg::max_abs(&a0.view((0, 3), (3, n - 3)).into_owned()) / linalg::max_abs(&a0);
    let a0t = dinv.transpose() * a0 * &dinv;
    let a0_tilde_offdiag = linalg::max_abs(&a0t.view((0, 3), (3, n - 3)).into_owned()) / linalg::max_abs(&a0t);

    let pass = a11_norm <= tol.a11
        && a11_derivative <= tol.a11_derivative
        && sv[0] > 0.0
        && sv[1] <= tol.a21_rank * sv[0]
        && a0_offdiag <= tol.a0_offdiag;
    Ok(TildeStructure { a11_norm, a11_derivative, a21_sigma1: sv[0], a21_sigma2: sv[1], a0_offdiag, a0_tilde_offdiag, pass })
}

/// Everything certified at one equilibrium state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateRecord {
    pub rho: f64,
    pub v: f64,
    pub theta: f64,
    pub n: usize,
    pub a: f64,
    pub a_max: f64,
    pub condition_i: ConditionI,
    /// Symmetry residual of `A_0 A` at the equilibrium state.
    pub condition_ii: f64,
    pub condition_iii: ConditionIii,
    pub jacobian_error: f64,
    pub rank_gap: f64,
    pub tilde: TildeStructure,
    /// Largest `a` for which condition (iii) certifies (0 if none).
    pub largest_certifiable_a: f64,
    pub rescaled_lambda_max: f64,
    pub rescaled_scale: f64,
    pub pass: bool,
}

impl StateRecord {
    /// Ratio of each certified quantity to its tolerance; the largest is the margin.
    pub fn worst_ratio(&self, tol: &Tolerances) -> (f64, &'static str) {
        let ci = &self.condition_i;
        let ciii = &self.condition_iii;
        let t = &self.tilde;
        let sv_ratio = if ci.min_singular > 0.0 { ci.singular_bound / ci.min_singular } else { f64::INFINITY };
        let checks = [
            (ci.block_residual / tol.block, "condition-i-blocks"),
            (sv_ratio, "condition-i-singular"),
            (self.condition_ii / tol.symmetry, "condition-ii"),
            (ciii.lambda_max / (tol.condition_iii * ciii.scale), "condition-iii"),
            (self.jacobian_error / tol.jacobian, "jacobian"),
            (tol.rank_gap / self.rank_gap, "rank-gap"),
            (t.a11_norm / tol.a11, "a11"),
            (t.a11_derivative / tol.a11_derivative, "a11-derivative"),
            (t.a21_sigma2 / (tol.a21_rank * t.a21_sigma1), "a21-rank"),
            (t.a0_offdiag / tol.a0_offdiag, "a0-block"),
        ];
        checks.into_iter().fold((f64::NEG_INFINITY, ""), |acc, c| if c.0 > acc.0 { c } else { acc })
    }
}

/// Relative entrywise error between two Jacobians, over entries above `floor`
/// times the largest entry. Smaller entries are finite-difference noise.
/// Entries below this fraction of the matrix scale are compared in absolute
/// terms: central differences leave roundoff of about 1e-10 of the scale.
pub const JACOBIAN_FLOOR: f64 = 1e-3;

/// Largest entrywise error `|a - b| / max(|a|, |b|, floor * scale)`, where
/// `scale` is the largest analytic entry (at least 1).
pub fn relative_entry_error(analytic: &DMatrix<f64>, fd: &DMatrix<f64>, floor: f64) -> f64 {
    let scale = linalg::max_abs(analytic).max(1.0);
    let cut = floor * scale;
    analytic
        .iter()
        .zip(fd.iter())
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(cut))
        .fold(0.0, f64::max)
}

pub fn certify_state(model: &Model, rho: f64, v: f64, theta: f64, tol: &Tolerances) -> Result<StateRecord> {
    let u = model.equilibrium_vec(rho, v, theta);
    model.check_state(&u)?;
    let tables = model.tables(&u)?;
    let am = a_max(model, &u)?;
    let a = tol.a_fraction * am.a_max();
    let condition_i = check_condition_i(model, &u, a, &tables, tol)?;
    let condition_ii = condition_ii_residual(model, &u, 0.0, &tables)?;
    let condition_iii = check_condition_iii(model, &u, a, &tables, tol)?;

    let qu = jacobian_qu(model, &u, &tables)?;
    let fd = fd_source_jacobian(model, &u, 0.0)?;
    let jacobian_error = relative_entry_error(&qu, &fd, JACOBIAN_FLOOR);
    let sv = linalg::singular_values(&qu);
    let r = model.n() + 1;
    let rank_gap = if sv[r] > 0.0 { sv[r - 1] / sv[r] } else { f64::INFINITY };

    let tilde = check_tilde_structure(model, &u, &tables, tol)?;
    let largest_certifiable_a = largest_certifiable_a(model, &u, &tables, tol)?;
    let (rescaled_lambda_max, rescaled_scale, _) = rescaled_condition_iii(model, &u, &tables, tol.a_fraction)?;

    let pass = condition_i.pass
        && condition_ii <= tol.symmetry
        && condition_iii.pass
        && jacobian_error <= tol.jacobian
        && rank_gap >= tol.rank_gap
        && tilde.pass;
    Ok(StateRecord {
        rho,
        v,
        theta,
        n: model.n(),
        a,
        a_max: am.a_max(),
        condition_i,
        condition_ii,
        condition_iii,
        jacobian_error,
        rank_gap,
        tilde,
        largest_certifiable_a,
        rescaled_lambda_max,
        rescaled_scale,
        pass,
    })
}

/// Bisection on `(0, a_max]` for the largest `a` passing condition (iii).
pub fn largest_certifiable_a(model: &Model, u: &[f64], tables: &ClosureTables, tol: &Tolerances) -> Result<f64> {
    let top = a_max(model, u)?.a_max();
    let ok = |a: f64| -> Result<bool> { Ok(check_condition_iii(model, u, a, tables, tol)?.pass) };
    if ok(top)? {
        return Ok(top);
    }
    let floor = 1e-6 * top;
    if !ok(floor)? {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (floor, top);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Box from which equilibrium states are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingBox {
    pub rho: (f64, f64),
    pub theta: (f64, f64),
    pub v: (f64, f64),
}

impl Default for SamplingBox {
    fn default() -> Self {
        Self { rho: (0.5, 2.0), theta: (0.5, 2.0), v: (-1.0, 1.0) }
    }
}

/// `(rho, v, theta)` triples, drawn in that order from `rng`.
pub fn sample_equilibria<R: Rng>(rng: &mut R, count: usize, bx: &SamplingBox) -> Vec<(f64, f64, f64)> {
    (0..count)
        .map(|_| {
            let rho = rng.random_range(bx.rho.0..=bx.rho.1);
            let v = rng.random_range(bx.v.0..=bx.v.1);
            let theta = rng.random_range(bx.theta.0..=bx.theta.1);
            (rho, v, theta)
        })
        .collect()
}

/// A random non-equilibrium state in the state space, for condition (ii).
pub fn sample_state<R: Rng>(rng: &mut R, model: &Model, bx: &SamplingBox) -> Vec<f64> {
    let (rho, v, theta) = sample_equilibria(rng, 1, bx)[0];
    let mut u = model.equilibrium_vec(rho, v, theta);
    let b = model.thermo.planck(theta);
    u[F0] = 0.5 * b * rng.random_range(0.3..=2.0);
    u[F0 + 1] = rng.random_range(-0.8..=0.8);
    for x in u[W + 2..].iter_mut() {
        *x = b * rng.random_range(-0.05..=0.05);
    }
    u
}

/// Condition (ii) at `count` random non-equilibrium states for each `eps`; largest residual.
pub fn condition_ii_sweep<R: Rng>(rng: &mut R, model: &Model, count: usize, eps: &[f64], bx: &SamplingBox) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..count {
        let u = sample_state(rng, model, bx);
        let tables = model.tables(&u)?;
        let e = eps[i % eps.len()];
        worst = worst.max(condition_ii_residual(model, &u, e, &tables)?);
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub records: Vec<StateRecord>,
    /// Largest condition-(ii) residual over the non-equilibrium sweep.
    pub off_equilibrium_symmetry: f64,
    pub tolerances: Tolerances,
}

impl StabilityReport {
    pub fn passed(&self) -> usize {
        self.records.iter().filter(|r| r.pass).count()
    }

    pub fn all_pass(&self) -> bool {
        self.passed() == self.records.len() && self.off_equilibrium_symmetry <= self.tolerances.symmetry
    }

    /// Worst tolerance ratio over all records and the check it came from.
    pub fn worst_margin(&self) -> (f64, &'static str) {
        self.records
            .iter()
            .map(|r| r.worst_ratio(&self.tolerances))
            .chain(core::iter::once((self.off_equilibrium_symmetry / self.tolerances.symmetry, "condition-ii-sweep")))
            .fold((f64::NEG_INFINITY, ""), |acc, c| if c.0 > acc.0 { c } else { acc })
    }

    /// `PASS k/k` or `FAIL k/n worst=<ratio> (<check>)`.
    pub fn summary(&self) -> alloc::string::String {
        let n = self.records.len();
        if self.all_pass() {
            alloc::format!("PASS {n}/{n}")
        } else {
            let (ratio, what) = self.worst_margin();
            alloc::format!("FAIL {}/{n} worst={ratio:.6e} ({what})", self.passed())
        }
    }
}

#[cfg(test)]
mod tests;
