//! The coupled Euler–HMP_N relaxation system.

mod state;
mod thermo;

pub use state::*;
pub use thermo::{ThermoRadiationModel, ThetaPartials};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, Matrix3};
#[allow(unused_imports)] // inherent float math once a dependency turns on num-traits/std
use num_traits::Float;

use crate::closure::{d_tilde_matrix, Closure, ClosureTables, MomentCoefficients};
use crate::error::{Error, Result};
use crate::linalg;

pub const DEFAULT_EPSILON0: f64 = 0.5;

/// `alpha = -3r / (2 + sqrt(4 - 3 r^2))` with `r = E_1 / E_0`.
pub fn alpha_from_moments(e0: f64, e1: f64) -> Result<f64> {
    if !(e0 > 0.0) {
        return Err(Error::State(format!("E_0 = {e0} is not positive")));
    }
    let r = e1 / e0;
    if !(r.abs() <= 1.0) {
        return Err(Error::Domain { alpha: r, alpha_max: 1.0 });
    }
    Ok(-3.0 * r / (2.0 + (4.0 - 3.0 * r * r).sqrt()))
}

/// Flux ratio `E_1 / E_0 = -4 alpha / (3 + alpha^2)` of the M_1 ansatz.
pub fn flux_ratio(alpha: f64) -> f64 {
    -4.0 * alpha / (3.0 + alpha * alpha)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub e0: f64,
    pub e1: f64,
    pub e2: f64,
    pub e_closure: f64,
}

/// Everything returned by [`Model::tilde_transform`].
#[derive(Debug, Clone, PartialEq)]
pub struct TildeTransform {
    pub tilde: TildeState,
    pub jacobian: DMatrix<f64>,
    pub det: f64,
    pub inverse: DMatrix<f64>,
}

/// Thermodynamics, closure and `epsilon_0` of one configured system.
#[derive(Debug, Clone)]
pub struct Model {
    pub thermo: ThermoRadiationModel,
    pub closure: Closure,
    pub epsilon0: f64,
}

impl Model {
    pub fn new(thermo: ThermoRadiationModel, n: usize, alpha_max: f64, epsilon0: f64) -> Result<Self> {
        thermo.validate()?;
        if !(epsilon0 > 0.0) {
            return Err(Error::Usage(format!("epsilon0 must be positive, got {epsilon0}")));
        }
        Ok(Self { thermo, closure: Closure::new(n, alpha_max)?, epsilon0 })
    }

    pub fn with_defaults(n: usize) -> Self {
        Self::new(ThermoRadiationModel::default(), n, crate::closure::DEFAULT_ALPHA_MAX, DEFAULT_EPSILON0)
            .expect("default model is valid")
    }

    pub fn n(&self) -> usize {
        self.closure.n()
    }

    pub fn len(&self) -> usize {
        state_len(self.n())
    }

    pub fn tables(&self, u: &[f64]) -> Result<ClosureTables> {
        self.closure.tables(u[ALPHA])
    }

    pub fn theta(&self, u: &[f64]) -> Result<ThetaPartials> {
        self.thermo.theta_and_partials(u[RHO], u[MOM], u[ENERGY])
    }

    /// Membership in the state space; returns the temperature.
    pub fn check_state(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.len() {
            return Err(Error::Usage(format!("state has {} entries, expected {}", u.len(), self.len())));
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::State("state is not finite".into()));
        }
        let alpha_max = self.closure.alpha_max();
        if !(u[ALPHA].abs() <= alpha_max) {
            return Err(Error::Domain { alpha: u[ALPHA], alpha_max });
        }
        Ok(self.theta(u)?.theta)
    }

    /// Validated typed state.
    pub fn state(&self, u: HydroState, w: RadState, epsilon: f64) -> Result<FullState> {
        if !(0.0..=self.epsilon0).contains(&epsilon) {
            return Err(Error::Usage(format!("epsilon = {epsilon} outside [0, {}]", self.epsilon0)));
        }
        let s = FullState { u, w, epsilon };
        self.check_state(&s.to_vec())?;
        Ok(s)
    }

    pub fn state_from_slice(&self, u: &[f64], epsilon: f64) -> Result<FullState> {
        let w = RadState::from_vec(u[W..].to_vec(), self.closure.alpha_max())?;
        self.state(HydroState::new(u[RHO], u[MOM], u[ENERGY]), w, epsilon)
    }

    /// `f_0 = b/2`, `alpha = 0`, `f_i = 0`.
    pub fn equilibrium_vec(&self, rho: f64, v: f64, theta: f64) -> Vec<f64> {
        let mut u = vec![0.0; self.len()];
        u[RHO] = rho;
        u[MOM] = rho * v;
        u[ENERGY] = rho * (self.thermo.energy(rho, theta) + 0.5 * v * v);
        u[F0] = 0.5 * self.thermo.planck(theta);
        u
    }

    pub fn equilibrium_state(&self, rho: f64, v: f64, theta: f64, epsilon: f64) -> Result<FullState> {
        if !(rho > 0.0 && theta > 0.0) {
            return Err(Error::State(format!("equilibrium needs rho, theta > 0 (got {rho}, {theta})")));
        }
        self.state_from_slice(&self.equilibrium_vec(rho, v, theta), epsilon)
    }

    /// `w_eq(u)` for the hydro part of `u`.
    pub fn equilibrium_w(&self, theta: f64) -> Vec<f64> {
        let mut w = vec![0.0; self.n() + 1];
        w[0] = 0.5 * self.thermo.planck(theta);
        w
    }

    pub fn moments(&self, w: &[f64], tables: &ClosureTables) -> Moments {
        let k = &tables.kappa;
        let n = tables.n;
        let f = |i: usize| if i == 1 { 0.0 } else { w[i] };
        Moments {
            e0: k[(0, 0)] * w[0],
            e1: k[(1, 0)] * w[0],
            e2: k[(2, 2)] * w[2] + k[(2, 0)] * w[0],
            e_closure: (0..=n).map(|i| k[(n + 1, i)] * f(i)).sum(),
        }
    }

    /// `S^ = eps S~`, the radiation source before applying `D~^-1`.
    pub fn source_hat(&self, u: &[f64], theta: f64, epsilon: f64, tables: &ClosureTables) -> DVector<f64> {
        let n = tables.n;
        let w = &u[W..];
        let rho = u[RHO];
        let e2 = epsilon * epsilon;
        let sa = self.thermo.sigma_a(theta);
        let ss = self.thermo.sigma_s(theta);
        let b = self.thermo.planck(theta);
        let emission = rho * (sa * b + e2 * ss * tables.kappa[(0, 0)] * w[0]);
        let damping = rho * (sa + e2 * ss);
        let f = |i: isize| if i == 1 || i < 0 { 0.0 } else { w[i as usize] };
        DVector::from_fn(n + 1, |i, _| {
            let ii = i as isize;
            emission * tables.r[i] / (2.0 * tables.lambda_tilde[i])
                - damping * (w[1] * f(ii - 1) + tables.beta[i] * f(ii))
        })
    }

    /// `Q(U; eps)` in the scaling `dU/dt + A dU/dx / eps = Q / eps^2`.
    pub fn source_q(&self, u: &[f64], epsilon: f64, tables: &ClosureTables) -> Result<DVector<f64>> {
        let theta = self.theta(u)?.theta;
        self.source_q_at(u, theta, epsilon, tables)
    }

    pub(crate) fn source_q_at(
        &self,
        u: &[f64],
        theta: f64,
        epsilon: f64,
        tables: &ClosureTables,
    ) -> Result<DVector<f64>> {
        let rho = u[RHO];
        let f0 = u[F0];
        let sa = self.thermo.sigma_a(theta);
        let ss = self.thermo.sigma_s(theta);
        let b = self.thermo.planck(theta);
        let d = d_tilde_matrix(&u[W..], tables)?;
        let q2 = linalg::solve_vec(&d, &self.source_hat(u, theta, epsilon, tables))?;
        let mut q = DVector::zeros(self.len());
        q[MOM] = rho * (epsilon * sa + epsilon.powi(3) * ss) * tables.kappa[(1, 0)] * f0;
        q[ENERGY] = rho * sa * (tables.kappa[(0, 0)] * f0 - b);
        q.rows_mut(W, tables.n + 1).copy_from(&q2);
        Ok(q)
    }

    /// Jacobian of the Euler flux `(rho v, rho v^2 + p, (rho E + p) v)`.
    pub fn flux_jacobian(&self, u: &[f64]) -> Result<Matrix3<f64>> {
        let t = self.theta(u)?;
        let rho = u[RHO];
        let v = u[MOM] / rho;
        let p = self.thermo.pressure(rho, t.theta);
        let pt = self.thermo.p_theta(rho, t.theta);
        let dp = [self.thermo.p_rho(rho, t.theta) + pt * t.d_rho, pt * t.d_mom, pt * t.d_energy];
        let dv = [-v / rho, 1.0 / rho, 0.0];
        let h = u[ENERGY] + p;
        Ok(Matrix3::new(
            0.0, 1.0, 0.0,
            -v * v + dp[0], 2.0 * v + dp[1], dp[2],
            v * dp[0] + h * dv[0], v * dp[1] + h * dv[1], v * (1.0 + dp[2]),
        ))
    }

    pub fn assemble_a(&self, u: &[f64], epsilon: f64, tables: &ClosureTables) -> Result<DMatrix<f64>> {
        let fu = self.flux_jacobian(u)?;
        let n = tables.n;
        let d = d_tilde_matrix(&u[W..], tables)?;
        let r = linalg::solve(&d, &(&tables.m_tilde * &d))?;
        let mut a = DMatrix::zeros(n + 4, n + 4);
        a.view_mut((0, 0), (3, 3)).copy_from(&(fu * epsilon));
        a.view_mut((W, W), (n + 1, n + 1)).copy_from(&r);
        Ok(a)
    }

    /// Radiation transport matrix `D~^-1 M~ D~`.
    pub fn radiation_matrix(&self, w: &[f64], tables: &ClosureTables) -> Result<DMatrix<f64>> {
        let d = d_tilde_matrix(w, tables)?;
        linalg::solve(&d, &(&tables.m_tilde * &d))
    }

    /// Hessian of `eta = -rho s` in the conserved variables `(rho, m, rho E)`.
    pub fn entropy_hessian(&self, u: &[f64]) -> Result<Matrix3<f64>> {
        let th = &self.thermo;
        let rho = u[RHO];
        let v = u[MOM] / rho;
        let theta = self.theta(u)?.theta;
        let e = th.energy(rho, theta);
        let p = th.pressure(rho, theta);
        let s = th.entropy(rho, theta);
        let g = e + p / rho - theta * s;
        let (pr, pt) = (th.p_rho(rho, theta), th.p_theta(rho, theta));
        // Entropy variables differentiated in (rho, v, theta).
        let dv = Matrix3::new(
            pr / (rho * theta), -v / theta, (pt / rho - s) / theta - (g - 0.5 * v * v) / (theta * theta),
            0.0, 1.0 / theta, -v / (theta * theta),
            0.0, 0.0, 1.0 / (theta * theta),
        );
        let du = Matrix3::new(
            1.0, 0.0, 0.0,
            v, rho, 0.0,
            e + 0.5 * v * v + rho * th.e_rho(rho, theta), rho * v, rho * th.e_theta(rho, theta),
        );
        let inv = du.try_inverse().ok_or_else(|| Error::State("singular thermodynamic Jacobian".into()))?;
        let h = dv * inv;
        Ok((h + h.transpose()) * 0.5)
    }

    pub fn symmetrizer_a0(&self, u: &[f64], tables: &ClosureTables) -> Result<DMatrix<f64>> {
        let h = self.entropy_hessian(u)?;
        let min_eig = h.symmetric_eigenvalues().min();
        if !(min_eig > 0.0) {
            return Err(Error::NonConvexEntropy { min_eig });
        }
        let n = tables.n;
        let d = d_tilde_matrix(&u[W..], tables)?;
        let rad = d.transpose() * tables.lambda_tilde_matrix() * &d;
        let mut a0 = DMatrix::zeros(n + 4, n + 4);
        a0.view_mut((0, 0), (3, 3)).copy_from(&h);
        a0.view_mut((W, W), (n + 1, n + 1)).copy_from(&((&rad + rad.transpose()) * 0.5));
        Ok(a0)
    }

    pub fn tilde_vector(&self, u: &[f64], theta: f64, epsilon: f64, k: &MomentCoefficients) -> Vec<f64> {
        let mut t = u.to_vec();
        t[MOM] = u[MOM] + epsilon * k.k10 * u[F0];
        t[ENERGY] = u[ENERGY] + k.k00 * u[F0];
        t[F0] = k.k00 * u[F0] - self.thermo.planck(theta);
        t
    }

    pub fn tilde_transform(&self, u: &[f64], epsilon: f64, tables: &ClosureTables) -> Result<TildeTransform> {
        let t = self.theta(u)?;
        let k = tables.moment_coefficients();
        let tilde = self.tilde_vector(u, t.theta, epsilon, &k);
        let jacobian = self.tilde_jacobian(u, &t, epsilon, tables);
        let det = k.k00 * (1.0 + self.thermo.planck_prime(t.theta) * t.d_energy)
            + epsilon * self.thermo.planck_prime(t.theta) * t.d_mom * k.k10;
        if !(det.abs() > 1e-10 * k.k00) {
            return Err(Error::DegenerateTransform { det });
        }
        let inverse = linalg::inverse(&jacobian)?;
        Ok(TildeTransform { tilde: TildeState::from_slice(&tilde), jacobian, det, inverse })
    }

    pub fn tilde_jacobian(&self, u: &[f64], t: &ThetaPartials, epsilon: f64, tables: &ClosureTables) -> DMatrix<f64> {
        let n = self.len();
        let bp = self.thermo.planck_prime(t.theta);
        let f0 = u[F0];
        let mut d = DMatrix::identity(n, n);
        d[(MOM, F0)] = epsilon * tables.kappa[(1, 0)];
        d[(MOM, ALPHA)] = epsilon * tables.kappa10_prime * f0;
        d[(ENERGY, F0)] = tables.kappa[(0, 0)];
        d[(ENERGY, ALPHA)] = tables.kappa00_prime * f0;
        d[(F0, RHO)] = -bp * t.d_rho;
        d[(F0, MOM)] = -bp * t.d_mom;
        d[(F0, ENERGY)] = -bp * t.d_energy;
        d[(F0, F0)] = tables.kappa[(0, 0)];
        d[(F0, ALPHA)] = tables.kappa00_prime * f0;
        d
    }

    /// Inverse of the tilde map: recover `U` from `U~`.
    ///
    /// For large `eps b` the temperature equation can have a second, spurious
    /// root with negative transform determinant; the physical one is the
    /// largest. Dropping the kinetic term bounds every root from above.
    pub fn from_tilde(&self, ut: &[f64], epsilon: f64) -> Result<Vec<f64>> {
        let k = self.closure.moment_coefficients(ut[ALPHA])?;
        let th = &self.thermo;
        let rho = ut[RHO];
        if !(rho > 0.0) {
            return Err(Error::State(format!("density {rho} is not positive")));
        }
        let (mt, et, wt0) = (ut[MOM], ut[ENERGY], ut[F0]);
        let ek = epsilon * k.k10 / k.k00;
        let residual = |theta: f64| {
            let b = th.planck(theta);
            let m = mt - ek * (wt0 + b);
            let g = rho * th.energy(rho, theta) + 0.5 * m * m / rho + b + wt0 - et;
            let bp = th.planck_prime(theta);
            let dg = rho * th.e_theta(rho, theta) - m * ek * bp / rho + bp;
            (g, dg)
        };
        let upper = increasing_root(
            |theta: f64| {
                let g = rho * th.energy(rho, theta) + th.planck(theta) + wt0 - et;
                (g, rho * th.e_theta(rho, theta) + th.planck_prime(theta))
            },
            1.0,
        )?;
        let theta = largest_root(&residual, upper * (1.0 + 1e-12))?;
        if !(residual(theta).1 > 0.0) {
            return Err(Error::DegenerateTransform { det: residual(theta).1 });
        }
        let b = th.planck(theta);
        let f0 = (wt0 + b) / k.k00;
        let mut u = ut.to_vec();
        u[MOM] = mt - epsilon * k.k10 * f0;
        u[ENERGY] = et - wt0 - b;
        u[F0] = f0;
        Ok(u)
    }

    /// Spectral radius of the hydro block plus that of the radiation block over `epsilon`.
    pub fn wave_speeds(&self, u: &[f64], epsilon: f64, tables: &ClosureTables) -> Result<(f64, f64)> {
        let theta = self.theta(u)?.theta;
        let v = u[MOM] / u[RHO];
        let hydro = v.abs() + self.thermo.sound_speed(u[RHO], theta);
        Ok((hydro, tables.m_tilde_spectral_radius() / epsilon))
    }
}

/// Largest root of `f` in `(0, upper]`, where `f(upper) >= 0`: a geometric
/// downward scan brackets the last sign change, then Newton safeguarded by
/// bisection.
pub(crate) fn largest_root(f: impl Fn(f64) -> (f64, f64), upper: f64) -> Result<f64> {
    let mut hi = upper;
    let mut lo;
    loop {
        lo = hi * 0.98;
        if f(lo).0 < 0.0 {
            break;
        }
        hi = lo;
        if lo < 1e-30 * upper {
            return Err(Error::State("no positive temperature matches the energy".into()));
        }
    }
    bracketed_root(f, lo, hi)
}

/// Root of `f` in `[lo, hi]` with `f(lo) < 0 <= f(hi)`.
pub(crate) fn bracketed_root(f: impl Fn(f64) -> (f64, f64), mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut x = 0.5 * (lo + hi);
    for _ in 0..300 {
        let (g, dg) = f(x);
        if g == 0.0 {
            return Ok(x);
        }
        if g < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - g / dg;
        let next = if newton > lo && newton < hi && dg > 0.0 { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= 1e-15 * x || hi - lo <= 1e-15 * hi {
            return Ok(next);
        }
        x = next;
    }
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::State("temperature recovery failed".into()))
    }
}

/// Root of an increasing function on `(0, inf)`, starting from `guess`.
pub(crate) fn increasing_root(f: impl Fn(f64) -> (f64, f64), guess: f64) -> Result<f64> {
    let mut hi = if guess > 0.0 && guess.is_finite() { guess } else { 1.0 };
    let mut lo = hi;
    for _ in 0..2000 {
        if f(hi).0 >= 0.0 {
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    if !(f(hi).0 >= 0.0) {
        return Err(Error::State("temperature recovery diverged".into()));
    }
    if lo == hi {
        for _ in 0..2000 {
            lo *= 0.5;
            if f(lo).0 < 0.0 {
                break;
            }
        }
        if !(f(lo).0 < 0.0) {
            return Err(Error::State("no positive temperature matches the energy".into()));
        }
    }
    bracketed_root(f, lo, hi)
}
