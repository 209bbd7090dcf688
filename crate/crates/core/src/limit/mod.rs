//! Non-relativistic limit: the hyperbolic–parabolic limit system, the first
//! corrector `w_1`, the initial layer and the epsilon sweep.

use alloc::string::String;
use alloc::vec::Vec;
use core::str::FromStr;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // inherent float math once a dependency turns on num-traits/std
use num_traits::Float;

use crate::closure::TableCache;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{increasing_root, Model, ThermoRadiationModel, ALPHA, ENERGY, F0, MOM, RHO, W};
use crate::solver::{error_norm_slices, FieldState, Grid1D, Solver, SolverConfig, Splitting};
use crate::stability::jacobian_qu;

#[cfg(test)]
mod tests;

/// Smooth periodic initial profiles `(rho, v, theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Profile {
    Uniform,
    #[default]
    Sine,
    Temperature,
    Density,
}

impl Profile {
    pub const ALL: [Profile; 4] = [Profile::Uniform, Profile::Sine, Profile::Temperature, Profile::Density];

    pub fn as_str(&self) -> &'static str {
        match self {
            Profile::Uniform => "uniform",
            Profile::Sine => "sine",
            Profile::Temperature => "temperature",
            Profile::Density => "density",
        }
    }

    pub fn eval(&self, x: f64, length: f64, amp: f64) -> (f64, f64, f64) {
        let k = 2.0 * core::f64::consts::PI * x / length;
        let (s, c) = (k.sin(), k.cos());
        match self {
            Profile::Uniform => (1.0, 0.0, 1.0),
            Profile::Sine => (1.0 + 0.5 * amp * s, amp * c, 1.0 + amp * s),
            Profile::Temperature => (1.0, 0.0, 1.0 + amp * s),
            Profile::Density => (1.0 + amp * s, 0.0, 1.0),
        }
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Profile::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::Usage(alloc::format!("unknown profile '{s}'")))
    }
}

/// `theta` with `rho e(theta) + m^2 / (2 rho) + b(theta) = Z`.
pub fn recover_theta(th: &ThermoRadiationModel, rho: f64, m: f64, z: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::State(alloc::format!("density {rho} is not positive")));
    }
    let internal = z - 0.5 * m * m / rho;
    if !(internal > 0.0) || !internal.is_finite() {
        return Err(Error::State(alloc::format!("no positive temperature for Z = {z}")));
    }
    let guess = th.theta_from_energy(rho, internal / rho).unwrap_or(1.0);
    increasing_root(
        |theta: f64| {
            let g = rho * th.energy(rho, theta) + th.planck(theta) - internal;
            (g, rho * th.e_theta(rho, theta) + th.planck_prime(theta))
        },
        guess,
    )
}

/// Per-cell `(rho, m, Z = rho E + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitField {
    pub grid: Grid1D,
    pub t: f64,
    pub data: Vec<[f64; 3]>,
}

impl LimitField {
    pub fn from_profile(model: &Model, grid: Grid1D, profile: Profile, amp: f64) -> Self {
        let data = (0..grid.cells())
            .map(|i| {
                let (rho, v, theta) = profile.eval(grid.x(i), grid.length(), amp);
                let u = model.equilibrium_vec(rho, v, theta);
                [u[RHO], u[MOM], u[ENERGY] + model.thermo.planck(theta)]
            })
            .collect();
        Self { grid, t: 0.0, data }
    }

    /// The conserved `u~ = (rho, m + eps E_1, rho E + E_0)` of a relaxation field.
    pub fn from_field(model: &Model, s: &FieldState) -> Result<Self> {
        let data = (0..s.cells())
            .map(|i| {
                let u = s.cell(i);
                let k = model.closure.moment_coefficients(u[ALPHA])?;
                Ok([u[RHO], u[MOM] + s.epsilon * k.k10 * u[F0], u[ENERGY] + k.k00 * u[F0]])
            })
            .collect::<Result<_>>()?;
        Ok(Self { grid: s.grid, t: s.t, data })
    }

    pub fn theta(&self, model: &Model, i: usize) -> Result<f64> {
        let [rho, m, z] = self.data[i];
        recover_theta(&model.thermo, rho, m, z)
    }

    /// Equilibrium state `(rho, m, rho E, b/2, 0, ..)` of cell `i`.
    pub fn equilibrium_cell(&self, model: &Model, i: usize) -> Result<Vec<f64>> {
        let [rho, m, _] = self.data[i];
        Ok(model.equilibrium_vec(rho, m / rho, self.theta(model, i)?))
    }

    /// `sum q dx` of the three conserved variables.
    pub fn integrals(&self) -> [f64; 3] {
        let dx = self.grid.dx();
        [0, 1, 2].map(|k| self.data.iter().map(|c| c[k]).sum::<f64>() * dx)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitRun {
    pub final_field: LimitField,
    pub snapshots: Vec<LimitField>,
    pub steps: usize,
    pub initial_integrals: [f64; 3],
}

impl LimitRun {
    /// Largest relative drift of the conserved integrals.
    pub fn max_integral_drift(&self) -> f64 {
        let f = self.final_field.integrals();
        (0..3)
            .map(|k| (f[k] - self.initial_integrals[k]).abs() / self.initial_integrals[k].abs().max(1.0))
            .fold(0.0, f64::max)
    }
}

struct LimitCell {
    v: f64,
    p: f64,
    b: f64,
    a: f64,
    diff: f64,
    /// Parabolic step bound `dx^2`-free factor `3 rho sigma_a (rho e_theta + b') / b'`.
    parabolic: f64,
}

fn limit_cells(model: &Model, f: &LimitField) -> Result<Vec<LimitCell>> {
    let th = &model.thermo;
    (0..f.data.len())
        .map(|i| {
            let [rho, m, _] = f.data[i];
            let theta = f.theta(model, i)?;
            let v = m / rho;
            let bp = th.planck_prime(theta);
            let rs = 3.0 * rho * th.sigma_a(theta);
            Ok(LimitCell {
                v,
                p: th.pressure(rho, theta),
                b: th.planck(theta),
                a: th.hydro_speed(rho, v, theta),
                diff: 1.0 / rs,
                parabolic: if bp > 0.0 { rs * (rho * th.e_theta(rho, theta) + bp) / bp } else { f64::INFINITY },
            })
        })
        .collect()
}

pub const PARABOLIC_SAFETY: f64 = 0.4;

/// Explicit step: Rusanov fluxes `(m, m v + p + b/3, (Z - b + p) v)` plus the
/// compact diffusion flux `-(1/(3 rho sigma_a)) db/dx`.
pub fn limit_step(model: &Model, f: &mut LimitField, cfl: f64, t_end: f64) -> Result<f64> {
    let cells = limit_cells(model, f)?;
    let m = cells.len();
    let dx = f.grid.dx();
    let amax = cells.iter().fold(0.0f64, |a, c| a.max(c.a));
    let pmin = cells.iter().fold(f64::INFINITY, |a, c| a.min(c.parabolic));
    let dt = (cfl * dx / amax).min(PARABOLIC_SAFETY * dx * dx * pmin).min(t_end - f.t);
    let flux: Vec<[f64; 3]> = (0..m)
        .map(|i| {
            let j = (i + 1) % m;
            let (l, r) = (&cells[i], &cells[j]);
            let (ql, qr) = (f.data[i], f.data[j]);
            let fl = [ql[1], ql[1] * l.v + l.p + l.b / 3.0, (ql[2] - l.b + l.p) * l.v];
            let fr = [qr[1], qr[1] * r.v + r.p + r.b / 3.0, (qr[2] - r.b + r.p) * r.v];
            let a = l.a.max(r.a);
            let mut out = [0, 1, 2].map(|k| 0.5 * (fl[k] + fr[k]) - 0.5 * a * (qr[k] - ql[k]));
            out[2] -= 0.5 * (l.diff + r.diff) * (r.b - l.b) / dx;
            out
        })
        .collect();
    let ratio = dt / dx;
    for i in 0..m {
        let im = (i + m - 1) % m;
        for k in 0..3 {
            f.data[i][k] -= ratio * (flux[i][k] - flux[im][k]);
        }
    }
    f.t += dt;
    Ok(dt)
}

pub fn limit_run(model: &Model, initial: LimitField, t_final: f64, cfl: f64, snapshot_every: usize) -> Result<LimitRun> {
    if !(t_final > 0.0) {
        return Err(Error::Usage(alloc::format!("final time {t_final} must be positive")));
    }
    let mut f = initial;
    let initial_integrals = f.integrals();
    let mut snapshots = Vec::new();
    if snapshot_every > 0 {
        snapshots.push(f.clone());
    }
    let mut steps = 0;
    while f.t < t_final * (1.0 - 1e-14) {
        limit_step(model, &mut f, cfl, t_final)?;
        steps += 1;
        if snapshot_every > 0 && steps % snapshot_every == 0 {
            snapshots.push(f.clone());
        }
    }
    for i in 0..f.data.len() {
        f.theta(model, i)?;
    }
    Ok(LimitRun { final_field: f, snapshots, steps, initial_integrals })
}

/// `sum_i b_i (Delta_h((1/(3 rho sigma_a)) d_x b))_i dx`, nonpositive for the compact operator.
pub fn diffusion_quadratic_form(model: &Model, f: &LimitField) -> Result<f64> {
    let cells = limit_cells(model, f)?;
    let m = cells.len();
    let dx = f.grid.dx();
    let g: Vec<f64> = (0..m)
        .map(|i| {
            let j = (i + 1) % m;
            0.5 * (cells[i].diff + cells[j].diff) * (cells[j].b - cells[i].b) / dx
        })
        .collect();
    Ok((0..m).map(|i| cells[i].b * (g[i] - g[(i + m - 1) % m]) / dx).sum::<f64>() * dx)
}

/// Tilde-system matrices at an equilibrium state: `q_w = d q~_w / d w~` and `A~^21`.
#[derive(Debug, Clone, PartialEq)]
pub struct TildeLinearization {
    pub q_w: DMatrix<f64>,
    pub a21: DMatrix<f64>,
}

pub fn tilde_linearization(model: &Model, u_eq: &[f64]) -> Result<TildeLinearization> {
    let tables = model.tables(u_eq)?;
    let q = jacobian_qu(model, u_eq, &tables)?;
    let tt = model.tilde_transform(u_eq, 0.0, &tables)?;
    let a = model.assemble_a(u_eq, 0.0, &tables)?;
    let nw = model.n() + 1;
    let qt = &tt.jacobian * q * &tt.inverse;
    let at = &tt.jacobian * a * &tt.inverse;
    Ok(TildeLinearization {
        q_w: qt.view((W, W), (nw, nw)).into_owned(),
        a21: at.view((W, 0), (nw, 3)).into_owned(),
    })
}

/// Periodic central difference of the limit variables at cell `i`.
fn gradient(f: &LimitField, i: usize) -> DVector<f64> {
    let m = f.data.len();
    let (ip, im) = ((i + 1) % m, (i + m - 1) % m);
    let dx = f.grid.dx();
    DVector::from_fn(3, |k, _| (f.data[ip][k] - f.data[im][k]) / (2.0 * dx))
}

/// `w~_1 = q_w^-1 A~^21 d_x u~_0` per cell, in tilde radiation variables.
pub fn corrector_w1(model: &Model, f: &LimitField) -> Result<Vec<DVector<f64>>> {
    (0..f.data.len())
        .map(|i| {
            let lin = tilde_linearization(model, &f.equilibrium_cell(model, i)?)?;
            linalg::solve_vec(&lin.q_w, &(&lin.a21 * gradient(f, i)))
        })
        .collect()
}

/// `alpha_1 = (1/(3 rho sigma_a)) d_x b / ((8/3) f_0)` from the same discrete gradient.
pub fn alpha1_identity(model: &Model, f: &LimitField) -> Result<Vec<f64>> {
    let th = &model.thermo;
    (0..f.data.len())
        .map(|i| {
            let u = f.equilibrium_cell(model, i)?;
            let t = model.theta(&u)?;
            let bp = th.planck_prime(t.theta);
            let g = gradient(f, i);
            let dtheta = (t.d_rho * g[0] + t.d_mom * g[1] + t.d_energy * g[2]) / (1.0 + bp * t.d_energy);
            let db = bp * dtheta;
            let f0 = 0.5 * th.planck(t.theta);
            Ok(-(db / (3.0 * u[RHO] * th.sigma_a(t.theta))) / (-8.0 / 3.0 * f0))
        })
        .collect()
}

/// Initial layer of every cell, sampled on a common `tau` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerProfile {
    pub tau: Vec<f64>,
    /// `layer[s][i]`: `I_0^II` of cell `i` at `tau[s]`.
    pub layer: Vec<Vec<DVector<f64>>>,
    /// Discrete L2 norm over cells at each sample.
    pub norms: Vec<f64>,
    pub rate: f64,
    /// `min |Re eig q_w|` over cells.
    pub linear_rate: f64,
}

impl LayerProfile {
    /// Layer at `tau` per cell, linearly interpolated between samples (zero beyond the grid).
    pub fn at(&self, tau: f64) -> Vec<DVector<f64>> {
        let last = self.tau.len() - 1;
        if tau > self.tau[last] {
            return self.layer[last].iter().map(|v| v * 0.0).collect();
        }
        if tau == self.tau[last] {
            return self.layer[last].clone();
        }
        let k = self.tau.partition_point(|t| *t <= tau).saturating_sub(1).min(last - 1);
        let s = (tau - self.tau[k]) / (self.tau[k + 1] - self.tau[k]);
        self.layer[k].iter().zip(&self.layer[k + 1]).map(|(a, b)| a * (1.0 - s) + b * s).collect()
    }

    /// Decay of the norm over `[0, tau]`: `|I(tau)| / |I(0)|`.
    pub fn decay_at(&self, tau: f64) -> f64 {
        let k = self.tau.partition_point(|t| *t <= tau).saturating_sub(1);
        self.norms[k] / self.norms[0]
    }
}

/// `w~` of a full state at `eps = 0`.
fn tilde_w(model: &Model, cache: &TableCache, u: &[f64]) -> Result<DVector<f64>> {
    let theta = model.theta(u)?.theta;
    let k = cache.moment_coefficients(u[ALPHA])?;
    let t = model.tilde_vector(u, theta, 0.0, &k);
    Ok(DVector::from_column_slice(&t[W..]))
}

pub const FIT_WINDOW: (f64, f64) = (1e-9, 1e-3);

/// Integrate `dU/dtau = Q(U; 0)` per cell from `(u_bar, w_bar)` with RK4 and
/// record `I_0^II = w~(U(tau))`. The fitted rate is left as NaN.
pub fn integrate_layer(model: &Model, cache: &TableCache, initial: &[Vec<f64>], tau_max: f64, grid: &Grid1D) -> Result<LayerProfile> {
    let mut fastest: f64 = 0.0;
    let mut slowest = f64::INFINITY;
    for u in initial {
        let k = cache.moment_coefficients(u[ALPHA])?;
        let theta = model.theta(u)?.theta;
        let mut ut = model.tilde_vector(u, theta, 0.0, &k);
        ut[W..].fill(0.0);
        let eq = model.from_tilde(&ut, 0.0)?;
        let lin = tilde_linearization(model, &eq)?;
        for z in lin.q_w.complex_eigenvalues().iter() {
            fastest = fastest.max(z.re.abs().hypot(z.im));
            slowest = slowest.min(z.re.abs());
        }
    }
    if !(slowest > 0.0) {
        return Err(Error::LayerFailure { cell: 0, rate: slowest });
    }
    let h = (0.5 / fastest).min(tau_max / 50.0);
    let steps = (tau_max / h).ceil() as usize;
    let h = tau_max / steps as f64;
    let rhs = |u: &[f64]| -> Result<Vec<f64>> {
        let tables = cache.tables(u[ALPHA])?;
        Ok(model.source_q(u, 0.0, &tables)?.iter().copied().collect())
    };
    let mut states: Vec<Vec<f64>> = initial.to_vec();
    let mut tau = alloc::vec![0.0];
    let mut layer = alloc::vec![states.iter().map(|u| tilde_w(model, cache, u)).collect::<Result<Vec<_>>>()?];
    for s in 0..steps {
        for (i, u) in states.iter_mut().enumerate() {
            let k1 = rhs(u)?;
            let y: Vec<f64> = u.iter().zip(&k1).map(|(a, b)| a + 0.5 * h * b).collect();
            let k2 = rhs(&y)?;
            let y: Vec<f64> = u.iter().zip(&k2).map(|(a, b)| a + 0.5 * h * b).collect();
            let k3 = rhs(&y)?;
            let y: Vec<f64> = u.iter().zip(&k3).map(|(a, b)| a + h * b).collect();
            let k4 = rhs(&y)?;
            for k in 0..u.len() {
                u[k] += h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
            }
            if u.iter().any(|x| !x.is_finite()) {
                return Err(Error::LayerFailure { cell: i, rate: f64::NAN });
            }
        }
        tau.push((s + 1) as f64 * h);
        layer.push(states.iter().map(|u| tilde_w(model, cache, u)).collect::<Result<Vec<_>>>()?);
    }
    let dx = grid.dx();
    let norms: Vec<f64> = layer.iter().map(|cells| (cells.iter().map(|v| v.norm_squared()).sum::<f64>() * dx).sqrt()).collect();
    Ok(LayerProfile { tau, layer, norms, rate: f64::NAN, linear_rate: slowest })
}

/// [`integrate_layer`] plus the decay-rate fit; fails unless the layer decays.
pub fn initial_layer(model: &Model, cache: &TableCache, initial: &[Vec<f64>], tau_max: f64, grid: &Grid1D) -> Result<LayerProfile> {
    let LayerProfile { tau, layer, norms, linear_rate, .. } = integrate_layer(model, cache, initial, tau_max, grid)?;
    let rate = fit_rate(&tau, &norms).ok_or(Error::LayerFailure { cell: 0, rate: 0.0 })?;
    if !(rate > 0.0) {
        let worst = (0..initial.len())
            .max_by(|&a, &b| {
                let g = |i: usize| layer[layer.len() - 1][i].norm() / layer[0][i].norm().max(f64::MIN_POSITIVE);
                g(a).partial_cmp(&g(b)).unwrap_or(core::cmp::Ordering::Equal)
            })
            .unwrap_or(0);
        return Err(Error::LayerFailure { cell: worst, rate });
    }
    Ok(LayerProfile { tau, layer, norms, rate, linear_rate })
}

/// Least-squares decay rate of `log |I|` over the samples inside [`FIT_WINDOW`].
pub fn fit_rate(tau: &[f64], norms: &[f64]) -> Option<f64> {
    let n0 = norms[0];
    if !(n0 > 0.0) {
        return Some(f64::INFINITY);
    }
    let pts: Vec<(f64, f64)> = tau
        .iter()
        .zip(norms)
        .filter(|(_, n)| {
            let r = *n / n0;
            (FIT_WINDOW.0..=FIT_WINDOW.1).contains(&r)
        })
        .map(|(t, n)| (*t, n.ln()))
        .collect();
    let slope = least_squares_slope(&pts)?;
    Some(-slope)
}

pub fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// How the radiation part of the relaxation data is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialData {
    /// `w~ = 0`.
    Equilibrium,
    /// `w~ = eps w~_1`.
    Corrected,
    /// `w~` perturbed away from equilibrium.
    Unprepared,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub eps_list: Vec<f64>,
    pub cells: usize,
    pub length: f64,
    pub t_final: f64,
    pub profile: Profile,
    pub amplitude: f64,
    pub data: InitialData,
    /// Amplitude of the unprepared radiation perturbation.
    pub perturbation: f64,
    pub solver: SolverConfig,
    pub grid_guard: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            eps_list: alloc::vec![0.2, 0.1, 0.05, 0.025],
            cells: 256,
            length: 1.0,
            t_final: 0.1,
            profile: Profile::Sine,
            amplitude: 0.1,
            data: InitialData::Equilibrium,
            perturbation: 0.1,
            // Strang biases the diffusion balance by O(dx / eps) with implicit Euler relaxation
            solver: SolverConfig { splitting: Splitting::Lie, ..SolverConfig::default() },
            grid_guard: true,
        }
    }
}

pub const GUARD_TOLERANCE: f64 = 0.1;

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eps_list.is_empty() {
            return Err(Error::Usage("eps_list is empty".into()));
        }
        if self.eps_list.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::Usage("eps_list entries must be positive".into()));
        }
        if self.eps_list.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::Usage("eps_list must be strictly decreasing".into()));
        }
        if !(self.t_final > 0.0) {
            return Err(Error::Usage("t_final must be positive".into()));
        }
        self.solver.validate()
    }
}

/// Relaxation data from the limit data `u~_0` and a radiation choice.
pub fn relaxation_initial(model: &Model, limit: &LimitField, eps: f64, data: InitialData, perturbation: f64) -> Result<FieldState> {
    let w1 = match data {
        InitialData::Corrected => Some(corrector_w1(model, limit)?),
        _ => None,
    };
    let n = model.n();
    let grid = limit.grid;
    let mut data_vec = Vec::with_capacity(grid.cells() * (n + 4));
    for i in 0..grid.cells() {
        let mut ut = alloc::vec![0.0; n + 4];
        ut[..3].copy_from_slice(&limit.data[i]);
        match data {
            InitialData::Equilibrium => {}
            InitialData::Corrected => {
                for k in 0..=n {
                    ut[W + k] = eps * w1.as_ref().unwrap()[i][k];
                }
            }
            InitialData::Unprepared => {
                let b = model.thermo.planck(limit.theta(model, i)?);
                for (k, x) in unprepared_w(b, n, perturbation).into_iter().enumerate() {
                    ut[W + k] = x;
                }
            }
        }
        data_vec.extend(model.from_tilde(&ut, eps)?);
    }
    Ok(FieldState { grid, n, epsilon: eps, t: 0.0, data: data_vec })
}

/// Radiation perturbation in tilde variables, `O(amp)` in every component.
///
/// Uniform in `x`: a wavy perturbation is carried a distance `O(eps)` by the
/// radiation transport during the layer, which the local layer ODE ignores.
pub fn unprepared_w(b: f64, n: usize, amp: f64) -> Vec<f64> {
    (0..=n)
        .map(|j| match j {
            0 => amp * b,
            1 => 0.5 * amp,
            _ => 0.5 * amp * b / j as f64,
        })
        .collect()
}

/// Tilde vector `(u~, w~)` of every cell, flat.
pub fn tilde_field(model: &Model, cache: &TableCache, s: &FieldState) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(s.data.len());
    for i in 0..s.cells() {
        let u = s.cell(i);
        let theta = model.theta(u)?.theta;
        out.extend(model.tilde_vector(u, theta, s.epsilon, &cache.moment_coefficients(u[ALPHA])?));
    }
    Ok(out)
}

/// Comparator `(u~_0(t), I_0(t / eps^2))`, flat.
pub fn comparator(limit: &LimitField, layer: Option<&[DVector<f64>]>, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(limit.data.len() * (n + 4));
    for (i, c) in limit.data.iter().enumerate() {
        out.extend_from_slice(c);
        match layer {
            Some(l) => out.extend(l[i].iter()),
            None => out.extend(core::iter::repeat_n(0.0, n + 1)),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemberResult {
    pub eps: f64,
    pub cells: usize,
    pub err_l2: f64,
    pub err_h1: f64,
    pub steps: usize,
    pub mass_drift: f64,
}

/// Layer of the relaxation data, needed only when it is off equilibrium.
fn member_layer(model: &Model, cache: &TableCache, init: &FieldState, tau: f64) -> Result<Option<Vec<DVector<f64>>>> {
    let t = tilde_field(model, cache, init)?;
    let scale = t.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    let off = t.chunks(init.stride()).any(|c| c[W..].iter().any(|x| x.abs() > 1e-12 * scale));
    if !off {
        return Ok(None);
    }
    let cells: Vec<Vec<f64>> = (0..init.cells())
        .map(|i| {
            let mut u = init.cell(i).to_vec();
            // epsilon = 0 view of the same conserved state
            let k = cache.moment_coefficients(u[ALPHA])?;
            u[MOM] += init.epsilon * k.k10 * u[F0];
            Ok(u)
        })
        .collect::<Result<_>>()?;
    let tau_max = tau.min(60.0);
    let profile = integrate_layer(model, cache, &cells, tau_max.max(1e-12), &init.grid)?;
    Ok(Some(profile.at(tau)))
}

/// One member of the sweep: relaxation run at `eps` against the limit run.
pub fn study_member(model: &Model, cache: &TableCache, cfg: &StudyConfig, eps: f64, cells: usize, limit: &LimitField) -> Result<MemberResult> {
    let grid = Grid1D::new(cells, cfg.length)?;
    let limit0 = LimitField::from_profile(model, grid, cfg.profile, cfg.amplitude);
    let init = relaxation_initial(model, &limit0, eps, cfg.data, cfg.perturbation)?;
    let layer = member_layer(model, cache, &init, cfg.t_final / (eps * eps))?;
    let solver = Solver::new(model, cache, cfg.solver)?;
    let run = solver.run(init, cfg.t_final)?;
    let got = tilde_field(model, cache, &run.final_state)?;
    let want = comparator(limit, layer.as_deref(), model.n());
    let stride = model.n() + 4;
    Ok(MemberResult {
        eps,
        cells,
        err_l2: error_norm_slices(&grid, &got, &want, stride, 0)?,
        err_h1: error_norm_slices(&grid, &got, &want, stride, 1)?,
        steps: run.diagnostics.steps,
        mass_drift: run.diagnostics.max_mass_drift,
    })
}

/// Limit run from the profile on `cells` cells to the study's final time.
pub fn study_limit(model: &Model, cfg: &StudyConfig, cells: usize) -> Result<LimitField> {
    let grid = Grid1D::new(cells, cfg.length)?;
    let f = LimitField::from_profile(model, grid, cfg.profile, cfg.amplitude);
    Ok(limit_run(model, f, cfg.t_final, cfg.solver.cfl, 0)?.final_field)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuardResult {
    pub eps: f64,
    pub coarse: MemberResult,
    pub fine: MemberResult,
    pub rel_change_l2: f64,
    pub rel_change_h1: f64,
}

impl GuardResult {
    pub fn pass(&self) -> bool {
        self.rel_change_l2 < GUARD_TOLERANCE && self.rel_change_h1 < GUARD_TOLERANCE
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub rows: Vec<MemberResult>,
    /// Pairwise orders in L2 between consecutive rows.
    pub pairwise_l2: Vec<f64>,
    pub pairwise_h1: Vec<f64>,
    pub order_l2: Option<f64>,
    pub order_h1: Option<f64>,
    pub monotone: bool,
    pub guard: Option<GuardResult>,
}

impl StudyResult {
    pub fn inconclusive(&self) -> bool {
        self.guard.as_ref().is_some_and(|g| !g.pass())
    }

    pub fn pass(&self, min_order: f64) -> bool {
        !self.inconclusive()
            && self.monotone
            && self.order_l2.is_some_and(|o| o >= min_order)
            && self.order_h1.is_some_and(|o| o >= min_order)
    }
}

pub const MIN_ORDER: f64 = 0.8;

fn pairwise(rows: &[MemberResult], pick: impl Fn(&MemberResult) -> f64) -> Vec<f64> {
    rows.windows(2).map(|w| (pick(&w[0]) / pick(&w[1])).ln() / (w[0].eps / w[1].eps).ln()).collect()
}

fn global_order(rows: &[MemberResult], pick: impl Fn(&MemberResult) -> f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.eps.ln(), pick(r).ln())).collect();
    least_squares_slope(&pts)
}

/// Table from sweep members, plus an optional guard pair at the smallest eps.
pub fn assemble_study(rows: Vec<MemberResult>, guard: Option<(MemberResult, MemberResult)>) -> StudyResult {
    let monotone = rows.windows(2).all(|w| w[1].err_l2 < w[0].err_l2 && w[1].err_h1 < w[0].err_h1);
    let guard = guard.map(|(coarse, fine)| GuardResult {
        eps: coarse.eps,
        rel_change_l2: (fine.err_l2 - coarse.err_l2).abs() / coarse.err_l2,
        rel_change_h1: (fine.err_h1 - coarse.err_h1).abs() / coarse.err_h1,
        coarse,
        fine,
    });
    let inconclusive = guard.as_ref().is_some_and(|g| !g.pass());
    StudyResult {
        pairwise_l2: pairwise(&rows, |r| r.err_l2),
        pairwise_h1: pairwise(&rows, |r| r.err_h1),
        order_l2: if inconclusive { None } else { global_order(&rows, |r| r.err_l2) },
        order_h1: if inconclusive { None } else { global_order(&rows, |r| r.err_h1) },
        monotone,
        guard,
        rows,
    }
}

/// Sequential sweep.
pub fn convergence_study(model: &Model, cache: &TableCache, cfg: &StudyConfig) -> Result<StudyResult> {
    cfg.validate()?;
    let limit = study_limit(model, cfg, cfg.cells)?;
    let rows = cfg
        .eps_list
        .iter()
        .map(|&e| study_member(model, cache, cfg, e, cfg.cells, &limit))
        .collect::<Result<Vec<_>>>()?;
    let guard = if cfg.grid_guard {
        let eps = *cfg.eps_list.last().unwrap();
        let fine_limit = study_limit(model, cfg, 2 * cfg.cells)?;
        let fine = study_member(model, cache, cfg, eps, 2 * cfg.cells, &fine_limit)?;
        Some((*rows.last().unwrap(), fine))
    } else {
        None
    };
    Ok(assemble_study(rows, guard))
}

/// Errors at `t = eps^2` of unprepared data against `(u~_0, 0)` and `(u~_0, I_0(1))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerComparison {
    pub eps: f64,
    pub plain: f64,
    pub corrected: f64,
}

impl LayerComparison {
    pub fn reduction(&self) -> f64 {
        self.plain / self.corrected
    }
}

pub const LAYER_STEPS: f64 = 50.0;

/// Sweep settings for the layer comparison. The profile is kept gentle so the
/// leading layer dominates the `O(eps d_x u_0)` outer and first-order layer terms.
pub fn layer_study_config() -> StudyConfig {
    StudyConfig { amplitude: 0.02, data: InitialData::Unprepared, ..StudyConfig::default() }
}

pub fn layer_comparison(model: &Model, cache: &TableCache, cfg: &StudyConfig, eps: f64) -> Result<LayerComparison> {
    let grid = Grid1D::new(cfg.cells, cfg.length)?;
    let limit0 = LimitField::from_profile(model, grid, cfg.profile, cfg.amplitude);
    let init = relaxation_initial(model, &limit0, eps, InitialData::Unprepared, cfg.perturbation)?;
    let t = eps * eps;
    // the limit starts from the conserved part of the actual data
    let limit_start = LimitField::from_field(model, &init)?;
    let limit = limit_run(model, limit_start, t, cfg.solver.cfl, 0)?.final_field;
    let layer = member_layer(model, cache, &init, 1.0)?;
    // resolve the layer in time, not just the transport
    let solver_cfg = SolverConfig { dt_max: cfg.solver.dt_max.min(t / LAYER_STEPS), ..cfg.solver };
    let run = Solver::new(model, cache, solver_cfg)?.run(init, t)?;
    let got = tilde_field(model, cache, &run.final_state)?;
    let stride = model.n() + 4;
    let plain = error_norm_slices(&grid, &got, &comparator(&limit, None, model.n()), stride, 0)?;
    let corrected = error_norm_slices(&grid, &got, &comparator(&limit, layer.as_deref(), model.n()), stride, 0)?;
    Ok(LayerComparison { eps, plain, corrected })
}

/// Human-readable name of a data choice.
pub fn data_name(d: InitialData) -> String {
    match d {
        InitialData::Equilibrium => "equilibrium".into(),
        InitialData::Corrected => "corrected".into(),
        InitialData::Unprepared => "unprepared".into(),
    }
}
