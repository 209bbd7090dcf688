//! Split IMEX integration of the scaled relaxation system on a periodic grid.
//!
//! Transport advances `rho` and the coupled totals `m + eps E_1`, `rho E + E_0`
//! in conservation form (local Lax–Friedrichs at the hydro speed) and the
//! radiation variables `w` by Rusanov fluctuation splitting with the
//! interface-frozen matrix `D~^-1 M~ D~ / eps`. Relaxation solves the cell
//! source problem by implicit Euler with the totals held fixed.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // inherent float math once a dependency turns on num-traits/std
use num_traits::Float;

use crate::closure::{hyperbolicity_probe, ClosureTables, TableCache};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{Model, ALPHA, ENERGY, F0, MOM, RHO, W};

#[cfg(test)]
mod tests;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    cells: usize,
    length: f64,
}

pub const MIN_CELLS: usize = 8;

impl Grid1D {
    pub fn new(cells: usize, length: f64) -> Result<Self> {
        if cells < MIN_CELLS {
            return Err(Error::Usage(alloc::format!("need at least {MIN_CELLS} cells, got {cells}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Usage(alloc::format!("domain length {length} must be positive")));
        }
        Ok(Self { cells, length })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.cells as f64
    }

    /// Cell centre.
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx()
    }
}

/// Per-cell states `(rho, m, rho E, f_0, alpha, f_2, .., f_N)`, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub grid: Grid1D,
    pub n: usize,
    pub epsilon: f64,
    pub t: f64,
    pub data: Vec<f64>,
}

impl FieldState {
    pub fn from_fn(grid: Grid1D, n: usize, epsilon: f64, mut f: impl FnMut(f64) -> Vec<f64>) -> Result<Self> {
        let stride = n + 4;
        let mut data = Vec::with_capacity(grid.cells() * stride);
        for i in 0..grid.cells() {
            let u = f(grid.x(i));
            if u.len() != stride {
                return Err(Error::Usage(alloc::format!("cell state has {} entries, expected {stride}", u.len())));
            }
            data.extend(u);
        }
        Ok(Self { grid, n, epsilon, t: 0.0, data })
    }

    pub fn uniform(grid: Grid1D, epsilon: f64, u: &[f64]) -> Result<Self> {
        Self::from_fn(grid, u.len() - 4, epsilon, |_| u.to_vec())
    }

    pub fn stride(&self) -> usize {
        self.n + 4
    }

    pub fn cells(&self) -> usize {
        self.grid.cells()
    }

    pub fn cell(&self, i: usize) -> &[f64] {
        let s = self.stride();
        &self.data[i * s..(i + 1) * s]
    }

    pub fn cell_mut(&mut self, i: usize) -> &mut [f64] {
        let s = self.stride();
        &mut self.data[i * s..(i + 1) * s]
    }

    /// Component `k` of every cell.
    pub fn component(&self, k: usize) -> Vec<f64> {
        (0..self.cells()).map(|i| self.cell(i)[k]).collect()
    }

    pub fn mass(&self) -> f64 {
        self.component(RHO).iter().sum::<f64>() * self.grid.dx()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Splitting {
    Lie,
    #[default]
    Strang,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub cfl: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub splitting: Splitting,
    /// Keep every k-th accepted state (0 keeps none).
    pub snapshot_every: usize,
    /// Include the stiff source; off gives pure transport.
    pub source: bool,
    pub max_halvings: usize,
    /// Upper bound on the step on top of the CFL restriction.
    pub dt_max: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cfl: 0.8,
            newton_tol: 1e-12,
            newton_max_iter: 40,
            splitting: Splitting::Strang,
            snapshot_every: 0,
            source: true,
            max_halvings: 5,
            dt_max: f64::INFINITY,
        }
    }
}

pub const MAX_CFL: f64 = 0.9;

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= MAX_CFL) {
            return Err(Error::Usage(alloc::format!("cfl {} outside (0, {MAX_CFL}]", self.cfl)));
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iter == 0 {
            return Err(Error::Usage("newton tolerance and iteration cap must be positive".into()));
        }
        if !(self.dt_max > 0.0) {
            return Err(Error::Usage(alloc::format!("dt_max {} must be positive", self.dt_max)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveSpeeds {
    /// `|v| + c` with the gas sound speed.
    pub hydro: f64,
    /// Dissipation speed of the totals, `|v| + max(c, c_eq)`.
    pub hydro_llf: f64,
    /// `rho(M~) / eps`.
    pub radiation: f64,
}

impl WaveSpeeds {
    pub fn max(&self) -> f64 {
        self.hydro.max(self.hydro_llf).max(self.radiation)
    }
}

/// Conservation diagnostics over a run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    pub steps: usize,
    pub newton_iterations: usize,
    pub halvings: usize,
    pub mass_initial: f64,
    pub max_mass_drift: f64,
    /// `sum (m + eps E_1) dx`, initial and final.
    pub momentum_initial: f64,
    pub momentum_final: f64,
    /// `sum (rho E + E_0) dx`, initial and final.
    pub energy_initial: f64,
    pub energy_final: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub final_state: FieldState,
    pub snapshots: Vec<FieldState>,
    pub diagnostics: Diagnostics,
}

struct CellInfo {
    v: f64,
    p: f64,
    a: f64,
    e1: f64,
    e2: f64,
    k00: f64,
    k10: f64,
}

pub struct Solver<'a> {
    pub model: &'a Model,
    pub cache: &'a TableCache,
    pub config: SolverConfig,
}

impl<'a> Solver<'a> {
    pub fn new(model: &'a Model, cache: &'a TableCache, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        if cache.n() != model.n() {
            return Err(Error::Usage("table cache built for a different N".into()));
        }
        Ok(Self { model, cache, config })
    }

    fn tables(&self, alpha: f64) -> Result<ClosureTables> {
        self.cache.tables(alpha)
    }

    pub fn check_field(&self, s: &FieldState) -> Result<()> {
        if s.n != self.model.n() {
            return Err(Error::Usage(alloc::format!("field has N = {}, model N = {}", s.n, self.model.n())));
        }
        if !(s.epsilon > 0.0 && s.epsilon <= self.model.epsilon0) {
            return Err(Error::Usage(alloc::format!(
                "epsilon {} outside (0, {}]",
                s.epsilon, self.model.epsilon0
            )));
        }
        self.watchdog(s)
    }

    /// Positivity and domain check of every cell.
    pub fn watchdog(&self, s: &FieldState) -> Result<()> {
        let alpha_max = self.model.closure.alpha_max();
        for i in 0..s.cells() {
            let u = s.cell(i);
            let what = if u.iter().any(|x| !x.is_finite()) {
                Some("non-finite value")
            } else if !(u[RHO] > 0.0) {
                Some("density")
            } else if !(u[ALPHA].abs() <= alpha_max) {
                Some("alpha")
            } else if self.model.theta(u).map(|t| !(t.theta > 0.0)).unwrap_or(true) {
                Some("temperature")
            } else {
                None
            };
            if let Some(what) = what {
                return Err(Error::Positivity { cell: i, t: s.t, what: what.into() });
            }
        }
        Ok(())
    }

    pub fn max_wave_speed(&self, s: &FieldState) -> Result<WaveSpeeds> {
        let th = &self.model.thermo;
        let mut w = WaveSpeeds { hydro: 0.0, hydro_llf: 0.0, radiation: 0.0 };
        for i in 0..s.cells() {
            let u = s.cell(i);
            let theta = self.model.theta(u)?.theta;
            let v = u[MOM] / u[RHO];
            w.hydro = w.hydro.max(v.abs() + th.sound_speed(u[RHO], theta));
            w.hydro_llf = w.hydro_llf.max(th.hydro_speed(u[RHO], v, theta));
            let (_, radius) = self.cache.tables_and_radius(u[ALPHA])?;
            w.radiation = w.radiation.max(radius / s.epsilon);
        }
        Ok(w)
    }

    /// Largest imaginary part over the cells' radiation transport spectra.
    pub fn hyperbolicity_check(&self, s: &FieldState) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for i in 0..s.cells() {
            let u = s.cell(i);
            let (_, imag) = hyperbolicity_probe(&u[W..], &self.tables(u[ALPHA])?)?;
            worst = worst.max(imag);
        }
        if worst > 1e-8 {
            return Err(Error::Hyperbolicity { imag: worst });
        }
        Ok(worst)
    }

    pub fn stable_dt(&self, s: &FieldState) -> Result<f64> {
        Ok((self.config.cfl * s.grid.dx() / self.max_wave_speed(s)?.max()).min(self.config.dt_max))
    }

    fn cell_info(&self, u: &[f64], eps: f64) -> Result<CellInfo> {
        let th = &self.model.thermo;
        let theta = self.model.theta(u)?.theta;
        let k = self.cache.moment_coefficients(u[ALPHA])?;
        let v = u[MOM] / u[RHO];
        Ok(CellInfo {
            v,
            p: th.pressure(u[RHO], theta),
            a: th.hydro_speed(u[RHO], v, theta),
            e1: k.k10 * u[F0],
            e2: k.k22 * u[W + 2] + k.k20 * u[F0],
            k00: k.k00,
            k10: k.k10 * eps,
        })
    }

    pub fn transport_substep(&self, s: &mut FieldState, dt: f64) -> Result<()> {
        let eps = s.epsilon;
        let dx = s.grid.dx();
        let speed = self.max_wave_speed(s)?.max();
        let courant = dt * speed / dx;
        if courant > self.config.cfl * (1.0 + 1e-12) {
            return Err(Error::Cfl { courant });
        }
        let m = s.cells();
        let nw = s.n + 1;
        let info: Vec<CellInfo> = (0..m).map(|i| self.cell_info(s.cell(i), eps)).collect::<Result<_>>()?;

        // Interface i carries the flux between cells i and i+1.
        let mut flux = Vec::with_capacity(m);
        let mut left = Vec::with_capacity(m);
        let mut right = Vec::with_capacity(m);
        for i in 0..m {
            let j = (i + 1) % m;
            let (ul, ur) = (s.cell(i), s.cell(j));
            let (il, ir) = (&info[i], &info[j]);
            let a = il.a.max(ir.a);
            let tl = [ul[RHO], ul[MOM] + il.k10 * ul[F0], ul[ENERGY] + il.k00 * ul[F0]];
            let tr = [ur[RHO], ur[MOM] + ir.k10 * ur[F0], ur[ENERGY] + ir.k00 * ur[F0]];
            let fl = [ul[MOM], ul[MOM] * il.v + il.p + il.e2, (ul[ENERGY] + il.p) * il.v + il.e1 / eps];
            let fr = [ur[MOM], ur[MOM] * ir.v + ir.p + ir.e2, (ur[ENERGY] + ir.p) * ir.v + ir.e1 / eps];
            flux.push([0, 1, 2].map(|k| 0.5 * (fl[k] + fr[k]) - 0.5 * a * (tr[k] - tl[k])));

            let dw = DVector::from_fn(nw, |k, _| ur[W + k] - ul[W + k]);
            if dw.amax() == 0.0 {
                left.push(DVector::zeros(nw));
                right.push(DVector::zeros(nw));
                continue;
            }
            let wbar: Vec<f64> = (0..nw).map(|k| 0.5 * (ul[W + k] + ur[W + k])).collect();
            let (tb, radius) = self.cache.tables_and_radius(wbar[1])?;
            let b = self.model.radiation_matrix(&wbar, &tb)? / eps;
            let lam = radius / eps;
            let bdw = &b * &dw;
            left.push((&bdw - &dw * lam) * 0.5);
            right.push((&bdw + &dw * lam) * 0.5);
        }

        let r = dt / dx;
        let mut next = s.data.clone();
        for i in 0..m {
            let im = (i + m - 1) % m;
            let u = s.cell(i);
            let stride = s.stride();
            let out = &mut next[i * stride..(i + 1) * stride];
            out[RHO] = u[RHO] - r * (flux[i][0] - flux[im][0]);
            for k in 0..nw {
                out[W + k] = u[W + k] - r * (right[im][k] + left[i][k]);
            }
            if !(out[ALPHA].abs() <= self.model.closure.alpha_max()) {
                return Err(Error::Positivity { cell: i, t: s.t, what: "alpha".into() });
            }
            let k = self.cache.moment_coefficients(out[ALPHA])?;
            let old = &info[i];
            out[MOM] = u[MOM] - r * (flux[i][1] - flux[im][1]) - (eps * k.k10 * out[F0] - old.k10 * u[F0]);
            out[ENERGY] = u[ENERGY] - r * (flux[i][2] - flux[im][2]) - (k.k00 * out[F0] - old.k00 * u[F0]);
        }
        s.data = next;
        Ok(())
    }

    pub fn relaxation_substep(&self, s: &mut FieldState, dt: f64) -> Result<RelaxStats> {
        let mut stats = RelaxStats::default();
        let eps = s.epsilon;
        for i in 0..s.cells() {
            let u = s.cell(i).to_vec();
            let (out, st) = self.relax_cell(&u, dt, eps).map_err(|e| match e {
                Error::NewtonFailure { halvings, .. } => Error::NewtonFailure { cell: i, halvings },
                other => other,
            })?;
            s.cell_mut(i).copy_from_slice(&out);
            stats.iterations += st.iterations;
            stats.halvings += st.halvings;
        }
        Ok(stats)
    }

    /// Implicit Euler for one cell's source, split into `2^k` substeps on failure.
    pub fn relax_cell(&self, u: &[f64], dt: f64, eps: f64) -> Result<(Vec<f64>, RelaxStats)> {
        for k in 0..=self.config.max_halvings {
            let pieces = 1usize << k;
            let h = dt / pieces as f64;
            let mut cur = u.to_vec();
            let mut iters = 0;
            let mut ok = true;
            for _ in 0..pieces {
                match self.implicit_euler(&cur, h, eps) {
                    Ok((next, it)) => {
                        cur = next;
                        iters += it;
                    }
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                return Ok((cur, RelaxStats { iterations: iters, halvings: k }));
            }
        }
        Err(Error::NewtonFailure { cell: 0, halvings: self.config.max_halvings })
    }

    /// Residual of the totals-preserving implicit Euler step in `Y = (m, rho E, w)`.
    fn relax_residual(&self, y: &[f64], rho: f64, un: &[f64], totals: [f64; 2], c: f64, eps: f64) -> Result<DVector<f64>> {
        let mut u = Vec::with_capacity(y.len() + 1);
        u.push(rho);
        u.extend_from_slice(y);
        let tables = self.tables(u[ALPHA])?;
        self.relax_residual_with(&u, un, totals, c, eps, &tables)
    }

    fn relax_residual_with(
        &self,
        u: &[f64],
        un: &[f64],
        totals: [f64; 2],
        c: f64,
        eps: f64,
        tables: &ClosureTables,
    ) -> Result<DVector<f64>> {
        let theta = self.model.theta(u)?.theta;
        let q = self.model.source_q_at(u, theta, eps, tables)?;
        let damp = 1.0 + c * u[RHO] * self.model.thermo.sigma_a(theta);
        let n = u.len() - 1;
        let mut r = DVector::zeros(n);
        r[0] = u[MOM] + eps * tables.kappa[(1, 0)] * u[F0] - totals[0];
        r[1] = u[ENERGY] + tables.kappa[(0, 0)] * u[F0] - totals[1];
        for k in W..u.len() {
            r[k - 1] = (u[k] - un[k] - c * q[k]) / damp;
        }
        Ok(r)
    }

    /// Newton from the old state, or first from the equilibrium with the same
    /// totals when the step is stiff.
    fn implicit_euler(&self, un: &[f64], dt: f64, eps: f64) -> Result<(Vec<f64>, usize)> {
        let k = self.cache.moment_coefficients(un[ALPHA])?;
        let totals = [un[MOM] + eps * k.k10 * un[F0], un[ENERGY] + k.k00 * un[F0]];
        let c = dt / (eps * eps);
        let theta = self.model.theta(un)?.theta;
        let stiff = c * un[RHO] * self.model.thermo.sigma_a(theta) > 1.0;
        let equilibrium = || -> Result<Vec<f64>> {
            let mut ut = un.to_vec();
            ut[MOM] = totals[0];
            ut[ENERGY] = totals[1];
            ut[W..].fill(0.0);
            self.model.from_tilde(&ut, eps)
        };
        let scale = un[1..].iter().fold(0.0f64, |a, x| a.max(x.abs())).max(f64::MIN_POSITIVE);
        if self.relax_residual(&un[1..], un[RHO], un, totals, c, eps)?.amax() <= self.config.newton_tol * scale {
            return Ok((un.to_vec(), 0));
        }
        let first = if stiff { equilibrium()? } else { un.to_vec() };
        match self.newton(un, &first, totals, c, eps) {
            Ok(r) => Ok(r),
            Err(e) => {
                let second = if stiff { un.to_vec() } else { equilibrium().map_err(|_| e)? };
                self.newton(un, &second, totals, c, eps)
            }
        }
    }

    fn newton(&self, un: &[f64], start: &[f64], totals: [f64; 2], c: f64, eps: f64) -> Result<(Vec<f64>, usize)> {
        let rho = un[RHO];
        let n = un.len() - 1;
        let mut y: Vec<f64> = start[1..].to_vec();
        let scale = un[1..].iter().fold(0.0f64, |a, x| a.max(x.abs())).max(f64::MIN_POSITIVE);
        let tol = self.config.newton_tol * scale;
        let mut r = self.relax_residual(&y, rho, un, totals, c, eps)?;
        let mut it = 0;
        while r.amax() > tol {
            if it == self.config.newton_max_iter {
                return Err(Error::NewtonFailure { cell: 0, halvings: 0 });
            }
            it += 1;
            // Forward-difference Jacobian; only the alpha column needs new tables.
            let mut u0 = Vec::with_capacity(n + 1);
            u0.push(rho);
            u0.extend_from_slice(&y);
            let t0 = self.tables(y[ALPHA - 1])?;
            let mut jac = DMatrix::zeros(n, n);
            for col in 0..n {
                let mut up = u0.clone();
                let mut h = 1e-7 * y[col].abs().max(1.0);
                if col + 1 == ALPHA && (up[ALPHA] + h).abs() > self.model.closure.alpha_max() {
                    h = -h;
                }
                up[col + 1] += h;
                let rp = if col + 1 == ALPHA {
                    self.relax_residual(&up[1..], rho, un, totals, c, eps)?
                } else {
                    self.relax_residual_with(&up, un, totals, c, eps, &t0)?
                };
                jac.set_column(col, &((rp - &r) / h));
            }
            let step = linalg::solve_vec(&jac, &(-&r)).map_err(|_| Error::NewtonFailure { cell: 0, halvings: 0 })?;
            let base = r.amax();
            let mut lambda = 1.0;
            let mut accepted = None;
            for _ in 0..30 {
                let trial: Vec<f64> = y.iter().zip(step.iter()).map(|(a, d)| a + lambda * d).collect();
                if let Ok(rt) = self.relax_residual(&trial, rho, un, totals, c, eps) {
                    if rt.amax() < base || rt.amax() <= tol {
                        accepted = Some((trial, rt));
                        break;
                    }
                }
                lambda *= 0.5;
            }
            match accepted {
                Some((trial, rt)) => {
                    y = trial;
                    r = rt;
                }
                None => return Err(Error::NewtonFailure { cell: 0, halvings: 0 }),
            }
        }
        let mut out = Vec::with_capacity(n + 1);
        out.push(rho);
        out.extend(y);
        Ok((out, it))
    }

    fn totals(&self, s: &FieldState) -> Result<(f64, f64)> {
        let (mut m, mut e) = (0.0, 0.0);
        for i in 0..s.cells() {
            let u = s.cell(i);
            let k = self.cache.moment_coefficients(u[ALPHA])?;
            m += u[MOM] + s.epsilon * k.k10 * u[F0];
            e += u[ENERGY] + k.k00 * u[F0];
        }
        Ok((m * s.grid.dx(), e * s.grid.dx()))
    }

    /// One composite step of length `dt`.
    pub fn step(&self, s: &mut FieldState, dt: f64) -> Result<RelaxStats> {
        let mut stats = RelaxStats::default();
        let source = self.config.source;
        match self.config.splitting {
            Splitting::Lie => {
                self.transport_substep(s, dt)?;
                if source {
                    stats += self.relaxation_substep(s, dt)?;
                }
            }
            Splitting::Strang => {
                if source {
                    stats += self.relaxation_substep(s, 0.5 * dt)?;
                }
                self.transport_substep(s, dt)?;
                if source {
                    stats += self.relaxation_substep(s, 0.5 * dt)?;
                }
            }
        }
        s.t += dt;
        self.watchdog(s)?;
        Ok(stats)
    }

    /// Advance to `t_final` with `dt = cfl dx / max speed`, the last step clipped.
    pub fn run(&self, initial: FieldState, t_final: f64) -> Result<RunArtifacts> {
        self.run_with(initial, t_final, None)
    }

    /// As [`Solver::run`], with an optional cap on the number of steps.
    pub fn run_with(&self, initial: FieldState, t_final: f64, max_steps: Option<usize>) -> Result<RunArtifacts> {
        if !(t_final > 0.0) {
            return Err(Error::Usage(alloc::format!("final time {t_final} must be positive")));
        }
        self.check_field(&initial)?;
        self.hyperbolicity_check(&initial)?;
        let mut s = initial;
        let mass0 = s.mass();
        let (mom0, en0) = self.totals(&s)?;
        let mut d = Diagnostics { mass_initial: mass0, momentum_initial: mom0, energy_initial: en0, ..Default::default() };
        let mut snapshots = Vec::new();
        if self.config.snapshot_every > 0 {
            snapshots.push(s.clone());
        }
        while s.t < t_final * (1.0 - 1e-14) {
            if max_steps.is_some_and(|k| d.steps >= k) {
                break;
            }
            let dt = self.stable_dt(&s)?.min(t_final - s.t);
            let st = self.step(&mut s, dt)?;
            d.steps += 1;
            d.newton_iterations += st.iterations;
            d.halvings += st.halvings;
            d.max_mass_drift = d.max_mass_drift.max(((s.mass() - mass0) / mass0).abs());
            if self.config.snapshot_every > 0 && d.steps % self.config.snapshot_every == 0 {
                snapshots.push(s.clone());
            }
        }
        let (m1, e1) = self.totals(&s)?;
        d.momentum_final = m1;
        d.energy_final = e1;
        Ok(RunArtifacts { final_state: s, snapshots, diagnostics: d })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RelaxStats {
    pub iterations: usize,
    pub halvings: usize,
}

impl core::ops::AddAssign for RelaxStats {
    fn add_assign(&mut self, o: Self) {
        self.iterations += o.iterations;
        self.halvings += o.halvings;
    }
}

/// Discrete `H^s` proxy of `a - b` over all components (`s` in 0..=2).
///
/// `s = 0` is the L2 norm; `s >= 1` adds the central first difference and
/// `s = 2` the second difference, all periodic.
pub fn error_norm_slices(grid: &Grid1D, a: &[f64], b: &[f64], stride: usize, s: u32) -> Result<f64> {
    if a.len() != b.len() || a.len() != grid.cells() * stride {
        return Err(Error::GridMismatch(a.len(), b.len()));
    }
    if s > 2 {
        return Err(Error::Usage(alloc::format!("norm order {s} not in 0..=2")));
    }
    let m = grid.cells();
    let dx = grid.dx();
    let d = |i: usize, k: usize| a[i * stride + k] - b[i * stride + k];
    let mut sum = 0.0;
    for i in 0..m {
        let (ip, im) = ((i + 1) % m, (i + m - 1) % m);
        for k in 0..stride {
            sum += d(i, k).powi(2);
            if s >= 1 {
                sum += ((d(ip, k) - d(im, k)) / (2.0 * dx)).powi(2);
            }
            if s >= 2 {
                sum += ((d(ip, k) - 2.0 * d(i, k) + d(im, k)) / (dx * dx)).powi(2);
            }
        }
    }
    Ok((sum * dx).sqrt())
}

pub fn error_norms(a: &FieldState, b: &FieldState, s: u32) -> Result<f64> {
    if a.grid != b.grid || a.n != b.n {
        return Err(Error::GridMismatch(a.cells(), b.cells()));
    }
    error_norm_slices(&a.grid, &a.data, &b.data, a.stride(), s)
}

/// Average pairs of cells onto a grid with half the cells.
pub fn restrict(s: &FieldState) -> Result<FieldState> {
    let grid = Grid1D::new(s.cells() / 2, s.grid.length())?;
    let stride = s.stride();
    let mut data = Vec::with_capacity(grid.cells() * stride);
    for i in 0..grid.cells() {
        let (a, b) = (s.cell(2 * i), s.cell(2 * i + 1));
        data.extend(a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)));
    }
    Ok(FieldState { grid, n: s.n, epsilon: s.epsilon, t: s.t, data })
}
