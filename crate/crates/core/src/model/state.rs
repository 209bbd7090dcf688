use alloc::vec::Vec;
use nalgebra::DVector;

use crate::error::{Error, Result};

pub const RHO: usize = 0;
pub const MOM: usize = 1;
pub const ENERGY: usize = 2;
pub const F0: usize = 3;
pub const ALPHA: usize = 4;
/// Offset of `w` inside the full state vector.
pub const W: usize = 3;

/// Length of the full state vector for truncation order `n`.
pub const fn state_len(n: usize) -> usize {
    n + 4
}

/// Conserved hydrodynamic variables `(rho, rho v, rho E)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HydroState {
    pub rho: f64,
    pub mom: f64,
    pub energy: f64,
}

impl HydroState {
    pub fn new(rho: f64, mom: f64, energy: f64) -> Self {
        Self { rho, mom, energy }
    }

    pub fn velocity(&self) -> f64 {
        self.mom / self.rho
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.rho, self.mom, self.energy]
    }
}

/// Radiation variables `w = (f_0, alpha, f_2, ..., f_N)`; `f_1` is identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RadState {
    w: Vec<f64>,
}

impl RadState {
    pub fn new(f0: f64, alpha: f64, higher: &[f64], alpha_max: f64) -> Result<Self> {
        let mut w = Vec::with_capacity(higher.len() + 2);
        w.push(f0);
        w.push(alpha);
        w.extend_from_slice(higher);
        Self::from_vec(w, alpha_max)
    }

    pub fn from_vec(w: Vec<f64>, alpha_max: f64) -> Result<Self> {
        if w.len() < 3 {
            return Err(Error::Usage(alloc::format!("radiation state needs N >= 2, got {} entries", w.len())));
        }
        if !(w[1].abs() <= alpha_max) {
            return Err(Error::Domain { alpha: w[1], alpha_max });
        }
        if w.iter().any(|x| !x.is_finite()) {
            return Err(Error::State("radiation variable is not finite".into()));
        }
        Ok(Self { w })
    }

    pub fn n(&self) -> usize {
        self.w.len() - 1
    }

    pub fn f0(&self) -> f64 {
        self.w[0]
    }

    pub fn alpha(&self) -> f64 {
        self.w[1]
    }

    /// `f_i` for `i = 0..=N`, with `f_1 = 0`.
    pub fn f(&self, i: usize) -> f64 {
        match i {
            1 => 0.0,
            _ => self.w[i],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }
}

/// Hydro plus radiation state at one point, with its `epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    pub u: HydroState,
    pub w: RadState,
    pub epsilon: f64,
}

impl FullState {
    pub fn n(&self) -> usize {
        self.w.n()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(state_len(self.n()));
        v.extend_from_slice(&self.u.as_array());
        v.extend_from_slice(self.w.as_slice());
        v
    }

    pub fn to_dvector(&self) -> DVector<f64> {
        DVector::from_vec(self.to_vec())
    }
}

/// `u~ = (rho, rho v + eps kappa_10 f_0, rho E + kappa_00 f_0)` and
/// `w~ = (kappa_00 f_0 - b, alpha, f_2, ..., f_N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TildeState {
    pub u: [f64; 3],
    pub w: Vec<f64>,
}

impl TildeState {
    pub fn from_slice(v: &[f64]) -> Self {
        Self { u: [v[0], v[1], v[2]], w: v[3..].to_vec() }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.u.to_vec();
        v.extend_from_slice(&self.w);
        v
    }
}
