
#[allow(unused_imports)] // inherent float math once a dependency turns on num-traits/std
use num_traits::Float;

use crate::error::{Error, Result};

/// Ideal-gas thermodynamics with a power-law Planck function and gray opacities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermoRadiationModel {
    pub gamma: f64,
    /// `b(theta) = planck_coefficient * theta^planck_exponent`.
    pub planck_coefficient: f64,
    pub planck_exponent: f64,
    pub sigma_a: f64,
    pub sigma_s: f64,
}

impl Default for ThermoRadiationModel {
    fn default() -> Self {
        Self { gamma: 5.0 / 3.0, planck_coefficient: 1.0, planck_exponent: 4.0, sigma_a: 1.0, sigma_s: 1.0 }
    }
}

/// Temperature and its derivatives with respect to `(rho, m, rhoE)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaPartials {
    pub theta: f64,
    pub d_rho: f64,
    pub d_mom: f64,
    pub d_energy: f64,
}

impl ThetaPartials {
    pub fn gradient(&self) -> [f64; 3] {
        [self.d_rho, self.d_mom, self.d_energy]
    }

    pub fn gradient_norm_sq(&self) -> f64 {
        self.d_rho * self.d_rho + self.d_mom * self.d_mom + self.d_energy * self.d_energy
    }
}

impl ThermoRadiationModel {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Usage(alloc::format!("model: {what}")));
        if !(self.gamma > 1.0) {
            return bad("gamma must exceed 1");
        }
        if !(self.planck_coefficient >= 0.0) || !(self.planck_exponent > 0.0) {
            return bad("Planck function must be nonnegative with positive exponent");
        }
        if !(self.sigma_a > 0.0) || !(self.sigma_s >= 0.0) {
            return bad("opacities must be positive");
        }
        Ok(())
    }

    pub fn pressure(&self, rho: f64, theta: f64) -> f64 {
        rho * theta
    }

    pub fn p_rho(&self, _rho: f64, theta: f64) -> f64 {
        theta
    }

    pub fn p_theta(&self, rho: f64, _theta: f64) -> f64 {
        rho
    }

    /// Specific internal energy.
    pub fn energy(&self, _rho: f64, theta: f64) -> f64 {
        theta / (self.gamma - 1.0)
    }

    pub fn e_rho(&self, _rho: f64, _theta: f64) -> f64 {
        0.0
    }

    pub fn e_theta(&self, _rho: f64, _theta: f64) -> f64 {
        1.0 / (self.gamma - 1.0)
    }

    /// Specific entropy `s = ln(theta^(1/(gamma-1)) / rho)`.
    pub fn entropy(&self, rho: f64, theta: f64) -> f64 {
        theta.ln() / (self.gamma - 1.0) - rho.ln()
    }

    /// Entropy as a function of specific volume and specific energy.
    pub fn entropy_nu_e(&self, nu: f64, e: f64) -> f64 {
        self.entropy(1.0 / nu, e * (self.gamma - 1.0))
    }

    pub fn theta_from_energy(&self, _rho: f64, e: f64) -> Result<f64> {
        if e > 0.0 && e.is_finite() {
            Ok(e * (self.gamma - 1.0))
        } else {
            Err(Error::State(alloc::format!("internal energy {e} is not positive")))
        }
    }

    pub fn planck(&self, theta: f64) -> f64 {
        self.planck_coefficient * theta.powf(self.planck_exponent)
    }

    pub fn planck_prime(&self, theta: f64) -> f64 {
        self.planck_coefficient * self.planck_exponent * theta.powf(self.planck_exponent - 1.0)
    }

    pub fn sigma_a(&self, _theta: f64) -> f64 {
        self.sigma_a
    }

    pub fn sigma_s(&self, _theta: f64) -> f64 {
        self.sigma_s
    }

    pub fn sigma_a_prime(&self, _theta: f64) -> f64 {
        0.0
    }

    pub fn sigma_s_prime(&self, _theta: f64) -> f64 {
        0.0
    }

    /// Temperature of conserved hydro variables and its partial derivatives.
    pub fn theta_and_partials(&self, rho: f64, mom: f64, energy: f64) -> Result<ThetaPartials> {
        if !(rho > 0.0) {
            return Err(Error::State(alloc::format!("density {rho} is not positive")));
        }
        let v = mom / rho;
        let e = energy / rho - 0.5 * v * v;
        let theta = self.theta_from_energy(rho, e)?;
        let et = self.e_theta(rho, theta);
        Ok(ThetaPartials {
            theta,
            d_rho: ((0.5 * v * v - e) / rho - self.e_rho(rho, theta)) / et,
            d_mom: -v / (rho * et),
            d_energy: 1.0 / (rho * et),
        })
    }

    /// Frozen (gas) sound speed.
    pub fn sound_speed(&self, rho: f64, theta: f64) -> f64 {
        let p = self.pressure(rho, theta);
        let c2 = self.p_rho(rho, theta)
            + self.p_theta(rho, theta) * (p / (rho * rho) - self.e_rho(rho, theta)) / self.e_theta(rho, theta);
        c2.sqrt()
    }

    /// Sound speed of the equilibrium (limit) system with radiation pressure `b/3`
    /// and radiation energy `b`.
    pub fn equilibrium_sound_speed(&self, rho: f64, theta: f64) -> f64 {
        let b = self.planck(theta);
        let bp = self.planck_prime(theta);
        let total_p = self.pressure(rho, theta) + b / 3.0;
        let dtheta = (total_p / (rho * rho) - self.e_rho(rho, theta) + b / (rho * rho))
            / (self.e_theta(rho, theta) + bp / rho);
        let c2 = self.p_rho(rho, theta) + (self.p_theta(rho, theta) + bp / 3.0) * dtheta;
        c2.sqrt()
    }

    /// Dissipation speed shared by the relaxation and limit schemes on the hydro totals.
    pub fn hydro_speed(&self, rho: f64, v: f64, theta: f64) -> f64 {
        v.abs() + self.sound_speed(rho, theta).max(self.equilibrium_sound_speed(rho, theta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn theta_examples() {
        let m = ThermoRadiationModel::default();
        let t = m.theta_and_partials(1.0, 0.0, 1.5).unwrap();
        assert_relative_eq!(t.theta, 1.0, epsilon = 1e-14);
        assert_relative_eq!(t.d_energy, 1.0 / 1.5, epsilon = 1e-14);
        let t = m.theta_and_partials(1.0, 1.0, 2.0).unwrap();
        assert_relative_eq!(t.theta, 1.0, epsilon = 1e-14);
        assert!(m.theta_and_partials(1.0, 2.0, 1.0).is_err());
        assert!(m.theta_and_partials(-1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn theta_partials_against_central_differences() {
        let m = ThermoRadiationModel::default();
        for u in [[1.0, 0.0, 1.5], [0.7, -0.3, 2.2], [1.9, 1.1, 4.0]] {
            let t = m.theta_and_partials(u[0], u[1], u[2]).unwrap();
            let g = t.gradient();
            for k in 0..3 {
                let h = 1e-6 * u[k].abs().max(1.0);
                let (mut up, mut dn) = (u, u);
                up[k] += h;
                dn[k] -= h;
                let fd = (m.theta_and_partials(up[0], up[1], up[2]).unwrap().theta
                    - m.theta_and_partials(dn[0], dn[1], dn[2]).unwrap().theta)
                    / (2.0 * h);
                assert!((fd - g[k]).abs() <= 1e-8 * fd.abs().max(1.0), "{u:?} {k}");
            }
        }
    }

    #[test]
    fn gibbs_relations_hold() {
        let m = ThermoRadiationModel::default();
        for (rho, theta) in [(1.0, 1.0), (0.4, 2.5), (3.0, 0.2)] {
            let (nu, e) = (1.0 / rho, m.energy(rho, theta));
            let (hn, he) = (1e-6 * nu, 1e-6 * e);
            let s_e = (m.entropy_nu_e(nu, e + he) - m.entropy_nu_e(nu, e - he)) / (2.0 * he);
            let s_nu = (m.entropy_nu_e(nu + hn, e) - m.entropy_nu_e(nu - hn, e)) / (2.0 * hn);
            assert_relative_eq!(theta * s_e, 1.0, max_relative = 1e-6);
            assert_relative_eq!(theta * s_nu, m.pressure(rho, theta), max_relative = 1e-6);
        }
    }

    #[test]
    fn assumptions_hold_for_defaults() {
        let m = ThermoRadiationModel::default();
        m.validate().unwrap();
        for (rho, theta) in [(0.5, 0.5), (2.0, 2.0)] {
            assert!(m.p_rho(rho, theta) > 0.0 && m.p_theta(rho, theta) > 0.0 && m.e_theta(rho, theta) > 0.0);
            assert!(m.planck(theta) > 0.0 && m.planck_prime(theta) > 0.0);
        }
    }

    #[test]
    fn sound_speeds() {
        let m = ThermoRadiationModel::default();
        assert_relative_eq!(m.sound_speed(1.3, 0.8), (m.gamma * 0.8f64).sqrt(), epsilon = 1e-14);
        // rho = theta = 1: radiation stiffens the equilibrium sound speed.
        let ceq = m.equilibrium_sound_speed(1.0, 1.0);
        assert!(ceq > m.sound_speed(1.0, 1.0));
        // Oracle: total pressure P(rho, Z) at constant entropy, by differencing along an isentrope.
        let total = |rho: f64, theta: f64| (rho * m.energy(rho, theta) + m.planck(theta), m.pressure(rho, theta) + m.planck(theta) / 3.0);
        let h = 1e-6;
        // d(rhoE_tot) = h_tot d rho along the isentrope with h_tot = (Z + P)/rho.
        let (z, p) = total(1.0, 1.0);
        let dz = (z + p) * h;
        let theta_at = |rho: f64, z: f64| {
            let (mut lo, mut hi) = (1e-3, 10.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if total(rho, mid).0 < z { lo = mid } else { hi = mid }
            }
            0.5 * (lo + hi)
        };
        let p_up = total(1.0 + h, theta_at(1.0 + h, z + dz)).1;
        let p_dn = total(1.0 - h, theta_at(1.0 - h, z - dz)).1;
        assert_relative_eq!(((p_up - p_dn) / (2.0 * h)).sqrt(), ceq, max_relative = 1e-6);
    }
}
