use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent float math once a dependency turns on num-traits/std
use num_traits::Float;

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// The two angular weights: `(1 + alpha mu)^-4` for MP_N and `(1 + alpha mu)^-5` for HMP_N.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightFamily {
    Mp,
    Hmp,
}

impl WeightFamily {
    pub fn exponent(self) -> i32 {
        match self {
            WeightFamily::Mp => 4,
            WeightFamily::Hmp => 5,
        }
    }

    pub fn from_exponent(p: i32) -> Result<Self> {
        match p {
            4 => Ok(WeightFamily::Mp),
            5 => Ok(WeightFamily::Hmp),
            _ => Err(Error::Usage(alloc::format!("weight exponent must be 4 or 5, got {p}"))),
        }
    }

    #[inline]
    pub fn weight(self, alpha: f64, mu: f64) -> f64 {
        (1.0 + alpha * mu).powi(-self.exponent())
    }
}

/// Monic orthogonal polynomials `phi_0..phi_degree` for one weight.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoBasis {
    alpha: f64,
    family: WeightFamily,
    /// `coeffs[j][m]` multiplies `mu^m` in `phi_j`.
    coeffs: Vec<Vec<f64>>,
    /// `phi_j` at the quadrature nodes, row `j`.
    pub(crate) at_nodes: Vec<Vec<f64>>,
    /// Weight at the quadrature nodes.
    pub(crate) weight_at_nodes: Vec<f64>,
    norms: Vec<f64>,
}

impl OrthoBasis {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn family(&self) -> WeightFamily {
        self.family
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    /// `kappa_jj = <phi_j, phi_j>_omega`.
    pub fn norm_sq(&self, j: usize) -> f64 {
        self.norms[j]
    }

    pub fn eval(&self, j: usize, mu: f64) -> f64 {
        self.coeffs[j].iter().rev().fold(0.0, |acc, &c| acc * mu + c)
    }

    /// `phi_j(mu) * omega(mu)`, the basis function in intensity space.
    pub fn eval_weighted(&self, j: usize, mu: f64) -> f64 {
        self.eval(j, mu) * self.family.weight(self.alpha, mu)
    }
}

pub(crate) fn check_alpha(alpha: f64, alpha_max: f64) -> Result<()> {
    if alpha.is_finite() && alpha.abs() <= alpha_max {
        Ok(())
    } else {
        Err(Error::Domain { alpha, alpha_max })
    }
}

/// Gram–Schmidt on the monomials, carried out on the quadrature nodes.
///
/// Each new direction is `mu * phi_{j-1}`, which has the same span as `mu^j`
/// but is far better conditioned; a second projection pass removes the
/// residual round-off.
pub(crate) fn gram_schmidt(
    quad: &GaussLegendre,
    alpha: f64,
    degree: usize,
    family: WeightFamily,
) -> Result<OrthoBasis> {
    let mu = quad.nodes();
    let gw: Vec<f64> = mu
        .iter()
        .zip(quad.weights())
        .map(|(&x, &w)| w * family.weight(alpha, x))
        .collect();
    let inner = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).zip(&gw).map(|((x, y), w)| x * y * w).sum()
    };

    let nq = mu.len();
    let mut at_nodes: Vec<Vec<f64>> = Vec::with_capacity(degree + 1);
    let mut coeffs: Vec<Vec<f64>> = Vec::with_capacity(degree + 1);
    let mut norms = Vec::with_capacity(degree + 1);

    at_nodes.push(vec![1.0; nq]);
    let mut c0 = vec![0.0; degree + 1];
    c0[0] = 1.0;
    coeffs.push(c0);
    norms.push(inner(&at_nodes[0], &at_nodes[0]));

    for j in 1..=degree {
        let mut v: Vec<f64> = at_nodes[j - 1].iter().zip(mu).map(|(p, x)| p * x).collect();
        let mut c = vec![0.0; degree + 1];
        for m in 0..j {
            c[m + 1] = coeffs[j - 1][m];
        }
        for _pass in 0..2 {
            for k in 0..j {
                let r = inner(&v, &at_nodes[k]) / norms[k];
                for (vi, pk) in v.iter_mut().zip(&at_nodes[k]) {
                    *vi -= r * pk;
                }
                for (ci, ck) in c.iter_mut().zip(&coeffs[k]) {
                    *ci -= r * ck;
                }
            }
        }
        let nrm = inner(&v, &v);
        if !(nrm > 1e-14) {
            return Err(Error::NumericalDegeneracy { degree: j, norm: nrm });
        }
        c[j] = 1.0;
        at_nodes.push(v);
        coeffs.push(c);
        norms.push(nrm);
    }
    let weight_at_nodes = mu.iter().map(|&x| family.weight(alpha, x)).collect();
    // Trim each row to its own degree so that `coeffs` is lower triangular.
    for (j, c) in coeffs.iter_mut().enumerate() {
        c.truncate(j + 1);
    }
    Ok(OrthoBasis { alpha, family, coeffs, at_nodes, weight_at_nodes, norms })
}
