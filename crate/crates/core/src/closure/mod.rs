//! Weighted orthogonal polynomials and the alpha-dependent closure coefficients.

mod basis;
mod cache;

pub use basis::{OrthoBasis, WeightFamily};
pub use cache::{TableCache, DEFAULT_CACHE_NODES};

use alloc::format;
use alloc::vec::Vec;
use core::str::FromStr;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // inherent float math once a dependency turns on num-traits/std
use num_traits::Float;

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use basis::{check_alpha, gram_schmidt};

pub const DEFAULT_ALPHA_MAX: f64 = 0.95;
pub const DEFAULT_N: usize = 3;
pub const MIN_N: usize = 2;
pub const MAX_N: usize = 8;

/// Step for the alpha-derivative of the MP_N basis.
const ALPHA_STEP: f64 = 1e-6;

/// Quadrature rule, truncation order and admissible alpha range.
///
/// Everything here is a pure function of its arguments; one `Closure` can be
/// shared freely between threads.
#[derive(Debug, Clone)]
pub struct Closure {
    quad: GaussLegendre,
    n: usize,
    alpha_max: f64,
}

impl Closure {
    pub fn new(n: usize, alpha_max: f64) -> Result<Self> {
        if !(MIN_N..=MAX_N).contains(&n) {
            return Err(Error::Usage(format!("N must lie in {MIN_N}..={MAX_N}, got {n}")));
        }
        if !(alpha_max > 0.0 && alpha_max < 1.0) {
            return Err(Error::Usage(format!("alpha_max must lie in (0, 1), got {alpha_max}")));
        }
        Ok(Self { quad: GaussLegendre::default(), n, alpha_max })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha_max(&self) -> f64 {
        self.alpha_max
    }

    pub fn quadrature(&self) -> &GaussLegendre {
        &self.quad
    }

    /// `int mu^j (1 + alpha mu)^-p dmu`.
    pub fn weighted_moment(&self, j: u32, alpha: f64, family: WeightFamily) -> Result<f64> {
        check_alpha(alpha, self.alpha_max)?;
        Ok(self.quad.integrate(|mu| mu.powi(j as i32) * family.weight(alpha, mu)))
    }

    pub fn build_basis(&self, alpha: f64, degree: usize, family: WeightFamily) -> Result<OrthoBasis> {
        if degree < MIN_N {
            return Err(Error::Usage(format!("basis degree must be at least {MIN_N}")));
        }
        check_alpha(alpha, self.alpha_max)?;
        gram_schmidt(&self.quad, alpha, degree, family)
    }

    /// `R_i = int phi~_i dmu`.
    pub fn r_coefficient(&self, i: usize, alpha: f64) -> Result<f64> {
        let basis = self.build_basis(alpha, i.max(MIN_N), WeightFamily::Hmp)?;
        Ok(self.quad.integrate(|mu| basis.eval(i, mu)))
    }

    /// Only the four coefficients that enter `E_0`, `E_1`, `E_2`.
    pub fn moment_coefficients(&self, alpha: f64) -> Result<MomentCoefficients> {
        check_alpha(alpha, self.alpha_max)?;
        let b = gram_schmidt(&self.quad, alpha, 2, WeightFamily::Mp)?;
        Ok(MomentCoefficients {
            k00: b.norm_sq(0),
            k10: self.moment_against(&b, 1, 0),
            k20: self.moment_against(&b, 2, 0),
            k22: b.norm_sq(2),
        })
    }

    fn moment_against(&self, b: &OrthoBasis, j: i32, k: usize) -> f64 {
        self.quad
            .nodes()
            .iter()
            .zip(self.quad.weights())
            .zip(b.at_nodes[k].iter().zip(&b.weight_at_nodes))
            .map(|((&mu, &g), (&p, &w))| g * mu.powi(j) * p * w)
            .sum()
    }

    pub fn tables(&self, alpha: f64) -> Result<ClosureTables> {
        check_alpha(alpha, self.alpha_max)?;
        let n = self.n;
        let mp = gram_schmidt(&self.quad, alpha, n + 1, WeightFamily::Mp)?;
        let hmp = gram_schmidt(&self.quad, alpha, n + 1, WeightFamily::Hmp)?;

        let kappa = DMatrix::from_fn(n + 2, n + 2, |j, k| self.moment_against(&mp, j as i32, k));
        let kappa_tilde = DMatrix::from_fn(n + 2, n + 2, |j, k| self.moment_against(&hmp, j as i32, k));

        let g = self.quad.weights();
        let mu = self.quad.nodes();
        let r: Vec<f64> = (0..=n)
            .map(|i| hmp.at_nodes[i].iter().zip(g).map(|(p, w)| p * w).sum())
            .collect();
        let beta: Vec<f64> = (0..=n).map(|i| mp.norm_sq(i) / hmp.norm_sq(i)).collect();
        let lambda_tilde = DVector::from_fn(n + 1, |i, _| hmp.norm_sq(i));
        let m_tilde = DMatrix::from_fn(n + 1, n + 1, |i, j| {
            let s: f64 = (0..mu.len())
                .map(|q| g[q] * mu[q] * hmp.at_nodes[i][q] * hmp.at_nodes[j][q] * hmp.weight_at_nodes[q])
                .sum();
            s / hmp.norm_sq(i)
        });

        // d/dalpha of Phi_i = phi_i omega, projected on the HMP_N basis.
        let dphi = self.alpha_derivative_mp(alpha, n)?;
        let d_alpha_proj = DMatrix::from_fn(n + 1, n + 1, |k, i| {
            let s: f64 = (0..mu.len())
                .map(|q| {
                    let dphi_w = dphi[i][q] * mp.weight_at_nodes[q]
                        - 4.0 * mu[q] * mp.at_nodes[i][q] * hmp.weight_at_nodes[q];
                    g[q] * dphi_w * hmp.at_nodes[k][q]
                })
                .sum();
            s / hmp.norm_sq(k)
        });

        let kappa00_prime = -4.0 * kappa_tilde[(1, 0)];
        let kappa10_prime = -4.0 * kappa_tilde[(2, 0)];

        Ok(ClosureTables {
            alpha,
            n,
            kappa,
            kappa_tilde,
            r,
            beta,
            lambda_tilde,
            m_tilde,
            d_alpha_proj,
            kappa00_prime,
            kappa10_prime,
        })
    }

    /// Central difference of the MP_N basis values in alpha with one Richardson level.
    fn alpha_derivative_mp(&self, alpha: f64, n: usize) -> Result<Vec<Vec<f64>>> {
        let central = |h: f64| -> Result<Vec<Vec<f64>>> {
            let p = gram_schmidt(&self.quad, alpha + h, n, WeightFamily::Mp)?;
            let m = gram_schmidt(&self.quad, alpha - h, n, WeightFamily::Mp)?;
            Ok(p.at_nodes
                .iter()
                .zip(&m.at_nodes)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) / (2.0 * h)).collect())
                .collect())
        };
        let coarse = central(ALPHA_STEP)?;
        let fine = central(0.5 * ALPHA_STEP)?;
        Ok(fine
            .iter()
            .zip(&coarse)
            .map(|(f, c)| f.iter().zip(c).map(|(x, y)| (4.0 * x - y) / 3.0).collect())
            .collect())
    }
}

/// `kappa_00`, `kappa_10`, `kappa_20`, `kappa_22` at one alpha.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentCoefficients {
    pub k00: f64,
    pub k10: f64,
    pub k20: f64,
    pub k22: f64,
}

/// All alpha-dependent coefficients for one `(alpha, N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosureTables {
    pub alpha: f64,
    pub n: usize,
    /// `kappa[(j, k)] = int mu^j phi_k omega`, `0 <= j, k <= N + 1`.
    pub kappa: DMatrix<f64>,
    pub kappa_tilde: DMatrix<f64>,
    pub r: Vec<f64>,
    pub beta: Vec<f64>,
    /// Diagonal of Lambda~.
    pub lambda_tilde: DVector<f64>,
    pub m_tilde: DMatrix<f64>,
    /// Column `i`: HMP_N coefficients of `d/dalpha (phi_i omega)`.
    pub d_alpha_proj: DMatrix<f64>,
    pub kappa00_prime: f64,
    pub kappa10_prime: f64,
}

impl ClosureTables {
    pub fn moment_coefficients(&self) -> MomentCoefficients {
        MomentCoefficients {
            k00: self.kappa[(0, 0)],
            k10: self.kappa[(1, 0)],
            k20: self.kappa[(2, 0)],
            k22: self.kappa[(2, 2)],
        }
    }

    pub fn lambda_tilde_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.lambda_tilde)
    }

    /// Spectral radius of M~. Real spectrum: M~ is similar to a symmetric matrix.
    pub fn m_tilde_spectral_radius(&self) -> f64 {
        let s = self.lambda_tilde.map(|x| x.sqrt());
        let n = self.n + 1;
        let sym = DMatrix::from_fn(n, n, |i, j| {
            let lm = self.lambda_tilde[i] * self.m_tilde[(i, j)];
            let lm_t = self.lambda_tilde[j] * self.m_tilde[(j, i)];
            0.5 * (lm + lm_t) / (s[i] * s[j])
        });
        sym.symmetric_eigenvalues().iter().fold(0.0, |a: f64, x| a.max(x.abs()))
    }
}

/// Names accepted by [`closed_form_kappa`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KappaName {
    K00,
    KTilde00,
    K10,
    KTilde10,
    KTilde11,
}

impl KappaName {
    pub const ALL: [KappaName; 5] =
        [KappaName::K00, KappaName::KTilde00, KappaName::K10, KappaName::KTilde10, KappaName::KTilde11];

    pub fn as_str(self) -> &'static str {
        match self {
            KappaName::K00 => "kappa00",
            KappaName::KTilde00 => "kappa_tilde00",
            KappaName::K10 => "kappa10",
            KappaName::KTilde10 => "kappa_tilde10",
            KappaName::KTilde11 => "kappa_tilde11",
        }
    }

    /// Table and `(j, k)` index of the coefficient.
    pub fn index(self) -> (WeightFamily, usize, usize) {
        match self {
            KappaName::K00 => (WeightFamily::Mp, 0, 0),
            KappaName::KTilde00 => (WeightFamily::Hmp, 0, 0),
            KappaName::K10 => (WeightFamily::Mp, 1, 0),
            KappaName::KTilde10 => (WeightFamily::Hmp, 1, 0),
            KappaName::KTilde11 => (WeightFamily::Hmp, 1, 1),
        }
    }
}

impl FromStr for KappaName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        KappaName::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Usage(format!("unknown kappa coefficient `{s}`")))
    }
}

/// Rational closed forms of the low-order kappa coefficients.
pub fn closed_form_kappa(name: KappaName, alpha: f64) -> Result<f64> {
    if !(alpha.abs() < 1.0) {
        return Err(Error::Domain { alpha, alpha_max: 1.0 });
    }
    let a2 = alpha * alpha;
    Ok(match name {
        KappaName::K00 => 2.0 * (3.0 + a2) / (3.0 * (1.0 - a2).powi(3)),
        KappaName::KTilde00 => 2.0 * (a2 + 1.0) / (a2 - 1.0).powi(4),
        KappaName::K10 => 8.0 * alpha / (3.0 * (a2 - 1.0).powi(3)),
        KappaName::KTilde10 => -2.0 * alpha * (a2 + 5.0) / (3.0 * (a2 - 1.0).powi(4)),
        KappaName::KTilde11 => 2.0 * (3.0 - a2) / (9.0 * (1.0 - a2).powi(2) * (1.0 + a2)),
    })
}

/// Same as [`closed_form_kappa`] but looked up by name.
pub fn closed_form_kappa_by_name(name: &str, alpha: f64) -> Result<f64> {
    closed_form_kappa(name.parse()?, alpha)
}

/// `R_1(alpha) = 2 alpha (alpha^2 + 5) / (3 (alpha^2 + 1))`.
pub fn closed_form_r1(alpha: f64) -> f64 {
    2.0 * alpha * (alpha * alpha + 5.0) / (3.0 * (alpha * alpha + 1.0))
}

/// The closure matrix D~ for radiation variables `w = (f_0, alpha, f_2, ..., f_N)`.
///
/// Column `i != 1` carries `beta_i` at row `i` and `alpha` at row `i + 1`;
/// column 1 is the projection of `sum_i f_i d/dalpha Phi_i`.
pub fn d_tilde_matrix(w: &[f64], tables: &ClosureTables) -> Result<DMatrix<f64>> {
    let n = tables.n;
    debug_assert_eq!(w.len(), n + 1);
    let alpha = w[1];
    let mut d = DMatrix::zeros(n + 1, n + 1);
    for i in (0..=n).filter(|&i| i != 1) {
        d[(i, i)] = tables.beta[i];
        if i < n {
            d[(i + 1, i)] = alpha;
        }
        for k in 0..=n {
            d[(k, 1)] += w[i] * tables.d_alpha_proj[(k, i)];
        }
    }
    let det = d_tilde_det(&d, tables);
    let scale: f64 = d.column_iter().map(|c| c.norm()).product();
    if !(det.abs() > 1e-12 * scale) {
        return Err(Error::DegenerateState { det, scale });
    }
    Ok(d)
}

/// D~ is block lower triangular: a 2x2 leading block followed by `beta_j` on the diagonal.
fn d_tilde_det(d: &DMatrix<f64>, tables: &ClosureTables) -> f64 {
    let lead = d[(0, 0)] * d[(1, 1)] - d[(0, 1)] * d[(1, 0)];
    lead * tables.beta[2..].iter().product::<f64>()
}

/// Spectral radius and largest imaginary part of the eigenvalues of `D~^-1 M~ D~`.
pub fn hyperbolicity_probe(w: &[f64], tables: &ClosureTables) -> Result<(f64, f64)> {
    let d = d_tilde_matrix(w, tables)?;
    let r = crate::linalg::solve(&d, &(&tables.m_tilde * &d))?;
    let eig = r.complex_eigenvalues();
    let radius = eig.iter().fold(0.0, |a: f64, z| a.max(z.re.hypot(z.im)));
    let imag = eig.iter().fold(0.0, |a: f64, z| a.max(z.im.abs()));
    Ok((radius, imag))
}
