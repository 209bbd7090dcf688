use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // inherent float math once a dependency turns on num-traits/std
use num_traits::Float;

use super::{check_alpha, Closure, ClosureTables, MomentCoefficients};
use crate::error::Result;

/// Half-width of the interpolation stencil.
const HALF: usize = 3;
pub const DEFAULT_CACHE_NODES: usize = 512;

/// Closure tables tabulated on a grid uniform in `s = atanh(alpha)` and
/// evaluated by 6-point Lagrange interpolation. Exact at nodes, which
/// include `alpha = 0`.
#[derive(Debug, Clone)]
pub struct TableCache {
    n: usize,
    alpha_max: f64,
    h: f64,
    /// Index of the node at `t = 0`.
    center: usize,
    stride: usize,
    data: Vec<f64>,
}

fn packed_len(n: usize) -> usize {
    2 * (n + 2) * (n + 2) + 3 * (n + 1) + 2 * (n + 1) * (n + 1) + 3
}

fn pack(t: &ClosureTables, out: &mut Vec<f64>) {
    out.extend(t.kappa.iter());
    out.extend(t.kappa_tilde.iter());
    out.extend(&t.r);
    out.extend(&t.beta);
    out.extend(t.lambda_tilde.iter());
    out.extend(t.m_tilde.iter());
    out.extend(t.d_alpha_proj.iter());
    out.push(t.kappa00_prime);
    out.push(t.kappa10_prime);
    out.push(t.m_tilde_spectral_radius());
}

fn unpack(alpha: f64, n: usize, p: &[f64]) -> (ClosureTables, f64) {
    let (a, b) = (n + 2, n + 1);
    let mut at = 0;
    let mut take = |len: usize| {
        let s = &p[at..at + len];
        at += len;
        s
    };
    let kappa = DMatrix::from_column_slice(a, a, take(a * a));
    let kappa_tilde = DMatrix::from_column_slice(a, a, take(a * a));
    let r = take(b).to_vec();
    let beta = take(b).to_vec();
    let lambda_tilde = DVector::from_column_slice(take(b));
    let m_tilde = DMatrix::from_column_slice(b, b, take(b * b));
    let d_alpha_proj = DMatrix::from_column_slice(b, b, take(b * b));
    let tail = take(3);
    let t = ClosureTables {
        alpha,
        n,
        kappa,
        kappa_tilde,
        r,
        beta,
        lambda_tilde,
        m_tilde,
        d_alpha_proj,
        kappa00_prime: tail[0],
        kappa10_prime: tail[1],
    };
    (t, tail[2])
}

impl TableCache {
    /// Tabulate with `nodes` intervals on `[0, atanh(alpha_max)]`.
    pub fn new(closure: &Closure, nodes: usize) -> Result<Self> {
        let n = closure.n();
        let alpha_max = closure.alpha_max();
        let top = alpha_max.atanh();
        let h = top / nodes as f64;
        let reach = top + (HALF as f64 + 1.0) * h;
        let wide = Closure::new(n, reach.tanh())?;
        let center = nodes + HALF + 1;
        let stride = packed_len(n);
        let mut data = Vec::with_capacity((2 * center + 1) * stride);
        for k in 0..=2 * center {
            let t = (k as f64 - center as f64) * h;
            pack(&wide.tables(t.tanh())?, &mut data);
        }
        Ok(Self { n, alpha_max, h, center, stride, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha_max(&self) -> f64 {
        self.alpha_max
    }

    fn interpolate(&self, alpha: f64) -> Result<Vec<f64>> {
        check_alpha(alpha, self.alpha_max)?;
        let x = alpha.atanh() / self.h + self.center as f64;
        let i = x.floor();
        let frac = x - i;
        let i = i as usize;
        if frac == 0.0 {
            return Ok(self.data[i * self.stride..(i + 1) * self.stride].to_vec());
        }
        // stencil nodes i-2 ..= i+3, offsets -2..=3 from i
        let offs: [f64; 2 * HALF] = [-2.0, -1.0, 0.0, 1.0, 2.0, 3.0];
        let mut wts = [0.0; 2 * HALF];
        for (a, wa) in wts.iter_mut().enumerate() {
            let mut w = 1.0;
            for (b, ob) in offs.iter().enumerate() {
                if a != b {
                    w *= (frac - ob) / (offs[a] - ob);
                }
            }
            *wa = w;
        }
        let mut out = alloc::vec![0.0; self.stride];
        for (a, w) in wts.iter().enumerate() {
            let k = i + a - (HALF - 1);
            let row = &self.data[k * self.stride..(k + 1) * self.stride];
            for (o, v) in out.iter_mut().zip(row) {
                *o += w * v;
            }
        }
        Ok(out)
    }

    pub fn tables(&self, alpha: f64) -> Result<ClosureTables> {
        Ok(unpack(alpha, self.n, &self.interpolate(alpha)?).0)
    }

    /// Tables together with the spectral radius of M~.
    pub fn tables_and_radius(&self, alpha: f64) -> Result<(ClosureTables, f64)> {
        Ok(unpack(alpha, self.n, &self.interpolate(alpha)?))
    }

    pub fn moment_coefficients(&self, alpha: f64) -> Result<MomentCoefficients> {
        Ok(self.tables(alpha)?.moment_coefficients())
    }
}
