//! Gauss–Legendre rules on [-1, 1].

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // inherent float math once a dependency turns on num-traits/std
use num_traits::Float;

pub const DEFAULT_NODES: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Legendre P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "need at least two nodes");
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = -((PI * (i as f64 + 0.75)) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            nodes.push(x);
            weights.push(2.0 / ((1.0 - x * x) * dp * dp));
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

impl Default for GaussLegendre {
    fn default() -> Self {
        Self::new(DEFAULT_NODES)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integrates_polynomials_exactly() {
        let q = GaussLegendre::new(8);
        for k in 0..16 {
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert_relative_eq!(q.integrate(|x| x.powi(k)), exact, epsilon = 1e-14);
        }
    }

    #[test]
    fn default_rule_weights_sum_to_two() {
        let q = GaussLegendre::default();
        assert_eq!(q.len(), 128);
        assert_relative_eq!(q.weights().iter().sum::<f64>(), 2.0, epsilon = 1e-13);
        assert!(q.nodes().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rational_weight_matches_closed_form() {
        let q = GaussLegendre::default();
        let a: f64 = 0.9;
        let got = q.integrate(|x| (1.0 + a * x).powi(-4));
        let exact = 2.0 * (3.0 + a * a) / (3.0 * (1.0 - a * a).powi(3));
        assert_relative_eq!(got, exact, max_relative = 1e-12);
    }
}
