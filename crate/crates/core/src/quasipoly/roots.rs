//! Rightmost characteristic roots by Chebyshev collocation of the solution-operator generator.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::charfn::{char_function, CharacteristicFunction};
use super::system::TimeDelaySystem;
use crate::error::{Error, Result};
use crate::linalg::eigenvalues;

const NEWTON_REL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    /// Refined roots sorted by real part, descending.
    pub roots: Vec<Complex64>,
    /// Collocation eigenvalues whose Newton refinement did not converge.
    pub dropped: usize,
}

impl RootSet {
    /// Number of roots with real part above `tol`.
    pub fn unstable_count(&self, tol: f64) -> usize {
        self.roots.iter().filter(|s| s.re > tol).count()
    }
}

/// Chebyshev differentiation matrix on `x_i = cos(i pi / n)`, `i = 0..=n`.
fn cheb(n: usize) -> (DMatrix<f64>, Vec<f64>) {
    let x: Vec<f64> = (0..=n).map(|i| (std::f64::consts::PI * i as f64 / n as f64).cos()).collect();
    let c = |i: usize| if i == 0 || i == n { 2.0 } else { 1.0 } * if i % 2 == 0 { 1.0 } else { -1.0 };
    let mut d = DMatrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                d[(i, j)] = c(i) / c(j) / (x[i] - x[j]);
            }
        }
        let row: f64 = d.row(i).sum();
        d[(i, i)] = -row;
    }
    (d, x)
}

/// Barycentric Lagrange weights of the Chebyshev nodes evaluated at `t`.
fn lagrange_row(x: &[f64], t: f64) -> Vec<f64> {
    let n = x.len() - 1;
    if let Some(k) = x.iter().position(|xi| (t - xi).abs() < 1e-15) {
        let mut out = vec![0.0; n + 1];
        out[k] = 1.0;
        return out;
    }
    let w: Vec<f64> = (0..=n)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n {
                0.5 * s
            } else {
                s
            }
        })
        .collect();
    let terms: Vec<f64> = (0..=n).map(|j| w[j] / (t - x[j])).collect();
    let total: f64 = terms.iter().sum();
    terms.iter().map(|v| v / total).collect()
}

fn newton(f: &CharacteristicFunction, mut s: Complex64, tau: f64) -> Option<Complex64> {
    let mut best: Option<(Complex64, f64)> = None;
    for _ in 0..100 {
        let (v, fs, _) = f.eval_partials(s, tau);
        let rel = v.norm() / f.scale(s, tau);
        if best.map_or(true, |(_, r)| rel < r) {
            best = Some((s, rel));
        }
        if rel <= 1e-15 || fs.norm() == 0.0 {
            break;
        }
        let next = s - v / fs;
        if !(next.re.is_finite() && next.im.is_finite()) {
            break;
        }
        s = next;
    }
    best.filter(|(_, r)| *r <= NEWTON_REL).map(|(s, _)| s)
}

/// Characteristic roots of `sys` at delay `tau` from an `nodes`-point collocation, Newton-refined.
pub fn rightmost_roots(sys: &TimeDelaySystem, tau: f64, nodes: usize) -> Result<RootSet> {
    if nodes < 10 {
        return Err(Error::InvalidInput(format!("need at least 10 collocation nodes, got {nodes}")));
    }
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::InvalidInput(format!("invalid delay {tau}")));
    }
    let f = char_function(sys)?;
    rightmost_roots_with(sys, &f, tau, nodes)
}

pub(crate) fn rightmost_roots_with(
    sys: &TimeDelaySystem,
    f: &CharacteristicFunction,
    tau: f64,
    nodes: usize,
) -> Result<RootSet> {
    let n = sys.dim();
    let delays = sys.delays_at(tau);
    let t_max = sys.max_delay(tau);
    let raw = if t_max == 0.0 {
        eigenvalues(&sys.matrix_sum())?
    } else {
        let (dx, x) = cheb(nodes);
        let size = (nodes + 1) * n;
        let mut big = DMatrix::<f64>::zeros(size, size);
        // theta = T (x - 1) / 2, so d/dtheta = (2 / T) d/dx
        let dscale = 2.0 / t_max;
        for i in 1..=nodes {
            for j in 0..=nodes {
                let v = dscale * dx[(i, j)];
                if v != 0.0 {
                    for k in 0..n {
                        big[(i * n + k, j * n + k)] = v;
                    }
                }
            }
        }
        for (d, a) in &delays {
            let xd = 1.0 - 2.0 * d / t_max;
            let ell = lagrange_row(&x, xd);
            for (j, l) in ell.iter().enumerate() {
                if *l != 0.0 {
                    let mut block = big.view_mut((0, j * n), (n, n));
                    block += a * *l;
                }
            }
        }
        eigenvalues(&big)?
    };
    let mut roots: Vec<Complex64> = Vec::new();
    let mut dropped = 0;
    for s0 in raw {
        match newton(f, s0, tau) {
            Some(s) => {
                if !roots.iter().any(|r| (r - s).norm() <= 1e-8 * s.norm().max(1.0)) {
                    roots.push(s);
                }
            }
            None => dropped += 1,
        }
    }
    roots.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    if dropped > 0 {
        log::debug!("{dropped} collocation eigenvalues failed Newton refinement");
    }
    Ok(RootSet { roots, dropped })
}
