//! Characteristic quasi-polynomials `F(s, tau) = sum_j q_j(s) exp(-s (a_j + m_j tau))`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::system::TimeDelaySystem;
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, to_complex, CMatrix};
use crate::poly::Poly;

/// One term `q(s) exp(-s (offset + mult * tau))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfTerm {
    /// Coefficients of `q`, ascending powers of `s`.
    pub coeffs: Poly,
    pub offset: f64,
    pub mult: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CharacteristicFunction {
    terms: Vec<CfTerm>,
}

/// Relative size below which fitted coefficients are treated as zero.
const CHOP_REL: f64 = 1e-11;
/// Relative residual allowed when re-checking the fit off the sampling grid.
const FIT_REL: f64 = 1e-10;
const MAX_SAMPLES: usize = 250_000;

impl CharacteristicFunction {
    /// Builds a function from explicit terms, merging duplicates and dropping zero terms.
    pub fn from_terms(terms: Vec<CfTerm>) -> Result<Self> {
        let mut merged: Vec<CfTerm> = Vec::new();
        for t in terms {
            if !(t.offset.is_finite() && t.offset >= 0.0) {
                return Err(Error::InvalidInput(format!("invalid term offset {}", t.offset)));
            }
            if t.coeffs.0.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidInput("non-finite coefficient".into()));
            }
            match merged
                .iter_mut()
                .find(|m| m.mult == t.mult && (m.offset - t.offset).abs() <= 1e-12 * (1.0 + t.offset))
            {
                Some(m) => m.coeffs = m.coeffs.add(&t.coeffs),
                None => merged.push(t),
            }
        }
        merged.retain(|t| !t.coeffs.is_zero());
        if merged.is_empty() {
            return Err(Error::DegeneratePencil);
        }
        merged.sort_by(|a, b| a.mult.cmp(&b.mult).then(a.offset.total_cmp(&b.offset)));
        Ok(Self { terms: merged })
    }

    pub fn terms(&self) -> &[CfTerm] {
        &self.terms
    }

    /// Highest power of `exp(-s tau)` present.
    pub fn max_mult(&self) -> u32 {
        self.terms.iter().map(|t| t.mult).max().unwrap_or(0)
    }

    pub fn has_offsets(&self) -> bool {
        self.terms.iter().any(|t| t.offset > 0.0)
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|t| t.coeffs.degree()).max().unwrap_or(0)
    }

    pub fn eval(&self, s: Complex64, tau: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|t| t.coeffs.eval_c(s) * (-s * (t.offset + t.mult as f64 * tau)).exp())
            .sum()
    }

    /// Sum of the term magnitudes; the reference scale for residual tests.
    pub fn scale(&self, s: Complex64, tau: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| (t.coeffs.eval_c(s) * (-s * (t.offset + t.mult as f64 * tau)).exp()).norm())
            .sum::<f64>()
            .max(f64::MIN_POSITIVE)
    }

    /// `(F, dF/ds, dF/dtau)` at one point.
    pub fn eval_partials(&self, s: Complex64, tau: f64) -> (Complex64, Complex64, Complex64) {
        let mut f = Complex64::new(0.0, 0.0);
        let mut fs = Complex64::new(0.0, 0.0);
        let mut ft = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let d = t.offset + t.mult as f64 * tau;
            let e = (-s * d).exp();
            let (q, dq) = t.coeffs.eval_with_deriv(s);
            f += q * e;
            fs += (dq - q * d) * e;
            ft -= s * t.mult as f64 * q * e;
        }
        (f, fs, ft)
    }

    /// Scale for the partial derivatives, analogous to [`Self::scale`].
    pub fn partials_scale(&self, s: Complex64, tau: f64) -> (f64, f64) {
        let mut ss = 0.0;
        let mut st = 0.0;
        for t in &self.terms {
            let d = t.offset + t.mult as f64 * tau;
            let e = (-s * d).exp().norm();
            let (q, dq) = t.coeffs.eval_with_deriv(s);
            ss += (dq.norm() + q.norm() * d) * e;
            st += s.norm() * t.mult as f64 * q.norm() * e;
        }
        (ss.max(f64::MIN_POSITIVE), st.max(f64::MIN_POSITIVE))
    }

    /// Coefficients `C_m(omega)` of `F(j omega, .)` as a polynomial in `u = exp(-j omega tau)`.
    pub fn unit_coefficients(&self, omega: f64) -> Vec<Complex64> {
        let s = Complex64::new(0.0, omega);
        let mut c = vec![Complex64::new(0.0, 0.0); self.max_mult() as usize + 1];
        for t in &self.terms {
            c[t.mult as usize] += t.coeffs.eval_c(s) * (-s * t.offset).exp();
        }
        c
    }

    /// Derivatives of [`Self::unit_coefficients`] with respect to `omega`.
    pub fn unit_coefficients_deriv(&self, omega: f64) -> Vec<Complex64> {
        let s = Complex64::new(0.0, omega);
        let j = Complex64::new(0.0, 1.0);
        let mut c = vec![Complex64::new(0.0, 0.0); self.max_mult() as usize + 1];
        for t in &self.terms {
            let (q, dq) = t.coeffs.eval_with_deriv(s);
            c[t.mult as usize] += j * (dq - q * t.offset) * (-s * t.offset).exp();
        }
        c
    }

    /// Upper bound on any imaginary-axis crossing frequency.
    ///
    /// On the axis `|exp(-s d)| = 1`, so a root needs `omega^n <= sum_i c_i omega^i`
    /// where `c_i` collects the magnitudes of every other coefficient of power `i`.
    pub fn frequency_bound(&self) -> Option<f64> {
        let n = self.degree();
        let lead = self.terms.iter().find(|t| t.offset == 0.0 && t.mult == 0)?;
        let lead_c = lead.coeffs.0.get(n).copied().unwrap_or(0.0).abs();
        if lead_c == 0.0 {
            return None;
        }
        let mut c = vec![0.0; n + 1];
        for t in &self.terms {
            for (i, v) in t.coeffs.0.iter().enumerate() {
                c[i] += v.abs();
            }
        }
        c[n] -= lead_c;
        if c[n] > 1e-12 * lead_c {
            // neutral-type: the leading power also appears with a delay
            return None;
        }
        let m = c[..n].iter().fold(0.0_f64, |a, v| a.max(*v)) / lead_c;
        Some(1.0 + m)
    }
}

/// Characteristic function `det(sI - sum_k A_k exp(-s d_k))` of a system.
///
/// The determinant is sampled on a tensor grid (`s` on a scaled circle, one
/// exponential symbol per distinct fixed delay plus one for `tau`, each on the
/// roots of unity) and the coefficients recovered by an inverse discrete Fourier
/// transform, which is exact because every variable has degree at most `n`.
pub fn char_function(sys: &TimeDelaySystem) -> Result<CharacteristicFunction> {
    let n = sys.dim();
    let mut atoms: Vec<f64> = sys.terms().iter().filter(|t| t.delay > 0.0).map(|t| t.delay).collect();
    atoms.sort_by(f64::total_cmp);
    atoms.dedup();
    let has_tau = sys.has_variable_terms();
    let nvars = 1 + atoms.len() + usize::from(has_tau);
    let len = n + 1;
    let total = len.checked_pow(nvars as u32).filter(|t| *t <= MAX_SAMPLES).ok_or_else(|| {
        Error::InvalidInput(format!("too many distinct delays ({}) for interpolation", atoms.len()))
    })?;

    // monomial exponents of each term over the symbol list [atoms..., tau]
    let term_exps: Vec<Vec<usize>> = sys
        .terms()
        .iter()
        .map(|t| {
            let mut e = vec![0usize; nvars - 1];
            if t.delay > 0.0 {
                let k = atoms.iter().position(|a| *a == t.delay).expect("atom");
                e[k] = 1;
            }
            if t.variable {
                e[nvars - 2] = 1;
            }
            e
        })
        .collect();
    let mats: Vec<CMatrix> = sys.terms().iter().map(|t| to_complex(t.matrix.inner())).collect();

    let rho = sampling_radius(sys)?;
    let roots: Vec<Complex64> = (0..len).map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / len as f64)).collect();

    let mut data = vec![Complex64::new(0.0, 0.0); total];
    let mut idx = vec![0usize; nvars];
    for (flat, slot) in data.iter_mut().enumerate() {
        unflatten(flat, len, &mut idx);
        let s = roots[idx[0]] * rho;
        let mut m = CMatrix::from_diagonal_element(n, n, s);
        for (mat, exps) in mats.iter().zip(&term_exps) {
            let w: Complex64 = exps
                .iter()
                .enumerate()
                .filter(|(_, e)| **e > 0)
                .map(|(v, _)| roots[idx[v + 1]])
                .product();
            m -= mat * w;
        }
        *slot = m.determinant();
    }
    for axis in 0..nvars {
        inverse_dft_axis(&mut data, len, nvars, axis);
    }

    let max_scaled = data.iter().fold(0.0_f64, |a, v| a.max(v.norm()));
    if max_scaled == 0.0 {
        return Err(Error::DegeneratePencil);
    }
    let mut terms: Vec<CfTerm> = Vec::new();
    let mut by_key: Vec<(Vec<usize>, Vec<f64>)> = Vec::new();
    for (flat, v) in data.iter().enumerate() {
        unflatten(flat, len, &mut idx);
        let power = idx[0];
        let value = if v.norm() <= CHOP_REL * max_scaled { 0.0 } else { v.re / rho.powi(power as i32) };
        let key = idx[1..].to_vec();
        match by_key.iter_mut().find(|(k, _)| *k == key) {
            Some((_, c)) => c[power] = value,
            None => {
                let mut c = vec![0.0; len];
                c[power] = value;
                by_key.push((key, c));
            }
        }
    }
    for (key, coeffs) in by_key {
        let offset: f64 = atoms.iter().zip(&key).map(|(a, e)| a * *e as f64).sum();
        let mult = if has_tau { key[nvars - 2] as u32 } else { 0 };
        terms.push(CfTerm { coeffs: Poly::new(coeffs), offset, mult });
    }
    let mut f = CharacteristicFunction::from_terms(terms)?;
    // the undelayed term carries the monic s^n
    if let Some(t) = f.terms.iter_mut().find(|t| t.offset == 0.0 && t.mult == 0) {
        if t.coeffs.0.len() == n + 1 && (t.coeffs.0[n] - 1.0).abs() < 1e-9 {
            t.coeffs.0[n] = 1.0;
        }
    }
    check_fit(sys, &f, rho)?;
    Ok(f)
}

fn sampling_radius(sys: &TimeDelaySystem) -> Result<f64> {
    let r0 = eigenvalues(sys.undelayed().inner())?.iter().fold(0.0_f64, |a, l| a.max(l.norm()));
    let r1 = eigenvalues(&sys.matrix_sum())?.iter().fold(0.0_f64, |a, l| a.max(l.norm()));
    Ok(1.0_f64.max(r0).max(r1))
}

fn check_fit(sys: &TimeDelaySystem, f: &CharacteristicFunction, rho: f64) -> Result<()> {
    // off-grid probe points
    let probes = [(0.37, 0.61), (0.83, 2.9), (1.21, 4.4), (0.55, 5.7)];
    let mut worst = 0.0_f64;
    for (r, a) in probes {
        let s = Complex64::from_polar(r * rho, a);
        for tau in [0.0, 0.7, 1.9] {
            let m = sys.char_matrix(s, tau);
            let direct = m.determinant();
            let fitted = f.eval(s, tau);
            // Hadamard bound: the size of the rounding error in `direct`
            let hadamard: f64 = m.column_iter().map(|c| c.norm()).product();
            let scale = f.scale(s, tau).max(direct.norm()).max(hadamard);
            worst = worst.max((direct - fitted).norm() / scale);
        }
    }
    if worst > FIT_REL {
        return Err(Error::FitResidual(worst));
    }
    Ok(())
}

fn unflatten(mut flat: usize, len: usize, idx: &mut [usize]) {
    for slot in idx.iter_mut().rev() {
        *slot = flat % len;
        flat /= len;
    }
}

fn inverse_dft_axis(data: &mut [Complex64], len: usize, nvars: usize, axis: usize) {
    let stride = len.pow((nvars - 1 - axis) as u32);
    let block = stride * len;
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    let tw: Vec<Complex64> = (0..len)
        .map(|k| Complex64::from_polar(1.0 / len as f64, -2.0 * PI * k as f64 / len as f64))
        .collect();
    for start in (0..data.len()).step_by(block) {
        for off in 0..stride {
            for (k, b) in buf.iter_mut().enumerate() {
                *b = (0..len).map(|j| data[start + off + j * stride] * tw[(j * k) % len]).sum();
            }
            for (k, b) in buf.iter().enumerate() {
                data[start + off + k * stride] = *b;
            }
        }
    }
}
