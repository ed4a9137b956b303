//! Conjugate elimination of the delay symbol (direct method).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::charfn::CharacteristicFunction;
use crate::error::{Error, Result};
use crate::poly::Poly;

/// Real polynomial `W(u)` in `u = omega^2`, ascending coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WPolynomial {
    pub coeffs: Poly,
}

/// Sign of `W'` at a root, with repeated roots reported as zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WSign {
    Positive,
    Negative,
    Zero,
}

impl WSign {
    pub fn as_i32(self) -> i32 {
        match self {
            WSign::Positive => 1,
            WSign::Negative => -1,
            WSign::Zero => 0,
        }
    }
}

impl WPolynomial {
    pub fn eval(&self, u: f64) -> f64 {
        self.coeffs.eval(u)
    }

    pub fn derivative_at(&self, u: f64) -> f64 {
        self.coeffs.derivative().eval(u)
    }

    /// Sign of `W'(u)`; values below `rel_tol` times the derivative scale count as zero.
    pub fn derivative_sign(&self, u: f64, rel_tol: f64) -> WSign {
        let d = self.coeffs.derivative();
        let v = d.eval(u);
        let scale = d.abs_eval(u.abs()).max(f64::MIN_POSITIVE);
        if v.abs() <= rel_tol * scale {
            WSign::Zero
        } else if v > 0.0 {
            WSign::Positive
        } else {
            WSign::Negative
        }
    }
}

/// Eliminates `z = exp(-s tau)` from `F(s, z) = sum_k p_k(s) z^k`.
///
/// Repeats `F <- p_0(-s) F - p_m(s) F^dagger` with `F^dagger = sum_k p_k(-s) z^(m-k)`
/// until no `z` remains, then substitutes `s = j omega` and rewrites the even
/// real polynomial in `u = omega^2`.
pub fn w_polynomial(f: &CharacteristicFunction) -> Result<WPolynomial> {
    if f.has_offsets() {
        return Err(Error::FixedOffsets);
    }
    let m = f.max_mult() as usize;
    let mut p: Vec<Poly> = vec![Poly::zero(); m + 1];
    for t in f.terms() {
        p[t.mult as usize] = p[t.mult as usize].add(&t.coeffs);
    }
    let scale0 = p.iter().map(|q| q.max_abs()).fold(0.0, f64::max);
    if m == 0 {
        p[0] = p[0].mul(&p[0].reflect());
    }
    while p.len() > 1 {
        let deg = p.len() - 1;
        let head = p[0].reflect();
        let tail = p[deg].clone();
        let next: Vec<Poly> = (0..deg)
            .map(|k| head.mul(&p[k]).sub(&tail.mul(&p[deg - k].reflect())))
            .collect();
        p = next;
        let tol = 1e-12 * p.iter().map(|q| q.max_abs()).fold(0.0, f64::max);
        p = p.iter().map(|q| q.chop(tol)).collect();
        while p.len() > 1 && p.last().map(|q| q.is_zero()).unwrap_or(false) {
            p.pop();
        }
    }
    let poly = &p[0];
    if poly.is_zero() || poly.max_abs() <= 1e-14 * scale0 * scale0 {
        return Err(Error::Inconclusive);
    }
    // P(j w) = sum_i c_i j^i w^i; the even part gives W(u)
    let w: Vec<f64> = poly
        .0
        .iter()
        .enumerate()
        .filter(|(i, _)| i % 2 == 0)
        .map(|(i, c)| if (i / 2) % 2 == 0 { *c } else { -*c })
        .collect();
    Ok(WPolynomial { coeffs: Poly::new(w) })
}

/// Generalized `W(omega) = |C_0(j omega)|^2 - |C_1(j omega)|^2` for functions of
/// first degree in `exp(-s tau)`, fixed offsets allowed.
///
/// Returns the sign of `dW/d(omega^2)` at `omega`, which gives the crossing direction
/// exactly like the polynomial form does for purely commensurate functions.
pub fn w_derivative_sign(f: &CharacteristicFunction, omega: f64, rel_tol: f64) -> Result<WSign> {
    if f.max_mult() != 1 {
        return Err(Error::InvalidInput(
            "direct-method sign needs first degree in exp(-s tau)".into(),
        ));
    }
    let c = f.unit_coefficients(omega);
    let dc = f.unit_coefficients_deriv(omega);
    let d0 = 2.0 * (c[0].conj() * dc[0]).re;
    let d1 = 2.0 * (c[1].conj() * dc[1]).re;
    let v = d0 - d1;
    let scale = 2.0 * (c[0].norm() * dc[0].norm() + c[1].norm() * dc[1].norm());
    Ok(if v.abs() <= rel_tol * scale.max(f64::MIN_POSITIVE) {
        WSign::Zero
    } else if v > 0.0 {
        WSign::Positive
    } else {
        WSign::Negative
    })
}

/// `W(omega)` in the generalized form of [`w_derivative_sign`].
pub fn w_value(f: &CharacteristicFunction, omega: f64) -> f64 {
    let c = f.unit_coefficients(omega);
    let tail: f64 = c.iter().skip(1).map(|v: &Complex64| v.norm_sqr()).sum();
    c[0].norm_sqr() - tail
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quasipoly::charfn::CfTerm;

    fn cf(terms: &[(&[f64], f64, u32)]) -> CharacteristicFunction {
        CharacteristicFunction::from_terms(
            terms
                .iter()
                .map(|(c, o, m)| CfTerm { coeffs: Poly::new(c.to_vec()), offset: *o, mult: *m })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn first_block_has_double_root() {
        let f = cf(&[(&[1.0, -1.0, 1.0], 0.0, 0), (&[0.0, -1.0], 0.0, 1)]);
        let w = w_polynomial(&f).unwrap();
        assert_eq!(w.coeffs, Poly::new(vec![1.0, -2.0, 1.0]));
        assert_eq!(w.derivative_sign(1.0, 1e-9), WSign::Zero);
    }

    #[test]
    fn second_block_signs() {
        let f = cf(&[(&[2.0, 0.0, 1.0], 0.0, 0), (&[1.0], 0.0, 1)]);
        let w = w_polynomial(&f).unwrap();
        assert_eq!(w.coeffs, Poly::new(vec![3.0, -4.0, 1.0]));
        assert_eq!(w.derivative_at(3.0), 2.0);
        assert_eq!(w.derivative_at(1.0), -2.0);
        assert_eq!(w.derivative_sign(3.0, 1e-9), WSign::Positive);
        assert_eq!(w.derivative_sign(1.0, 1e-9), WSign::Negative);
    }

    #[test]
    fn no_delay_gives_squared_magnitude() {
        // P(s) = s + 2: |P(j w)|^2 = w^2 + 4
        let f = cf(&[(&[2.0, 1.0], 0.0, 0)]);
        let w = w_polynomial(&f).unwrap();
        assert_eq!(w.coeffs, Poly::new(vec![4.0, 1.0]));
    }

    #[test]
    fn offsets_rejected() {
        let f = cf(&[(&[1.0, 1.0], 0.0, 0), (&[1.0], 1.0, 1)]);
        assert_eq!(w_polynomial(&f).unwrap_err(), Error::FixedOffsets);
    }

    #[test]
    fn generalized_sign_agrees_with_polynomial() {
        let f = cf(&[(&[2.0, 0.0, 1.0], 0.0, 0), (&[1.0], 0.0, 1)]);
        assert_eq!(w_derivative_sign(&f, 3f64.sqrt(), 1e-9).unwrap(), WSign::Positive);
        assert_eq!(w_derivative_sign(&f, 1.0, 1e-9).unwrap(), WSign::Negative);
        assert!(w_value(&f, 1.0).abs() < 1e-14);
    }
}
