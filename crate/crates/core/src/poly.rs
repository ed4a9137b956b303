//! Dense real polynomials in ascending coefficient order.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        Poly(coeffs)
    }

    pub fn zero() -> Self {
        Poly(vec![0.0])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| *c == 0.0)
    }

    pub fn degree(&self) -> usize {
        self.0.iter().rposition(|c| *c != 0.0).unwrap_or(0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn eval_c(&self, s: Complex64) -> Complex64 {
        self.0
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * s + c)
    }

    /// Value and first derivative at a complex point.
    pub fn eval_with_deriv(&self, s: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for c in self.0.iter().rev() {
            dp = dp * s + p;
            p = p * s + c;
        }
        (p, dp)
    }

    /// Sum of coefficient magnitudes weighted by |s|^i.
    pub fn abs_eval(&self, r: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * r + c.abs())
    }

    pub fn derivative(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly::zero();
        }
        Poly::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * i as f64)
                .collect(),
        )
    }

    /// p(-s)
    pub fn reflect(&self) -> Poly {
        Poly(
            self.0
                .iter()
                .enumerate()
                .map(|(i, c)| if i % 2 == 1 { -c } else { *c })
                .collect(),
        )
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let len = self.0.len().max(other.0.len());
        let out = (0..len)
            .map(|i| self.0.get(i).copied().unwrap_or(0.0) + other.0.get(i).copied().unwrap_or(0.0))
            .collect();
        Poly::new(out)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let len = self.0.len().max(other.0.len());
        let out = (0..len)
            .map(|i| self.0.get(i).copied().unwrap_or(0.0) - other.0.get(i).copied().unwrap_or(0.0))
            .collect();
        Poly::new(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Zero out coefficients below `tol` in absolute value.
    pub fn chop(&self, tol: f64) -> Poly {
        Poly::new(self.0.iter().map(|c| if c.abs() <= tol { 0.0 } else { *c }).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horner_and_derivative() {
        // 1 - 2s + 3s^2
        let p = Poly::new(vec![1.0, -2.0, 3.0]);
        assert_eq!(p.eval(2.0), 9.0);
        assert_eq!(p.derivative(), Poly::new(vec![-2.0, 6.0]));
        let (v, d) = p.eval_with_deriv(Complex64::new(0.0, 1.0));
        assert_eq!(v, Complex64::new(-2.0, -2.0));
        assert_eq!(d, Complex64::new(-2.0, 6.0));
    }

    #[test]
    fn reflect_and_products() {
        let p = Poly::new(vec![1.0, -1.0, 1.0]);
        let q = p.mul(&p.reflect());
        // (s^2 - s + 1)(s^2 + s + 1) = s^4 + s^2 + 1
        assert_eq!(q, Poly::new(vec![1.0, 0.0, 1.0, 0.0, 1.0]));
        assert_eq!(q.sub(&q), Poly::zero());
        assert_eq!(q.degree(), 4);
    }
}
