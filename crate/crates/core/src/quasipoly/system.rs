use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{to_complex, CMatrix, RealMatrix};

/// One term `A_k x(t - d)` of a retarded system.
///
/// The delay of the term is `delay + tau` when `variable` is set, otherwise just `delay`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayTerm {
    pub delay: f64,
    pub variable: bool,
    pub matrix: RealMatrix,
}

impl DelayTerm {
    pub fn fixed(delay: f64, matrix: RealMatrix) -> Self {
        Self { delay, variable: false, matrix }
    }

    pub fn variable(offset: f64, matrix: RealMatrix) -> Self {
        Self { delay: offset, variable: true, matrix }
    }

    pub fn is_undelayed(&self) -> bool {
        !self.variable && self.delay == 0.0
    }

    pub fn delay_at(&self, tau: f64) -> f64 {
        if self.variable {
            self.delay + tau
        } else {
            self.delay
        }
    }
}

/// `x'(t) = sum_k A_k x(t - d_k) (+ B u(t))`, with the delays of some terms
/// scaling with the analysis parameter `tau`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeDelaySystem {
    n: usize,
    terms: Vec<DelayTerm>,
    input: Option<RealMatrix>,
}

impl TimeDelaySystem {
    pub fn new(terms: Vec<DelayTerm>, input: Option<RealMatrix>) -> Result<Self> {
        let n = terms
            .first()
            .map(|t| t.matrix.nrows())
            .ok_or_else(|| Error::InvalidInput("system has no terms".into()))?;
        for (i, t) in terms.iter().enumerate() {
            if t.matrix.nrows() != n || t.matrix.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "term {i} matrix is {}x{}, expected {n}x{n}",
                    t.matrix.nrows(),
                    t.matrix.ncols()
                )));
            }
            if !(t.delay.is_finite() && t.delay >= 0.0) {
                return Err(Error::InvalidInput(format!("term {i} has invalid delay {}", t.delay)));
            }
        }
        let undelayed = terms.iter().filter(|t| t.is_undelayed()).count();
        if undelayed != 1 {
            return Err(Error::InvalidInput(format!(
                "expected exactly one undelayed term, found {undelayed}"
            )));
        }
        for i in 0..terms.len() {
            for j in 0..i {
                if terms[i].variable == terms[j].variable && terms[i].delay == terms[j].delay {
                    return Err(Error::InvalidInput(format!("terms {j} and {i} have the same delay")));
                }
            }
        }
        if let Some(b) = &input {
            if b.nrows() != n {
                return Err(Error::DimensionMismatch(format!(
                    "input matrix has {} rows, expected {n}",
                    b.nrows()
                )));
            }
        }
        Ok(Self { n, terms, input })
    }

    /// `x'(t) = A1 x(t) + A2 x(t - tau)`.
    pub fn single_delay(a1: RealMatrix, a2: RealMatrix) -> Result<Self> {
        Self::new(vec![DelayTerm::fixed(0.0, a1), DelayTerm::variable(0.0, a2)], None)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[DelayTerm] {
        &self.terms
    }

    pub fn input(&self) -> Option<&RealMatrix> {
        self.input.as_ref()
    }

    pub fn undelayed(&self) -> &RealMatrix {
        &self.terms.iter().find(|t| t.is_undelayed()).expect("validated").matrix
    }

    /// Sum of all matrices: the system obtained when every delay vanishes.
    pub fn matrix_sum(&self) -> DMatrix<f64> {
        self.terms
            .iter()
            .fold(DMatrix::zeros(self.n, self.n), |acc, t| acc + t.matrix.inner())
    }

    /// Whether any term carries a delay that does not scale with `tau`.
    pub fn has_fixed_delays(&self) -> bool {
        self.terms.iter().any(|t| t.delay > 0.0)
    }

    pub fn has_variable_terms(&self) -> bool {
        self.terms.iter().any(|t| t.variable)
    }

    pub fn max_delay(&self, tau: f64) -> f64 {
        self.terms.iter().map(|t| t.delay_at(tau)).fold(0.0, f64::max)
    }

    /// `(delay, matrix)` pairs at a concrete value of `tau`, merging equal delays.
    pub fn delays_at(&self, tau: f64) -> Vec<(f64, DMatrix<f64>)> {
        let mut out: Vec<(f64, DMatrix<f64>)> = Vec::new();
        for t in &self.terms {
            let d = t.delay_at(tau);
            match out.iter_mut().find(|(e, _)| *e == d) {
                Some((_, m)) => *m += t.matrix.inner(),
                None => out.push((d, t.matrix.inner().clone())),
            }
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }

    /// `sI - sum_k A_k exp(-s d_k(tau))`.
    pub fn char_matrix(&self, s: Complex64, tau: f64) -> CMatrix {
        let mut m = CMatrix::from_diagonal_element(self.n, self.n, s);
        for t in &self.terms {
            let e = (-s * t.delay_at(tau)).exp();
            m -= to_complex(t.matrix.inner()) * e;
        }
        m
    }

    /// Determinant of [`Self::char_matrix`] evaluated directly.
    pub fn char_det(&self, s: Complex64, tau: f64) -> Complex64 {
        self.char_matrix(s, tau).determinant()
    }

    /// The `(A1, A2)` pair when this is a single variable-delay system.
    pub fn as_single_delay(&self) -> Option<(&RealMatrix, &RealMatrix)> {
        if self.terms.len() != 2 {
            return None;
        }
        let a1 = self.terms.iter().find(|t| t.is_undelayed())?;
        let a2 = self.terms.iter().find(|t| t.variable && t.delay == 0.0)?;
        Some((&a1.matrix, &a2.matrix))
    }
}
