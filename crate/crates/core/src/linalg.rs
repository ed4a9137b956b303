//! Matrix type and the dense linear-algebra helpers shared across modules.

use std::ops::Deref;

use nalgebra::{ComplexField, DMatrix, DVector, Schur, SVD};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const SVD_MAX_ITER: usize = 10_000;
const SCHUR_MAX_ITER: usize = 10_000;

/// A real matrix with finite entries and at least one row and column.
///
/// Serialized as a JSON array of rows.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix(DMatrix<f64>);

impl RealMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(Error::InvalidInput("matrix must have at least one row and column".into()));
        }
        if let Some((idx, _)) = m.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            // column-major storage
            let (r, c) = (idx % m.nrows(), idx / m.nrows());
            return Err(Error::InvalidInput(format!("non-finite entry at row {r}, column {c}")));
        }
        Ok(RealMatrix(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
        if let Some(i) = rows.iter().position(|r| r.len() != ncols) {
            return Err(Error::DimensionMismatch(format!(
                "row {i} has {} entries, expected {ncols}",
                rows[i].len()
            )));
        }
        Self::new(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        RealMatrix(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        RealMatrix(DMatrix::identity(n, n))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.0.nrows())
            .map(|i| self.0.row(i).iter().copied().collect())
            .collect()
    }

    pub fn is_square(&self) -> bool {
        self.0.nrows() == self.0.ncols()
    }

    pub fn inner(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

impl Deref for RealMatrix {
    type Target = DMatrix<f64>;
    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

impl Serialize for RealMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RealMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        RealMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|v| Complex64::new(v, 0.0))
}

pub fn svd<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> Result<SVD<T, nalgebra::Dyn, nalgebra::Dyn>> {
    SVD::try_new(m.clone(), true, true, f64::EPSILON, SVD_MAX_ITER)
        .ok_or(Error::EigenNoConvergence(m.nrows().max(m.ncols())))
}

/// Singular values in descending order.
pub fn singular_values<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> Result<Vec<f64>> {
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let s = SVD::try_new(m.clone(), false, false, f64::EPSILON, SVD_MAX_ITER)
        .ok_or(Error::EigenNoConvergence(m.nrows().max(m.ncols())))?;
    Ok(s.singular_values.iter().copied().collect())
}

/// Number of singular values above `rel_tol` times the largest one.
pub fn numerical_rank<T: ComplexField<RealField = f64>>(m: &DMatrix<T>, rel_tol: f64) -> Result<usize> {
    let sv = singular_values(m)?;
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|s| **s > rel_tol * top).count())
}

/// Orthonormal basis of the null space of `m`, using the absolute threshold `abs_tol`.
pub fn null_space<T: ComplexField<RealField = f64>>(m: &DMatrix<T>, abs_tol: f64) -> Result<DMatrix<T>> {
    let (r, c) = m.shape();
    // pad to at least square so that the SVD returns a full right basis
    let padded = if r < c {
        let mut p = DMatrix::<T>::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let dec = svd(&padded)?;
    let v_t = dec.v_t.expect("v requested");
    let null_idx: Vec<usize> = (0..c)
        .filter(|&i| i >= dec.singular_values.len() || dec.singular_values[i] <= abs_tol)
        .collect();
    let mut out = DMatrix::<T>::zeros(c, null_idx.len());
    for (k, &i) in null_idx.iter().enumerate() {
        for j in 0..c {
            out[(j, k)] = v_t[(i, j)].clone().conjugate();
        }
    }
    Ok(out)
}

/// Orthonormal basis of the column space, keeping directions above `rel_tol` relative.
pub fn column_basis<T: ComplexField<RealField = f64>>(m: &DMatrix<T>, rel_tol: f64) -> Result<DMatrix<T>> {
    if m.ncols() == 0 {
        return Ok(DMatrix::zeros(m.nrows(), 0));
    }
    let dec = svd(m)?;
    let u = dec.u.expect("u requested");
    let top = dec.singular_values.iter().cloned().fold(0.0, f64::max);
    let keep = dec
        .singular_values
        .iter()
        .filter(|s| top > 0.0 && **s > rel_tol * top)
        .count();
    Ok(u.columns(0, keep).into_owned())
}

/// Eigenvalues of a real square matrix.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITER).ok_or(Error::EigenNoConvergence(n))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Eigenvalues of a complex square matrix.
pub fn eigenvalues_complex(m: &CMatrix) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITER).ok_or(Error::EigenNoConvergence(n))?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

/// `sin` of the largest principal angle between two subspaces given by orthonormal bases.
pub fn subspace_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.ncols() != b.ncols() || a.nrows() != b.nrows() {
        return Ok(1.0);
    }
    let residual = b - a * (a.transpose() * b);
    Ok(singular_values(&residual)?.first().copied().unwrap_or(0.0))
}

/// Orthonormal completion of the columns of `w` to a basis of R^n.
///
/// Column signs are fixed so that the largest-magnitude entry of each completion
/// column is positive.
pub fn orthonormal_completion(w: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, k) = w.shape();
    let mut aug = DMatrix::<f64>::zeros(n, k + n);
    aug.view_mut((0, 0), (n, k)).copy_from(w);
    aug.view_mut((0, k), (n, n)).copy_from(&DMatrix::identity(n, n));
    // Gram-Schmidt with reorthogonalization, skipping dependent columns.
    let mut basis: Vec<DVector<f64>> = (0..k).map(|j| w.column(j).into_owned()).collect();
    for j in k..k + n {
        if basis.len() == n {
            break;
        }
        let mut v = aug.column(j).into_owned();
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dot(&v);
                v -= b * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            v /= norm;
            basis.push(v);
        }
    }
    let mut out = DMatrix::<f64>::zeros(n, n - k);
    for (c, v) in basis.iter().skip(k).enumerate() {
        let imax = v.iamax();
        let sign = if v[imax] < 0.0 { -1.0 } else { 1.0 };
        out.set_column(c, &(v * sign));
    }
    out
}

/// Frobenius norm.
pub fn fro(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
