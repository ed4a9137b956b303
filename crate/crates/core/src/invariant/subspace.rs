//! Common invariant subspaces: rank certificate, common eigenvectors, chain-based search.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::jordan::{cluster_eigenvalues, jordan_chains, JordanChain};
use crate::config::ToleranceConfig;
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, null_space, numerical_rank, subspace_distance, to_complex, CMatrix, CVector, RealMatrix};

/// Subspaces closer than this (sine of the largest principal angle) are considered equal.
const SAME_SUBSPACE: f64 = 1e-6;
/// Upper bound on the number of candidate spans tried.
const MAX_CANDIDATES: usize = 4096;

/// Orthonormal basis of a proper subspace of `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceBasis {
    basis: RealMatrix,
}

impl SubspaceBasis {
    /// Wraps a matrix whose columns are already orthonormal.
    pub fn new(basis: RealMatrix) -> Result<Self> {
        let k = basis.ncols();
        let n = basis.nrows();
        if k == 0 || k > n {
            return Err(Error::InvalidInput(format!("subspace dimension {k} must lie in 1..={n}")));
        }
        let gram = basis.transpose() * basis.inner();
        if (gram - DMatrix::<f64>::identity(k, k)).norm() > 1e-10 {
            return Err(Error::InvalidInput("basis columns are not orthonormal".into()));
        }
        Ok(Self { basis })
    }

    /// Orthonormalizes the columns in order (Gram-Schmidt), dropping dependent ones.
    pub fn span(columns: &DMatrix<f64>, rank_tol: f64) -> Result<Self> {
        let scale = columns.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
        let mut out: Vec<DVector<f64>> = Vec::new();
        for c in columns.column_iter() {
            let mut v = c.into_owned();
            for _ in 0..2 {
                for b in &out {
                    let p = b.dot(&v);
                    v -= b * p;
                }
            }
            let nv = v.norm();
            if nv > rank_tol.max(1e-12) * scale.max(f64::MIN_POSITIVE) {
                out.push(v / nv);
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidInput("subspace is empty".into()));
        }
        Self::new(RealMatrix::new(DMatrix::from_columns(&out))?)
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &RealMatrix {
        &self.basis
    }

    /// Sine of the largest principal angle to another subspace.
    pub fn distance(&self, other: &SubspaceBasis) -> Result<f64> {
        subspace_distance(self.basis.inner(), other.basis.inner())
    }
}

/// Whether `rank [J, A_i J] = rank J` for every matrix.
pub fn invariant_check(j: &SubspaceBasis, mats: &[RealMatrix], cfg: &ToleranceConfig) -> Result<bool> {
    cfg.validate()?;
    let (n, r) = (j.ambient_dim(), j.dim());
    for (i, a) in mats.iter().enumerate() {
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "matrix {i} is {}x{}, subspace lives in R^{n}",
                a.nrows(),
                a.ncols()
            )));
        }
        let aj = a.inner() * j.basis().inner();
        let mut stacked = DMatrix::<f64>::zeros(n, 2 * r);
        stacked.view_mut((0, 0), (n, r)).copy_from(j.basis().inner());
        stacked.view_mut((0, r), (n, r)).copy_from(&aj);
        if numerical_rank(&stacked, cfg.rank_tol)? != r {
            return Ok(false);
        }
    }
    Ok(true)
}

fn eigenspaces(a: &DMatrix<f64>, cfg: &ToleranceConfig) -> Result<Vec<(Complex64, CMatrix)>> {
    let n = a.nrows();
    let scale = a.norm().max(1.0);
    let groups = cluster_eigenvalues(&eigenvalues(a)?, cfg.eig_cluster_tol);
    let ac = to_complex(a);
    let mut out = Vec::new();
    for (l, _) in groups {
        let nmat = &ac - CMatrix::identity(n, n) * l;
        let ker = null_space(&nmat, cfg.null_tol() * scale)?;
        if ker.ncols() > 0 {
            out.push((l, ker));
        }
    }
    Ok(out)
}

/// Vectors that are eigenvectors of both matrices (a basis of each pairwise eigenspace intersection).
pub fn common_eigenvectors(a1: &RealMatrix, a2: &RealMatrix, cfg: &ToleranceConfig) -> Result<Vec<CVector>> {
    cfg.validate()?;
    let n = a1.nrows();
    if !a1.is_square() || a2.nrows() != n || a2.ncols() != n {
        return Err(Error::DimensionMismatch("matrices must be square and of equal size".into()));
    }
    let e1 = eigenspaces(a1.inner(), cfg)?;
    let e2 = eigenspaces(a2.inner(), cfg)?;
    let (c1, c2) = (to_complex(a1.inner()), to_complex(a2.inner()));
    let (s1, s2) = (a1.inner().norm().max(f64::MIN_POSITIVE), a2.inner().norm().max(f64::MIN_POSITIVE));
    let mut out: Vec<CVector> = Vec::new();
    for (_, u) in &e1 {
        for (_, v) in &e2 {
            // u a = v b  <=>  [u, -v] [a; b] = 0
            let mut stacked = CMatrix::zeros(n, u.ncols() + v.ncols());
            stacked.view_mut((0, 0), (n, u.ncols())).copy_from(u);
            stacked.view_mut((0, u.ncols()), (n, v.ncols())).copy_from(&(-v));
            let ker = null_space(&stacked, cfg.null_tol())?;
            for col in ker.column_iter() {
                let mut x: CVector = u * col.rows(0, u.ncols());
                let nx = x.norm();
                if nx < 1e-12 {
                    continue;
                }
                x /= Complex64::new(nx, 0.0);
                let imax = x.icamax();
                let phase = x[imax] / x[imax].norm();
                x *= phase.conj();
                let ok = [(&c1, s1), (&c2, s2)].iter().all(|(m, s)| {
                    let ax = *m * &x;
                    let lam = x.dotc(&ax);
                    (ax - &x * lam).norm() <= cfg.null_tol().max(cfg.rank_tol) * 10.0 * s
                });
                if ok && independent_of(&out, &x, cfg.rank_tol)? {
                    out.push(x);
                }
            }
        }
    }
    Ok(out)
}

fn independent_of(set: &[CVector], x: &CVector, tol: f64) -> Result<bool> {
    let mut m = CMatrix::zeros(x.len(), set.len() + 1);
    for (i, v) in set.iter().enumerate() {
        m.set_column(i, v);
    }
    m.set_column(set.len(), x);
    Ok(numerical_rank(&m, tol.max(1e-8))? == set.len() + 1)
}

/// Real-form columns spanning the same real subspace as a set of complex vectors
/// closed under conjugation.
fn realify(vectors: &[CVector]) -> DMatrix<f64> {
    let n = vectors.first().map(|v| v.len()).unwrap_or(0);
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for v in vectors {
        let re = v.map(|x| x.re);
        let im = v.map(|x| x.im);
        cols.push(re);
        if im.norm() > 1e-12 * v.norm() {
            cols.push(im);
        }
    }
    if cols.is_empty() {
        return DMatrix::zeros(n, 0);
    }
    DMatrix::from_columns(&cols)
}

/// Candidate building blocks: per eigenvalue group (conjugate pairs merged), the chains.
fn chain_groups(chains: &[JordanChain]) -> Vec<Vec<(JordanChain, Option<JordanChain>)>> {
    let mut groups: Vec<(Complex64, Vec<(JordanChain, Option<JordanChain>)>)> = Vec::new();
    let mut used = vec![false; chains.len()];
    for i in 0..chains.len() {
        if used[i] || chains[i].eigenvalue.im < 0.0 {
            continue;
        }
        used[i] = true;
        let c = &chains[i];
        let partner = if c.eigenvalue.im > 0.0 {
            // conjugate partner was emitted right after
            let p = (i + 1..chains.len()).find(|&k| {
                !used[k] && chains[k].eigenvalue.im < 0.0 && chains[k].len() == c.len()
            });
            p.map(|k| {
                used[k] = true;
                chains[k].clone()
            })
        } else {
            None
        };
        match groups.iter_mut().find(|(l, _)| (l - c.eigenvalue).norm() == 0.0) {
            Some((_, g)) => g.push((c.clone(), partner)),
            None => groups.push((c.eigenvalue, vec![(c.clone(), partner)])),
        }
    }
    groups.into_iter().map(|(_, g)| g).collect()
}

/// Spans of unions of leading chain segments, realified.
fn chain_candidates(chains: &[JordanChain], n: usize, rank_tol: f64) -> Vec<SubspaceBasis> {
    let groups = chain_groups(chains);
    // each group contributes a tuple of segment lengths
    let options: Vec<Vec<Vec<usize>>> = groups
        .iter()
        .map(|g| {
            let mut tuples: Vec<Vec<usize>> = vec![Vec::new()];
            for (c, _) in g {
                tuples = tuples
                    .into_iter()
                    .flat_map(|t| {
                        (0..=c.len()).map(move |l| {
                            let mut t2 = t.clone();
                            t2.push(l);
                            t2
                        })
                    })
                    .collect();
            }
            tuples
        })
        .collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; options.len()];
    let mut tried = 0;
    loop {
        let mut vecs: Vec<CVector> = Vec::new();
        let mut dim = 0;
        for (gi, group) in groups.iter().enumerate() {
            for ((c, partner), &len) in group.iter().zip(&options[gi][idx[gi]]) {
                vecs.extend(c.vectors.iter().take(len).cloned());
                dim += len * if partner.is_some() { 2 } else { 1 };
            }
        }
        if dim > 0 && dim < n {
            tried += 1;
            if let Ok(s) = SubspaceBasis::span(&realify(&vecs), rank_tol) {
                if s.dim() == dim {
                    out.push(s);
                }
            }
        }
        if tried >= MAX_CANDIDATES {
            log::debug!("candidate enumeration capped at {MAX_CANDIDATES}");
            break;
        }
        // odometer increment
        let mut k = 0;
        while k < idx.len() {
            idx[k] += 1;
            if idx[k] < options[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == idx.len() {
            break;
        }
    }
    out
}

fn push_unique(out: &mut Vec<SubspaceBasis>, s: SubspaceBasis) -> Result<()> {
    for e in out.iter() {
        if e.dim() == s.dim() && e.distance(&s)? < SAME_SUBSPACE {
            return Ok(());
        }
    }
    out.push(s);
    Ok(())
}

/// Common invariant subspaces of `(A1, A2)` reachable from Jordan-chain spans.
///
/// Candidates come from `A1`'s chains (falling back to `A2`'s when none qualify) plus the
/// realified common eigenvectors; results are deduplicated and sorted by dimension.
pub fn find_common_invariant_subspaces(
    a1: &RealMatrix,
    a2: &RealMatrix,
    cfg: &ToleranceConfig,
    k_wanted: Option<usize>,
) -> Result<Vec<SubspaceBasis>> {
    cfg.validate()?;
    let n = a1.nrows();
    if !a1.is_square() || a2.nrows() != n || a2.ncols() != n {
        return Err(Error::DimensionMismatch("matrices must be square and of equal size".into()));
    }
    let mats = [a1.clone(), a2.clone()];
    let keep = |s: &SubspaceBasis| -> Result<bool> {
        Ok(k_wanted.map_or(true, |k| s.dim() == k) && invariant_check(s, &mats, cfg)?)
    };
    let mut out: Vec<SubspaceBasis> = Vec::new();
    for source in [a1, a2] {
        for s in chain_candidates(&jordan_chains(source, cfg)?, n, cfg.rank_tol) {
            if keep(&s)? {
                push_unique(&mut out, s)?;
            }
        }
        if !out.is_empty() {
            break;
        }
    }
    for v in common_eigenvectors(a1, a2, cfg)? {
        if let Ok(s) = SubspaceBasis::span(&realify(&[v]), cfg.rank_tol) {
            if s.dim() < n && keep(&s)? {
                push_unique(&mut out, s)?;
            }
        }
    }
    out.sort_by_key(|s| s.dim());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> RealMatrix {
        RealMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn swap_matrix_moves_e1() {
        let j = SubspaceBasis::span(&DMatrix::from_column_slice(2, 1, &[1.0, 0.0]), 1e-8).unwrap();
        let a = m(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert!(!invariant_check(&j, &[a], &ToleranceConfig::default()).unwrap());
    }

    #[test]
    fn identity_pair_has_common_eigenvectors() {
        let id = RealMatrix::identity(3);
        let v = common_eigenvectors(&id, &id, &ToleranceConfig::default()).unwrap();
        assert_eq!(v.len(), 3);
        let subs = find_common_invariant_subspaces(&id, &id, &ToleranceConfig::default(), None).unwrap();
        assert!(!subs.is_empty());
        assert_eq!(subs[0].dim(), 1);
    }

    #[test]
    fn rotations_share_nothing() {
        let a1 = m(&[&[0.0, -1.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 2.0]]);
        let a2 = m(&[&[2.0, 0.0, 0.0], &[0.0, 0.0, -1.0], &[0.0, 1.0, 0.0]]);
        let v = common_eigenvectors(&a1, &a2, &ToleranceConfig::default()).unwrap();
        assert!(v.is_empty(), "{v:?}");
    }
}
