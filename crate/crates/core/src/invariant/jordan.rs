//! Jordan chains from null spaces of powers of `A - lambda I`.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::ToleranceConfig;
use crate::error::{Error, Result};
use crate::linalg::{column_basis, eigenvalues, null_space, to_complex, CVector, RealMatrix};

/// Vectors `x_0 .. x_k` with `A x_0 = lambda x_0` and `A x_j = lambda x_j + x_(j-1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JordanChain {
    pub eigenvalue: Complex64,
    pub vectors: Vec<CVector>,
}

impl JordanChain {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.eigenvalue.im == 0.0
    }
}

/// Eigenvalue groups: mean value and algebraic multiplicity.
pub(crate) fn cluster_eigenvalues(eigs: &[Complex64], radius: f64) -> Vec<(Complex64, usize)> {
    let mut sorted = eigs.to_vec();
    sorted.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut groups: Vec<Vec<Complex64>> = Vec::new();
    for e in sorted {
        // single-linkage clustering
        let hits: Vec<usize> = groups
            .iter()
            .enumerate()
            .filter(|(_, g)| g.iter().any(|x| (x - e).norm() <= radius))
            .map(|(i, _)| i)
            .collect();
        match hits.first() {
            None => groups.push(vec![e]),
            Some(&first) => {
                groups[first].push(e);
                for &i in hits.iter().skip(1).rev() {
                    let g = groups.remove(i);
                    groups[first].extend(g);
                }
            }
        }
    }
    let mut out: Vec<(Complex64, usize)> = groups
        .into_iter()
        .map(|g| {
            let mean = g.iter().sum::<Complex64>() / g.len() as f64;
            let mean = if mean.im.abs() <= radius { Complex64::new(mean.re, 0.0) } else { mean };
            (mean, g.len())
        })
        .collect();
    out.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    out
}

/// Chains of one eigenvalue group, given `N = A - lambda I` and the multiplicity.
fn chains_for<T: ComplexField<RealField = f64> + Copy>(
    nmat: &DMatrix<T>,
    mult: usize,
    null_tol: f64,
) -> Result<Vec<Vec<DVector<T>>>> {
    let n = nmat.nrows();
    let scale = nmat.norm().max(1.0);
    // kernels K_1 subset K_2 subset ... until the dimension reaches the multiplicity
    let mut kernels: Vec<DMatrix<T>> = vec![DMatrix::zeros(n, 0)];
    let mut power = nmat.clone();
    for k in 1..=mult {
        let ker = null_space(&power, null_tol * scale.powi(k as i32))?;
        let prev = kernels.last().map(|m| m.ncols()).unwrap_or(0);
        if ker.ncols() <= prev {
            break;
        }
        kernels.push(ker);
        if kernels.last().map(|m| m.ncols()) == Some(mult) {
            break;
        }
        power = &power * nmat;
    }
    let top = kernels.len() - 1;
    if kernels[top].ncols() != mult {
        return Err(Error::JordanStructure(format!(
            "generalized eigenspace has dimension {} but multiplicity is {mult}",
            kernels[top].ncols()
        )));
    }
    let mut chains: Vec<Vec<DVector<T>>> = Vec::new();
    // vectors placed at each level by longer chains: images N^j of their heads
    for level in (1..=top).rev() {
        let wanted = kernels[level].ncols() - kernels[level - 1].ncols();
        let existing: Vec<DVector<T>> = chains
            .iter()
            .filter(|c| c.len() >= level)
            .map(|c| c[level - 1].clone())
            .collect();
        let fresh = wanted.saturating_sub(existing.len());
        if fresh == 0 {
            continue;
        }
        // span(K_(level-1)) + span(existing), orthonormalized
        let mut spanning = DMatrix::<T>::zeros(n, kernels[level - 1].ncols() + existing.len());
        spanning.view_mut((0, 0), (n, kernels[level - 1].ncols())).copy_from(&kernels[level - 1]);
        for (i, v) in existing.iter().enumerate() {
            spanning.set_column(kernels[level - 1].ncols() + i, v);
        }
        let q = column_basis(&spanning, 1e-10)?;
        let kl = &kernels[level];
        let projected = kl - &q * (q.adjoint() * kl);
        let heads = column_basis(&projected, 1e-6)?;
        if heads.ncols() < fresh {
            return Err(Error::JordanStructure(format!(
                "expected {fresh} new chains at level {level}, found {}",
                heads.ncols()
            )));
        }
        for h in 0..fresh {
            let head = heads.column(h).into_owned();
            let mut vecs = vec![head];
            for _ in 1..level {
                let next = nmat * vecs.last().expect("non-empty");
                vecs.push(next);
            }
            vecs.reverse();
            chains.push(vecs);
        }
    }
    // normalize ||x_0|| = 1 and make the largest entry of x_0 real positive
    for c in &mut chains {
        let x0 = &c[0];
        let norm = x0.norm();
        let imax = x0.icamax();
        let phase = x0[imax].clone().signum();
        let factor = phase.conjugate() / T::from_real(norm);
        for v in c.iter_mut() {
            *v *= factor;
        }
    }
    Ok(chains)
}

/// Jordan chains of a real square matrix; vectors of all chains together form a basis.
pub fn jordan_chains(a: &RealMatrix, cfg: &ToleranceConfig) -> Result<Vec<JordanChain>> {
    cfg.validate()?;
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!("matrix is {}x{}, expected square", a.nrows(), a.ncols())));
    }
    let n = a.nrows();
    let groups = cluster_eigenvalues(&eigenvalues(a.inner())?, cfg.eig_cluster_tol);
    let mut out: Vec<JordanChain> = Vec::new();
    for (lambda, mult) in &groups {
        if lambda.im < 0.0 {
            continue;
        }
        if lambda.im == 0.0 {
            let nmat = a.inner() - DMatrix::identity(n, n) * lambda.re;
            for c in chains_for(&nmat, *mult, cfg.null_tol())? {
                out.push(JordanChain {
                    eigenvalue: *lambda,
                    vectors: c.iter().map(|v| v.map(|x| Complex64::new(x, 0.0))).collect(),
                });
            }
        } else {
            let nmat = to_complex(a.inner()) - DMatrix::identity(n, n) * *lambda;
            let partner = groups
                .iter()
                .find(|(l, m)| m == mult && (l - lambda.conj()).norm() <= cfg.eig_cluster_tol.max(1e-12) * 10.0)
                .map(|(l, _)| *l)
                .unwrap_or(lambda.conj());
            for c in chains_for(&nmat, *mult, cfg.null_tol())? {
                let conj: Vec<CVector> = c.iter().map(|v| v.map(|x| x.conj())).collect();
                out.push(JordanChain { eigenvalue: *lambda, vectors: c });
                out.push(JordanChain { eigenvalue: partner, vectors: conj });
            }
        }
    }
    let total: usize = out.iter().map(|c| c.len()).sum();
    if total != n {
        return Err(Error::JordanStructure(format!("chains span {total} of {n} dimensions")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> RealMatrix {
        RealMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn jordan_block() {
        let a = m(&[&[2.0, 1.0], &[0.0, 2.0]]);
        let ch = jordan_chains(&a, &ToleranceConfig::default()).unwrap();
        assert_eq!(ch.len(), 1);
        assert_eq!(ch[0].len(), 2);
        let x0 = &ch[0].vectors[0];
        let x1 = &ch[0].vectors[1];
        assert!((x0[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12 && x0[1].norm() < 1e-12);
        let ac = to_complex(a.inner());
        assert!((&ac * x1 - x1 * Complex64::new(2.0, 0.0) - x0).norm() < 1e-12);
    }

    #[test]
    fn identity_gives_two_trivial_chains() {
        let ch = jordan_chains(&RealMatrix::identity(2), &ToleranceConfig::default()).unwrap();
        assert_eq!(ch.len(), 2);
        assert!(ch.iter().all(|c| c.len() == 1 && (c.eigenvalue - 1.0).norm() < 1e-12));
    }

    #[test]
    fn complex_pair_chains_are_conjugate() {
        let ch = jordan_chains(&m(&[&[0.0, 1.0], &[-1.0, 1.0]]), &ToleranceConfig::default()).unwrap();
        assert_eq!(ch.len(), 2);
        let l = ch[0].eigenvalue;
        assert!((l - Complex64::new(0.5, 3f64.sqrt() / 2.0)).norm() < 1e-12);
        assert!((ch[1].eigenvalue - l.conj()).norm() < 1e-12);
        assert!((&ch[1].vectors[0] - ch[0].vectors[0].map(|x| x.conj())).norm() < 1e-15);
    }

    #[test]
    fn clustering_merges_close_values() {
        let g = cluster_eigenvalues(&[Complex64::new(1.0, 0.0), Complex64::new(1.0 + 1e-9, 0.0), Complex64::new(3.0, 0.0)], 1e-6);
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].1, 2);
    }
}
