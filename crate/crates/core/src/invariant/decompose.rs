//! Simultaneous block triangularization and the induced subsystem split.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::subspace::{find_common_invariant_subspaces, invariant_check, SubspaceBasis};
use crate::config::ToleranceConfig;
use crate::error::{Error, Result};
use crate::linalg::{orthonormal_completion, singular_values, RealMatrix};
use crate::quasipoly::TimeDelaySystem;

/// Blocks of `Q^-1 A Q = [[top_left, coupling], [bottom_left, bottom_right]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSet {
    pub top_left: RealMatrix,
    /// `k x (n - k)`, stored as rows.
    pub coupling: Vec<Vec<f64>>,
    pub bottom_right: RealMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionResult {
    #[serde(rename = "Q")]
    pub q: RealMatrix,
    #[serde(rename = "Qinv")]
    pub q_inv: RealMatrix,
    pub blocks: Vec<BlockSet>,
    /// Largest Frobenius norm of a bottom-left block.
    pub residual: f64,
}

impl DecompositionResult {
    pub fn subspace_dim(&self) -> usize {
        self.blocks.first().map(|b| b.top_left.nrows()).unwrap_or(0)
    }
}

/// Transforms every matrix with `Q = [W | orthonormal completion]`.
pub fn block_triangularize(mats: &[RealMatrix], w: &SubspaceBasis, cfg: &ToleranceConfig) -> Result<DecompositionResult> {
    cfg.validate()?;
    let n = w.ambient_dim();
    let k = w.dim();
    let comp = orthonormal_completion(w.basis().inner());
    let mut q = DMatrix::<f64>::zeros(n, n);
    q.view_mut((0, 0), (n, k)).copy_from(w.basis().inner());
    q.view_mut((0, k), (n, n - k)).copy_from(&comp);
    if singular_values(&q)?.last().copied().unwrap_or(0.0) < 1e-12 {
        return Err(Error::SingularTransform);
    }
    let q_inv = q.transpose();
    let mut blocks = Vec::with_capacity(mats.len());
    let mut residual = 0.0_f64;
    let mut max_norm = 0.0_f64;
    for (i, a) in mats.iter().enumerate() {
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::DimensionMismatch(format!("matrix {i} is {}x{}, expected {n}x{n}", a.nrows(), a.ncols())));
        }
        max_norm = max_norm.max(a.inner().norm());
        let t = &q_inv * a.inner() * &q;
        residual = residual.max(t.view((k, 0), (n - k, k)).norm());
        let coupling = t.view((0, k), (k, n - k)).into_owned();
        blocks.push(BlockSet {
            top_left: RealMatrix::new(t.view((0, 0), (k, k)).into_owned())?,
            coupling: (0..k).map(|r| coupling.row(r).iter().copied().collect()).collect(),
            bottom_right: RealMatrix::new(t.view((k, k), (n - k, n - k)).into_owned())?,
        });
    }
    if residual > cfg.residual_tol * max_norm.max(f64::MIN_POSITIVE) || !invariant_check(w, mats, cfg)? {
        return Err(Error::NotInvariant { residual });
    }
    Ok(DecompositionResult { q: RealMatrix::new(q)?, q_inv: RealMatrix::new(q_inv)?, blocks, residual })
}

/// Splits `x' = A1 x + A2 x(t - tau)` into the two block subsystems.
pub fn decompose_system(sys: &TimeDelaySystem, cfg: &ToleranceConfig) -> Result<(DecompositionResult, Vec<TimeDelaySystem>)> {
    let (a1, a2) = sys
        .as_single_delay()
        .ok_or_else(|| Error::InvalidInput("decomposition needs exactly the terms (0, A1) and (tau, A2)".into()))?;
    let mats = [a1.clone(), a2.clone()];
    for w in find_common_invariant_subspaces(a1, a2, cfg, None)? {
        match block_triangularize(&mats, &w, cfg) {
            Ok(d) => {
                let top = TimeDelaySystem::single_delay(d.blocks[0].top_left.clone(), d.blocks[1].top_left.clone())?;
                let bottom =
                    TimeDelaySystem::single_delay(d.blocks[0].bottom_right.clone(), d.blocks[1].bottom_right.clone())?;
                return Ok((d, vec![top, bottom]));
            }
            Err(Error::NotInvariant { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::NoDecomposition)
}
