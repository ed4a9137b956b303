use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical thresholds shared by the linear-algebra routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Relative singular-value threshold for numerical rank.
    pub rank_tol: f64,
    /// Eigenvalues closer than this are treated as one multiple eigenvalue.
    pub eig_cluster_tol: f64,
    /// Relative acceptance threshold for zero blocks after a similarity transform.
    pub residual_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            rank_tol: 1e-8,
            eig_cluster_tol: 1e-6,
            residual_tol: 1e-8,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rank_tol", self.rank_tol),
            ("eig_cluster_tol", self.eig_cluster_tol),
            ("residual_tol", self.residual_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Threshold used when extracting eigenvector null spaces.
    pub(crate) fn null_tol(&self) -> f64 {
        self.rank_tol.max(self.eig_cluster_tol)
    }
}

/// Settings for the frequency sweep and the stability map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub tol: ToleranceConfig,
    /// Upper end of the frequency sweep; `None` selects a bound from the coefficients.
    pub omega_max: Option<f64>,
    pub grid_points: usize,
    /// Chebyshev nodes for the spectral root computation.
    pub collocation_nodes: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            tol: ToleranceConfig::default(),
            omega_max: None,
            grid_points: 2000,
            collocation_nodes: 40,
        }
    }
}
