//! Stability analysis and delayed-feedback stabilization of linear retarded
//! time-delay systems.

pub mod config;
pub mod error;
pub mod feedback;
pub mod invariant;
pub mod linalg;
pub mod pipeline;
pub mod poly;
pub mod quasipoly;
pub mod simulate;

pub use config::{AnalysisConfig, ToleranceConfig};
pub use error::{Error, Result};
pub use linalg::RealMatrix;
pub use poly::Poly;
