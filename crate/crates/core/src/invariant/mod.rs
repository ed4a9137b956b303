//! Jordan chains, common invariant subspaces and simultaneous block triangularization.

pub mod decompose;
pub mod jordan;
pub mod subspace;

pub use decompose::{block_triangularize, decompose_system, BlockSet, DecompositionResult};
pub use jordan::{jordan_chains, JordanChain};
pub use subspace::{common_eigenvectors, find_common_invariant_subspaces, invariant_check, SubspaceBasis};
