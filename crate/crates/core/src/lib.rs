//! Quasipinning analysis of N-fermion states against generalized Pauli
//! constraints.

pub mod error;
pub mod families;
pub mod fock;
pub mod gpc;
pub mod linalg;
pub mod nobasis;
pub mod pinning;
pub mod rdm;
pub mod sampler;

pub use error::{PinError, Result};
