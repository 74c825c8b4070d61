//! Open-system simulation of a spin-chain quantum battery coupled to a lossy
//! thermal cavity and an auxiliary catalyst qubit.
//!
//! The composite basis is ordered `[cavity, spin_1 .. spin_N, catalyst]` with the
//! cavity as the most significant index. Two-level systems are ground-first, so
//! the lowering operator is `[[0, 1], [0, 0]]`. Units have `hbar = 1`.

pub mod density;
pub mod error;
pub mod evolve;
pub mod hilbert;
pub mod lindblad;
pub mod model;
pub mod observables;
pub mod cli;
mod sparse;

pub use density::DensityMatrix;
pub use error::{Error, Result};
pub use hilbert::{HilbertSignature, Operator, StateVector};
pub use model::ModelParams;
