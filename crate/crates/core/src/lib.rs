//! Driven magnon–qubit squeezing: operators, Hamiltonians, open-system
//! dynamics, squeezing observables and the figure experiments.

pub mod error;
pub mod experiments;
pub mod gaussian;
pub mod hamiltonian;
pub mod linalg;
pub mod lindblad;
pub mod observables;
pub mod ops;
pub mod params;
pub mod validate;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, C64};
pub use ops::HilbertSpec;
pub use params::{derive, DerivedParams, SystemParams};
