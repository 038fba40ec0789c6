//! Construction and verification of non-Hermitian parent Hamiltonians for
//! translation-invariant matrix product states.

pub mod ed;
pub mod io;
pub mod itebd;
pub mod linalg;
pub mod mps;
pub mod observables;
pub mod parent;
pub mod spin;

pub use ed::{ChainBoundary, ChainHamiltonian, SpectrumReport};
pub use itebd::{Checkpoint, ConvergenceTrace, EvolutionConfig, UnitCellState};
pub use linalg::{CMatrix, CVector, C64};
pub use mps::{StatePair, TransferObject, UniformMps};
pub use observables::Mode;
pub use parent::LocalProjector;
