//! Few interacting bosons in a one-dimensional box split into `W` wells by
//! delta barriers, with pairwise contact interactions.
//!
//! Energies are measured in units of the lowest box level; positions live on
//! `[0, π]`. The Hamiltonian `H = T + τ·V + γ·U` is assembled in the
//! positive-parity bosonic Fock basis of box modes and diagonalized densely.
//! Downstream modules turn the spectra into quantum-chaos diagnostics:
//! Brody level-spacing fits, off-diagonal matrix-element statistics of the
//! kinetic energy, and survival-probability correlation holes. The `limits`
//! module provides independently solvable reference spectra for the
//! non-interacting, hard-core, and decoupled-well corners of the parameter
//! space.

pub mod dynamics;
pub mod eth;
pub mod hilbert;
pub mod limits;
pub mod linalg;
pub mod spectrum;
pub mod stats;

pub use hilbert::{HamiltonianParams, SectorBasis, SymMatrix};
pub use spectrum::SpectralResult;
