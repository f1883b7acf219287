//! Wick-theorem violation and interaction distance for fermionic
//! entanglement spectra.
//!
//! The crate is organised bottom-up:
//!
//! - [`spectra`]: mode energies, labeled entanglement spectra and the exact
//!   subset (Möbius) transform between them.
//! - [`gibbs`]: brute-force thermal expectation values over all occupation
//!   patterns.
//! - [`wick`]: the violation `W = |<n_i n_j> - <n_i><n_j>|` by enumeration,
//!   the two-mode closed form, and first-order perturbation theory.
//! - [`intdist`]: the interaction distance `D_F`, a trace-distance fit to the
//!   closest free spectrum, and the bound `W <= 6 D_F`.
//! - [`edengine`]: exact diagonalization of a spinless t-V chain, reduced
//!   density matrices, natural orbitals and directly measured correlators.
//! - [`cli`]: the `wickdist` command-line front end.

pub mod cli;
pub mod edengine;
pub mod error;
pub mod gibbs;
pub mod intdist;
pub mod spectra;
pub mod subset;
pub mod sum;
pub mod wick;

pub use error::{Error, Result};
pub use spectra::{EntanglementSpectrum, Level, ModeEnergies, OccupationPattern};
