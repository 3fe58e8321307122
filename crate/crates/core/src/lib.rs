//! Exact dynamics of an electron spin coupled to a bath of N nuclear
//! spins-1/2 by contact hyperfine interactions.
//!
//! The conserved total z-spin splits the 2^(N+1)-dimensional problem into
//! sectors; within each sector the Schroedinger equation is solved exactly.
//! Three independent routes are implemented and cross-validated:
//!
//! * [`evolver`] — spectral propagation of each sector Hamiltonian;
//! * [`laplace_m0`] — the closed-form residue inversion available in the
//!   lowest paired sector, plus pole approximations for any sector;
//! * [`oracle`] — brute-force full-space evolution and a density-matrix
//!   (Liouville) integrator, kept deliberately independent of the sector
//!   machinery.
//!
//! [`model`] owns the single matrix-element convention every route shares;
//! [`basis`] enumerates sectors; [`blocks`] builds sector Hamiltonians;
//! [`observables`] assembles electron spin trajectories and reduced density
//! matrices.

pub mod basis;
pub mod blocks;
pub mod error;
pub mod evolver;
pub mod laplace_m0;
pub(crate) mod linalg;
pub mod model;
pub mod observables;
pub mod oracle;

pub use error::{Error, Result};
pub use model::CouplingSet;
