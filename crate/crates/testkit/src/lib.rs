//! Oracles and generators for testing the core crate.
//!
//! Everything here recomputes quantities the core crate produces, by a
//! deliberately different algorithm: characteristic-polynomial roots
//! instead of Schur decompositions, cyclic Jacobi rotations instead of
//! packaged symmetric solvers, sequential node elimination instead of a
//! block Schur complement, finite differences instead of analytic rates.
//! Agreement between the two routes is what the oracle tests assert.

mod diff;
mod gen;
mod poly;
mod realsym;
mod reduce;

pub use diff::directional_derivative;
pub use gen::{certified_system, random_connected_branches, random_network, CertifiedSystem};
pub use poly::{char_poly, eigenvalues_oracle, poly_roots};
pub use realsym::{jacobi_eigenvalues, real_embedding, spectral_norm_oracle};
pub use reduce::eliminate_trailing;
