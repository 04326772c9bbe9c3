//! Discrete differential geometry of closed triangulated surfaces in R³/R⁴:
//! curvature energies (Willmore, tracefree), Möbius group action and
//! normalization, conformal uniformization to constant curvature, genus-1
//! moduli extraction, and Grassmannian Gauss-map diagnostics in R⁴.
//!
//! The crate is `no_std` (alloc required); all file formats and the command
//! line live in the companion `willmore-lab` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod curvature;
pub mod error;
pub mod gaussmap4;
pub mod generate;
pub mod mesh;
pub mod moduli;
pub mod moebius;
pub mod sparse;
pub mod uniformize;
pub mod geom;

pub use error::Error;
pub use mesh::TriMesh;
