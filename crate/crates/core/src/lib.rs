//! Numerical invariants of diffeomorphisms of the flat torus `T^d`.
//!
//! The crate is organised bottom-up:
//!
//! * [`system`] defines the maps (integer toral automorphisms and small
//!   trigonometric perturbations of them) and the torus geometry.
//! * [`linalg`] holds the dense linear algebra every estimator shares:
//!   positive-diagonal QR, exterior powers, restricted norms and angles
//!   between subspaces, and the spectral radius.
//! * [`bundles`] estimates the splitting `E^cs ⊕ E^u` along orbits, checks
//!   domination and computes Lyapunov exponents.
//! * [`growth`] computes the five unstable volume-growth rates and the
//!   boundary-to-volume ratio of iterated disks.
//! * [`entropy`] estimates metric entropy from `(n, δ)`-separated counts.
//! * [`cohomology`] computes the action of an integer matrix on `H^u(T^d)`.
//! * [`harness`] runs verification campaigns and writes reports.

pub mod bundles;
pub mod cohomology;
pub mod entropy;
mod error;
pub mod growth;
pub mod harness;
pub mod linalg;
mod par;
pub mod rng;
pub mod system;

pub use error::{Error, Result};
pub use linalg::{IntMatrix, Mat, Subspace};
pub use system::{Point, TorusDiffeo, TorusMap};
