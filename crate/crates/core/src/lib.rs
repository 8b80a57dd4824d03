//! Normal-bundle charts on the space of unparameterized closed curves.
//!
//! Closed curves in a Riemannian manifold (Euclidean space, the flat torus or
//! the round 2-sphere) are sampled on a uniform grid and treated as points of
//! the quotient by reparameterizations. Around a smooth center curve, nearby
//! classes are represented by sections of its normal bundle; on top of these
//! charts the crate provides transition maps, first and second variations of
//! parameterization-invariant functionals, a critical-point solver and an
//! analysis of isometry-group orbits.

pub mod ambient;
pub mod charts;
pub mod cli;
pub mod curve;
pub mod error;
pub mod functionals;
pub mod generators;
pub mod io;
pub mod solver;
pub mod spectral;
pub mod symmetry;

pub use ambient::{AmbientPoint, AmbientSpace, TangentVec};
pub use charts::{Chart, NormalSection};
pub use curve::{Embedding, Reparam, SectionField};
pub use error::{Error, Result};
