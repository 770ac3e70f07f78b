//! Kähler–Ricci solitons on toric Fano manifolds in action-angle coordinates.
//!
//! The pipeline runs from an exact Delzant polytope to its Demazure roots,
//! the soliton vector, a symplectic potential and the weighted-Laplacian
//! operators whose eigenfunctions the [`verify`] module checks numerically.

pub mod calabi;
pub mod eigenbasis;
pub mod error;
pub mod exec;
pub mod fd;
pub mod futaki;
pub mod gauss;
pub mod hpoly;
pub mod operators;
pub mod polytope;
pub mod potentials;
pub mod quadrature;
pub mod roots;
pub mod verify;

pub use error::{Error, ErrorClass};
pub use exec::Execution;
pub use polytope::{parse_polytope, DelzantPolytope, Facet};
