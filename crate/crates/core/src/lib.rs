//! Lattice approximations of bounded domains, boundary-tunable random walks and
//! open exclusion/inclusion particle systems coupled to reservoirs.
//!
//! The boundary speed is set by `beta`: cross edges to the reservoirs fire at rate
//! `eps^(beta - 2)`, so `beta > 1` behaves like a reflecting wall, `beta = 1` like a
//! Robin condition and `beta < 1` like a Dirichlet condition as `eps -> 0`.

pub mod error;
pub mod expr;
pub mod geometry;
pub mod lab;
pub mod linalg;
pub mod observables;
pub mod operators;
pub mod particles;

pub use error::{Error, Result};
pub use geometry::{DomainSpec, LatticeApprox, Shape};
pub use operators::{Beta, PairOperator, Sigma, WalkOperator};
