//! Uniform spanning trees in lattice quads, their Peano curves and middle
//! branch, and the continuum objects they converge to: hypergeometric SLE,
//! SLE_κ(ρ), the rectangle conformal map and the endpoint density ρ_K.

pub mod error;
pub mod experiments;
pub mod lattice;
pub mod loewner;
pub mod observable;
pub mod conformal;
pub mod quadrature;
pub mod rng;
pub mod specialfn;
pub mod stats;
pub mod ust;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
