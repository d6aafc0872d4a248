//! Disorder-averaged spectral form factors of dual-unitary brickwork circuits.
//!
//! The crate builds Floquet operators on qudit chains, estimates the spectral
//! form factor by Monte Carlo over on-site disorder, evaluates the same
//! quantity exactly through the space-direction transfer matrix, and counts
//! the commutant dimensions that fix its large-system limit.

#![allow(clippy::needless_range_loop)]

pub mod acceptance;
pub mod algebra;
pub mod circuit;
pub mod commutant;
pub mod config;
pub mod error;
pub mod gates;
pub mod linalg;
pub mod quadrature;
pub mod sff;
pub mod transfer;

pub use error::{Error, Result};
