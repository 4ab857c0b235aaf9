//! Hyperspherical Coulomb spheroidal representation of the Coulomb
//! three-body problem: two-centre basis, coupling matrices and the
//! coupled-channel K/S-matrix solver.

pub mod basis;
pub mod coupling;
pub mod csf;
pub mod error;
pub mod kinematics;
pub mod numerics;
pub mod parallel;
pub mod radial;

pub use error::{Error, Result};
