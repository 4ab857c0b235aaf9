//! Coulomb two-centre eigenstates at fixed hyperradius.

pub mod angular;
pub mod derivative;
pub mod label;
pub mod radial;
pub mod shooting;
pub mod state;

pub use angular::{angular_eigenvalue, AngularSolution};
pub use derivative::{d_rho, StateDerivative};
pub use label::{classify, ChannelLabel};
pub use radial::RadialSolution;
pub use shooting::radial_mismatch;
pub use state::{solve_state, solve_state_with, CsfState, SolverOptions, StateIndex, TwoCentre};
