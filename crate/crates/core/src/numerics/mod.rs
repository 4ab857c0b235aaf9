//! Small numerical building blocks shared by the solver modules.

pub mod band;
pub mod laguerre;
pub mod legendre;
pub mod ode;
pub mod quadrature;
pub mod roots;
pub mod spline;
