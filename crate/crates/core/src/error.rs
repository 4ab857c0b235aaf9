use thiserror::Error;

/// Errors raised anywhere in the basis, coupling and scattering pipeline.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("non-positive input: {0}")]
    NonPositiveInput(String),
    #[error("particles 1 and 2 are identical (equal masses and charges)")]
    IdenticalParticles,
    #[error("effective charges are degenerate: Z1/Z2 = {ratio} matches (mu2/mu1)^(3/2)")]
    DegenerateCharges { ratio: f64 },
    #[error("geometry violation: {0}")]
    GeometryViolation(String),
    #[error("energy {0} is not in the discrete spectrum")]
    ContinuumState(f64),
    #[error("invalid quantum numbers: {0}")]
    InvalidQuantumNumbers(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("no eigenvalue bracket: {0}")]
    NoBracket(String),
    #[error("point outside the domain: {0}")]
    OutOfDomain(String),
    #[error("ambiguous channel label: <eta> = {centroid} at rho = {rho}")]
    AmbiguousLabel { centroid: f64, rho: f64 },
    #[error("finite-difference step too large: Richardson disagreement {0:e}")]
    StepTooLarge(f64),
    #[error("rotation index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("magnetic index mismatch: rotor m = {rotor}, state m = {state}")]
    MismatchedM { rotor: u32, state: u32 },
    #[error("null rotor: symmetrized D-function vanishes identically")]
    NullRotor,
    #[error("quadrature grid overflow: {0}")]
    GridOverflow(String),
    #[error("no open channel at E = {0}")]
    NoOpenChannel(f64),
    #[error("energy {0} is at or above the three-body breakup threshold")]
    AboveBreakup(f64),
    #[error("rho = {rho} outside the coupling table [{min}, {max}]")]
    RhoOutOfRange { rho: f64, min: f64, max: f64 },
    #[error("step size underflow at rho = {0}")]
    StiffnessFailure(f64),
    #[error("solution columns became linearly dependent at rho = {0}")]
    LinearDependence(f64),
    #[error("closed channels not decayed at matching radius (log amplitude {0:.2})")]
    ClosedChannelContamination(f64),
    #[error("ill-conditioned asymptotic match (condition number {0:e})")]
    IllConditionedMatch(f64),
    #[error("singular matrix: {0}")]
    SingularMatrix(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
