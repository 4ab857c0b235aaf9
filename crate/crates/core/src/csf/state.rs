//! Eigenstates of the two-centre problem at fixed hyperradius.

use serde::{Deserialize, Serialize};

use super::angular::{self, AngularOptions, AngularSolution};
use super::label::ChannelLabel;
use super::radial::{self, RadialOptions, RadialSolution};
use crate::error::{Error, Result};
use crate::kinematics::{effective_charges, ParticleSystem};
use crate::numerics::roots::brent;

/// Two Coulomb centres of charges `z1, z2` a distance `d` apart, in the
/// `t`-space units where `h = -Laplacian - z1/|t - t1| - z2/|t - t2|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoCentre {
    pub z1: f64,
    pub z2: f64,
    pub d: f64,
}

impl TwoCentre {
    pub fn from_system(system: &ParticleSystem, rho: f64) -> Self {
        let (z1, z2) = effective_charges(system, rho);
        Self {
            z1,
            z2,
            d: system.geometry.d,
        }
    }

    pub fn a(&self) -> f64 {
        0.5 * self.d * (self.z1 + self.z2)
    }

    pub fn b(&self) -> f64 {
        0.5 * self.d * (self.z2 - self.z1)
    }

    pub fn energy_from_p(&self, p: f64) -> f64 {
        let half = 0.5 * self.d;
        -(p * p) / (half * half)
    }

    pub fn p_from_energy(&self, eps: f64) -> f64 {
        0.5 * self.d * (-eps).sqrt()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub angular: AngularOptions,
    pub radial: RadialOptions,
}

/// Quantum numbers of a two-centre state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateIndex {
    pub m: u32,
    pub n_xi: u32,
    pub n_eta: u32,
}

impl StateIndex {
    pub fn new(m: u32, n_xi: u32, n_eta: u32) -> Self {
        Self { m, n_xi, n_eta }
    }

    /// United-atom principal number `n_xi + n_eta + m + 1`.
    pub fn principal(&self) -> u32 {
        self.n_xi + self.n_eta + self.m + 1
    }
}

/// One normalized two-centre eigenstate `phi = X(xi) Y(eta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsfState {
    pub rho: f64,
    pub index: StateIndex,
    pub eps: f64,
    pub lambda: f64,
    pub p: f64,
    pub a: f64,
    pub b: f64,
    pub d: f64,
    pub radial: RadialSolution,
    pub angular: AngularSolution,
    /// Multiplies `X` so that `<phi|phi> = 1` under `(d^3/8)(xi^2 - eta^2) dxi deta`.
    pub scale: f64,
    /// Overall sign convention; `+1` is the standard choice.
    pub convention: f64,
    pub label: Option<ChannelLabel>,
}

struct Discretization {
    angular: usize,
    radial: usize,
}

fn separation_function(problem: &TwoCentre, idx: StateIndex, p: f64, sizes: &Discretization) -> Result<f64> {
    let nu = radial::radial_nu_fixed(problem.a(), p, idx.m, idx.n_xi, sizes.radial)?;
    let lam = angular::angular_lambda_fixed(p * p, problem.b(), idx.m, idx.n_eta, sizes.angular);
    Ok(nu + lam)
}

fn sizes_at(problem: &TwoCentre, idx: StateIndex, p: f64, opts: &SolverOptions) -> Result<Discretization> {
    Ok(Discretization {
        angular: angular::converged_size(p * p, problem.b(), idx.m, idx.n_eta, &opts.angular)?,
        radial: radial::converged_size(problem.a(), p, idx.m, idx.n_xi, &opts.radial)?,
    })
}

/// Root of the monotone separation function `nu(p) + lambda(p)`.
fn find_p(problem: &TwoCentre, idx: StateIndex, guess: f64, sizes: &Discretization) -> Result<f64> {
    let f = |p: f64| separation_function(problem, idx, p, sizes);
    let mut lo = guess;
    let mut f_lo = f(lo)?;
    let mut hi = guess;
    let mut f_hi = f_lo;
    let floor = 1e-8 * problem.a().max(1.0);
    let mut tries = 0;
    while f_lo > 0.0 {
        hi = lo;
        f_hi = f_lo;
        lo *= 0.5;
        tries += 1;
        if lo < floor || tries > 80 {
            return Err(Error::NoBracket(format!(
                "state {idx:?} not bound at z = ({}, {})",
                problem.z1, problem.z2
            )));
        }
        f_lo = f(lo)?;
    }
    while f_hi <= 0.0 {
        lo = hi;
        f_lo = f_hi;
        hi *= 2.0;
        tries += 1;
        if tries > 80 {
            return Err(Error::NoBracket(format!("no upper bracket for {idx:?}")));
        }
        f_hi = f(hi)?;
    }
    let mut err = None;
    let root = brent(
        |p| match f(p) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                f64::NAN
            }
        },
        lo,
        hi,
        f_lo,
        f_hi,
        1e-15 * hi,
        200,
    );
    if let Some(e) = err {
        return Err(e);
    }
    root.ok_or_else(|| Error::NoConvergence(format!("separation root for {idx:?}")))
}

/// Solves the two-centre problem for the state with the given node counts.
///
/// `p_guess` seeds the bracket; without it the united-charge estimate
/// `a / (2N)` is used.
pub fn solve_two_centre(
    problem: &TwoCentre,
    idx: StateIndex,
    p_guess: Option<f64>,
    opts: &SolverOptions,
) -> Result<(f64, AngularSolution, RadialSolution)> {
    if !(problem.d > 0.0) || problem.z1 < 0.0 || problem.z2 < 0.0 || problem.z1 + problem.z2 <= 0.0 {
        return Err(Error::NonPositiveInput(format!("two-centre problem {problem:?}")));
    }
    let guess = p_guess
        .filter(|p| *p > 0.0)
        .unwrap_or_else(|| problem.a() / (2.0 * idx.principal() as f64));
    let mut sizes = sizes_at(problem, idx, guess, opts)?;
    for _ in 0..4 {
        let p = find_p(problem, idx, guess, &sizes)?;
        let check = sizes_at(problem, idx, p, opts)?;
        if check.angular <= sizes.angular && check.radial <= sizes.radial {
            let lam = angular::angular_fixed(p * p, problem.b(), idx.m, idx.n_eta, sizes.angular);
            let ang = AngularSolution {
                lambda: lam.0,
                coeffs: lam.1,
                n_eta: idx.n_eta,
                m: idx.m,
                p2: p * p,
                b: problem.b(),
            };
            let rad = radial::radial_eigenvalue(problem.a(), p, idx.m, idx.n_xi, sizes.radial)?;
            return Ok((p, ang, rad));
        }
        sizes = Discretization {
            angular: check.angular.max(sizes.angular),
            radial: check.radial.max(sizes.radial),
        };
    }
    Err(Error::NoConvergence(format!("basis sizes kept growing for {idx:?}")))
}

/// Two-centre eigenstate of `system` at hyperradius `rho`.
pub fn solve_state(
    system: &ParticleSystem,
    rho: f64,
    m: u32,
    n_xi: u32,
    n_eta: u32,
    eps_guess: Option<f64>,
) -> Result<CsfState> {
    solve_state_with(system, rho, StateIndex::new(m, n_xi, n_eta), eps_guess, &SolverOptions::default())
}

pub fn solve_state_with(
    system: &ParticleSystem,
    rho: f64,
    idx: StateIndex,
    eps_guess: Option<f64>,
    opts: &SolverOptions,
) -> Result<CsfState> {
    if !(rho > 0.0) {
        return Err(Error::NonPositiveInput(format!("rho = {rho}")));
    }
    let problem = TwoCentre::from_system(system, rho);
    let mut state = solve_problem(&problem, idx, eps_guess, opts)?;
    state.rho = rho;
    Ok(state)
}

/// Like [`solve_state_with`] for an explicit two-centre problem; `rho` is
/// left at zero.
pub fn solve_problem(problem: &TwoCentre, idx: StateIndex, eps_guess: Option<f64>, opts: &SolverOptions) -> Result<CsfState> {
    let p_guess = eps_guess.filter(|e| *e < 0.0).map(|e| problem.p_from_energy(e));
    let (p, angular, radial) = solve_two_centre(problem, idx, p_guess, opts)?;
    let (x0, x2) = radial.moments();
    let y2 = angular.eta2_moment();
    let d3 = problem.d.powi(3) / 8.0;
    let norm2 = d3 * (x2 - x0 * y2);
    Ok(CsfState {
        rho: 0.0,
        index: idx,
        eps: problem.energy_from_p(p),
        lambda: angular.lambda,
        p,
        a: problem.a(),
        b: problem.b(),
        d: problem.d,
        radial,
        angular,
        scale: 1.0 / norm2.sqrt(),
        convention: 1.0,
        label: None,
    })
}

impl CsfState {
    fn check_domain(xi: f64, eta: f64) -> Result<()> {
        if !(xi >= 1.0) || !(eta.abs() <= 1.0) || !xi.is_finite() {
            return Err(Error::OutOfDomain(format!("(xi, eta) = ({xi}, {eta})")));
        }
        Ok(())
    }

    /// `phi(xi, eta)`.
    pub fn evaluate(&self, xi: f64, eta: f64) -> Result<f64> {
        Self::check_domain(xi, eta)?;
        Ok(self.x(xi - 1.0).0 * self.y(eta, (1.0 - eta) * (1.0 + eta)).0)
    }

    /// Normalized radial factor and its derivative from `xi - 1`.
    pub fn x(&self, xm1: f64) -> (f64, f64) {
        let (v, d) = self.radial.eval_split(xm1);
        let k = self.scale * self.convention;
        (k * v, k * d)
    }

    /// Angular factor and its derivative; `one_minus_eta2 = 1 - eta^2`.
    pub fn y(&self, eta: f64, one_minus_eta2: f64) -> (f64, f64) {
        self.angular.eval_parts(eta, one_minus_eta2)
    }

    /// Gradient `(d phi/d xi, d phi/d eta)` together with the value.
    pub fn value_and_gradient(&self, xi: f64, eta: f64) -> Result<(f64, f64, f64)> {
        Self::check_domain(xi, eta)?;
        let (x, dx) = self.x(xi - 1.0);
        let (y, dy) = self.y(eta, (1.0 - eta) * (1.0 + eta));
        Ok((x * y, dx * y, x * dy))
    }

    /// State with the opposite overall sign convention.
    pub fn flipped(&self) -> Self {
        let mut s = self.clone();
        s.convention = -s.convention;
        s
    }

    /// Samples of `phi` on a tensor grid of `xi` (stretched towards 1) and `eta`.
    pub fn tabulate(&self, n_xi: usize, n_eta: usize) -> Vec<(f64, f64, f64)> {
        let xs = self.radial.tabulate(n_xi);
        let mut out = Vec::with_capacity(xs.len() * (n_eta + 1));
        for (xi, _) in xs {
            for j in 0..=n_eta {
                let eta = -1.0 + 2.0 * j as f64 / n_eta as f64;
                out.push((xi, eta, self.evaluate(xi, eta).unwrap_or(0.0)));
            }
        }
        out
    }

    /// Probability centroid `<eta>`.
    pub fn eta_centroid(&self) -> f64 {
        let (x0, x2) = self.radial.moments();
        let rule = crate::numerics::quadrature::gauss_legendre(self.angular.coeffs.len() + 8);
        let (mut e1, mut e3) = (0.0, 0.0);
        for (&eta, &w) in rule.nodes.iter().zip(&rule.weights) {
            let y = self.angular.value(eta);
            e1 += w * eta * y * y;
            e3 += w * eta.powi(3) * y * y;
        }
        let d3 = self.d.powi(3) / 8.0;
        d3 * self.scale * self.scale * (x2 * e1 - x0 * e3)
    }
}
