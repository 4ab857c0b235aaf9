//! Hyperradial derivative of a two-centre state by Richardson-extrapolated
//! central differences.

use super::state::{solve_state_with, CsfState, SolverOptions};
use crate::error::{Error, Result};
use crate::kinematics::ParticleSystem;

const RICHARDSON_TOL: f64 = 1e-4;

/// Default step `max(1e-4, 1e-4 rho)`.
pub fn default_step(rho: f64) -> f64 {
    (1e-4 * rho).max(1e-4)
}

/// `d phi / d rho`, evaluable at any point through its separable parts.
#[derive(Debug, Clone)]
pub struct StateDerivative {
    pub step: f64,
    /// States at `rho - h, rho - h/2, rho + h/2, rho + h`.
    pub neighbours: [CsfState; 4],
    pub convention: f64,
    /// Largest relative gap between the `h` and `h/2` estimates on the probe grid.
    pub richardson_gap: f64,
}

fn combine(v: [f64; 4], h: f64) -> (f64, f64) {
    let wide = (v[3] - v[0]) / (2.0 * h);
    let narrow = (v[2] - v[1]) / h;
    ((4.0 * narrow - wide) / 3.0, narrow - wide)
}

impl StateDerivative {
    /// `(dX/drho, d^2X/(drho dxi))` at `xi - 1`, in the sign convention of the base state.
    pub fn x(&self, xm1: f64) -> (f64, f64) {
        let vals = self.neighbours.each_ref().map(|s| s.x(xm1));
        let c = self.convention;
        (
            c * combine(vals.map(|v| v.0), self.step).0,
            c * combine(vals.map(|v| v.1), self.step).0,
        )
    }

    /// `(dY/drho, d^2Y/(drho deta))`.
    pub fn y(&self, eta: f64, one_minus_eta2: f64) -> (f64, f64) {
        let vals = self.neighbours.each_ref().map(|s| s.y(eta, one_minus_eta2));
        (
            combine(vals.map(|v| v.0), self.step).0,
            combine(vals.map(|v| v.1), self.step).0,
        )
    }

    pub fn evaluate(&self, base: &CsfState, xi: f64, eta: f64) -> f64 {
        let s = (1.0 - eta) * (1.0 + eta);
        let (x, _) = base.x(xi - 1.0);
        let (y, _) = base.y(eta, s);
        let (dx, _) = self.x(xi - 1.0);
        let (dy, _) = self.y(eta, s);
        dx * y + x * dy
    }
}

/// Solves the neighbours of `state` and builds its hyperradial derivative.
pub fn d_rho(system: &ParticleSystem, state: &CsfState, step: f64, opts: &SolverOptions) -> Result<StateDerivative> {
    let rho = state.rho;
    if !(step > 0.0) || step >= rho {
        return Err(Error::StepTooLarge(step));
    }
    let guess = Some(state.eps);
    let solve = |r: f64| solve_state_with(system, r, state.index, guess, opts);
    let neighbours = [
        solve(rho - step)?,
        solve(rho - 0.5 * step)?,
        solve(rho + 0.5 * step)?,
        solve(rho + step)?,
    ];
    let mut deriv = StateDerivative {
        step,
        neighbours,
        convention: state.convention,
        richardson_gap: 0.0,
    };
    deriv.richardson_gap = richardson_gap(&deriv, state);
    if deriv.richardson_gap > RICHARDSON_TOL {
        return Err(Error::StepTooLarge(deriv.richardson_gap));
    }
    Ok(deriv)
}

fn richardson_gap(deriv: &StateDerivative, state: &CsfState) -> f64 {
    let xs: Vec<f64> = (1..=40)
        .map(|i| (i as f64 / 40.0).powi(2) * (state.radial.xi_max() - 1.0))
        .collect();
    // uniform probes plus probes within a few decay lengths 1/p of each end
    let mut etas: Vec<f64> = (1..40).map(|i| -1.0 + i as f64 / 20.0).collect();
    for j in 1..=16 {
        let gap = (j as f64 / (2.0 * state.p)).min(0.05);
        etas.extend([-1.0 + gap, 1.0 - gap]);
    }
    let gap = |vals: Vec<[f64; 4]>| {
        let mut peak = 0.0f64;
        let mut worst = 0.0f64;
        for v in vals {
            let (best, diff) = combine(v, deriv.step);
            peak = peak.max(best.abs());
            worst = worst.max(diff.abs());
        }
        if peak == 0.0 {
            0.0
        } else {
            worst / peak
        }
    };
    let gx = gap(xs.iter().map(|&x| deriv.neighbours.each_ref().map(|s| s.x(x).0)).collect());
    let gy = gap(
        etas.iter()
            .map(|&e| deriv.neighbours.each_ref().map(|s| s.y(e, (1.0 - e) * (1.0 + e)).0))
            .collect(),
    );
    gx.max(gy)
}
