//! Two-sided shooting for the radial equation, used as an independent
//! check on the Galerkin solver.
//!
//! Works with `u = X (xi^2 - 1)^{-m/2}`, which obeys
//! `s u'' + 2(m+1) xi u' + (m(m+1) - lambda - p^2 s + a xi) u = 0`, `s = xi^2 - 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::ode::{integrate, OdeOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mismatch {
    /// Scaled Wronskian of the outward and inward solutions at the matching point.
    pub value: f64,
    pub match_point: f64,
    pub nodes_outward: u32,
    pub nodes_inward: u32,
}

impl Mismatch {
    pub fn nodes(&self) -> u32 {
        self.nodes_outward + self.nodes_inward
    }
}

/// Far end of the inward integration.
pub fn shooting_xi_max(p: f64) -> f64 {
    (25.0 / p).max(30.0)
}

struct Leg {
    u: f64,
    du: f64,
    nodes: u32,
}

fn run(a: f64, p: f64, m: u32, lambda: f64, from: f64, to: f64, u0: f64, du0: f64) -> Result<Leg> {
    let mf = m as f64;
    let c0 = mf * (mf + 1.0) - lambda;
    let rhs = |xi: f64, y: &[f64], d: &mut [f64]| {
        let s = (xi - 1.0) * (xi + 1.0);
        d[0] = y[1];
        d[1] = -(2.0 * (mf + 1.0) * xi * y[1] + (c0 - p * p * s + a * xi) * y[0]) / s;
    };
    let opts = OdeOptions {
        rtol: 1e-11,
        atol: 1e-300,
        first_step: 1e-3 * (to - from).abs().min(1.0 / p.max(1.0)),
        ..OdeOptions::default()
    };
    let mut nodes = 0;
    let mut prev_sign = u0.signum();
    let (y, _) = integrate(rhs, from, to, &[u0, du0], &opts, |_, y| {
        if y[0] != 0.0 && y[0].signum() != prev_sign {
            nodes += 1;
            prev_sign = y[0].signum();
        }
        let big = y[0].abs().max(y[1].abs());
        if big > 1e100 || (big < 1e-100 && big > 0.0) {
            y[0] /= big;
            y[1] /= big;
        }
    })?;
    Ok(Leg {
        u: y[0],
        du: y[1],
        nodes,
    })
}

/// Mismatch of the regular and decaying radial solutions at separation
/// constant `lambda`. Zero at an eigenpair.
pub fn radial_mismatch(a: f64, p: f64, m: u32, lambda: f64) -> Result<Mismatch> {
    if !(p > 0.0) {
        return Err(Error::NonPositiveInput(format!("p = {p}")));
    }
    let mf = m as f64;
    let xi_max = shooting_xi_max(p);
    let c0 = mf * (mf + 1.0) - lambda;
    // outer turning point of p^2 s - a xi = m(m+1) - lambda
    let disc = a * a + 4.0 * p * p * (p * p - c0);
    let turning = if disc > 0.0 { (a + disc.sqrt()) / (2.0 * p * p) } else { 1.0 };
    let match_point = turning.clamp(1.0 + 0.05 / p.max(1.0), 1.0 + 0.5 * (xi_max - 1.0));

    // Frobenius start: u(1) = 1 with u', u'' from the equation at xi = 1
    let q1 = c0 + a;
    let du1 = -q1 / (2.0 * (mf + 1.0));
    let d2u1 = -((2.0 * (mf + 1.0) + q1) * du1 + (a - 2.0 * p * p)) / (2.0 * (mf + 2.0));
    let delta = 1e-4 * (match_point - 1.0).min(1.0 / (1.0 + q1.abs()));
    let u_start = 1.0 + du1 * delta + 0.5 * d2u1 * delta * delta;
    let du_start = du1 + d2u1 * delta;
    let outward = run(a, p, m, lambda, 1.0 + delta, match_point, u_start, du_start)?;

    // decaying branch X ~ xi^{a/2p - 1} e^{-p xi}
    let slope = -p + (a / (2.0 * p) - 1.0 - mf) / xi_max;
    let inward = run(a, p, m, lambda, xi_max, match_point, 1.0, slope)?;

    let kappa = p.max(1.0);
    let norm_o = (outward.u * outward.u + (outward.du / kappa).powi(2)).sqrt();
    let norm_i = (inward.u * inward.u + (inward.du / kappa).powi(2)).sqrt();
    let value = (outward.du * inward.u - outward.u * inward.du) / (kappa * norm_o * norm_i);
    Ok(Mismatch {
        value,
        match_point,
        nodes_outward: outward.nodes,
        nodes_inward: inward.nodes,
    })
}
