//! Regularized three-body potential in `t`-space.
//!
//! `w12 = Z1 Z2 sqrt(2M) sqrt(1 + t^2)` and
//! `w_a3 = Z_a sqrt(2 mu) sqrt(1 + t^2) / |t - t_a| * [((1 + t^2)/(1 + t_a^2))^{3/2} - 1]`.
//! The bracket is evaluated as `expm1(1.5 ln1p(u))` with
//! `u = (t^2 - t_a^2)/(1 + t_a^2)` formed from the displacement `t - t_a`,
//! so nothing cancels near the centre. The function is bounded at the
//! centre but its limit depends on the direction of approach.

use serde::{Deserialize, Serialize};

use super::grid::{EtaNode, XiNode};
use crate::kinematics::ParticleSystem;

/// Radius around each centre inside which the bracket is Taylor-expanded.
pub const COALESCENCE_RADIUS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizedPotential {
    pub z1: f64,
    pub z2: f64,
    pub big_m: f64,
    pub mu: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub t1: f64,
    pub t2: f64,
}

impl RegularizedPotential {
    pub fn new(system: &ParticleSystem) -> Self {
        let r = &system.reduced;
        Self {
            z1: system.z1,
            z2: system.z2,
            big_m: r.big_m,
            mu: r.mu,
            mu1: r.mu1,
            mu2: r.mu2,
            t1: system.geometry.t1,
            t2: system.geometry.t2,
        }
    }

    pub fn w12(&self, t2: f64) -> f64 {
        self.z1 * self.z2 * (2.0 * self.big_m).sqrt() * (1.0 + t2).sqrt()
    }

    /// `w13` (`alpha = 1`) or `w23` (`alpha = 2`) from `t^2`, the distance
    /// `r = |t - t_a|` and the projection `c = t_a . (t - t_a)`, where
    /// `t_a` is the centre position vector.
    pub fn w_alpha(&self, alpha: u8, t2: f64, r: f64, c: f64) -> f64 {
        let (z, ta) = if alpha == 1 { (self.z1, self.t1) } else { (self.z2, self.t2) };
        let den = 1.0 + ta * ta;
        let pref = z * (2.0 * self.mu).sqrt() * (1.0 + t2).sqrt();
        if r < COALESCENCE_RADIUS {
            // (1+u)^{3/2} - 1 ~ 3u/2 + 3u^2/8 with u = (2c + r^2)/den
            let lin = (2.0 * c / r + r) / den;
            let u = (2.0 * c + r * r) / den;
            return pref * (1.5 * lin + 0.375 * u * lin);
        }
        let u = (2.0 * c + r * r) / den;
        pref * (1.5 * u.ln_1p()).exp_m1() / r
    }

    /// `3 Z_a sqrt(2(mu - mu_a))`, the value of `w_a3` approached along
    /// the axis away from the origin.
    pub fn coalescence_limit(&self, alpha: u8) -> f64 {
        let (z, mu_a) = if alpha == 1 { (self.z1, self.mu1) } else { (self.z2, self.mu2) };
        3.0 * z * (2.0 * (self.mu - mu_a)).sqrt()
    }

    /// `w12 + w13 + w23` at the point `(t, theta)` with `theta` measured
    /// from the direction of centre 2.
    pub fn total(&self, t: f64, theta: f64) -> f64 {
        let (z, perp) = (t * theta.cos(), t * theta.sin());
        let t2 = t * t;
        let r1 = (z + self.t1).hypot(perp);
        let r2 = (z - self.t2).hypot(perp);
        let c1 = -self.t1 * (z + self.t1);
        let c2 = self.t2 * (z - self.t2);
        self.w12(t2) + self.w_alpha(1, t2, r1, c1) + self.w_alpha(2, t2, r2, c2)
    }

    /// Same sum at a spheroidal node, using the node's accurate differences.
    pub fn at_node(&self, x: &XiNode, e: &EtaNode) -> f64 {
        let half = 0.5 * (self.t1 + self.t2);
        let z = 0.5 * (self.t2 - self.t1) + half * x.xi * e.eta;
        let t2 = z * z + half * half * x.s * e.o;
        let r1 = half * (x.xm1 + e.plus);
        let r2 = half * (x.xm1 + e.minus);
        let c1 = -self.t1 * half * (e.plus + x.xm1 * e.eta);
        let c2 = -self.t2 * half * (e.minus - x.xm1 * e.eta);
        self.w12(t2) + self.w_alpha(1, t2, r1, c1) + self.w_alpha(2, t2, r2, c2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::build_system;

    #[test]
    fn node_and_point_forms_agree() {
        let sys = build_system(1.0, 2.0, 1.0, 1.0, 2.0).unwrap();
        let w = RegularizedPotential::new(&sys);
        let g = sys.geometry;
        for &(xi, eta) in &[(1.3, 0.2), (2.0, -0.7), (5.0, 0.9)] {
            let (z, perp) = crate::kinematics::spheroidal_to_t_plane(&g, xi, eta);
            let t = z.hypot(perp);
            let theta = perp.atan2(z);
            let x = XiNode {
                xi,
                xm1: xi - 1.0,
                s: xi * xi - 1.0,
                jac: 1.0,
            };
            let e = EtaNode {
                eta,
                minus: 1.0 - eta,
                plus: 1.0 + eta,
                o: 1.0 - eta * eta,
                jac: 1.0,
            };
            let (a, b) = (w.total(t, theta), w.at_node(&x, &e));
            assert!((a - b).abs() < 1e-12 * a.abs(), "{a} {b}");
        }
    }
}
