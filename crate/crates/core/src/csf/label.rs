//! Asymptotic channel labels of two-centre states.

use serde::{Deserialize, Serialize};

use super::state::CsfState;
use crate::error::{Error, Result};
use crate::kinematics::ParticleSystem;

const LOCALIZATION: f64 = 0.9;

/// `(alpha, n, s, m)`: atom, principal number, parabolic number, projection.
///
/// `s` is read off the radial node count and is not cross-checked against
/// an independent correspondence table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChannelLabel {
    pub alpha: u8,
    pub n: u32,
    pub s: u32,
    pub m: u32,
}

impl ChannelLabel {
    pub fn new(alpha: u8, n: u32, s: u32, m: u32) -> Result<Self> {
        if alpha != 1 && alpha != 2 {
            return Err(Error::InvalidQuantumNumbers(format!("alpha = {alpha}")));
        }
        if n < m + 1 || s + m + 1 > n {
            return Err(Error::InvalidQuantumNumbers(format!("(n, s, m) = ({n}, {s}, {m})")));
        }
        Ok(Self { alpha, n, s, m })
    }
}

/// Scaled atomic limit `-mu_a^3 Z_a^2 / (2 n^2 mu^2)` of `eps / rho^2`.
pub fn scaled_threshold(system: &ParticleSystem, alpha: u8, n: u32) -> f64 {
    let r = &system.reduced;
    let mu_a = r.mu_alpha(alpha);
    let z = system.charge(alpha);
    -mu_a.powi(3) * z * z / (2.0 * (n as f64).powi(2) * r.mu * r.mu)
}

/// Labels a state family tracked to large `rho` from its last member.
pub fn classify(system: &ParticleSystem, family: &[CsfState]) -> Result<ChannelLabel> {
    let last = family
        .iter()
        .max_by(|a, b| a.rho.total_cmp(&b.rho))
        .ok_or_else(|| Error::InvalidQuantumNumbers("empty state family".into()))?;
    let centroid = last.eta_centroid();
    if centroid.abs() < LOCALIZATION {
        return Err(Error::AmbiguousLabel {
            centroid,
            rho: last.rho,
        });
    }
    let alpha = if centroid > 0.0 { 2 } else { 1 };
    let scaled = last.eps / (last.rho * last.rho);
    let unit = scaled_threshold(system, alpha, 1);
    let n = (unit / scaled).sqrt().round().max(1.0) as u32;
    let m = last.index.m;
    let n = n.max(m + 1);
    let s = last.index.n_xi.min(n - m - 1);
    ChannelLabel::new(alpha, n, s, m)
}
