//! Particle data, reduced masses and the coordinate maps between the
//! interparticle distances, hyperspherical variables, `t`-space and prolate
//! spheroidal coordinates.
//!
//! Particles 1 and 2 carry positive charges, particle 3 carries charge -1.
//! Everything is in atomic units.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEGENERACY_TOL: f64 = 1e-12;
const TRIANGLE_TOL: f64 = 1e-12;

/// Pair and cluster reduced masses of the three-body system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedMasses {
    /// `m1 m2 / (m1 + m2)`
    pub big_m: f64,
    /// `m3 (m1 + m2) / (m1 + m2 + m3)`
    pub mu: f64,
    /// `m1 m3 / (m1 + m3)`
    pub mu1: f64,
    /// `m2 m3 / (m2 + m3)`
    pub mu2: f64,
    /// `m2 (m1 + m3) / (m1 + m2 + m3)`
    pub big_m1: f64,
    /// `m1 (m2 + m3) / (m1 + m2 + m3)`
    pub big_m2: f64,
}

impl ReducedMasses {
    pub fn from_masses(m1: f64, m2: f64, m3: f64) -> Self {
        let total = m1 + m2 + m3;
        Self {
            big_m: m1 * m2 / (m1 + m2),
            mu: m3 * (m1 + m2) / total,
            mu1: m1 * m3 / (m1 + m3),
            mu2: m2 * m3 / (m2 + m3),
            big_m1: m2 * (m1 + m3) / total,
            big_m2: m1 * (m2 + m3) / total,
        }
    }

    /// Atomic reduced mass `mu_alpha` of cluster `alpha` (1 or 2).
    pub fn mu_alpha(&self, alpha: u8) -> f64 {
        if alpha == 1 {
            self.mu1
        } else {
            self.mu2
        }
    }

    /// Atom-particle reduced mass `M_alpha`.
    pub fn big_m_alpha(&self, alpha: u8) -> f64 {
        if alpha == 1 {
            self.big_m1
        } else {
            self.big_m2
        }
    }
}

/// Positions of the two Coulomb centres in `t`-space.
///
/// Centre 1 sits at `-t1` and centre 2 at `+t2` on the axis along `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TGeometry {
    pub t1: f64,
    pub t2: f64,
    /// Focal distance `t1 + t2 = sqrt(mu / M)`.
    pub d: f64,
}

impl TGeometry {
    pub fn t_alpha(&self, alpha: u8) -> f64 {
        if alpha == 1 {
            self.t1
        } else {
            self.t2
        }
    }

    /// Axial coordinate of the midpoint between the centres.
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.t2 - self.t1)
    }
}

/// Validated three-body system with `Z3 = -1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleSystem {
    pub masses: [f64; 3],
    pub z1: f64,
    pub z2: f64,
    pub reduced: ReducedMasses,
    pub geometry: TGeometry,
}

/// Builds and validates a system of masses `m1, m2, m3` and charges `Z1, Z2 > 0`.
pub fn build_system(m1: f64, m2: f64, m3: f64, z1: f64, z2: f64) -> Result<ParticleSystem> {
    for (name, v) in [("m1", m1), ("m2", m2), ("m3", m3), ("Z1", z1), ("Z2", z2)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::NonPositiveInput(format!("{name} = {v}")));
        }
    }
    if m1 == m2 && z1 == z2 {
        return Err(Error::IdenticalParticles);
    }
    let system = assemble(m1, m2, m3, z1, z2);
    let red = &system.reduced;
    let critical = (red.mu2 / red.mu1).powf(1.5);
    if (z1 / z2 - critical).abs() < DEGENERACY_TOL {
        return Err(Error::DegenerateCharges { ratio: z1 / z2 });
    }
    Ok(system)
}

/// Builds a system validating only the masses.
///
/// Used for reductions that switch a centre off (`Z2 = 0`) or drop the
/// charges altogether; the scattering pipeline always goes through
/// [`build_system`].
pub fn build_system_relaxed(m1: f64, m2: f64, m3: f64, z1: f64, z2: f64) -> Result<ParticleSystem> {
    for (name, v) in [("m1", m1), ("m2", m2), ("m3", m3)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::NonPositiveInput(format!("{name} = {v}")));
        }
    }
    if z1 < 0.0 || z2 < 0.0 {
        return Err(Error::NonPositiveInput("negative charge".into()));
    }
    Ok(assemble(m1, m2, m3, z1, z2))
}

fn assemble(m1: f64, m2: f64, m3: f64, z1: f64, z2: f64) -> ParticleSystem {
    let reduced = ReducedMasses::from_masses(m1, m2, m3);
    let root = (reduced.mu * reduced.big_m).sqrt();
    let (t1, t2) = (root / m1, root / m2);
    ParticleSystem {
        masses: [m1, m2, m3],
        z1,
        z2,
        reduced,
        geometry: TGeometry { t1, t2, d: t1 + t2 },
    }
}

pub fn reduced_masses(system: &ParticleSystem) -> ReducedMasses {
    system.reduced
}

impl ParticleSystem {
    pub fn charge(&self, alpha: u8) -> f64 {
        if alpha == 1 {
            self.z1
        } else {
            self.z2
        }
    }

    /// `(mu / M)^{1/2}`, which must equal `t1 + t2`.
    pub fn focal_identity(&self) -> f64 {
        (self.reduced.mu / self.reduced.big_m).sqrt()
    }
}

/// Coefficients of the Coulomb spheroidal equations at one `(rho, eps)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsfParameters {
    pub a: f64,
    pub b: f64,
    pub p: f64,
}

/// Effective centre charges, linear in `rho`.
pub fn effective_charges(system: &ParticleSystem, rho: f64) -> (f64, f64) {
    let r = &system.reduced;
    let s2 = std::f64::consts::SQRT_2;
    (
        rho * system.z1 * s2 * r.mu1.powf(1.5) / r.mu,
        rho * system.z2 * s2 * r.mu2.powf(1.5) / r.mu,
    )
}

pub fn csf_parameters(system: &ParticleSystem, rho: f64, eps: f64) -> Result<CsfParameters> {
    if eps >= 0.0 {
        return Err(Error::ContinuumState(eps));
    }
    let r = &system.reduced;
    let scale = rho / (2.0 * r.mu * r.big_m).sqrt();
    let c1 = system.z1 * r.mu1.powf(1.5);
    let c2 = system.z2 * r.mu2.powf(1.5);
    Ok(CsfParameters {
        a: scale * (c1 + c2),
        b: scale * (c2 - c1),
        p: 0.5 * (-r.mu * eps / r.big_m).sqrt(),
    })
}

/// Prolate spheroidal coordinates of a triangle with sides `r1, r2, R`.
pub fn to_spheroidal(r1: f64, r2: f64, big_r: f64) -> Result<(f64, f64)> {
    check_triangle(r1, r2, big_r)?;
    let xi = ((r1 + r2) / big_r).max(1.0);
    let eta = ((r1 - r2) / big_r).clamp(-1.0, 1.0);
    Ok((xi, eta))
}

pub fn from_spheroidal(xi: f64, eta: f64, big_r: f64) -> (f64, f64, f64) {
    (0.5 * big_r * (xi + eta), 0.5 * big_r * (xi - eta), big_r)
}

fn check_triangle(r1: f64, r2: f64, big_r: f64) -> Result<()> {
    if !(big_r > 0.0) || r1 < 0.0 || r2 < 0.0 {
        return Err(Error::GeometryViolation(format!(
            "distances must be non-negative with R > 0: ({r1}, {r2}, {big_r})"
        )));
    }
    let tol = TRIANGLE_TOL * (r1 + r2 + big_r);
    if r1 + r2 < big_r - tol || r1 + big_r < r2 - tol || r2 + big_r < r1 - tol {
        return Err(Error::GeometryViolation(format!(
            "triangle inequality fails for ({r1}, {r2}, {big_r})"
        )));
    }
    Ok(())
}

/// Hyperradius from the interparticle distances.
pub fn hyperradius(system: &ParticleSystem, r1: f64, r2: f64, big_r: f64) -> Result<f64> {
    check_triangle(r1, r2, big_r)?;
    let [m1, m2, m3] = system.masses;
    let total = m1 + m2 + m3;
    Ok((2.0 * (m1 * m3 * r1 * r1 + m2 * m3 * r2 * r2 + m1 * m2 * big_r * big_r) / total).sqrt())
}

/// Length of the Jacobi vector from the (1,2) centre of mass to particle 3.
pub fn jacobi_r(system: &ParticleSystem, r1: f64, r2: f64, big_r: f64) -> f64 {
    let [m1, m2, _] = system.masses;
    let w = m2 / (m1 + m2);
    ((1.0 - w) * r1 * r1 + w * r2 * r2 - w * (1.0 - w) * big_r * big_r)
        .max(0.0)
        .sqrt()
}

/// Hyperradius from the Jacobi lengths, `rho^2 = 2 (M R^2 + mu r^2)`.
pub fn hyperradius_jacobi(system: &ParticleSystem, r1: f64, r2: f64, big_r: f64) -> Result<f64> {
    check_triangle(r1, r2, big_r)?;
    let r = jacobi_r(system, r1, r2, big_r);
    let red = &system.reduced;
    Ok((2.0 * (red.big_m * big_r * big_r + red.mu * r * r)).sqrt())
}

/// One internal configuration in all coordinate systems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InternalPoint {
    pub r1: f64,
    pub r2: f64,
    pub big_r: f64,
    pub rho: f64,
    /// Hyperangle, `tan(chi/2) = t`.
    pub chi: f64,
    /// Angle between the Jacobi vectors `r` and `R`.
    pub theta: f64,
    pub xi: f64,
    pub eta: f64,
    pub t: f64,
}

impl InternalPoint {
    pub fn from_distances(system: &ParticleSystem, r1: f64, r2: f64, big_r: f64) -> Result<Self> {
        let (xi, eta) = to_spheroidal(r1, r2, big_r)?;
        let rho = hyperradius(system, r1, r2, big_r)?;
        let [m1, m2, _] = system.masses;
        let w = m2 / (m1 + m2);
        // particle 1 at the origin, particle 2 on the axis
        let z3 = (r1 * r1 - r2 * r2 + big_r * big_r) / (2.0 * big_r);
        let perp = (r1 * r1 - z3 * z3).max(0.0).sqrt();
        let rz = z3 - w * big_r;
        let theta = perp.atan2(rz);
        let r = (rz * rz + perp * perp).sqrt();
        let t = (system.reduced.mu / system.reduced.big_m).sqrt() * r / big_r;
        Ok(Self {
            r1,
            r2,
            big_r,
            rho,
            chi: 2.0 * t.atan(),
            theta,
            xi,
            eta,
            t,
        })
    }
}

/// Point of `t`-space (axial `z`, cylindrical radius) for spheroidal `(xi, eta)`.
pub fn spheroidal_to_t_plane(geom: &TGeometry, xi: f64, eta: f64) -> (f64, f64) {
    let half = 0.5 * geom.d;
    let z = geom.midpoint() + half * xi * eta;
    let perp = half * ((xi * xi - 1.0).max(0.0) * (1.0 - eta * eta).max(0.0)).sqrt();
    (z, perp)
}

/// Whether a channel lies above (open) or below (closed) its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelStatus {
    Open,
    Threshold,
    Closed,
}

/// Asymptotic data of the channel `(alpha, n)` at total energy `E`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelKinematics {
    pub alpha: u8,
    pub n: u32,
    /// Hydrogenic threshold `-Z_alpha^2 mu_alpha / (2 n^2)`.
    pub threshold: f64,
    pub status: ChannelStatus,
    /// `sqrt(E - E_an)` for open channels, `sqrt(E_an - E)` (decay constant) for closed ones.
    pub momentum: f64,
    /// Relative momentum `sqrt(2 M_alpha (E - E_an))`; zero unless open.
    pub k: f64,
    /// Prefactor of the logarithmic phase, `(Z_a - 1) Z_{3-a} M_a / k`.
    pub coulomb_eta: f64,
}

impl ChannelKinematics {
    /// `gamma_bar(rho) = (Z_a - 1) Z_{3-a} M_a k^{-1} log(2 q rho)`.
    pub fn gamma_bar(&self, rho: f64) -> f64 {
        if self.status != ChannelStatus::Open || self.coulomb_eta == 0.0 {
            return 0.0;
        }
        self.coulomb_eta * (2.0 * self.momentum * rho).ln()
    }

    /// `d gamma_bar / d rho`.
    pub fn gamma_bar_derivative(&self, rho: f64) -> f64 {
        if self.status != ChannelStatus::Open {
            return 0.0;
        }
        self.coulomb_eta / rho
    }

    pub fn is_open(&self) -> bool {
        self.status == ChannelStatus::Open
    }
}

pub fn atomic_threshold(system: &ParticleSystem, alpha: u8, n: u32) -> f64 {
    let z = system.charge(alpha);
    -z * z * system.reduced.mu_alpha(alpha) / (2.0 * (n as f64).powi(2))
}

pub fn channel_kinematics(system: &ParticleSystem, energy: f64, alpha: u8, n: u32) -> Result<ChannelKinematics> {
    if alpha != 1 && alpha != 2 {
        return Err(Error::InvalidQuantumNumbers(format!("alpha = {alpha}")));
    }
    if n == 0 {
        return Err(Error::InvalidQuantumNumbers("n must be >= 1".into()));
    }
    let threshold = atomic_threshold(system, alpha, n);
    let gap = energy - threshold;
    let big_m = system.reduced.big_m_alpha(alpha);
    let status = if gap > 0.0 {
        ChannelStatus::Open
    } else if gap == 0.0 {
        ChannelStatus::Threshold
    } else {
        ChannelStatus::Closed
    };
    let momentum = gap.abs().sqrt();
    let k = if status == ChannelStatus::Open {
        (2.0 * big_m * gap).sqrt()
    } else {
        0.0
    };
    let charge_product = (system.charge(alpha) - 1.0) * system.charge(3 - alpha);
    let coulomb_eta = if k > 0.0 { charge_product * big_m / k } else { 0.0 };
    Ok(ChannelKinematics {
        alpha,
        n,
        threshold,
        status,
        momentum,
        k,
        coulomb_eta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> ParticleSystem {
        build_system(1.0, 2.0, 1.0, 1.0, 2.0).unwrap()
    }

    #[test]
    fn reduced_masses_of_model() {
        let s = build_system(1.0, 2.0, 1.0, 1.0, 1.0).unwrap();
        let r = reduced_masses(&s);
        assert!((r.big_m - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.mu - 0.75).abs() < 1e-15);
        assert!((r.mu1 - 0.5).abs() < 1e-15);
        assert!((r.mu2 - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.big_m1 - 1.0).abs() < 1e-15);
        assert!((r.big_m2 - 0.75).abs() < 1e-15);
        let g = s.geometry;
        assert!((g.t1 - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!((g.t2 - 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-15);
        assert!((g.d - 3.0 / (2.0 * 2f64.sqrt())).abs() < 1e-15);
        assert!((g.d - s.focal_identity()).abs() < 1e-15);
    }

    #[test]
    fn heavy_third_particle_limit() {
        let s = build_system(1.0, 2.0, 1e6, 1.0, 1.0).unwrap();
        assert!((s.reduced.mu - 3.0).abs() / 3.0 < 1e-5);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(build_system(1.0, 1.0, 0.5, 1.0, 1.0), Err(Error::IdenticalParticles));
        // (mu2/mu1)^{3/2} with mu1 = 1/2, mu2 = 2/3
        let crit = (4.0f64 / 3.0).powf(1.5);
        assert!((crit - 1.539_600_717_839_002).abs() < 1e-12);
        assert!(matches!(
            build_system(1.0, 2.0, 1.0, crit, 1.0),
            Err(Error::DegenerateCharges { .. })
        ));
        assert!(matches!(build_system(1.0, -2.0, 1.0, 1.0, 1.0), Err(Error::NonPositiveInput(_))));
        assert!(matches!(build_system(1.0, 2.0, 1.0, 0.0, 1.0), Err(Error::NonPositiveInput(_))));
    }

    #[test]
    fn spheroidal_examples() {
        assert_eq!(to_spheroidal(1.0, 1.0, 1.0).unwrap(), (2.0, 0.0));
        assert_eq!(to_spheroidal(0.5, 0.5, 1.0).unwrap(), (1.0, 0.0));
        let (xi, eta) = to_spheroidal(2.0, 1.0, 1.5).unwrap();
        assert!((xi - 2.0).abs() < 1e-15 && (eta - 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(to_spheroidal(0.1, 0.1, 1.0), Err(Error::GeometryViolation(_))));
    }

    #[test]
    fn hyperradius_forms_agree() {
        let s = model();
        let a = hyperradius(&s, 1.0, 1.0, 1.0).unwrap();
        let b = hyperradius_jacobi(&s, 1.0, 1.0, 1.0).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
        // 2 (m1 m3 + m2 m3 + m1 m2)/4 = 5/2
        assert!((a - 2.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn effective_charge_example() {
        let s = model();
        let (z1, z2) = effective_charges(&s, 10.0);
        let want1 = 10.0 * 2f64.sqrt() * 0.5f64.powf(1.5) / 0.75;
        let want2 = 10.0 * 2.0 * 2f64.sqrt() * (2.0f64 / 3.0).powf(1.5) / 0.75;
        assert!((z1 - want1).abs() < 1e-13 && (z2 - want2).abs() < 1e-13);
        assert_eq!(effective_charges(&s, 0.0), (0.0, 0.0));
    }

    #[test]
    fn csf_parameters_dual_route() {
        let s = model();
        let (rho, eps) = (5.0, -2.0);
        let c = csf_parameters(&s, rho, eps).unwrap();
        let (z1, z2) = effective_charges(&s, rho);
        let d = s.geometry.d;
        assert!((c.a - 0.5 * (z1 + z2) * d).abs() < 1e-12 * c.a);
        assert!((c.b - 0.5 * (z2 - z1) * d).abs() < 1e-12 * c.a);
        assert!((c.p - 0.5 * d * (-eps).sqrt()).abs() < 1e-14);
        let c0 = csf_parameters(&s, 0.0, -1.0).unwrap();
        assert_eq!((c0.a, c0.b), (0.0, 0.0));
        assert!((c0.p - 0.5 * (0.75f64 / (2.0 / 3.0)).sqrt()).abs() < 1e-15);
        assert!(matches!(csf_parameters(&s, 1.0, 0.0), Err(Error::ContinuumState(_))));
        assert!(csf_parameters(&s, 1.0, -1e-300).unwrap().p < 1e-140);
    }

    #[test]
    fn channel_example() {
        let s = model();
        let c = channel_kinematics(&s, -1.0, 2, 1).unwrap();
        assert!((c.threshold + 4.0 / 3.0).abs() < 1e-15);
        assert!(c.is_open());
        assert!((c.momentum - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let closed = channel_kinematics(&s, -1.0, 1, 1).unwrap();
        assert_eq!(closed.status, ChannelStatus::Closed);
        assert!((closed.momentum - 0.75f64.sqrt()).abs() < 1e-15);
        // Z_1 = 1: neutral atom, no logarithmic phase
        let neutral = channel_kinematics(&s, -0.1, 1, 1).unwrap();
        assert_eq!(neutral.gamma_bar(37.0), 0.0);
        let at = channel_kinematics(&s, -4.0 / 3.0, 2, 1).unwrap();
        assert_eq!(at.status, ChannelStatus::Threshold);
        assert_eq!(at.momentum, 0.0);
    }
}
