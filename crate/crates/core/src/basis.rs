//! Symmetrized Wigner D-functions, hyperspherical basis functions, the
//! volume weight and the three-pole net of coordinate lines.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::csf::CsfState;
use crate::error::{Error, Result};
use crate::kinematics::{spheroidal_to_t_plane, ParticleSystem};

/// `(J, K, m, lambda_p)` of a symmetrized D-function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RotorIndex {
    pub j: u32,
    pub k: i32,
    pub m: u32,
    pub parity: i8,
}

impl RotorIndex {
    pub fn new(j: u32, k: i32, m: u32, parity: i8) -> Result<Self> {
        if k.unsigned_abs() > j || m > j {
            return Err(Error::IndexOutOfRange(format!("J = {j}, K = {k}, m = {m}")));
        }
        if parity != 1 && parity != -1 {
            return Err(Error::IndexOutOfRange(format!("parity index {parity}")));
        }
        Ok(Self { j, k, m, parity })
    }

    /// `m = 0` with `lambda_p = -(-1)^J` gives an identically vanishing function.
    pub fn is_null(&self) -> bool {
        self.m == 0 && self.parity as i32 == -sign_pow(self.j as i32)
    }

    /// Lowest allowed body-frame projection for this `J` and parity.
    pub fn min_m(j: u32, parity: i8) -> u32 {
        if parity as i32 == -sign_pow(j as i32) {
            1
        } else {
            0
        }
    }
}

fn sign_pow(n: i32) -> i32 {
    if n.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

fn ln_factorial(n: i64) -> f64 {
    (1..=n).map(|v| (v as f64).ln()).sum()
}

/// Wigner's explicit sum for `d^J_{Km}(beta)`.
pub fn wigner_small_d_sum(j: u32, k: i32, m: i32, beta: f64) -> f64 {
    let (j, k, m) = (j as i64, k as i64, m as i64);
    let (c, s) = ((0.5 * beta).cos(), (0.5 * beta).sin());
    let pre = 0.5 * (ln_factorial(j + k) + ln_factorial(j - k) + ln_factorial(j + m) + ln_factorial(j - m));
    let lo = 0.max(m - k);
    let hi = (j + m).min(j - k);
    let mut sum = 0.0;
    for t in lo..=hi {
        let ln = pre - ln_factorial(j + m - t) - ln_factorial(t) - ln_factorial(k - m + t) - ln_factorial(j - k - t);
        let sign = if (k - m + t) % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * ln.exp() * c.powi((2 * j + m - k - 2 * t) as i32) * s.powi((k - m + 2 * t) as i32);
    }
    sum
}

/// `d^J_{Km}(beta)` by three-term recursion in `K`, seeded at `K = -J` or
/// `K = +J` so that the recursion never runs past the peak near `K = m cos(beta)`.
pub fn wigner_small_d(j: u32, k: i32, m: i32, beta: f64) -> Result<f64> {
    if k.unsigned_abs() > j || m.unsigned_abs() > j {
        return Err(Error::IndexOutOfRange(format!("J = {j}, K = {k}, m = {m}")));
    }
    let sb = beta.sin();
    if sb.abs() < 1e-6 || j == 0 {
        return Ok(wigner_small_d_sum(j, k, m, beta));
    }
    let jf = j as f64;
    let mf = m as f64;
    let (c, s) = ((0.5 * beta).cos(), (0.5 * beta).sin());
    let edge = (0.5 * (ln_factorial(2 * j as i64) - ln_factorial(j as i64 + m as i64) - ln_factorial(j as i64 - m as i64))).exp();
    let cb = beta.cos();
    if k as f64 <= mf * cb {
        // d_{-J,m} = edge cos^{J-m} sin^{J+m}
        let mut prev = 0.0;
        let mut cur = edge * c.powi(j as i32 - m) * s.powi(j as i32 + m);
        let mut kk = -(j as i32);
        while kk < k {
            let kf = kk as f64;
            let next = (2.0 * (mf - kf * cb) / sb * cur - ((jf + kf) * (jf - kf + 1.0)).sqrt() * prev)
                / ((jf - kf) * (jf + kf + 1.0)).sqrt();
            prev = cur;
            cur = next;
            kk += 1;
        }
        Ok(cur)
    } else {
        // d_{J,m} = edge cos^{J+m} (-sin)^{J-m}
        let mut prev = 0.0;
        let mut cur = edge * c.powi(j as i32 + m) * (-s).powi(j as i32 - m);
        let mut kk = j as i32;
        while kk > k {
            let kf = kk as f64;
            let next = (2.0 * (mf - kf * cb) / sb * cur - ((jf - kf) * (jf + kf + 1.0)).sqrt() * prev)
                / ((jf + kf) * (jf - kf + 1.0)).sqrt();
            prev = cur;
            cur = next;
            kk -= 1;
        }
        Ok(cur)
    }
}

/// `D^J_{Km}(Phi, Theta, phi) = e^{-iK Phi} d^J_{Km}(Theta) e^{-im phi}`.
pub fn wigner_big_d(j: u32, k: i32, m: i32, phi_big: f64, theta: f64, phi: f64) -> Result<Complex64> {
    let d = wigner_small_d(j, k, m, theta)?;
    Ok(Complex64::from_polar(d, -(k as f64) * phi_big - (m as f64) * phi))
}

/// Normalization `A^J_{Km} = (-1)^K sqrt((2J+1)/(1+delta_{0m})) / (4 pi)`.
pub fn normalization(rotor: &RotorIndex) -> f64 {
    let delta = if rotor.m == 0 { 2.0 } else { 1.0 };
    sign_pow(rotor.k) as f64 * ((2.0 * rotor.j as f64 + 1.0) / delta).sqrt() / (4.0 * PI)
}

/// `A [D^J_{-K,m} + lambda_p (-1)^{J+m} D^J_{-K,-m}]`.
pub fn symmetrized_d(rotor: &RotorIndex, phi_big: f64, theta: f64, phi: f64) -> Complex64 {
    let (j, k, m) = (rotor.j, rotor.k, rotor.m as i32);
    let a = normalization(rotor);
    let phase = rotor.parity as f64 * sign_pow(j as i32 + m) as f64;
    // indices were validated at construction
    let plus = wigner_big_d(j, -k, m, phi_big, theta, phi).unwrap_or_default();
    let minus = wigner_big_d(j, -k, -m, phi_big, theta, phi).unwrap_or_default();
    a * (plus + phase * minus)
}

/// `g(rho, t) = rho^5 (1 + t^2)^{-3}`.
pub fn weight(rho: f64, t: f64) -> f64 {
    rho.powi(5) / (1.0 + t * t).powi(3)
}

/// Six-dimensional volume element per `drho dt dtheta dphi dTheta dPhi`.
pub fn volume_element(system: &ParticleSystem, rho: f64, t: f64, theta: f64, big_theta: f64) -> f64 {
    let r = &system.reduced;
    (4.0 * r.big_m * r.mu).powf(-1.5) * weight(rho, t) * t * t * theta.sin() * big_theta.sin()
}

/// Product of a symmetrized D-function and a two-centre state.
#[derive(Debug, Clone)]
pub struct HscsFunction {
    pub rotor: RotorIndex,
    pub state: CsfState,
}

/// Checks compatibility and builds `Phi = D^{J lambda}_{Km} phi_{jm}`.
pub fn assemble(rotor: RotorIndex, state: &CsfState) -> Result<HscsFunction> {
    if rotor.is_null() {
        return Err(Error::NullRotor);
    }
    if rotor.m != state.index.m {
        return Err(Error::MismatchedM {
            rotor: rotor.m,
            state: state.index.m,
        });
    }
    Ok(HscsFunction {
        rotor,
        state: state.clone(),
    })
}

impl HscsFunction {
    /// Value at Euler angles `(Phi, Theta, phi)` and spheroidal `(xi, eta)`.
    pub fn evaluate(&self, phi_big: f64, theta: f64, phi: f64, xi: f64, eta: f64) -> Result<Complex64> {
        Ok(symmetrized_d(&self.rotor, phi_big, theta, phi) * self.state.evaluate(xi, eta)?)
    }
}

/// A point of the three-pole net.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetPole {
    pub name: String,
    pub point: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetCurve {
    pub curve_id: String,
    /// `"xi"` for lines of constant `xi`, `"eta"` for constant `eta`.
    pub family: String,
    pub value: f64,
    pub points: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreePoleNet {
    pub rho: f64,
    pub curves: Vec<NetCurve>,
    pub poles: Vec<NetPole>,
}

/// Point on the sphere of radius `rho0` for spheroidal `(xi, eta)`.
pub fn sphere_point(system: &ParticleSystem, rho0: f64, xi: f64, eta: f64) -> [f64; 3] {
    let (z, perp) = spheroidal_to_t_plane(&system.geometry, xi, eta);
    let t = z.hypot(perp);
    let theta = perp.atan2(z);
    let chi = 2.0 * t.atan();
    [rho0 * chi.sin() * theta.cos(), rho0 * chi.sin() * theta.sin(), rho0 * chi.cos()]
}

fn sphere_from_t(rho0: f64, t: f64, theta: f64) -> [f64; 3] {
    let chi = 2.0 * t.atan();
    [rho0 * chi.sin() * theta.cos(), rho0 * chi.sin() * theta.sin(), rho0 * chi.cos()]
}

/// Lines of constant `xi` and constant `eta` mapped onto the sphere
/// `|x| = rho0`, `y >= 0`, with the three poles marked.
pub fn three_pole_net(system: &ParticleSystem, rho0: f64, n_xi_lines: usize, n_eta_lines: usize) -> Result<ThreePoleNet> {
    if !(rho0 > 0.0) {
        return Err(Error::NonPositiveInput(format!("rho0 = {rho0}")));
    }
    let samples = 200;
    let mut curves = Vec::new();
    // xi lines: xi = 1 + tan^2, spread so that the far lines approach the third pole
    for i in 0..n_xi_lines {
        let frac = (i as f64 + 0.5) / n_xi_lines as f64;
        let xi = 1.0 / (1.0 - frac).powi(2);
        let points = (0..=samples)
            .map(|k| {
                let eta = -(PI * k as f64 / samples as f64).cos();
                sphere_point(system, rho0, xi, eta)
            })
            .collect();
        curves.push(NetCurve {
            curve_id: format!("xi-{i}"),
            family: "xi".into(),
            value: xi,
            points,
        });
    }
    for i in 0..=n_eta_lines.saturating_sub(1) {
        let eta = if n_eta_lines == 1 { 0.0 } else { -1.0 + 2.0 * i as f64 / (n_eta_lines - 1) as f64 };
        let points = (0..=samples)
            .map(|k| {
                let u = k as f64 / (samples + 1) as f64;
                let xi = 1.0 / (1.0 - u).powi(2);
                sphere_point(system, rho0, xi, eta)
            })
            .collect();
        curves.push(NetCurve {
            curve_id: format!("eta-{i}"),
            family: "eta".into(),
            value: eta,
            points,
        });
    }
    let g = &system.geometry;
    let poles = vec![
        NetPole {
            name: "centre-1".into(),
            point: sphere_from_t(rho0, g.t1, PI),
        },
        NetPole {
            name: "centre-2".into(),
            point: sphere_from_t(rho0, g.t2, 0.0),
        },
        NetPole {
            name: "infinity".into(),
            point: [0.0, 0.0, -rho0],
        },
    ];
    Ok(ThreePoleNet { rho: rho0, curves, poles })
}
