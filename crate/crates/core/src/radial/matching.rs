//! Asymptotic matching of the propagated columns to standing waves.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::channels::{Channel, ChannelSpace};
use super::propagate::SolutionSnapshot;
use crate::error::{Error, Result};

pub const MAX_CONDITION: f64 = 1e12;

/// Long-range remainder `lambda / rho^2 + mu / rho^3` of a diagonal potential
/// above its threshold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Tail {
    pub lambda: f64,
    pub mu: f64,
}

impl Tail {
    pub fn eval(&self, rho: f64) -> f64 {
        (self.lambda + self.mu / rho) / (rho * rho)
    }

    pub fn derivative(&self, rho: f64) -> f64 {
        -(2.0 * self.lambda + 3.0 * self.mu / rho) / rho.powi(3)
    }
}

/// Standing-wave pair for one open channel in the presence of a [`Tail`],
/// to leading WKB order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandingWaves {
    pub q: f64,
    pub tail: Tail,
    pub j: u32,
    pub channel: Channel,
}

/// `(F, F', G, G')` with `F -> q^{-1/2} sin(theta)`, `G -> q^{-1/2} cos(theta)`
/// and `theta = q rho - gamma_bar(rho) - pi J / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveValues {
    pub f: f64,
    pub df: f64,
    pub g: f64,
    pub dg: f64,
}

impl StandingWaves {
    /// `int_rho^inf (q - k(r)) dr`, exact in `lambda` and first order in `mu`.
    fn tail_phase(&self, rho: f64) -> f64 {
        let (q, l) = (self.q, self.tail.lambda);
        let qr = q * rho;
        let inverse_square = if l >= 0.0 {
            let s = l.sqrt();
            -l / ((qr * qr - l).sqrt() + qr) + s * (s / qr).asin()
        } else {
            let s = (-l).sqrt();
            -l / ((qr * qr - l).sqrt() + qr) - s * (s / qr).asinh()
        };
        inverse_square + self.tail.mu / (4.0 * q * rho * rho)
    }

    pub fn local_momentum(&self, rho: f64) -> f64 {
        (self.q * self.q - self.tail.eval(rho)).sqrt()
    }

    /// Second-order WKB: phase velocity `w = k - k'' / (4 k^2) + 3 k'^2 / (8 k^3)`,
    /// amplitude `w^{-1/2}`.
    pub fn eval(&self, rho: f64) -> Result<WaveValues> {
        let k2 = self.q * self.q - self.tail.eval(rho);
        if k2 <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "matching radius {rho} inside the classically forbidden tail of channel {:?}",
                self.channel.label
            )));
        }
        let k = k2.sqrt();
        let t1 = self.tail.derivative(rho);
        let t2 = (6.0 * self.tail.lambda + 12.0 * self.tail.mu / rho) / rho.powi(4);
        let dk = -0.5 * t1 / k;
        let d2k = (-0.5 * t2 - dk * dk) / k;
        let w = k - 0.25 * d2k / k2 + 0.375 * dk * dk / (k2 * k);
        let kin = &self.channel.kinematics;
        let theta = self.q * rho - kin.gamma_bar(rho) - std::f64::consts::FRAC_PI_2 * self.j as f64 + self.tail_phase(rho)
            - 0.25 * dk / k2;
        let dtheta = w - kin.gamma_bar_derivative(rho);
        let amp = w.powf(-0.5);
        let damp = -0.5 * amp / w * dk;
        let (s, c) = theta.sin_cos();
        Ok(WaveValues {
            f: amp * s,
            df: amp * dtheta * c + damp * s,
            g: amp * c,
            dg: -amp * dtheta * s + damp * c,
        })
    }
}

/// Result of one value-and-derivative match at a pair of radii.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub rho: f64,
    pub k: DMatrix<f64>,
    /// Solution coefficients, one column per open channel.
    pub coefficients: DMatrix<f64>,
    pub condition: f64,
    pub residual: f64,
    /// `log10` of the largest closed-channel amplitude relative to the
    /// largest open-channel amplitude of the matched solution at `rho`.
    pub closed_log_amplitude: f64,
    /// Logarithmic derivative of each closed component over `kappa` at `rho`.
    pub closed_log_slope: Vec<f64>,
}

/// Least-squares match of open rows to `F - G K` and closed rows to decaying
/// exponentials at the radii of `snaps` (all in one column basis).
pub fn match_pair(space: &ChannelSpace, tails: &[Tail], snaps: &[&SolutionSnapshot]) -> Result<MatchResult> {
    let n = space.n_total();
    let n_open = space.n_open;
    let unknowns = n + n_open;
    let rows_per = 2 * n_open + (n - n_open);
    let mut a = DMatrix::zeros(rows_per * snaps.len(), unknowns);
    let mut rhs = DMatrix::zeros(rows_per * snaps.len(), n_open);
    for (s_idx, snap) in snaps.iter().enumerate() {
        let base = s_idx * rows_per;
        let rho = snap.rho;
        for (i, ch) in space.open().iter().enumerate() {
            let waves = StandingWaves {
                q: ch.kinematics.momentum,
                tail: tails[ch.basis_index],
                j: space.j,
                channel: *ch,
            }
            .eval(rho)?;
            let b = ch.basis_index;
            let (rv, rd) = (base + 2 * i, base + 2 * i + 1);
            for c in 0..n {
                a[(rv, c)] = snap.g[(b, c)];
                a[(rd, c)] = snap.dg[(b, c)];
            }
            a[(rv, n + i)] = waves.g;
            a[(rd, n + i)] = waves.dg;
            rhs[(rv, i)] = waves.f;
            rhs[(rd, i)] = waves.df;
        }
        for (i, ch) in space.closed().iter().enumerate() {
            let kappa = closed_decay(ch, tails[ch.basis_index], rho);
            let row = base + 2 * n_open + i;
            let b = ch.basis_index;
            for c in 0..n {
                a[(row, c)] = snap.dg[(b, c)] + kappa * snap.g[(b, c)];
            }
        }
    }

    let scale: Vec<f64> = (0..unknowns)
        .map(|c| {
            let norm = a.column(c).norm();
            if norm > 0.0 {
                1.0 / norm
            } else {
                1.0
            }
        })
        .collect();
    let mut scaled = a.clone();
    for (c, s) in scale.iter().enumerate() {
        scaled.column_mut(c).scale_mut(*s);
    }
    let svd = scaled.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditionedMatch(condition));
    }
    let mut x = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::SingularMatrix(format!("matching system: {e}")))?;
    for (c, s) in scale.iter().enumerate() {
        x.row_mut(c).scale_mut(*s);
    }
    let residual = (&a * &x - &rhs).norm() / rhs.norm().max(f64::MIN_POSITIVE);
    let coefficients = x.rows(0, n).clone_owned();
    let k = x.rows(n, n_open).clone_owned();

    let last = snaps.last().expect("at least one snapshot");
    let psi = &last.g * &coefficients;
    let dpsi = &last.dg * &coefficients;
    let open_amp = space
        .open()
        .iter()
        .map(|ch| psi.row(ch.basis_index).amax())
        .fold(0.0, f64::max);
    let closed_amp = space
        .closed()
        .iter()
        .map(|ch| psi.row(ch.basis_index).amax())
        .fold(0.0, f64::max);
    let closed_log_amplitude = if space.closed().is_empty() {
        f64::NEG_INFINITY
    } else {
        (closed_amp / open_amp).log10()
    };
    let closed_log_slope = space
        .closed()
        .iter()
        .map(|ch| {
            let b = ch.basis_index;
            let (num, den) = (0..n_open).fold((0.0, 0.0), |(nu, de), c| (nu + dpsi[(b, c)] * psi[(b, c)], de + psi[(b, c)].powi(2)));
            if den > 0.0 {
                num / den / ch.kinematics.momentum
            } else {
                -1.0
            }
        })
        .collect();
    Ok(MatchResult {
        rho: last.rho,
        k,
        coefficients,
        condition,
        residual,
        closed_log_amplitude,
        closed_log_slope,
    })
}

fn closed_decay(ch: &Channel, tail: Tail, rho: f64) -> f64 {
    let kappa = ch.kinematics.momentum;
    (kappa * kappa + tail.eval(rho)).max(0.0).sqrt()
}

/// `max |K - K^T|`.
pub fn symmetry_defect(k: &DMatrix<f64>) -> f64 {
    (k - k.transpose()).amax()
}

/// `S = (-1)^J (1 - iK)^{-1} (1 + iK)`.
pub fn k_to_stilde(k: &DMatrix<f64>, j: u32) -> Result<DMatrix<Complex64>> {
    if !k.is_square() {
        return Err(Error::SingularMatrix(format!("K is {}x{}", k.nrows(), k.ncols())));
    }
    let n = k.nrows();
    let ik = k.map(|v| Complex64::new(0.0, v));
    let one = DMatrix::<Complex64>::identity(n, n);
    let minus = &one - &ik;
    let plus = &one + &ik;
    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
    let lu = minus.lu();
    let s = lu
        .solve(&plus)
        .ok_or_else(|| Error::SingularMatrix("1 - iK".into()))?;
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularMatrix("1 - iK".into()));
    }
    Ok(s * Complex64::new(sign, 0.0))
}

/// Inverse of [`k_to_stilde`]: `K = -i (S' - 1)(S' + 1)^{-1}` with `S' = (-1)^J S`.
pub fn stilde_to_k(s: &DMatrix<Complex64>, j: u32) -> Result<DMatrix<f64>> {
    if !s.is_square() {
        return Err(Error::SingularMatrix(format!("S is {}x{}", s.nrows(), s.ncols())));
    }
    let n = s.nrows();
    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
    let sp = s * Complex64::new(sign, 0.0);
    let one = DMatrix::<Complex64>::identity(n, n);
    let num = &sp - &one;
    let den = &sp + &one;
    // (S'+1)^T X^T = (S'-1)^T solves X = (S'-1)(S'+1)^{-1}
    let xt = den
        .transpose()
        .lu()
        .solve(&num.transpose())
        .ok_or_else(|| Error::SingularMatrix("1 + S".into()))?;
    let k = xt.transpose() * Complex64::new(0.0, -1.0);
    if k.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularMatrix("1 + S".into()));
    }
    Ok(k.map(|v| v.re))
}

/// `max |S S^dagger - 1|`.
pub fn unitarity_defect(s: &DMatrix<Complex64>) -> f64 {
    let n = s.nrows();
    let prod = s * s.adjoint() - DMatrix::<Complex64>::identity(n, n);
    prod.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Real and imaginary parts, row-major nested, for serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&DMatrix<Complex64>> for ComplexMatrix {
    fn from(m: &DMatrix<Complex64>) -> Self {
        let rows = |f: fn(&Complex64) -> f64| (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect();
        Self {
            re: rows(|c| c.re),
            im: rows(|c| c.im),
        }
    }
}

pub fn nested(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

