//! Angular Coulomb spheroidal equation
//!
//! `-[(1 - eta^2) Y']' + m^2 Y / (1 - eta^2) + p^2 (1 - eta^2) Y - b eta Y = lambda Y`
//!
//! solved as a symmetric matrix eigenproblem in normalized associated
//! Legendre functions. The n-th eigenvalue in ascending order carries
//! `n` nodes on (-1, 1).

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::legendre::ReducedLegendre;

const TAIL_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularOptions {
    pub initial_size: usize,
    pub max_size: usize,
}

impl Default for AngularOptions {
    fn default() -> Self {
        Self {
            initial_size: 24,
            max_size: 400,
        }
    }
}

/// One eigenpair of the angular equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularSolution {
    pub lambda: f64,
    /// Coefficients on `Pbar_{m+k}^m`, unit norm, sign fixed so that
    /// `Y / (1 - eta^2)^{m/2}` is positive at `eta = +1`.
    pub coeffs: Vec<f64>,
    pub n_eta: u32,
    pub m: u32,
    pub p2: f64,
    pub b: f64,
}

/// The pentadiagonal angular matrix stored by diagonals.
#[derive(Debug, Clone)]
pub struct AngularBand {
    pub diag: Vec<f64>,
    pub off1: Vec<f64>,
    pub off2: Vec<f64>,
}

impl AngularBand {
    pub fn new(p2: f64, b: f64, m: u32, n: usize) -> Self {
        let leg = ReducedLegendre::new(m);
        let e: Vec<f64> = (0..n).map(|k| leg.eta_element(k)).collect();
        let diag = (0..n)
            .map(|k| {
                let l = (m as usize + k) as f64;
                let below = if k > 0 { e[k - 1] * e[k - 1] } else { 0.0 };
                l * (l + 1.0) + p2 * (1.0 - below - e[k] * e[k])
            })
            .collect();
        let off1 = (0..n.saturating_sub(1)).map(|k| -b * e[k]).collect();
        let off2 = (0..n.saturating_sub(2)).map(|k| -p2 * e[k] * e[k + 1]).collect();
        Self { diag, off1, off2 }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.diag.clone()));
        for (k, v) in self.off1.iter().enumerate() {
            h[(k, k + 1)] = *v;
            h[(k + 1, k)] = *v;
        }
        for (k, v) in self.off2.iter().enumerate() {
            h[(k, k + 2)] = *v;
            h[(k + 2, k)] = *v;
        }
        debug_assert_eq!(h.nrows(), n);
        h
    }

    /// Number of eigenvalues below `sigma`, from the inertia of the band
    /// LDL^T factorization of `H - sigma`.
    pub fn count_below(&self, sigma: f64) -> usize {
        let n = self.len();
        let tiny = f64::MIN_POSITIVE.sqrt();
        // d1, d2: pivots j-1, j-2; l1_prev: L(j-1, j-2)
        let (mut d1, mut d2, mut l1_prev) = (0.0, 0.0, 0.0);
        let mut count = 0;
        for j in 0..n {
            let l2 = if j >= 2 { self.off2[j - 2] / d2 } else { 0.0 };
            let l1 = if j >= 1 { (self.off1[j - 1] - l2 * l1_prev * d2) / d1 } else { 0.0 };
            let mut dj = self.diag[j] - sigma - l1 * l1 * d1 - l2 * l2 * d2;
            if dj == 0.0 {
                dj = -tiny;
            }
            if dj < 0.0 {
                count += 1;
            }
            d2 = d1;
            d1 = dj;
            l1_prev = l1;
        }
        count
    }

    /// Gershgorin interval containing the spectrum.
    fn bounds(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..n {
            let mut r = 0.0;
            if k >= 1 {
                r += self.off1[k - 1].abs();
            }
            if k + 1 < n {
                r += self.off1[k].abs();
            }
            if k >= 2 {
                r += self.off2[k - 2].abs();
            }
            if k + 2 < n {
                r += self.off2[k].abs();
            }
            lo = lo.min(self.diag[k] - r);
            hi = hi.max(self.diag[k] + r);
        }
        (lo, hi)
    }

    /// Eigenvalue number `k` (ascending) by bisection on the inertia count.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.bounds();
        let tol = 4.0 * f64::EPSILON * lo.abs().max(hi.abs());
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Unit eigenvector for an accurate eigenvalue by inverse iteration.
    pub fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.len();
        let scale = lambda.abs().max(1.0);
        let mut shifted = self.to_dense();
        for k in 0..n {
            shifted[(k, k)] -= lambda + 1e-13 * scale;
        }
        let lu = shifted.lu();
        let mut v = nalgebra::DVector::from_fn(n, |k, _| 1.0 / (1.0 + k as f64).sqrt());
        for _ in 0..3 {
            if let Some(next) = lu.solve(&v) {
                let norm = next.norm();
                if norm.is_finite() && norm > 0.0 {
                    v = next / norm;
                }
            }
        }
        v.iter().copied().collect()
    }
}

/// Angular matrix as a dense matrix.
pub fn angular_matrix(p2: f64, b: f64, m: u32, n: usize) -> DMatrix<f64> {
    AngularBand::new(p2, b, m, n).to_dense()
}

/// Eigenvalue number `n_eta` at a fixed basis size.
pub fn angular_lambda_fixed(p2: f64, b: f64, m: u32, n_eta: u32, size: usize) -> f64 {
    AngularBand::new(p2, b, m, size).eigenvalue(n_eta as usize)
}

/// Eigenpair number `n_eta` at a fixed basis size, without convergence checks.
pub fn angular_fixed(p2: f64, b: f64, m: u32, n_eta: u32, size: usize) -> (f64, Vec<f64>) {
    let band = AngularBand::new(p2, b, m, size);
    let lambda = band.eigenvalue(n_eta as usize);
    let mut coeffs = band.eigenvector(lambda);
    fix_sign(&mut coeffs, m, n_eta);
    (lambda, coeffs)
}

/// Reference eigenpair from a dense symmetric eigensolver.
pub fn angular_fixed_dense(p2: f64, b: f64, m: u32, n_eta: u32, size: usize) -> (f64, Vec<f64>) {
    let eig = SymmetricEigen::new(angular_matrix(p2, b, m, size));
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let idx = order[n_eta as usize];
    let mut coeffs: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
    fix_sign(&mut coeffs, m, n_eta);
    (eig.eigenvalues[idx], coeffs)
}

fn fix_sign(coeffs: &mut [f64], m: u32, n_eta: u32) {
    let ends = ReducedLegendre::new(m).values(coeffs.len(), 1.0);
    let mut plus = 0.0;
    let mut minus = 0.0;
    for (k, (c, r)) in coeffs.iter().zip(&ends).enumerate() {
        plus += c * r;
        minus += if k % 2 == 0 { c * r } else { -c * r };
    }
    let sign_plus = if plus.abs() >= minus.abs() {
        plus.signum()
    } else if n_eta % 2 == 0 {
        minus.signum()
    } else {
        -minus.signum()
    };
    if sign_plus < 0.0 {
        coeffs.iter_mut().for_each(|c| *c = -*c);
    }
}

fn tail(coeffs: &[f64]) -> f64 {
    let n = coeffs.len();
    let peak = coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    let end = coeffs[n.saturating_sub(3)..].iter().fold(0.0f64, |a, c| a.max(c.abs()));
    end / peak
}

/// Basis size at which the requested eigenvector has a negligible tail.
pub fn converged_size(p2: f64, b: f64, m: u32, n_eta: u32, opts: &AngularOptions) -> Result<usize> {
    let guess = 8.0 * (p2.sqrt() + b.abs()).sqrt() + 2.0 * n_eta as f64 + 16.0;
    let mut size = opts.initial_size.max(guess.ceil() as usize);
    loop {
        let size_now = size.min(opts.max_size);
        let (_, coeffs) = angular_fixed(p2, b, m, n_eta, size_now);
        if tail(&coeffs) < TAIL_TOL {
            return Ok(size_now);
        }
        if size_now >= opts.max_size {
            return Err(Error::NoConvergence(format!(
                "angular basis reached {} functions (p^2 = {p2}, b = {b}, m = {m}, n_eta = {n_eta})",
                opts.max_size
            )));
        }
        size *= 2;
    }
}

pub fn angular_eigenvalue(p2: f64, b: f64, m: u32, n_eta: u32) -> Result<AngularSolution> {
    angular_eigenvalue_with(p2, b, m, n_eta, &AngularOptions::default())
}

pub fn angular_eigenvalue_with(p2: f64, b: f64, m: u32, n_eta: u32, opts: &AngularOptions) -> Result<AngularSolution> {
    if !(p2 >= 0.0) || !b.is_finite() {
        return Err(Error::InvalidQuantumNumbers(format!("p^2 = {p2}, b = {b}")));
    }
    let size = converged_size(p2, b, m, n_eta, opts)?;
    let (lambda, coeffs) = angular_fixed(p2, b, m, n_eta, size);
    Ok(AngularSolution {
        lambda,
        coeffs,
        n_eta,
        m,
        p2,
        b,
    })
}

impl AngularSolution {
    /// `Y(eta)` and `dY/deta`.
    ///
    /// `one_minus_eta2` is `1 - eta^2`, passed in so callers can supply it
    /// without cancellation near the end points.
    pub fn eval_parts(&self, eta: f64, one_minus_eta2: f64) -> (f64, f64) {
        let leg = ReducedLegendre::new(self.m);
        let (v, d) = leg.values_and_derivatives(self.coeffs.len(), eta);
        let r: f64 = self.coeffs.iter().zip(&v).map(|(c, x)| c * x).sum();
        let dr: f64 = self.coeffs.iter().zip(&d).map(|(c, x)| c * x).sum();
        let m = self.m as i32;
        if m == 0 {
            return (r, dr);
        }
        let sin_m = one_minus_eta2.powf(0.5 * m as f64);
        // d/deta (1-eta^2)^{m/2} = -m eta (1-eta^2)^{m/2 - 1}
        let dsin = -(m as f64) * eta * one_minus_eta2.powf(0.5 * m as f64 - 1.0);
        (sin_m * r, sin_m * dr + dsin * r)
    }

    pub fn value(&self, eta: f64) -> f64 {
        self.eval_parts(eta, (1.0 - eta) * (1.0 + eta)).0
    }

    pub fn value_and_derivative(&self, eta: f64) -> (f64, f64) {
        self.eval_parts(eta, (1.0 - eta) * (1.0 + eta))
    }

    /// Reduced value `Y / (1 - eta^2)^{m/2}`, finite at the end points.
    pub fn reduced(&self, eta: f64) -> f64 {
        let v = ReducedLegendre::new(self.m).values(self.coeffs.len(), eta);
        self.coeffs.iter().zip(&v).map(|(c, x)| c * x).sum()
    }

    /// `<Y|eta^2|Y>` from the Legendre matrix elements.
    pub fn eta2_moment(&self) -> f64 {
        let leg = ReducedLegendre::new(self.m);
        let c = &self.coeffs;
        let n = c.len();
        (0..=n)
            .map(|k| {
                let mut v = 0.0;
                if k >= 1 {
                    v += leg.eta_element(k - 1) * c[k - 1];
                }
                if k + 1 < n {
                    v += leg.eta_element(k) * c[k + 1];
                }
                v * v
            })
            .sum()
    }

    /// Number of sign changes of the reduced function on a fine interior grid.
    pub fn node_count(&self) -> u32 {
        let n = 4000 + 20 * self.coeffs.len();
        let mut count = 0;
        let mut prev = self.reduced(-1.0);
        for i in 1..=n {
            let eta = -1.0 + 2.0 * i as f64 / n as f64;
            let v = self.reduced(eta);
            if v != 0.0 && prev != 0.0 && v.signum() != prev.signum() {
                count += 1;
            }
            if v != 0.0 {
                prev = v;
            }
        }
        count
    }

    /// Pointwise residual of the differential equation relative to the
    /// size of its terms.
    ///
    /// Each basis function satisfies the Legendre equation exactly, so the
    /// residual is `sum_k c_k [l(l+1) + p^2 (1-eta^2) - b eta - lambda] Pbar_k`.
    pub fn residual(&self, eta: f64) -> f64 {
        let v = ReducedLegendre::new(self.m).values(self.coeffs.len(), eta);
        let s = 1.0 - eta * eta;
        let mut res = 0.0;
        let mut scale = 0.0;
        for (k, (c, r)) in self.coeffs.iter().zip(&v).enumerate() {
            let l = (self.m as usize + k) as f64;
            let term = c * r;
            res += (l * (l + 1.0) + self.p2 * s - self.b * eta - self.lambda) * term;
            scale += (l * (l + 1.0) + self.p2 * s + self.b.abs() + self.lambda.abs()) * term.abs();
        }
        res.abs() / scale.max(1e-300)
    }
}
