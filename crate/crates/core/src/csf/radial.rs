//! Radial Coulomb spheroidal equation
//!
//! `-[(xi^2 - 1) X']' + m^2 X / (xi^2 - 1) + (p^2 (xi^2 - 1) - a xi) X = nu X`
//!
//! Galerkin method in Laguerre functions of `x = 2 beta (xi - 1)` with the
//! regular factor `(xi^2 - 1)^{m/2}` split off. `beta = p` except for small
//! `p`, where the solution varies both on `xi - 1 ~ 1` and `xi - 1 ~ 1/p`
//! and `beta` moves to the geometric mean of the two scales. The separated problem is
//! solved when `nu = -lambda`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::band::{pencil_eigenvector, BandPencil};
use crate::numerics::laguerre::LaguerreFunctions;
use crate::numerics::quadrature::{gauss_laguerre_scaled, Rule};

const TAIL_TOL: f64 = 1e-13;
const BETA_FLOOR: f64 = 0.5;

/// Laguerre scale used for decay constant `p`.
pub fn basis_scale(p: f64) -> f64 {
    if p >= BETA_FLOOR {
        p
    } else {
        (p * BETA_FLOOR).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialOptions {
    pub initial_size: usize,
    pub max_size: usize,
}

impl Default for RadialOptions {
    fn default() -> Self {
        Self {
            initial_size: 24,
            max_size: 320,
        }
    }
}

/// One eigenfunction of the radial equation.
///
/// `X(xi) = (xi^2 - 1)^{m/2} sum_j c_j psi_j(2 beta (xi - 1))`, normalized to
/// `int X^2 dxi = 1` with `X (xi^2-1)^{-m/2} > 0` at `xi = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialSolution {
    pub nu: f64,
    pub coeffs: Vec<f64>,
    pub n_xi: u32,
    pub m: u32,
    pub a: f64,
    pub p: f64,
    pub beta: f64,
}

struct Tables {
    rule: Rule,
    psi: Vec<Vec<f64>>,
    dpsi: Vec<Vec<f64>>,
}

fn build_tables(m: u32, n: usize) -> Tables {
    let rule = gauss_laguerre_scaled(n + m as usize + 3, m);
    let funcs = LaguerreFunctions::new(m);
    let (psi, dpsi) = rule
        .nodes
        .iter()
        .map(|&x| funcs.values_and_derivatives(n, x))
        .unzip();
    Tables { rule, psi, dpsi }
}

/// Quadrature tables, memoized per `(m, n)`.
fn tables(m: u32, n: usize) -> Arc<Tables> {
    static CACHE: OnceLock<Mutex<HashMap<(u32, usize), Arc<Tables>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().expect("table cache").get(&(m, n)) {
        return Arc::clone(t);
    }
    let t = Arc::new(build_tables(m, n));
    cache.lock().expect("table cache").insert((m, n), Arc::clone(&t));
    t
}

/// Stiffness and mass matrices, both with the common factor
/// `(2 beta)^{-m-1}` removed.
fn matrices(a: f64, p: f64, beta: f64, m: u32, n: usize, tab: &Tables) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut stiff = DMatrix::zeros(n, n);
    let mut mass = DMatrix::zeros(n, n);
    let c = 0.5 / beta;
    let mf = m as f64;
    for (k, (&x, &w)) in tab.rule.nodes.iter().zip(&tab.rule.weights).enumerate() {
        let g = 2.0 + c * x;
        let xi = 1.0 + c * x;
        let s = c * x * g;
        let gm = g.powi(m as i32);
        let kin = w * gm * g * x * 2.0 * beta;
        let pot = w * gm * (-mf * (mf + 1.0) + p * p * s - a * xi);
        let wm = w * gm;
        let (v, d) = (&tab.psi[k], &tab.dpsi[k]);
        for i in 0..n {
            for j in i.saturating_sub(bandwidth(m))..=i {
                stiff[(i, j)] += kin * d[i] * d[j] + pot * v[i] * v[j];
                mass[(i, j)] += wm * v[i] * v[j];
            }
        }
    }
    for i in 0..n {
        for j in i.saturating_sub(bandwidth(m))..i {
            stiff[(j, i)] = stiff[(i, j)];
            mass[(j, i)] = mass[(i, j)];
        }
    }
    (stiff, mass)
}

/// Half-bandwidth of both Galerkin matrices; entries further out vanish
/// identically by Laguerre orthogonality.
fn bandwidth(m: u32) -> usize {
    m as usize + 2
}

fn pencil(a: f64, p: f64, m: u32, size: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if !(p > 0.0) {
        return Err(Error::NonPositiveInput(format!("p = {p}")));
    }
    let tab = tables(m, size);
    Ok(matrices(a, p, basis_scale(p), m, size, &tab))
}

/// Eigenvalue number `n_xi` at a fixed basis size.
pub fn radial_nu_fixed(a: f64, p: f64, m: u32, n_xi: u32, size: usize) -> Result<f64> {
    if n_xi as usize >= size {
        return Err(Error::InvalidQuantumNumbers(format!("n_xi = {n_xi} exceeds basis size {size}")));
    }
    let (stiff, mass) = pencil(a, p, m, size)?;
    Ok(BandPencil::from_dense(&stiff, &mass, bandwidth(m)).eigenvalue(n_xi as usize))
}

/// Eigenvalue number `n_xi` at a fixed basis size, with its raw coefficients.
pub fn radial_fixed(a: f64, p: f64, m: u32, n_xi: u32, size: usize) -> Result<(f64, Vec<f64>)> {
    if n_xi as usize >= size {
        return Err(Error::InvalidQuantumNumbers(format!("n_xi = {n_xi} exceeds basis size {size}")));
    }
    let (stiff, mass) = pencil(a, p, m, size)?;
    let nu = BandPencil::from_dense(&stiff, &mass, bandwidth(m)).eigenvalue(n_xi as usize);
    Ok((nu, pencil_eigenvector(&stiff, &mass, nu)))
}

/// Dense reference for [`radial_fixed`] via Cholesky reduction.
pub fn radial_fixed_dense(a: f64, p: f64, m: u32, n_xi: u32, size: usize) -> Result<(f64, Vec<f64>)> {
    let (stiff, mass) = pencil(a, p, m, size)?;
    let chol = mass
        .cholesky()
        .ok_or_else(|| Error::NoConvergence("radial mass matrix not positive definite".into()))?;
    let linv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| Error::NoConvergence("radial mass matrix singular".into()))?;
    let reduced = &linv * stiff * linv.transpose();
    let eig = SymmetricEigen::new(0.5 * (&reduced + reduced.transpose()));
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let idx = order[n_xi as usize];
    let v = linv.transpose() * eig.eigenvectors.column(idx);
    Ok((eig.eigenvalues[idx], v.iter().copied().collect()))
}

fn tail(coeffs: &[f64]) -> f64 {
    let n = coeffs.len();
    let peak = coeffs.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
    let end = coeffs[n.saturating_sub(3)..].iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
    end / peak
}

pub fn converged_size(a: f64, p: f64, m: u32, n_xi: u32, opts: &RadialOptions) -> Result<usize> {
    let mut size = opts.initial_size.max(2 * n_xi as usize + 16);
    loop {
        let size_now = size.min(opts.max_size);
        let (_, coeffs) = radial_fixed(a, p, m, n_xi, size_now)?;
        if tail(&coeffs) < TAIL_TOL {
            return Ok(size_now);
        }
        if size_now >= opts.max_size {
            return Err(Error::NoConvergence(format!(
                "radial basis reached {} functions (a = {a}, p = {p}, m = {m}, n_xi = {n_xi})",
                opts.max_size
            )));
        }
        size *= 2;
    }
}

pub fn radial_eigenvalue(a: f64, p: f64, m: u32, n_xi: u32, size: usize) -> Result<RadialSolution> {
    let (nu, coeffs) = radial_fixed(a, p, m, n_xi, size)?;
    let mut sol = RadialSolution {
        nu,
        coeffs,
        n_xi,
        m,
        a,
        p,
        beta: basis_scale(p),
    };
    let funcs = LaguerreFunctions::new(m);
    let origin: f64 = sol.coeffs.iter().zip(funcs.values(size, 0.0)).map(|(c, v)| c * v).sum();
    let norm = sol.moments().0.sqrt();
    let scale = if origin < 0.0 { -1.0 / norm } else { 1.0 / norm };
    sol.coeffs.iter_mut().for_each(|c| *c *= scale);
    Ok(sol)
}

impl RadialSolution {
    /// `(int X^2 dxi, int xi^2 X^2 dxi)`.
    pub fn moments(&self) -> (f64, f64) {
        let n = self.coeffs.len();
        let tab = tables(self.m, n + 1);
        let c = 0.5 / self.beta;
        let prefactor = c.powi(self.m as i32 + 1);
        let mut m0 = 0.0;
        let mut m2 = 0.0;
        for (k, (&x, &w)) in tab.rule.nodes.iter().zip(&tab.rule.weights).enumerate() {
            let g = 2.0 + c * x;
            let xi = 1.0 + c * x;
            let u: f64 = self.coeffs.iter().zip(&tab.psi[k]).map(|(a, b)| a * b).sum();
            let v = w * g.powi(self.m as i32) * u * u;
            m0 += v;
            m2 += v * xi * xi;
        }
        (prefactor * m0, prefactor * m2)
    }

    /// `X` and `dX/dxi` from `xi - 1`, which callers supply without
    /// cancellation.
    pub fn eval_split(&self, xm1: f64) -> (f64, f64) {
        let n = self.coeffs.len();
        let funcs = LaguerreFunctions::new(self.m);
        let x = 2.0 * self.beta * xm1;
        let (v, d) = funcs.values_and_derivatives(n, x);
        let u: f64 = self.coeffs.iter().zip(&v).map(|(a, b)| a * b).sum();
        let du: f64 = 2.0 * self.beta * self.coeffs.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>();
        if self.m == 0 {
            return (u, du);
        }
        let mf = self.m as f64;
        let s = xm1 * (xm1 + 2.0);
        let xi = 1.0 + xm1;
        let sm = s.powf(0.5 * mf);
        (sm * u, sm * du + mf * xi * s.powf(0.5 * mf - 1.0) * u)
    }

    pub fn value(&self, xi: f64) -> f64 {
        self.eval_split(xi - 1.0).0
    }

    pub fn value_and_derivative(&self, xi: f64) -> (f64, f64) {
        self.eval_split(xi - 1.0)
    }

    /// `X (xi^2 - 1)^{-m/2}`, finite at `xi = 1`.
    pub fn reduced(&self, xi: f64) -> f64 {
        let funcs = LaguerreFunctions::new(self.m);
        let v = funcs.values(self.coeffs.len(), 2.0 * self.beta * (xi - 1.0));
        self.coeffs.iter().zip(&v).map(|(a, b)| a * b).sum()
    }

    /// Upper end of the region where `|X|` exceeds `e^{-decades}` of its peak.
    pub fn extent(&self, log_amplitude: f64) -> f64 {
        let tab = self.tabulate(800);
        let peak = tab.iter().fold(0.0f64, |acc, (_, v)| acc.max(v.abs()));
        let cut = peak * (-log_amplitude).exp();
        tab.iter()
            .rev()
            .find(|(_, v)| v.abs() > cut)
            .map(|(x, _)| *x)
            .unwrap_or(1.0)
    }

    /// Samples `(xi, X)` on a grid stretched quadratically towards `xi = 1`
    /// and reaching far into the exponential tail.
    pub fn tabulate(&self, points: usize) -> Vec<(f64, f64)> {
        let xi_max = self.xi_max();
        (0..=points)
            .map(|i| {
                let s = i as f64 / points as f64;
                let xi = 1.0 + (xi_max - 1.0) * s * s;
                (xi, self.value(xi))
            })
            .collect()
    }

    /// Far end of the solution domain, past the last classical turning point.
    pub fn xi_max(&self) -> f64 {
        let n = self.coeffs.len() as f64;
        // the Laguerre span scales like 4n in x
        1.0 + (4.0 * n + 60.0) / (2.0 * self.beta)
    }

    /// Sign changes of `X` on `(1, xi_max)`.
    pub fn node_count(&self) -> u32 {
        let tab = self.tabulate(20000);
        let peak = tab.iter().fold(0.0f64, |acc, (_, v)| acc.max(v.abs()));
        let floor = 1e-12 * peak;
        let mut count = 0;
        let mut prev = 0.0f64;
        for (_, v) in tab.iter().skip(1) {
            if v.abs() <= floor {
                continue;
            }
            if prev != 0.0 && v.signum() != prev.signum() {
                count += 1;
            }
            prev = *v;
        }
        count
    }

    /// Logarithmic slope `X'/X` at `xi`.
    pub fn log_slope(&self, xi: f64) -> f64 {
        let (v, d) = self.value_and_derivative(xi);
        d / v
    }
}

