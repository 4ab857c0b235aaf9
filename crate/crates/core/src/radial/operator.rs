//! Interpolated right-hand side of the coupled hyperradial equations
//!
//! `g'' = (3/(4 rho^2) - E) g + 2 Q g' + (Q' + P + U + W + (R + T)/rho^2) g`.

use nalgebra::DMatrix;

use crate::coupling::CouplingSet;
use crate::error::{Error, Result};
use crate::numerics::spline::CubicSpline;

/// Splined couplings at fixed total energy.
#[derive(Debug, Clone)]
pub struct RadialOperator {
    pub n: usize,
    pub energy: f64,
    pub j: u32,
    rho_min: f64,
    rho_max: f64,
    /// `P + U + W`, entry-wise.
    smooth: Vec<CubicSpline>,
    q: Vec<CubicSpline>,
    /// `R + T`, divided by `rho^2` on evaluation.
    rotational: Vec<CubicSpline>,
}

/// Matrices of the first-order system at one `rho`: `g'' = a g + b g'`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrices {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

/// Which couplings enter the operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CouplingMode {
    #[default]
    Full,
    /// Off-diagonal entries of every family dropped.
    Decoupled,
}

pub fn assemble_operator(set: &CouplingSet, energy: f64, mode: CouplingMode) -> Result<RadialOperator> {
    let n = set.basis.len();
    let rho = set.rho();
    if rho.len() < 2 {
        return Err(Error::InvalidConfig("coupling table needs at least two rho points".into()));
    }
    let fulls: Vec<_> = set.points.iter().map(|p| p.full(&set.basis)).collect();
    let keep = |i: usize, j: usize| mode == CouplingMode::Full || i == j;
    let mut smooth = Vec::with_capacity(n * n);
    let mut q = Vec::with_capacity(n * n);
    let mut rotational = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let on = keep(i, j);
            let col = |f: &dyn Fn(usize) -> f64| -> Vec<f64> { (0..fulls.len()).map(|k| if on { f(k) } else { 0.0 }).collect() };
            smooth.push(CubicSpline::new(
                rho.clone(),
                col(&|k| fulls[k].p[(i, j)] + fulls[k].u[(i, j)] + fulls[k].w[(i, j)]),
            ));
            q.push(CubicSpline::new(rho.clone(), col(&|k| fulls[k].q[(i, j)])));
            rotational.push(CubicSpline::new(rho.clone(), col(&|k| fulls[k].r[(i, j)] + fulls[k].t[(i, j)])));
        }
    }
    Ok(RadialOperator {
        n,
        energy,
        j: set.basis.j,
        rho_min: rho[0],
        rho_max: rho[rho.len() - 1],
        smooth,
        q,
        rotational,
    })
}

impl RadialOperator {
    pub fn range(&self) -> (f64, f64) {
        (self.rho_min, self.rho_max)
    }

    fn check(&self, rho: f64) -> Result<()> {
        let slack = 1e-12 * self.rho_max;
        if rho < self.rho_min - slack || rho > self.rho_max + slack {
            return Err(Error::RhoOutOfRange {
                rho,
                min: self.rho_min,
                max: self.rho_max,
            });
        }
        Ok(())
    }

    pub fn matrices(&self, rho: f64) -> Result<OperatorMatrices> {
        self.check(rho)?;
        let n = self.n;
        let inv2 = 1.0 / (rho * rho);
        let mut a = DMatrix::zeros(n, n);
        let mut b = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                let k = j * n + i;
                let (qv, qd) = self.q[k].eval_with_derivative(rho);
                a[(i, j)] = self.smooth[k].eval(rho) + qd + self.rotational[k].eval(rho) * inv2;
                b[(i, j)] = 2.0 * qv;
            }
            a[(j, j)] += 0.75 * inv2 - self.energy;
        }
        Ok(OperatorMatrices { a, b })
    }

    /// Diagonal potential `3/(4 rho^2) + P_ii + U_ii + W_ii + R_ii/rho^2`.
    pub fn diagonal_potential(&self, i: usize, rho: f64) -> f64 {
        let k = i * self.n + i;
        0.75 / (rho * rho) + self.smooth[k].eval(rho) + self.rotational[k].eval(rho) / (rho * rho)
    }

    /// `-g'' + (3/(4 rho^2) - E) g + 2 Q g' + V g`, the residual of the
    /// radial equations for a trial solution.
    pub fn residual(&self, rho: f64, g: &DMatrix<f64>, dg: &DMatrix<f64>, d2g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let m = self.matrices(rho)?;
        Ok(-d2g + &m.a * g + &m.b * dg)
    }
}
