//! Tensor quadrature over the spheroidal half-plane.
//!
//! Uses `xi = cosh(tau)` and `eta = -cos(theta)` so that the end regions
//! `xi -> 1` and `eta -> +-1`, where localized states live at large
//! hyperradius, are resolved by panels graded towards `tau = 0` and
//! `theta = 0, pi`. All differences `xi - 1`, `1 -+ eta` are formed from
//! half-angle identities.

use serde::{Deserialize, Serialize};

use crate::csf::CsfState;
use crate::error::{Error, Result};
use crate::numerics::quadrature::{composite_gauss_legendre, graded_breaks, two_sided_breaks, Rule};

/// Largest refinement level tried by [`build_grid`].
pub const MAX_LEVEL: u32 = 4;
const TAIL_LOG_AMPLITUDE: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiNode {
    pub xi: f64,
    /// `xi - 1`
    pub xm1: f64,
    /// `xi^2 - 1`
    pub s: f64,
    /// `dxi` weight: `w_tau sinh(tau)`
    pub jac: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaNode {
    pub eta: f64,
    /// `1 - eta`
    pub minus: f64,
    /// `1 + eta`
    pub plus: f64,
    /// `1 - eta^2`
    pub o: f64,
    /// `deta` weight: `w_theta sin(theta)`
    pub jac: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    /// Focal distance `t1 + t2`.
    pub d: f64,
    pub xi_max: f64,
    pub level: u32,
    pub xi: Vec<XiNode>,
    pub eta: Vec<EtaNode>,
}

/// Shape parameters of a grid before refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridShape {
    pub xi_max: f64,
    pub first_tau: f64,
    pub first_theta: f64,
}

impl GridShape {
    /// Extent and end-panel widths suited to a set of states.
    pub fn for_states(states: &[CsfState]) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::GridOverflow("empty state set".into()));
        }
        let xi_max = states
            .iter()
            .map(|s| s.radial.extent(TAIL_LOG_AMPLITUDE))
            .fold(1.0f64, f64::max)
            .max(1.0 + 1e-3);
        let p_max = states.iter().map(|s| s.p).fold(0.0f64, f64::max).max(1e-3);
        let width = (0.3 / p_max.sqrt()).min(0.2);
        Ok(Self {
            xi_max,
            first_tau: width,
            first_theta: width,
        })
    }
}

impl QuadratureGrid {
    pub fn new(d: f64, shape: GridShape, level: u32) -> Self {
        let factor = 0.5f64.powi(level as i32);
        let order = 16 + 8 * level as usize;
        let tau_max = shape.xi_max.acosh();
        let tau = composite_gauss_legendre(&graded_breaks(tau_max, shape.first_tau * factor, 1.5, 0.25 * factor), order);
        let theta = composite_gauss_legendre(
            &two_sided_breaks(std::f64::consts::PI, shape.first_theta * factor, 1.5, 0.2 * factor),
            order,
        );
        Self::from_rules(d, shape.xi_max, level, &tau, &theta)
    }

    pub fn from_rules(d: f64, xi_max: f64, level: u32, tau: &Rule, theta: &Rule) -> Self {
        let xi = tau
            .nodes
            .iter()
            .zip(&tau.weights)
            .map(|(&t, &w)| {
                let sh = t.sinh();
                let half = (0.5 * t).sinh();
                XiNode {
                    xi: t.cosh(),
                    xm1: 2.0 * half * half,
                    s: sh * sh,
                    jac: w * sh,
                }
            })
            .collect();
        let eta = theta
            .nodes
            .iter()
            .zip(&theta.weights)
            .map(|(&th, &w)| {
                let sn = th.sin();
                let (hs, hc) = ((0.5 * th).sin(), (0.5 * th).cos());
                EtaNode {
                    eta: -th.cos(),
                    minus: 2.0 * hc * hc,
                    plus: 2.0 * hs * hs,
                    o: sn * sn,
                    jac: w * sn,
                }
            })
            .collect();
        Self {
            d,
            xi_max,
            level,
            xi,
            eta,
        }
    }

    pub fn len(&self) -> usize {
        self.xi.len() * self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(d^3/8)(xi^2 - eta^2) w_xi w_eta`, the weight of `<f|g>` at node `(a, b)`.
    pub fn weight(&self, a: usize, b: usize) -> f64 {
        let (x, e) = (&self.xi[a], &self.eta[b]);
        self.d.powi(3) / 8.0 * (x.s + e.o) * x.jac * e.jac
    }

    /// `<f|g>`-type integral of a pointwise function of `(xi, eta)` nodes.
    pub fn integrate<F: Fn(&XiNode, &EtaNode) -> f64>(&self, f: F) -> f64 {
        let mut sum = 0.0;
        for x in &self.xi {
            let row: f64 = self.eta.iter().map(|e| (x.s + e.o) * e.jac * f(x, e)).sum();
            sum += x.jac * row;
        }
        self.d.powi(3) / 8.0 * sum
    }
}

/// Separable tables of the states on a grid.
#[derive(Debug, Clone)]
pub struct StateTables {
    /// `x[i][a] = (X_i, dX_i/dxi)` at xi node `a`.
    pub x: Vec<Vec<(f64, f64)>>,
    /// `y[i][b] = (Y_i, dY_i/deta)` at eta node `b`.
    pub y: Vec<Vec<(f64, f64)>>,
}

impl StateTables {
    pub fn new(grid: &QuadratureGrid, states: &[CsfState]) -> Self {
        let x = states
            .iter()
            .map(|s| grid.xi.iter().map(|n| s.x(n.xm1)).collect())
            .collect();
        let y = states
            .iter()
            .map(|s| grid.eta.iter().map(|n| s.y(n.eta, n.o)).collect())
            .collect();
        Self { x, y }
    }
}

/// Gram matrix `<phi_i|phi_j>` (separable evaluation).
pub fn gram(grid: &QuadratureGrid, tables: &StateTables) -> Vec<Vec<f64>> {
    let n = tables.x.len();
    let d3 = grid.d.powi(3) / 8.0;
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let (mut xs, mut x0) = (0.0, 0.0);
            for (a, node) in grid.xi.iter().enumerate() {
                let v = node.jac * tables.x[i][a].0 * tables.x[j][a].0;
                x0 += v;
                xs += v * node.s;
            }
            let (mut y0, mut yo) = (0.0, 0.0);
            for (b, node) in grid.eta.iter().enumerate() {
                let v = node.jac * tables.y[i][b].0 * tables.y[j][b].0;
                y0 += v;
                yo += v * node.o;
            }
            let v = d3 * (xs * y0 + x0 * yo);
            g[i][j] = v;
            g[j][i] = v;
        }
    }
    g
}

/// Largest entry of `|G - I|`.
pub fn gram_deviation(g: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0f64;
    for (i, row) in g.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - want).abs());
        }
    }
    worst
}

/// Gram matrix restricted to pairs with equal `m` (different `m` are
/// orthogonal through the azimuthal factor, not the 2D integral).
fn same_m_deviation(g: &[Vec<f64>], states: &[CsfState]) -> f64 {
    let mut worst = 0.0f64;
    for (i, row) in g.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if states[i].index.m != states[j].index.m {
                continue;
            }
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - want).abs());
        }
    }
    worst
}

/// Coarsest grid on which the Gram matrix of `states` (within each `m`)
/// equals the identity to `tol`.
pub fn build_grid(states: &[CsfState], tol: f64) -> Result<QuadratureGrid> {
    let shape = GridShape::for_states(states)?;
    let d = states[0].d;
    let mut last = f64::NAN;
    for level in 0..=MAX_LEVEL {
        let grid = QuadratureGrid::new(d, shape, level);
        let tables = StateTables::new(&grid, states);
        last = same_m_deviation(&gram(&grid, &tables), states);
        if last < tol {
            return Ok(grid);
        }
    }
    Err(Error::GridOverflow(format!(
        "Gram deviation {last:e} above {tol:e} at refinement level {MAX_LEVEL}"
    )))
}
