//! Pointwise fields of the basis states on a grid and the coupling integrals.
//!
//! `U` uses the weak form of `(1+t^2) h_m (1+t^2)`: with `F = (1+t^2) phi`,
//! `<F_i|h_m|F_j> = D int [s F_i,xi F_j,xi + o F_i,eta F_j,eta
//!   + m^2 (1/s + 1/o) F_i F_j - (a xi + b eta) F_i F_j] dxi deta`,
//! `D = d/2`, `s = xi^2 - 1`, `o = 1 - eta^2`. All derivatives are analytic.

use nalgebra::DMatrix;

use super::grid::{QuadratureGrid, StateTables};
use super::potential::RegularizedPotential;
use crate::csf::{CsfState, StateDerivative};
use crate::kinematics::{ParticleSystem, TGeometry};

/// Geometric data at one tensor node.
#[derive(Debug, Clone, Copy)]
struct Node {
    /// `<f|g>` measure weight.
    measure: f64,
    /// `D w_xi w_eta` for the weak form of `h_m`.
    plain: f64,
    xi: f64,
    eta: f64,
    s: f64,
    o: f64,
    t2: f64,
    dt2_xi: f64,
    dt2_eta: f64,
    w: f64,
    /// `d theta / d xi`-type chain factors: `(d xi/d theta, d eta/d theta)`.
    dxi_dth: f64,
    deta_dth: f64,
    cot: f64,
}

/// Grid, node data and the CTC parameters shared by all states at one `rho`.
pub struct Evaluator<'g> {
    pub grid: &'g QuadratureGrid,
    pub rho: f64,
    pub a: f64,
    pub b: f64,
    nodes: Vec<Node>,
}

/// `(-d/dtheta + m' cot theta) f` at `(xi, eta)` from `f` and its
/// spheroidal partial derivatives; `theta` is the polar angle of `t`
/// measured from the direction of centre 2.
pub fn theta_kernel(geom: &TGeometry, xi: f64, eta: f64, f: f64, f_xi: f64, f_eta: f64, m_prime: u32) -> f64 {
    let half = 0.5 * geom.d;
    let (xm1, plus, minus) = (xi - 1.0, 1.0 + eta, 1.0 - eta);
    let s = xm1 * (xi + 1.0);
    let o = plus * minus;
    let (dx, de, cot) = chain(geom, half, xi, eta, xm1, plus, minus, s, o);
    -(f_xi * dx + f_eta * de) + m_prime as f64 * cot * f
}

#[allow(clippy::too_many_arguments)]
fn chain(geom: &TGeometry, half: f64, xi: f64, eta: f64, xm1: f64, plus: f64, minus: f64, s: f64, o: f64) -> (f64, f64, f64) {
    let perp = half * (s * o).sqrt();
    let z = geom.midpoint() + half * xi * eta;
    let ra = half * (xm1 + plus);
    let rb = half * (xm1 + minus);
    let (ga, gb) = (geom.t1 / ra, geom.t2 / rb);
    (perp * (gb - ga) / geom.d, -perp * (ga + gb) / geom.d, z / perp)
}

/// Fields of one state over the flattened tensor grid (`xi` major).
#[derive(Debug, Clone)]
pub struct StateFields {
    pub m: u32,
    pub phi: Vec<f64>,
    /// `d phi / d rho`, when a derivative was supplied.
    pub dphi: Option<Vec<f64>>,
    /// `F = (1 + t^2) phi` and its spheroidal derivatives.
    pub f: Vec<f64>,
    pub f_xi: Vec<f64>,
    pub f_eta: Vec<f64>,
    /// `(1 + t^2)(-d/dtheta + (m-1) cot theta) phi`, used when this state
    /// is the lower-`m` partner of a `T` element.
    pub lowered: Vec<f64>,
}

impl<'g> Evaluator<'g> {
    pub fn new(grid: &'g QuadratureGrid, system: &ParticleSystem, state: &CsfState) -> Self {
        let geom = system.geometry;
        let pot = RegularizedPotential::new(system);
        let half = 0.5 * geom.d;
        let z0 = geom.midpoint();
        let d3 = grid.d.powi(3) / 8.0;
        let mut nodes = Vec::with_capacity(grid.len());
        for x in &grid.xi {
            for e in &grid.eta {
                let z = z0 + half * x.xi * e.eta;
                let t2 = z * z + half * half * x.s * e.o;
                let (dx, de, cot) = chain(&geom, half, x.xi, e.eta, x.xm1, e.plus, e.minus, x.s, e.o);
                nodes.push(Node {
                    measure: d3 * (x.s + e.o) * x.jac * e.jac,
                    plain: half * x.jac * e.jac,
                    xi: x.xi,
                    eta: e.eta,
                    s: x.s,
                    o: e.o,
                    t2,
                    dt2_xi: geom.d * z0 * e.eta + 0.5 * geom.d * geom.d * x.xi,
                    dt2_eta: geom.d * z0 * x.xi + 0.5 * geom.d * geom.d * e.eta,
                    w: pot.at_node(x, e),
                    dxi_dth: dx,
                    deta_dth: de,
                    cot,
                });
            }
        }
        Self {
            grid,
            rho: state.rho,
            a: state.a,
            b: state.b,
            nodes,
        }
    }

    pub fn fields(&self, state: &CsfState, deriv: Option<&StateDerivative>) -> StateFields {
        let tables = StateTables::new(self.grid, std::slice::from_ref(state));
        let (xt, yt) = (&tables.x[0], &tables.y[0]);
        let dtab = deriv.map(|dv| {
            let xs: Vec<(f64, f64)> = self.grid.xi.iter().map(|n| dv.x(n.xm1)).collect();
            let ys: Vec<(f64, f64)> = self.grid.eta.iter().map(|n| dv.y(n.eta, n.o)).collect();
            (xs, ys)
        });
        let n = self.nodes.len();
        let ne = self.grid.eta.len();
        let mut out = StateFields {
            m: state.index.m,
            phi: Vec::with_capacity(n),
            dphi: dtab.as_ref().map(|_| Vec::with_capacity(n)),
            f: Vec::with_capacity(n),
            f_xi: Vec::with_capacity(n),
            f_eta: Vec::with_capacity(n),
            lowered: Vec::with_capacity(n),
        };
        let mm = state.index.m.saturating_sub(1) as f64;
        for (k, node) in self.nodes.iter().enumerate() {
            let (a, b) = (k / ne, k % ne);
            let (x, dx) = xt[a];
            let (y, dy) = yt[b];
            let phi = x * y;
            let (p_xi, p_eta) = (dx * y, x * dy);
            let g = 1.0 + node.t2;
            out.phi.push(phi);
            if let (Some(v), Some((xs, ys))) = (out.dphi.as_mut(), dtab.as_ref()) {
                v.push(xs[a].0 * y + x * ys[b].0);
            }
            out.f.push(g * phi);
            out.f_xi.push(node.dt2_xi * phi + g * p_xi);
            out.f_eta.push(node.dt2_eta * phi + g * p_eta);
            let dth = p_xi * node.dxi_dth + p_eta * node.deta_dth;
            out.lowered.push(g * (-dth + mm * node.cot * phi));
        }
        out
    }

    fn bilinear<F: Fn(&Node, usize) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().enumerate().map(|(k, n)| f(n, k)).sum()
    }

    pub fn overlap(&self, i: &StateFields, j: &StateFields) -> f64 {
        self.bilinear(|n, k| n.measure * i.phi[k] * j.phi[k])
    }

    /// `<phi_i|(1 + t^2)|phi_j>`.
    pub fn stretch(&self, i: &StateFields, j: &StateFields) -> f64 {
        self.bilinear(|n, k| n.measure * (1.0 + n.t2) * i.phi[k] * j.phi[k])
    }

    /// `rho^{-2} <phi_i|(1+t^2) h_m (1+t^2)|phi_j>`.
    pub fn u_element(&self, i: &StateFields, j: &StateFields) -> f64 {
        let m2 = (i.m as f64).powi(2);
        let (a, b) = (self.a, self.b);
        let v = self.bilinear(|n, k| {
            let grad = n.s * i.f_xi[k] * j.f_xi[k] + n.o * i.f_eta[k] * j.f_eta[k];
            let pot = m2 * (1.0 / n.s + 1.0 / n.o) - (a * n.xi + b * n.eta);
            n.plain * (grad + pot * i.f[k] * j.f[k])
        });
        v / (self.rho * self.rho)
    }

    /// `rho^{-1} <phi_i|w12 + w13 + w23|phi_j>`.
    pub fn w_element(&self, i: &StateFields, j: &StateFields) -> f64 {
        self.bilinear(|n, k| n.measure * n.w * i.phi[k] * j.phi[k]) / self.rho
    }

    /// `<d phi_i / d rho|phi_j>`.
    pub fn q_element(&self, i: &StateFields, j: &StateFields) -> f64 {
        let di = i.dphi.as_ref().expect("derivative fields");
        self.bilinear(|n, k| n.measure * di[k] * j.phi[k])
    }

    /// `<d phi_i / d rho|d phi_j / d rho>`.
    pub fn p_element(&self, i: &StateFields, j: &StateFields) -> f64 {
        let di = i.dphi.as_ref().expect("derivative fields");
        let dj = j.dphi.as_ref().expect("derivative fields");
        self.bilinear(|n, k| n.measure * di[k] * dj[k])
    }

    /// `<phi_i|(1+t^2)(-d/dtheta + m' cot theta)|phi_j>` with `m' = m_i - 1 = m_j`.
    pub fn t_integral(&self, i: &StateFields, j: &StateFields) -> f64 {
        self.bilinear(|n, k| n.measure * i.phi[k] * j.lowered[k])
    }
}

pub fn square<F: Fn(usize, usize) -> f64>(n: usize, f: F) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = f(i, j);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// `(P, Q, raw antisymmetry residual)`; `Q` is antisymmetrized.
pub fn compute_pq(ev: &Evaluator, fields: &[StateFields]) -> (DMatrix<f64>, DMatrix<f64>, f64) {
    let n = fields.len();
    let raw = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { ev.q_element(&fields[i], &fields[j]) });
    let mut residual = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            residual = residual.max((raw[(i, j)] + raw[(j, i)]).abs());
        }
    }
    let q = (&raw - raw.transpose()) * 0.5;
    let p = square(n, |i, j| ev.p_element(&fields[i], &fields[j]));
    (p, q, 0.5 * residual)
}

/// `[J(J+1) - 2 m^2] <phi_i|(1 + t^2)|phi_j>`.
pub fn compute_r(ev: &Evaluator, fields: &[StateFields], j: u32, m: u32) -> DMatrix<f64> {
    let pref = r_prefactor(j, m);
    if pref == 0.0 {
        return DMatrix::zeros(fields.len(), fields.len());
    }
    square(fields.len(), |a, b| pref * ev.stretch(&fields[a], &fields[b]))
}

pub fn r_prefactor(j: u32, m: u32) -> f64 {
    let (j, m) = (j as f64, m as f64);
    j * (j + 1.0) - 2.0 * m * m
}

/// Prefactor `[J(J+1) - m m']^{1/2} (1 + delta_{m1})^{1/2}` of `T_{m, m'}`.
pub fn t_prefactor(j: u32, m: u32, m_prime: u32) -> f64 {
    let (jf, mf, mp) = (j as f64, m as f64, m_prime as f64);
    let delta = if m == 1 { 2.0 } else { 1.0 };
    ((jf * (jf + 1.0) - mf * mp).max(0.0) * delta).sqrt()
}

/// Rectangular `T_{i m, j m-1}` (rows: `upper` states of `m`, columns:
/// `lower` states of `m - 1`); empty for `J = 0`.
pub fn compute_t(ev: &Evaluator, upper: &[StateFields], lower: &[StateFields], j: u32) -> DMatrix<f64> {
    if j == 0 || upper.is_empty() || lower.is_empty() {
        return DMatrix::zeros(0, 0);
    }
    let m = upper[0].m;
    let pref = t_prefactor(j, m, m - 1);
    DMatrix::from_fn(upper.len(), lower.len(), |a, b| pref * ev.t_integral(&upper[a], &lower[b]))
}

pub fn compute_u(ev: &Evaluator, fields: &[StateFields]) -> DMatrix<f64> {
    square(fields.len(), |i, j| ev.u_element(&fields[i], &fields[j]))
}

pub fn compute_w(ev: &Evaluator, fields: &[StateFields]) -> DMatrix<f64> {
    square(fields.len(), |i, j| ev.w_element(&fields[i], &fields[j]))
}
