//! Outward propagation of the regular solution subspace.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::operator::RadialOperator;
use crate::error::{Error, Result};
use crate::numerics::ode::{integrate, OdeOptions, OdeStats};

/// Rank threshold on the diagonal of the QR factor, relative to its largest entry.
const RANK_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Admixture of the irregular `rho^{-1/2}` branch in the initial columns.
    pub irregular_admixture: f64,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            irregular_admixture: 0.0,
        }
    }
}

/// One re-orthonormalization: columns after = columns before `* r^{-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Orthonormalization {
    pub rho: f64,
    pub r: DMatrix<f64>,
}

/// Value and derivative blocks (rows = basis states, columns = solutions).
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionSnapshot {
    pub rho: f64,
    pub g: DMatrix<f64>,
    pub dg: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorState {
    pub rho: f64,
    pub g: DMatrix<f64>,
    pub dg: DMatrix<f64>,
    pub log: Vec<Orthonormalization>,
    /// Snapshots at the requested radii, in ascending order, in the column
    /// basis current at the time of the snapshot.
    pub snapshots: Vec<SolutionSnapshot>,
    pub stats: OdeStats,
}

impl PropagatorState {
    /// Column transformation accumulated by the orthonormalizations after
    /// `rho`: columns at `rho` times this matrix give the final columns.
    pub fn transform_since(&self, rho: f64) -> Result<DMatrix<f64>> {
        let n = self.g.ncols();
        let mut acc = DMatrix::identity(n, n);
        for step in self.log.iter().filter(|s| s.rho > rho) {
            let inv = step
                .r
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::SingularMatrix(format!("orthonormalization factor at rho = {}", step.rho)))?;
            acc *= inv;
        }
        Ok(acc)
    }

    pub fn snapshot(&self, rho: f64) -> Option<&SolutionSnapshot> {
        self.snapshots.iter().find(|s| (s.rho - rho).abs() <= 1e-12 * rho.abs().max(1.0))
    }
}

fn pack(g: &DMatrix<f64>, dg: &DMatrix<f64>) -> Vec<f64> {
    let mut y = Vec::with_capacity(2 * g.len());
    y.extend_from_slice(g.as_slice());
    y.extend_from_slice(dg.as_slice());
    y
}

fn unpack(y: &[f64], n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let half = n * n;
    (
        DMatrix::from_column_slice(n, n, &y[..half]),
        DMatrix::from_column_slice(n, n, &y[half..]),
    )
}

/// QR of the stacked `[g; g']` block; returns the orthonormal columns.
fn orthonormalize(y: &mut [f64], n: usize, rho: f64) -> Result<DMatrix<f64>> {
    let (g, dg) = unpack(y, n);
    let mut stacked = DMatrix::zeros(2 * n, n);
    stacked.view_mut((0, 0), (n, n)).copy_from(&g);
    stacked.view_mut((n, 0), (n, n)).copy_from(&dg);
    let qr = stacked.qr();
    let mut r = qr.r();
    let mut q = qr.q();
    for k in 0..n {
        if r[(k, k)] < 0.0 {
            for c in k..n {
                r[(k, c)] = -r[(k, c)];
            }
            for row in 0..2 * n {
                q[(row, k)] = -q[(row, k)];
            }
        }
    }
    let largest = (0..n).map(|k| r[(k, k)].abs()).fold(0.0, f64::max);
    if !largest.is_finite() || (0..n).any(|k| r[(k, k)].abs() <= RANK_FLOOR * largest) {
        return Err(Error::LinearDependence(rho));
    }
    y[..n * n].copy_from_slice(q.rows(0, n).clone_owned().as_slice());
    y[n * n..].copy_from_slice(q.rows(n, n).clone_owned().as_slice());
    Ok(r)
}

/// Integrates the regular columns `g ~ rho^{3/2} I` from `rho0` to the
/// largest of `stops`, re-orthonormalizing after every accepted step except
/// inside `[stop * hold, stop]` for each stop, so that a stop and its
/// companion radius share one column basis.
pub fn propagate(
    op: &RadialOperator,
    rho0: f64,
    stops: &[f64],
    hold: f64,
    opts: &PropagationOptions,
) -> Result<PropagatorState> {
    let n = op.n;
    let mut stops: Vec<f64> = stops.to_vec();
    stops.sort_by(f64::total_cmp);
    stops.dedup();
    let Some(&rho_end) = stops.last() else {
        return Err(Error::InvalidConfig("no propagation stop".into()));
    };
    if !(rho0 > 0.0 && rho0 < rho_end * hold) {
        return Err(Error::InvalidConfig(format!("rho0 = {rho0} must lie below the first matching radius")));
    }
    let (lo, hi) = op.range();
    for r in [rho0, rho_end] {
        if r < lo - 1e-12 * hi || r > hi + 1e-12 * hi {
            return Err(Error::RhoOutOfRange { rho: r, min: lo, max: hi });
        }
    }

    let eps = opts.irregular_admixture;
    let g0 = DMatrix::identity(n, n) * (rho0.powf(1.5) + eps * rho0.powf(-0.5));
    let dg0 = DMatrix::identity(n, n) * (1.5 * rho0.sqrt() - 0.5 * eps * rho0.powf(-1.5));
    let mut y = pack(&g0, &dg0);

    let mut log = Vec::new();
    let mut snapshots = Vec::new();
    let mut stats = OdeStats::default();
    let ode = OdeOptions {
        rtol: opts.rtol,
        atol: opts.atol,
        ..OdeOptions::default()
    };

    let mut failure: Option<Error> = None;
    let rhs = |rho: f64, y: &[f64], out: &mut [f64]| {
        let (g, dg) = unpack(y, n);
        let m = op.matrices(rho.clamp(lo, hi)).expect("rho clamped to table");
        let d2g = &m.a * &g + &m.b * &dg;
        out[..n * n].copy_from_slice(dg.as_slice());
        out[n * n..].copy_from_slice(d2g.as_slice());
    };

    let mut rho = rho0;
    log.push(Orthonormalization {
        rho,
        r: orthonormalize(&mut y, n, rho)?,
    });
    for &stop in &stops {
        let companion = stop * hold;
        if companion > rho {
            let (y1, s1) = integrate(rhs, rho, companion, &y, &ode, |x, y| {
                if failure.is_some() {
                    return;
                }
                match orthonormalize(y, n, x) {
                    Ok(r) => log.push(Orthonormalization { rho: x, r }),
                    Err(e) => failure = Some(e),
                }
            })?;
            if let Some(e) = failure.take() {
                return Err(e);
            }
            accumulate(&mut stats, s1);
            y = y1;
            rho = companion;
        }
        let (g, dg) = unpack(&y, n);
        snapshots.push(SolutionSnapshot { rho, g, dg });
        let (y2, s2) = integrate(rhs, rho, stop, &y, &ode, |_, _| {})?;
        accumulate(&mut stats, s2);
        y = y2;
        rho = stop;
        let (g, dg) = unpack(&y, n);
        snapshots.push(SolutionSnapshot { rho, g, dg });
    }
    let (g, dg) = unpack(&y, n);
    if g.iter().chain(dg.iter()).any(|v| !v.is_finite()) {
        return Err(Error::StiffnessFailure(rho));
    }
    Ok(PropagatorState {
        rho,
        g,
        dg,
        log,
        snapshots,
        stats,
    })
}

fn accumulate(total: &mut OdeStats, s: OdeStats) {
    total.accepted += s.accepted;
    total.rejected += s.rejected;
    total.evaluations += s.evaluations;
}
